#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

#include "magnn/dataset.hpp"
#include "magnn/errors.hpp"
#include "magnn/item_graph.hpp"
#include "magnn/model.hpp"

namespace magnn {

enum class EvalSplit { Val, Test };

inline const char* eval_split_name(EvalSplit s) { return s == EvalSplit::Val ? "val" : "test"; }

// |top-K intersect relevant| / |relevant|. The denominator is the user's full
// held-out set, so the metric caps below 1 when |relevant| > K.
double recall_at_k(const std::vector<int32_t>& ranked,
                   const std::unordered_set<int32_t>& relevant, int k = 10);

// DCG over hit ranks r (1-based): 1/log2(r+1), normalized by the ideal DCG of
// min(K, |relevant|) hits.
double ndcg_at_k(const std::vector<int32_t>& ranked,
                 const std::unordered_set<int32_t>& relevant, int k = 10);

struct UserMetrics {
    int32_t user;
    double recall;
    double ndcg;
};

struct EvalReport {
    int k = 10;
    double recall = 0.0;  // macro average over evaluated users
    double ndcg = 0.0;
    int64_t evaluated_users = 0;
    int64_t skipped_users = 0;  // empty ground truth
    std::string variant;
    std::string checkpoint;
    std::string split;
    std::vector<UserMetrics> per_user;
};

std::string report_json(const EvalReport& report);
void write_per_user_csv(const EvalReport& report, std::ostream& os);

// Scoring context for one user: in test mode the input sequence is
// train + val (so L and H may include validation items); in val mode it is
// train only. The item graph itself is always the train-built one.
struct EvalContext {
    std::vector<int32_t> window;
    std::vector<uint8_t> mask;
    std::vector<int32_t> history;
};

inline EvalContext eval_context(const SplitDataset& split, const ModelConfig& cfg,
                                int32_t user, EvalSplit mode) {
    std::vector<int32_t> input = split.train[user];
    if (mode == EvalSplit::Test)
        input.insert(input.end(), split.val[user].begin(), split.val[user].end());

    EvalContext ctx;
    const int L = cfg.window;
    const int n = static_cast<int>(input.size());
    const int pads = std::max(0, L - n);
    ctx.window.assign(static_cast<size_t>(pads), split.padding_index());
    ctx.window.insert(ctx.window.end(), input.end() - (L - pads), input.end());
    ctx.mask.resize(L);
    for (int i = 0; i < L; ++i) ctx.mask[i] = ctx.window[i] != split.padding_index() ? 1 : 0;
    const int h_end = n - (L - pads);
    const int h_begin = std::max(0, h_end - cfg.history_cap);
    ctx.history.assign(input.begin() + h_begin, input.begin() + h_end);
    return ctx;
}

/// All non-pad items the user has not seen in the input sequence, ordered by
/// score descending with ties broken by ascending item index.
template <typename S>
std::vector<int32_t> rank_items(const ModelParams<S>& params, const ItemGraph& graph,
                                const ModelConfig& cfg, const SplitDataset& split,
                                int32_t user, EvalSplit mode) {
    std::vector<uint8_t> excluded(split.num_items(), 0);
    for (int32_t i : split.train[user]) excluded[i] = 1;
    if (mode == EvalSplit::Test)
        for (int32_t i : split.val[user]) excluded[i] = 1;

    std::vector<int32_t> candidates;
    candidates.reserve(split.num_items());
    for (int32_t i = 0; i < split.num_items(); ++i)
        if (!excluded[i]) candidates.push_back(i);
    if (candidates.empty()) return candidates;

    const EvalContext ctx = eval_context(split, cfg, user, mode);
    const std::vector<S> scores =
        score_items(params, graph, cfg, user, ctx.window, ctx.mask, ctx.history, candidates);

    std::vector<int> order(candidates.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return candidates[a] < candidates[b];
    });
    std::vector<int32_t> ranked(candidates.size());
    for (size_t i = 0; i < order.size(); ++i) ranked[i] = candidates[order[i]];
    return ranked;
}

/// Macro-averaged Recall@K and NDCG@K over users with nonempty ground truth.
template <typename S>
EvalReport evaluate(const ModelParams<S>& params, const ItemGraph& graph,
                    const ModelConfig& cfg, const SplitDataset& split, EvalSplit mode,
                    int k = 10) {
    if (k < 1) throw ContractError("evaluate: k must be positive");
    EvalReport report;
    report.k = k;
    report.variant = variant_name(cfg.variant);
    report.split = eval_split_name(mode);
    double recall_sum = 0.0, ndcg_sum = 0.0;
    for (int32_t u = 0; u < split.num_users(); ++u) {
        const auto& truth = mode == EvalSplit::Val ? split.val[u] : split.test[u];
        if (truth.empty()) {
            ++report.skipped_users;
            continue;
        }
        const std::unordered_set<int32_t> relevant(truth.begin(), truth.end());
        const auto ranked = rank_items(params, graph, cfg, split, u, mode);
        const double r = recall_at_k(ranked, relevant, k);
        const double n = ndcg_at_k(ranked, relevant, k);
        report.per_user.push_back({u, r, n});
        recall_sum += r;
        ndcg_sum += n;
        ++report.evaluated_users;
    }
    if (report.evaluated_users > 0) {
        report.recall = recall_sum / static_cast<double>(report.evaluated_users);
        report.ndcg = ndcg_sum / static_cast<double>(report.evaluated_users);
    }
    return report;
}

}  // namespace magnn
