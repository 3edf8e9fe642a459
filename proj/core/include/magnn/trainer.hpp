#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "magnn/dataset.hpp"
#include "magnn/errors.hpp"
#include "magnn/evaluator.hpp"
#include "magnn/item_graph.hpp"
#include "magnn/model.hpp"
#include "magnn/rng.hpp"
#include "magnn/tape.hpp"

namespace magnn {

struct TrainConfig {
    double learning_rate = 0.001;
    double lambda = 0.001;  // L2 weight on every parameter tensor
    int batch_size = 4096;  // triples per update
    int epochs = 30;
    int negatives = 1;  // negatives sampled per positive
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    uint64_t seed = 42;
    int patience = 10;  // epochs without val-recall improvement before stopping
    // Exact Frobenius norms over the full embedding tables. The default
    // regularizes only rows touched by the batch; gradient checks use the
    // exact mode.
    bool full_norm_reg = false;

    void validate() const {
        if (learning_rate <= 0 || lambda < 0 || batch_size < 1 || epochs < 0 ||
            negatives < 1 || patience < 0)
            throw ConfigError("train config: rates and counts must be positive");
    }
};

// One BPR comparison: instance index into the instance list, positive item
// from its targets, sampled negative.
struct Triple {
    int32_t instance;
    int32_t positive;
    int32_t negative;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_recall10 = 0.0;
    double val_ndcg10 = 0.0;
    double seconds = 0.0;
};

std::string epoch_json_line(const EpochStats& stats);

/// Uniform draw over the items the user has not interacted with in the
/// training split (padding excluded), by rejection.
inline int32_t sample_negative(const std::vector<uint8_t>& observed, int64_t observed_count,
                               int32_t num_items, Rng& rng) {
    if (observed_count >= num_items)
        throw ContractError("sample_negative: user observed every item");
    while (true) {
        const auto k = static_cast<int32_t>(rng.uniform_index(num_items));
        if (!observed[k]) return k;
    }
}

/// Ranking-plus-regularization objective over a batch of triples:
/// mean of -log sigmoid(score_j - score_k), plus lambda times the squared
/// norms of the parameter tensors.
template <typename S>
typename Tape<S>::Var build_batch_loss(ModelForward<S>& fwd,
                                       const std::vector<TrainingInstance>& instances,
                                       const std::vector<Triple>& batch, double lambda,
                                       bool full_norm_reg) {
    if (batch.empty()) throw ContractError("build_batch_loss: empty batch");
    Tape<S>& t = fwd.tape();
    using Var = typename Tape<S>::Var;

    std::map<int32_t, Var> combined;
    std::vector<Var> terms;
    terms.reserve(batch.size());
    for (const Triple& tr : batch) {
        const TrainingInstance& inst = instances[tr.instance];
        auto it = combined.find(tr.instance);
        if (it == combined.end())
            it = combined
                     .emplace(tr.instance,
                              fwd.combined_vector(inst.user, inst.window, inst.window_mask,
                                                  inst.history))
                     .first;
        Var diff = t.sub(t.gather_rows(fwd.param("Q"), {tr.positive}),
                         t.gather_rows(fwd.param("Q"), {tr.negative}));
        terms.push_back(t.neg_log_sigmoid(t.matmul(diff, it->second)));
    }
    Var loss = t.scale(t.add_n(terms), S(1) / static_cast<S>(batch.size()));
    if (lambda == 0.0) return loss;

    // Rows of P/Q/E touched by this batch (windows, histories, graph
    // neighbors, users, positives, negatives).
    std::vector<int32_t> p_rows, q_rows, e_rows;
    for (const Triple& tr : batch) {
        q_rows.push_back(tr.positive);
        q_rows.push_back(tr.negative);
        const TrainingInstance& inst = instances[tr.instance];
        p_rows.push_back(inst.user);
        for (int32_t i : inst.window) {
            e_rows.push_back(i);
            if (i != fwd.pad_index())
                for (const auto& e : fwd.graph().neighbors(i)) e_rows.push_back(e.item);
        }
        for (int32_t i : inst.history) e_rows.push_back(i);
    }
    auto uniq = [](std::vector<int32_t>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    uniq(p_rows);
    uniq(q_rows);
    uniq(e_rows);

    std::vector<Var> regs;
    for (const auto& [name, mat] : fwd.params().tensors()) {
        Var leaf = fwd.param(name);
        if (!full_norm_reg && ModelParams<S>::is_embedding(name)) {
            const std::vector<int32_t>& rows =
                name[0] == 'P' ? p_rows : (name[0] == 'Q' ? q_rows : e_rows);
            if (rows.empty()) continue;
            regs.push_back(t.sum_sq(t.gather_rows(leaf, rows)));
        } else {
            regs.push_back(t.sum_sq(leaf));
        }
    }
    return t.add(loss, t.scale(t.add_n(regs), static_cast<S>(lambda)));
}

/// Loss value of one batch, forward only (no update).
template <typename S>
double bpr_loss(const ModelParams<S>& params, const ItemGraph& graph, const ModelConfig& cfg,
                const std::vector<TrainingInstance>& instances,
                const std::vector<Triple>& batch, double lambda, bool full_norm_reg = true) {
    Tape<S> tape;
    ModelForward<S> fwd(tape, params, graph, cfg);
    auto loss = build_batch_loss(fwd, instances, batch, lambda, full_norm_reg);
    return static_cast<double>(tape.val(loss).v[0]);
}

/// Owns the optimizer state and runs epochs over a fixed instance list.
/// Single-threaded; the parameter tensors are updated in place.
template <typename S>
class Trainer {
public:
    Trainer(ModelParams<S>& params, const ItemGraph& graph, const ModelConfig& model_cfg,
            const TrainConfig& train_cfg, const SplitDataset& split)
        : params_(params), graph_(graph), mcfg_(model_cfg), tcfg_(train_cfg) {
        tcfg_.validate();
        observed_.resize(split.num_users());
        observed_count_.resize(split.num_users());
        for (int32_t u = 0; u < split.num_users(); ++u) {
            observed_[u].assign(split.num_items(), 0);
            for (int32_t i : split.train[u])
                if (!observed_[u][i]) {
                    observed_[u][i] = 1;
                    ++observed_count_[u];
                }
        }
        for (auto& [name, mat] : params_.tensors()) {
            moment1_.push_back(Mat<S>::zeros(mat->rows, mat->cols));
            moment2_.push_back(Mat<S>::zeros(mat->rows, mat->cols));
        }
    }

    /// One pass: shuffle instances, expand targets to triples with fresh
    /// negatives, one adaptive-moment update per batch. Returns the
    /// triple-weighted mean loss.
    double train_epoch(const std::vector<TrainingInstance>& instances, Rng& rng) {
        if (instances.empty()) throw ContractError("train_epoch: no training instances");
        std::vector<int32_t> order(instances.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int32_t>(i);
        rng.shuffle(order);

        std::vector<Triple> triples;
        triples.reserve(order.size() * mcfg_.targets * tcfg_.negatives);
        for (int32_t idx : order) {
            const TrainingInstance& inst = instances[idx];
            for (int32_t j : inst.targets) {
                if (j == pad_index()) continue;
                for (int n = 0; n < tcfg_.negatives; ++n)
                    triples.push_back(
                        {idx, j,
                         sample_negative(observed_[inst.user], observed_count_[inst.user],
                                         static_cast<int32_t>(params_.num_items), rng)});
            }
        }

        double loss_sum = 0.0;
        size_t done = 0;
        while (done < triples.size()) {
            const size_t take =
                std::min(static_cast<size_t>(tcfg_.batch_size), triples.size() - done);
            const std::vector<Triple> batch(triples.begin() + done,
                                            triples.begin() + done + take);
            done += take;

            Tape<S> tape;
            ModelForward<S> fwd(tape, params_, graph_, mcfg_);
            auto loss = build_batch_loss(fwd, instances, batch, tcfg_.lambda,
                                         tcfg_.full_norm_reg);
            const double lv = static_cast<double>(tape.val(loss).v[0]);
            if (!std::isfinite(lv))
                throw NumericError("train_epoch: non-finite loss " + std::to_string(lv) +
                                   " at step " + std::to_string(step_ + 1) + " (batch of " +
                                   std::to_string(take) + " triples)");
            tape.backward(loss);
            adam_step(tape, fwd);
            loss_sum += lv * static_cast<double>(take);
        }
        return loss_sum / static_cast<double>(triples.size());
    }

private:
    int32_t pad_index() const { return params_.num_items; }

    void adam_step(Tape<S>& tape, ModelForward<S>& fwd) {
        ++step_;
        const double bc1 = 1.0 - std::pow(tcfg_.beta1, static_cast<double>(step_));
        const double bc2 = 1.0 - std::pow(tcfg_.beta2, static_cast<double>(step_));
        auto tensors = params_.tensors();
        for (size_t ti = 0; ti < tensors.size(); ++ti) {
            Mat<S>& p = *tensors[ti].second;
            const Mat<S> g = tape.grad_or_zero(fwd.param(tensors[ti].first));
            Mat<S>& m = moment1_[ti];
            Mat<S>& v = moment2_[ti];
            const S b1 = static_cast<S>(tcfg_.beta1), b2 = static_cast<S>(tcfg_.beta2);
            for (size_t k = 0; k < p.v.size(); ++k) {
                m.v[k] = b1 * m.v[k] + (S(1) - b1) * g.v[k];
                v.v[k] = b2 * v.v[k] + (S(1) - b2) * g.v[k] * g.v[k];
                const double mh = static_cast<double>(m.v[k]) / bc1;
                const double vh = static_cast<double>(v.v[k]) / bc2;
                p.v[k] -= static_cast<S>(tcfg_.learning_rate * mh /
                                         (std::sqrt(vh) + tcfg_.eps));
            }
        }
        // The padding embedding is not learnable.
        for (int c = 0; c < params_.E.cols; ++c) params_.E(params_.num_items, c) = S(0);
    }

    ModelParams<S>& params_;
    const ItemGraph& graph_;
    ModelConfig mcfg_;
    TrainConfig tcfg_;
    std::vector<std::vector<uint8_t>> observed_;
    std::vector<int64_t> observed_count_;
    std::vector<Mat<S>> moment1_, moment2_;
    int64_t step_ = 0;
};

template <typename S>
struct FitResult {
    ModelParams<S> params;  // checkpoint with the best validation Recall@10
    std::vector<EpochStats> log;
    int best_epoch = 0;  // 1-based; 0 when no epochs ran
};

/// Full training loop: init, epochs with per-epoch validation, best-recall
/// checkpoint selection, early stopping after `patience` stale epochs.
/// Writes one JSON line per epoch to `log_sink` when given.
template <typename S>
FitResult<S> fit(const SplitDataset& split, const ItemGraph& graph,
                 const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                 std::ostream* log_sink = nullptr) {
    model_cfg.validate();
    train_cfg.validate();
    Rng init_rng(model_cfg.seed);
    FitResult<S> result;
    ModelParams<S> params =
        init_params<S>(model_cfg, split.num_users(), split.num_items(), init_rng);

    const auto instances = make_training_instances(
        split, {model_cfg.window, model_cfg.targets, 1, model_cfg.history_cap});

    Trainer<S> trainer(params, graph, model_cfg, train_cfg, split);
    Rng train_rng(train_cfg.seed);

    double best_recall = -1.0;
    int stale = 0;
    result.params = params;
    for (int epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = trainer.train_epoch(instances, train_rng);
        const EvalReport val = evaluate(params, graph, model_cfg, split, EvalSplit::Val, 10);
        stats.val_recall10 = val.recall;
        stats.val_ndcg10 = val.ndcg;
        stats.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.log.push_back(stats);
        if (log_sink) *log_sink << epoch_json_line(stats) << std::flush;

        if (val.recall > best_recall) {
            best_recall = val.recall;
            result.params = params;
            result.best_epoch = epoch;
            stale = 0;
        } else if (++stale >= train_cfg.patience && train_cfg.patience > 0) {
            break;
        }
    }
    return result;
}

}  // namespace magnn
