#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "magnn/dataset.hpp"
#include "magnn/errors.hpp"
#include "magnn/item_graph.hpp"
#include "magnn/mat.hpp"
#include "magnn/rng.hpp"
#include "magnn/tape.hpp"

namespace magnn {

// Score composition, mirroring the ablation family:
//   MF              general interest only
//   MF+S            + short-term window summary
//   MF+S+H+gating   + long-term memory, gated fusion
//   MF+S+H+concat   + long-term memory, concat fusion
//   FULL            gated fusion + item co-occurrence term
enum class Variant { MF, MF_S, MF_S_H_GATING, MF_S_H_CONCAT, FULL };

inline const char* variant_name(Variant v) {
    switch (v) {
        case Variant::MF: return "MF";
        case Variant::MF_S: return "MF+S";
        case Variant::MF_S_H_GATING: return "MF+S+H+gating";
        case Variant::MF_S_H_CONCAT: return "MF+S+H+concat";
        case Variant::FULL: return "FULL";
    }
    return "?";
}

inline Variant variant_from_string(const std::string& s) {
    for (Variant v : {Variant::MF, Variant::MF_S, Variant::MF_S_H_GATING,
                      Variant::MF_S_H_CONCAT, Variant::FULL})
        if (s == variant_name(v)) return v;
    throw ConfigError("unknown variant '" + s +
                      "' (expected MF, MF+S, MF+S+H+gating, MF+S+H+concat or FULL)");
}

enum class Precision { f32, f64 };

inline const char* precision_name(Precision p) { return p == Precision::f64 ? "f64" : "f32"; }

inline Precision precision_from_string(const std::string& s) {
    if (s == "f32") return Precision::f32;
    if (s == "f64") return Precision::f64;
    throw ConfigError("unknown precision '" + s + "' (expected f32 or f64)");
}

struct ModelConfig {
    int dim = 50;          // d, embedding size (must be even for the PE)
    int attn_dims = 10;    // h, attention rows
    int memory_units = 10; // m
    int window = 5;        // |L|
    int targets = 3;       // |T|
    int history_cap = 20;
    Variant variant = Variant::FULL;
    Precision precision = Precision::f64;
    uint64_t seed = 42;

    void validate() const {
        if (dim < 1 || attn_dims < 1 || memory_units < 1 || window < 1 || targets < 1 ||
            history_cap < 0)
            throw ConfigError("model config: all dimensions must be positive");
        if (dim % 2 != 0)
            throw ConfigError("model config: dim must be even (sinusoidal encoding)");
    }
};

/// All learnable tensors. Wc is allocated only for the concat variant; every
/// other tensor exists for every variant (unused ones still enter the
/// regularizer, matching the full-norm objective).
template <typename S>
struct ModelParams {
    Mat<S> P;      // M x d user embeddings
    Mat<S> Q;      // N x d output item embeddings
    Mat<S> E;      // (N+1) x d input item embeddings, last row = padding, fixed at zero
    Mat<S> W1, W2; // d x 2d aggregation weights
    Mat<S> Wa1, Wa2; // d x d attention weights
    Mat<S> Wa3;    // h x d attention projection
    Mat<S> K_mem, V_mem; // d x m memory keys / values
    Mat<S> Wg1, Wg2, Wg3; // d x d gate weights
    Mat<S> Wr;     // d x d bilinear co-occurrence weights
    Mat<S> Wc;     // d x 2d concat fusion (concat variant only)

    int32_t num_users = 0;
    int32_t num_items = 0;

    std::vector<std::pair<const char*, Mat<S>*>> tensors() {
        std::vector<std::pair<const char*, Mat<S>*>> out = {
            {"P", &P},         {"Q", &Q},         {"E", &E},     {"W1", &W1},
            {"W2", &W2},       {"Wa1", &Wa1},     {"Wa2", &Wa2}, {"Wa3", &Wa3},
            {"K_mem", &K_mem}, {"V_mem", &V_mem}, {"Wg1", &Wg1}, {"Wg2", &Wg2},
            {"Wg3", &Wg3},     {"Wr", &Wr}};
        if (Wc.size() > 0) out.push_back({"Wc", &Wc});
        return out;
    }
    std::vector<std::pair<const char*, const Mat<S>*>> tensors() const {
        auto mut = const_cast<ModelParams*>(this)->tensors();
        std::vector<std::pair<const char*, const Mat<S>*>> out;
        out.reserve(mut.size());
        for (auto& [n, m] : mut) out.push_back({n, m});
        return out;
    }

    static bool is_embedding(const std::string& name) {
        return name == "P" || name == "Q" || name == "E";
    }
};

/// Glorot-uniform initialization, each entry from
/// [-sqrt(6/(rows+cols)), +sqrt(6/(rows+cols))), deterministic in the seed.
/// The padding row of E is zeroed and stays zero for the model's lifetime.
template <typename S>
ModelParams<S> init_params(const ModelConfig& cfg, int32_t num_users, int32_t num_items,
                           Rng& rng) {
    cfg.validate();
    if (num_users < 1 || num_items < 1)
        throw ContractError("init_params: need at least one user and one item");
    const int d = cfg.dim, h = cfg.attn_dims, m = cfg.memory_units;

    ModelParams<S> p;
    p.num_users = num_users;
    p.num_items = num_items;
    p.P = Mat<S>(num_users, d);
    p.Q = Mat<S>(num_items, d);
    p.E = Mat<S>(num_items + 1, d);
    p.W1 = Mat<S>(d, 2 * d);
    p.W2 = Mat<S>(d, 2 * d);
    p.Wa1 = Mat<S>(d, d);
    p.Wa2 = Mat<S>(d, d);
    p.Wa3 = Mat<S>(h, d);
    p.K_mem = Mat<S>(d, m);
    p.V_mem = Mat<S>(d, m);
    p.Wg1 = Mat<S>(d, d);
    p.Wg2 = Mat<S>(d, d);
    p.Wg3 = Mat<S>(d, d);
    p.Wr = Mat<S>(d, d);
    if (cfg.variant == Variant::MF_S_H_CONCAT) p.Wc = Mat<S>(d, 2 * d);

    for (auto& [name, t] : p.tensors()) {
        const double bound = std::sqrt(6.0 / (t->rows + t->cols));
        for (auto& x : t->v) x = static_cast<S>(rng.uniform_sym(bound));
    }
    for (int c = 0; c < d; ++c) p.E(num_items, c) = S(0);
    return p;
}

/// Transformer-style sinusoidal position table, rows indexed by position
/// (0 = oldest history item): PE[pos, 2i] = sin(pos / 10000^{2i/d}),
/// PE[pos, 2i+1] = cos(pos / 10000^{2i/d}).
template <typename S>
Mat<S> positional_encoding(int length, int dim) {
    if (dim < 2 || dim % 2 != 0)
        throw ConfigError("positional_encoding: dim must be even and positive");
    if (length < 0) throw ContractError("positional_encoding: negative length");
    Mat<S> pe(length, dim);
    for (int pos = 0; pos < length; ++pos)
        for (int i = 0; 2 * i < dim; ++i) {
            const double angle = pos / std::pow(10000.0, (2.0 * i) / dim);
            pe(pos, 2 * i) = static_cast<S>(std::sin(angle));
            pe(pos, 2 * i + 1) = static_cast<S>(std::cos(angle));
        }
    return pe;
}

/// Builds the scoring graph for one model on one tape. Item representations
/// and user embeddings are cached per tape, so a batch touching the same item
/// twice records the aggregation once.
template <typename S>
class ModelForward {
public:
    using Var = typename Tape<S>::Var;

    ModelForward(Tape<S>& tape, const ModelParams<S>& params, const ItemGraph& graph,
                 const ModelConfig& cfg, bool with_grad = true)
        : t_(tape), p_(params), g_(graph), cfg_(cfg) {
        for (auto& [name, mat] : params.tensors()) leaves_[name] = t_.leaf(mat, with_grad);
    }

    Var param(const std::string& name) const {
        auto it = leaves_.find(name);
        if (it == leaves_.end()) throw ContractError("ModelForward: no tensor '" + name + "'");
        return it->second;
    }

    Var user_embedding(int32_t u) {
        auto it = user_cache_.find(u);
        if (it != user_cache_.end()) return it->second;
        Var pu = t_.transpose(t_.gather_rows(param("P"), {u}));
        user_cache_.emplace(u, pu);
        return pu;
    }

    /// h_i = tanh(W1 [sum_k e_k A_ik ; e_i]); the padding item bypasses the
    /// aggregation and is the zero vector.
    Var item_repr(int32_t i) {
        auto it = item_cache_.find(i);
        if (it != item_cache_.end()) return it->second;
        Var h;
        if (i == pad_index()) {
            h = zero_vec();
        } else {
            auto nbrs = g_.neighbors(i);
            Var agg;
            if (nbrs.empty()) {
                agg = zero_vec();
            } else {
                std::vector<int32_t> idx;
                Mat<S> w(1, static_cast<int>(nbrs.size()));
                for (size_t k = 0; k < nbrs.size(); ++k) {
                    idx.push_back(nbrs[k].item);
                    w(0, static_cast<int>(k)) = static_cast<S>(nbrs[k].weight);
                }
                agg = t_.transpose(
                    t_.matmul(t_.constant(std::move(w)), t_.gather_rows(param("E"), idx)));
            }
            Var ei = t_.transpose(t_.gather_rows(param("E"), {i}));
            h = t_.tanh(t_.matmul(param("W1"), t_.concat_rows(agg, ei)));
        }
        item_cache_.emplace(i, h);
        return h;
    }

    /// Masked mean of the window's item representations.
    Var window_mean(std::span<const int32_t> window, std::span<const uint8_t> mask) {
        std::vector<Var> hs;
        for (size_t i = 0; i < window.size(); ++i)
            if (mask[i]) hs.push_back(item_repr(window[i]));
        if (hs.empty())
            throw ContractError("window_mean: all-pad window (dataset guarantees real items)");
        return t_.scale(t_.add_n(hs), S(1) / static_cast<S>(hs.size()));
    }

    /// p^S = tanh(W2 [h_mean ; p_u]).
    Var short_interest(Var h_mean, Var pu) {
        return t_.tanh(t_.matmul(param("W2"), t_.concat_rows(h_mean, pu)));
    }

    /// Multi-dimensional attention query over the history (positional
    /// encodings added, oldest item = position 0). Empty history yields the
    /// zero query and the attention is skipped entirely.
    Var long_query(std::span<const int32_t> history, Var pu) {
        if (history.empty()) return zero_vec();
        const int n = static_cast<int>(history.size());
        std::vector<int32_t> idx(history.begin(), history.end());

        Mat<S> pe = positional_encoding<S>(n, cfg_.dim);
        Mat<S> pe_t(cfg_.dim, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < cfg_.dim; ++c) pe_t(c, r) = pe(r, c);

        Var H = t_.add(t_.transpose(t_.gather_rows(param("E"), idx)),
                       t_.constant(std::move(pe_t)));  // d x |H|
        Var lin = t_.add(t_.matmul(param("Wa1"), H),
                         t_.outer_broadcast(t_.matmul(param("Wa2"), pu), n));
        Var scores = t_.softmax(t_.matmul(param("Wa3"), t_.tanh(lin)), 1);  // h x |H|
        Var Z = t_.tanh(t_.matmul(scores, t_.transpose(H)));                // h x d
        std::vector<uint8_t> all(static_cast<size_t>(cfg_.attn_dims), 1);
        return t_.transpose(t_.mean_masked(Z, std::move(all)));
    }

    /// p^H = z + sum_i softmax(z . k_i) v_i.
    Var memory_read(Var z) {
        Var s = t_.softmax(t_.matmul(t_.transpose(z), param("K_mem")), 1);  // 1 x m
        Var o = t_.matmul(param("V_mem"), t_.transpose(s));
        return t_.add(z, o);
    }

    /// Gated fusion g h_mean + (1-g) p^H; the concat variant projects
    /// [h_mean ; p^H] with Wc instead.
    Var fuse(Var h_mean, Var ph, Var pu) {
        if (cfg_.variant == Variant::MF_S_H_CONCAT)
            return t_.matmul(param("Wc"), t_.concat_rows(h_mean, ph));
        Var g = t_.sigmoid(t_.add_n({t_.matmul(param("Wg1"), h_mean),
                                     t_.matmul(param("Wg2"), ph),
                                     t_.matmul(param("Wg3"), pu)}));
        Var ones = t_.constant(Mat<S>::ones(cfg_.dim, 1));
        return t_.add(t_.mul(g, h_mean), t_.mul(t_.sub(ones, g), ph));
    }

    /// The d-vector a with score(u, l, j) = a . q_j for the active variant;
    /// the bilinear term folds in as Wr^T ebar with ebar the masked mean of
    /// the window's input embeddings.
    Var combined_vector(int32_t user, std::span<const int32_t> window,
                        std::span<const uint8_t> mask, std::span<const int32_t> history) {
        Var pu = user_embedding(user);
        if (cfg_.variant == Variant::MF) return pu;

        Var h_mean = window_mean(window, mask);
        if (cfg_.variant == Variant::MF_S) return t_.add(pu, short_interest(h_mean, pu));

        Var pc = fuse(h_mean, memory_read(long_query(history, pu)), pu);
        if (cfg_.variant != Variant::FULL) return t_.add(pu, pc);

        std::vector<int32_t> widx(window.begin(), window.end());
        std::vector<uint8_t> wmask(mask.begin(), mask.end());
        Var ebar = t_.mean_masked(t_.gather_rows(param("E"), std::move(widx)),
                                  std::move(wmask));  // 1 x d
        Var cooc = t_.transpose(t_.matmul(ebar, param("Wr")));
        return t_.add_n({pu, pc, cooc});
    }

    /// Scores of the given candidate items, as a k x 1 column.
    Var scores(Var combined, const std::vector<int32_t>& items) {
        return t_.matmul(t_.gather_rows(param("Q"), items), combined);
    }

    Var score(const TrainingInstance& inst, int32_t item) {
        Var a = combined_vector(inst.user, inst.window, inst.window_mask, inst.history);
        return scores(a, {item});
    }

    Tape<S>& tape() { return t_; }
    const ModelParams<S>& params() const { return p_; }
    const ItemGraph& graph() const { return g_; }
    int32_t pad_index() const { return p_.num_items; }

private:
    Var zero_vec() {
        if (zero_.id < 0) zero_ = t_.constant(Mat<S>::zeros(cfg_.dim, 1));
        return zero_;
    }

    Tape<S>& t_;
    const ModelParams<S>& p_;
    const ItemGraph& g_;
    ModelConfig cfg_;
    std::map<std::string, Var> leaves_;
    std::map<int32_t, Var> user_cache_;
    std::map<int32_t, Var> item_cache_;
    Var zero_{};
};

/// Forward-only scoring of candidate items for one (user, window, history)
/// context. Used by evaluation; no gradients recorded.
template <typename S>
std::vector<S> score_items(const ModelParams<S>& params, const ItemGraph& graph,
                           const ModelConfig& cfg, int32_t user,
                           std::span<const int32_t> window, std::span<const uint8_t> mask,
                           std::span<const int32_t> history,
                           const std::vector<int32_t>& items) {
    Tape<S> tape(false);
    ModelForward<S> fwd(tape, params, graph, cfg, /*with_grad=*/false);
    auto a = fwd.combined_vector(user, window, mask, history);
    auto s = fwd.scores(a, items);
    return tape.val(s).v;
}

}  // namespace magnn
