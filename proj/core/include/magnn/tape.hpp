#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "magnn/errors.hpp"
#include "magnn/mat.hpp"

namespace magnn {

/// Reverse-mode differentiation over dense matrices.
///
/// Forward ops record one node each; backward() replays the nodes in reverse
/// recording order exactly once, accumulating gradients into every slot that
/// requires them. Parameter leaves reference external storage (no copy);
/// constants are owned by the tape and never receive gradients.
///
/// A tape is confined to one thread and one training/evaluation step.
template <typename S>
class Tape {
public:
    struct Var {
        int id = -1;
    };

    explicit Tape(bool check_finite = sizeof(S) == 8) : check_finite_(check_finite) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    int size() const { return static_cast<int>(slots_.size()); }

    const Mat<S>& val(Var x) const { return value_of(check_id(x)); }

    bool has_grad(Var x) const { return !slots_[check_id(x)].grad.v.empty(); }

    const Mat<S>& grad(Var x) const {
        int id = check_id(x);
        if (slots_[id].grad.v.empty())
            throw ContractError("Tape::grad: no gradient recorded for this var");
        return slots_[id].grad;
    }

    Mat<S> grad_or_zero(Var x) const {
        int id = check_id(x);
        if (slots_[id].grad.v.empty()) {
            const Mat<S>& v = value_of(id);
            return Mat<S>::zeros(v.rows, v.cols);
        }
        return slots_[id].grad;
    }

    /// Registers external storage as a leaf. The referenced matrix must
    /// outlive the tape. requires_grad marks it as a parameter leaf.
    Var leaf(const Mat<S>* m, bool requires_grad) {
        if (m == nullptr) throw ContractError("Tape::leaf: null storage");
        Slot s;
        s.ext = m;
        s.requires_grad = requires_grad;
        return push(std::move(s), "leaf");
    }

    /// Tape-owned constant; never differentiated.
    Var constant(Mat<S> m) {
        Slot s;
        s.own = std::move(m);
        s.requires_grad = false;
        return push(std::move(s), "constant");
    }

    Var matmul(Var a, Var b) {
        const Mat<S>& A = val(a);
        const Mat<S>& B = val(b);
        if (A.cols != B.rows)
            throw ContractError("matmul: inner dimensions differ, " + A.shape_str() + " * " +
                                B.shape_str());
        Mat<S> out(A.rows, B.cols);
        for (int i = 0; i < A.rows; ++i)
            for (int k = 0; k < A.cols; ++k) {
                const S aik = A(i, k);
                if (aik == S(0)) continue;
                for (int j = 0; j < B.cols; ++j) out(i, j) += aik * B(k, j);
            }
        return record_from({a, b}, std::move(out), "matmul", [a, b](Tape& t, int out_id) {
            const Mat<S>& g = t.slots_[out_id].grad;
            const Mat<S>& A = t.value_of(a.id);
            const Mat<S>& B = t.value_of(b.id);
            if (t.needs_grad(a)) {
                Mat<S>& ga = t.grad_acc(a.id);  // g * B^T
                for (int i = 0; i < g.rows; ++i)
                    for (int j = 0; j < g.cols; ++j) {
                        const S gij = g(i, j);
                        if (gij == S(0)) continue;
                        for (int k = 0; k < B.rows; ++k) ga(i, k) += gij * B(k, j);
                    }
            }
            if (t.needs_grad(b)) {
                Mat<S>& gb = t.grad_acc(b.id);  // A^T * g
                for (int i = 0; i < A.rows; ++i)
                    for (int k = 0; k < A.cols; ++k) {
                        const S aik = A(i, k);
                        if (aik == S(0)) continue;
                        for (int j = 0; j < g.cols; ++j) gb(k, j) += aik * g(i, j);
                    }
            }
        });
    }

    Var transpose(Var a) {
        const Mat<S>& A = val(a);
        Mat<S> out(A.cols, A.rows);
        for (int i = 0; i < A.rows; ++i)
            for (int j = 0; j < A.cols; ++j) out(j, i) = A(i, j);
        return record_from({a}, std::move(out), "transpose", [a](Tape& t, int out_id) {
            if (!t.needs_grad(a)) return;
            const Mat<S>& g = t.slots_[out_id].grad;
            Mat<S>& ga = t.grad_acc(a.id);
            for (int i = 0; i < g.rows; ++i)
                for (int j = 0; j < g.cols; ++j) ga(j, i) += g(i, j);
        });
    }

    /// Vertical concatenation of two equal-length column vectors.
    Var concat_rows(Var a, Var b) {
        const Mat<S>& A = val(a);
        const Mat<S>& B = val(b);
        if (A.cols != 1 || B.cols != 1)
            throw ContractError("concat_rows: inputs must be column vectors");
        if (A.rows != B.rows) throw ContractError("concat_rows: length mismatch");
        Mat<S> out(A.rows + B.rows, 1);
        for (int i = 0; i < A.rows; ++i) out.v[i] = A.v[i];
        for (int i = 0; i < B.rows; ++i) out.v[A.rows + i] = B.v[i];
        const int split = A.rows;
        return record_from({a, b}, std::move(out), "concat_rows", [a, b, split](Tape& t, int out_id) {
            const Mat<S>& g = t.slots_[out_id].grad;
            if (t.needs_grad(a)) {
                Mat<S>& ga = t.grad_acc(a.id);
                for (int i = 0; i < split; ++i) ga.v[i] += g.v[i];
            }
            if (t.needs_grad(b)) {
                Mat<S>& gb = t.grad_acc(b.id);
                for (int i = split; i < g.rows; ++i) gb.v[i - split] += g.v[i];
            }
        });
    }

    Var add(Var a, Var b) { return add_n({a, b}); }

    Var add_n(std::vector<Var> xs) {
        if (xs.empty()) throw ContractError("add_n: empty operand list");
        Mat<S> out = val(xs[0]);
        for (size_t i = 1; i < xs.size(); ++i) {
            const Mat<S>& X = val(xs[i]);
            if (!out.same_shape(X))
                throw ContractError("add_n: shape mismatch, " + out.shape_str() + " vs " +
                                    X.shape_str());
            for (size_t k = 0; k < out.v.size(); ++k) out.v[k] += X.v[k];
        }
        return record_from(xs, std::move(out), "add_n", [xs](Tape& t, int out_id) {
            const Mat<S>& g = t.slots_[out_id].grad;
            for (Var x : xs) {
                if (!t.needs_grad(x)) continue;
                Mat<S>& gx = t.grad_acc(x.id);
                for (size_t k = 0; k < g.v.size(); ++k) gx.v[k] += g.v[k];
            }
        });
    }

    Var sub(Var a, Var b) {
        const Mat<S>& A = val(a);
        const Mat<S>& B = val(b);
        if (!A.same_shape(B)) throw ContractError("sub: shape mismatch");
        Mat<S> out = A;
        for (size_t k = 0; k < out.v.size(); ++k) out.v[k] -= B.v[k];
        return record_from({a, b}, std::move(out), "sub", [a, b](Tape& t, int out_id) {
            const Mat<S>& g = t.slots_[out_id].grad;
            if (t.needs_grad(a)) {
                Mat<S>& ga = t.grad_acc(a.id);
                for (size_t k = 0; k < g.v.size(); ++k) ga.v[k] += g.v[k];
            }
            if (t.needs_grad(b)) {
                Mat<S>& gb = t.grad_acc(b.id);
                for (size_t k = 0; k < g.v.size(); ++k) gb.v[k] -= g.v[k];
            }
        });
    }

    Var mul(Var a, Var b) {
        const Mat<S>& A = val(a);
        const Mat<S>& B = val(b);
        if (!A.same_shape(B)) throw ContractError("mul: shape mismatch");
        Mat<S> out = A;
        for (size_t k = 0; k < out.v.size(); ++k) out.v[k] *= B.v[k];
        return record_from({a, b}, std::move(out), "mul", [a, b](Tape& t, int out_id) {
            const Mat<S>& g = t.slots_[out_id].grad;
            const Mat<S>& A = t.value_of(a.id);
            const Mat<S>& B = t.value_of(b.id);
            if (t.needs_grad(a)) {
                Mat<S>& ga = t.grad_acc(a.id);
                for (size_t k = 0; k < g.v.size(); ++k) ga.v[k] += g.v[k] * B.v[k];
            }
            if (t.needs_grad(b)) {
                Mat<S>& gb = t.grad_acc(b.id);
                for (size_t k = 0; k < g.v.size(); ++k) gb.v[k] += g.v[k] * A.v[k];
            }
        });
    }

    Var scale(Var a, S c) {
        Mat<S> out = val(a);
        for (auto& x : out.v) x *= c;
        return record_from({a}, std::move(out), "scale", [a, c](Tape& t, int out_id) {
            if (!t.needs_grad(a)) return;
            const Mat<S>& g = t.slots_[out_id].grad;
            Mat<S>& ga = t.grad_acc(a.id);
            for (size_t k = 0; k < g.v.size(); ++k) ga.v[k] += c * g.v[k];
        });
    }

    Var tanh(Var a) {
        Mat<S> out = val(a);
        for (auto& x : out.v) x = std::tanh(x);
        return record_from({a}, std::move(out), "tanh", [a](Tape& t, int out_id) {
            if (!t.needs_grad(a)) return;
            const Mat<S>& g = t.slots_[out_id].grad;
            const Mat<S>& y = t.slots_[out_id].own;
            Mat<S>& ga = t.grad_acc(a.id);
            for (size_t k = 0; k < g.v.size(); ++k)
                ga.v[k] += (S(1) - y.v[k] * y.v[k]) * g.v[k];
        });
    }

    Var sigmoid(Var a) {
        Mat<S> out = val(a);
        for (auto& x : out.v) x = stable_sigmoid(x);
        return record_from({a}, std::move(out), "sigmoid", [a](Tape& t, int out_id) {
            if (!t.needs_grad(a)) return;
            const Mat<S>& g = t.slots_[out_id].grad;
            const Mat<S>& y = t.slots_[out_id].own;
            Mat<S>& ga = t.grad_acc(a.id);
            for (size_t k = 0; k < g.v.size(); ++k)
                ga.v[k] += y.v[k] * (S(1) - y.v[k]) * g.v[k];
        });
    }

    /// Elementwise -log(sigmoid(x)), i.e. softplus(-x), in the overflow-safe
    /// form. Finite for the whole input range.
    Var neg_log_sigmoid(Var a) {
        Mat<S> out = val(a);
        for (auto& x : out.v) {
            const double d = static_cast<double>(x);
            const double r = d >= 0 ? std::log1p(std::exp(-d)) : -d + std::log1p(std::exp(d));
            x = static_cast<S>(r);
        }
        return record_from({a}, std::move(out), "neg_log_sigmoid", [a](Tape& t, int out_id) {
            if (!t.needs_grad(a)) return;
            const Mat<S>& g = t.slots_[out_id].grad;
            const Mat<S>& x = t.value_of(a.id);
            Mat<S>& ga = t.grad_acc(a.id);
            for (size_t k = 0; k < g.v.size(); ++k)
                ga.v[k] += (stable_sigmoid(x.v[k]) - S(1)) * g.v[k];
        });
    }

    /// Max-subtracted softmax. axis 0: each column sums to 1; axis 1: each row.
    Var softmax(Var a, int axis) {
        if (axis != 0 && axis != 1) throw ContractError("softmax: axis must be 0 or 1");
        const Mat<S>& A = val(a);
        Mat<S> out(A.rows, A.cols);
        const int slices = axis == 1 ? A.rows : A.cols;
        const int len = axis == 1 ? A.cols : A.rows;
        for (int s = 0; s < slices; ++s) {
            S mx = slice_at(A, axis, s, 0);
            for (int k = 1; k < len; ++k) mx = std::max(mx, slice_at(A, axis, s, k));
            S sum = S(0);
            for (int k = 0; k < len; ++k) {
                S e = std::exp(slice_at(A, axis, s, k) - mx);
                slice_at(out, axis, s, k) = e;
                sum += e;
            }
            for (int k = 0; k < len; ++k) slice_at(out, axis, s, k) /= sum;
        }
        return record_from({a}, std::move(out), "softmax", [a, axis](Tape& t, int out_id) {
            if (!t.needs_grad(a)) return;
            const Mat<S>& g = t.slots_[out_id].grad;
            const Mat<S>& y = t.slots_[out_id].own;
            Mat<S>& ga = t.grad_acc(a.id);
            const int slices = axis == 1 ? y.rows : y.cols;
            const int len = axis == 1 ? y.cols : y.rows;
            for (int s = 0; s < slices; ++s) {
                S dot = S(0);
                for (int k = 0; k < len; ++k)
                    dot += slice_at(g, axis, s, k) * slice_at(y, axis, s, k);
                for (int k = 0; k < len; ++k)
                    slice_at(ga, axis, s, k) +=
                        slice_at(y, axis, s, k) * (slice_at(g, axis, s, k) - dot);
            }
        });
    }

    /// Mean over the unmasked rows of X; returns a 1 x cols row vector.
    Var mean_masked(Var a, std::vector<uint8_t> mask) {
        const Mat<S>& A = val(a);
        if (static_cast<int>(mask.size()) != A.rows)
            throw ContractError("mean_masked: mask length must equal row count");
        int cnt = 0;
        for (uint8_t m : mask) cnt += m ? 1 : 0;
        if (cnt == 0) throw ContractError("mean_masked: all-false mask");
        Mat<S> out(1, A.cols);
        for (int r = 0; r < A.rows; ++r) {
            if (!mask[r]) continue;
            for (int c = 0; c < A.cols; ++c) out(0, c) += A(r, c);
        }
        const S inv = S(1) / static_cast<S>(cnt);
        for (auto& x : out.v) x *= inv;
        return record_from({a}, std::move(out), "mean_masked",
                      [a, mask = std::move(mask), inv](Tape& t, int out_id) {
                          if (!t.needs_grad(a)) return;
                          const Mat<S>& g = t.slots_[out_id].grad;
                          Mat<S>& ga = t.grad_acc(a.id);
                          for (int r = 0; r < ga.rows; ++r) {
                              if (!mask[r]) continue;
                              for (int c = 0; c < ga.cols; ++c) ga(r, c) += g(0, c) * inv;
                          }
                      });
    }

    /// Replicates a column vector into `count` columns (v outer 1).
    Var outer_broadcast(Var a, int count) {
        const Mat<S>& A = val(a);
        if (A.cols != 1) throw ContractError("outer_broadcast: input must be a column vector");
        if (count < 1) throw ContractError("outer_broadcast: count must be positive");
        Mat<S> out(A.rows, count);
        for (int i = 0; i < A.rows; ++i)
            for (int c = 0; c < count; ++c) out(i, c) = A.v[i];
        return record_from({a}, std::move(out), "outer_broadcast", [a](Tape& t, int out_id) {
            if (!t.needs_grad(a)) return;
            const Mat<S>& g = t.slots_[out_id].grad;
            Mat<S>& ga = t.grad_acc(a.id);
            for (int i = 0; i < g.rows; ++i) {
                S s = S(0);
                for (int c = 0; c < g.cols; ++c) s += g(i, c);
                ga.v[i] += s;
            }
        });
    }

    /// Stacks table rows selected by indices; duplicates allowed. Backward
    /// scatter-adds into the table gradient (duplicate rows sum).
    Var gather_rows(Var table, std::vector<int32_t> indices) {
        const Mat<S>& T = val(table);
        for (int32_t i : indices)
            if (i < 0 || i >= T.rows)
                throw ContractError("gather_rows: index " + std::to_string(i) +
                                    " out of range [0, " + std::to_string(T.rows) + ")");
        Mat<S> out(static_cast<int>(indices.size()), T.cols);
        for (size_t r = 0; r < indices.size(); ++r)
            for (int c = 0; c < T.cols; ++c) out(static_cast<int>(r), c) = T(indices[r], c);
        return record_from({table}, std::move(out), "gather_rows",
                      [table, indices = std::move(indices)](Tape& t, int out_id) {
                          if (!t.needs_grad(table)) return;
                          const Mat<S>& g = t.slots_[out_id].grad;
                          Mat<S>& gt = t.grad_acc(table.id);
                          for (size_t r = 0; r < indices.size(); ++r)
                              for (int c = 0; c < gt.cols; ++c)
                                  gt(indices[r], c) += g(static_cast<int>(r), c);
                      });
    }

    /// Sum of squared entries, as a 1x1 scalar.
    Var sum_sq(Var a) {
        const Mat<S>& A = val(a);
        Mat<S> out(1, 1);
        for (const S& x : A.v) out.v[0] += x * x;
        return record_from({a}, std::move(out), "sum_sq", [a](Tape& t, int out_id) {
            if (!t.needs_grad(a)) return;
            const S g = t.slots_[out_id].grad.v[0];
            const Mat<S>& x = t.value_of(a.id);
            Mat<S>& ga = t.grad_acc(a.id);
            for (size_t k = 0; k < x.v.size(); ++k) ga.v[k] += S(2) * x.v[k] * g;
        });
    }

    /// Seeds d(loss)/d(loss) = 1 and sweeps the tape once in reverse
    /// recording order. Gradients from a previous sweep are discarded.
    void backward(Var loss) {
        const int id = check_id(loss);
        const Mat<S>& lv = value_of(id);
        if (lv.rows != 1 || lv.cols != 1)
            throw ContractError("backward: loss must be a 1x1 scalar");
        for (auto& s : slots_) s.grad = Mat<S>();
        grad_acc(id).v[0] = S(1);
        for (int i = id; i >= 0; --i) {
            Slot& s = slots_[i];
            if (s.grad.v.empty() || !s.back) continue;
            s.back(*this, i);
        }
    }

private:
    struct Slot {
        Mat<S> own;
        const Mat<S>* ext = nullptr;
        Mat<S> grad;
        bool requires_grad = false;
        std::function<void(Tape&, int)> back;
    };

    static S stable_sigmoid(S x) {
        if (x >= S(0)) return S(1) / (S(1) + std::exp(-x));
        const S e = std::exp(x);
        return e / (S(1) + e);
    }

    static S& slice_at(Mat<S>& m, int axis, int s, int k) {
        return axis == 1 ? m(s, k) : m(k, s);
    }
    static const S& slice_at(const Mat<S>& m, int axis, int s, int k) {
        return axis == 1 ? m(s, k) : m(k, s);
    }

    int check_id(Var x) const {
        if (x.id < 0 || x.id >= static_cast<int>(slots_.size()))
            throw ContractError("Tape: var does not belong to this tape");
        return x.id;
    }

    const Mat<S>& value_of(int id) const {
        const Slot& s = slots_[id];
        return s.ext ? *s.ext : s.own;
    }

    bool needs_grad(Var x) const { return slots_[x.id].requires_grad; }

    Mat<S>& grad_acc(int id) {
        Slot& s = slots_[id];
        if (s.grad.v.empty()) {
            const Mat<S>& v = value_of(id);
            s.grad = Mat<S>::zeros(v.rows, v.cols);
        }
        return s.grad;
    }

    Var push(Slot&& s, const char* opname) {
        if (check_finite_) {
            const Mat<S>& v = s.ext ? *s.ext : s.own;
            if (!v.all_finite())
                throw NumericError(std::string("non-finite value produced by op '") + opname +
                                   "'");
        }
        slots_.push_back(std::move(s));
        return Var{static_cast<int>(slots_.size()) - 1};
    }

    // requires_grad is inherited from the inputs so subtrees with no
    // parameter leaf are skipped entirely in the backward sweep.
    template <typename F>
    Var record_from(std::initializer_list<Var> inputs, Mat<S>&& out, const char* opname,
                    F&& back) {
        Slot s;
        s.own = std::move(out);
        s.back = std::forward<F>(back);
        for (Var x : inputs) s.requires_grad = s.requires_grad || slots_[x.id].requires_grad;
        return push(std::move(s), opname);
    }

    template <typename F>
    Var record_from(const std::vector<Var>& inputs, Mat<S>&& out, const char* opname,
                    F&& back) {
        Slot s;
        s.own = std::move(out);
        s.back = std::forward<F>(back);
        for (Var x : inputs) s.requires_grad = s.requires_grad || slots_[x.id].requires_grad;
        return push(std::move(s), opname);
    }

    bool check_finite_;
    std::vector<Slot> slots_;
};

}  // namespace magnn
