#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "magnn/errors.hpp"

namespace magnn {

// Dense row-major matrix. Vectors are n x 1 (column) unless noted.
template <typename S>
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<S> v;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, S(0)) {
        if (r < 0 || c < 0) throw ContractError("Mat: negative shape");
    }

    static Mat zeros(int r, int c) { return Mat(r, c); }
    static Mat ones(int r, int c) {
        Mat m(r, c);
        for (auto& x : m.v) x = S(1);
        return m;
    }
    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = S(1);
        return m;
    }

    S& operator()(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    const S& operator()(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }

    size_t size() const { return v.size(); }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    bool all_finite() const {
        for (const S& x : v)
            if (!std::isfinite(static_cast<double>(x))) return false;
        return true;
    }

    void fill(S x) {
        for (auto& e : v) e = x;
    }

    std::string shape_str() const {
        return std::to_string(rows) + "x" + std::to_string(cols);
    }
};

template <typename S>
bool operator==(const Mat<S>& a, const Mat<S>& b) {
    return a.rows == b.rows && a.cols == b.cols && a.v == b.v;
}

}  // namespace magnn
