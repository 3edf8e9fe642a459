#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "magnn/errors.hpp"

namespace magnn {

// mt19937_64 with hand-rolled draw helpers. std::uniform_*_distribution and
// std::shuffle are implementation-defined, which would break the bit-identical
// reproducibility contract; these mappings are pinned.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Unbiased integer in [0, n) via rejection.
    uint64_t uniform_index(uint64_t n) {
        if (n == 0) throw ContractError("Rng::uniform_index: n must be positive");
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform in [-bound, bound).
    double uniform_sym(double bound) { return (2.0 * uniform01() - 1.0) * bound; }

    template <typename T>
    void shuffle(std::vector<T>& xs) {
        for (size_t i = xs.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(uniform_index(i));
            std::swap(xs[i - 1], xs[j]);
        }
    }

    // Derive an independent stream (for per-component seeding).
    Rng fork() { return Rng(engine_() ^ 0x9e3779b97f4a7c15ULL); }

private:
    std::mt19937_64 engine_;
};

}  // namespace magnn
