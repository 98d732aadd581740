#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "oracle/types.hpp"

namespace oracle {

// Deterministic random source. All distribution transforms are written out
// by hand (instead of std::<distribution>) because libstdc++ and libc++ are
// free to differ there; mt19937_64 itself is pinned by the standard.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t raw() { return eng_(); }

    // 53-bit mantissa uniform in [0, 1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Box-Muller, pair-cached. log1p(-u) keeps the argument strictly positive.
    double gauss() {
        if (have_cache_) {
            have_cache_ = false;
            return cache_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        const double a = 2.0 * M_PI * u2;
        cache_ = r * std::sin(a);
        have_cache_ = true;
        return r * std::cos(a);
    }

    // Row-major fill so the draw order matches the storage order.
    Matrix gauss_matrix(Index rows, Index cols) {
        Matrix m(rows, cols);
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < cols; ++j) m(i, j) = gauss();
        return m;
    }

    double uniform_in(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Draw in [0, bound). Modulo bias is ~bound/2^64, irrelevant at our sizes.
    std::uint64_t index(std::uint64_t bound) { return eng_() % bound; }

    // Fisher-Yates, high-to-low, one index draw per swap.
    template <typename T>
    void shuffle(std::vector<T>& xs) {
        for (std::size_t i = xs.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(index(i));
            std::swap(xs[i - 1], xs[j]);
        }
    }

    std::vector<Index> permutation(Index n) {
        std::vector<Index> p(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
        shuffle(p);
        return p;
    }

  private:
    std::mt19937_64 eng_;
    bool have_cache_ = false;
    double cache_ = 0.0;
};

// Per-epoch batch-shuffle seed; golden-ratio stride keeps epochs decorrelated
// while staying reproducible from (seed, epoch) alone.
inline std::uint64_t batch_seed(std::uint64_t seed, std::uint64_t epoch) {
    return seed ^ (0x9E3779B97F4A7C15ULL * (epoch + 1));
}

}  // namespace oracle
