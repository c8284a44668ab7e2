#pragma once

#include <cstdint>
#include <cmath>

#include <Eigen/Core>

namespace gfa {

/// Counter-based pseudo-random generator.
///
/// Every draw is a pure function of (seed, stream, counter), so ensembles can
/// be generated in any order -- column by column, row by row, or in parallel --
/// and still reproduce bit-identically from a single 64-bit seed.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(seed) ^ mix(stream * 0xda942042e4dd58b5ULL + 0x2545f4914f6cdd1dULL)) {}

    /// Uniform draw strictly inside (0, 1).
    double uniform(std::uint64_t counter) const {
        const std::uint64_t w = word(counter);
        return (static_cast<double>(w >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal draw (Box-Muller, cosine branch).
    double normal(std::uint64_t counter) const {
        const double u1 = uniform(2 * counter);
        const double u2 = uniform(2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    Eigen::VectorXd normal_vector(std::uint64_t first_counter, Eigen::Index n) const {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i)
            v[i] = normal(first_counter + static_cast<std::uint64_t>(i));
        return v;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t word(std::uint64_t counter) const {
        return mix(key_ + counter * 0x9e3779b97f4a7c15ULL);
    }

    std::uint64_t key_;
};

} // namespace gfa
