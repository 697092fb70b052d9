#pragma once

/// Deterministic random-number streams. Each Monte Carlo pulse owns an
/// independent stream derived from (seed, stream index) by a strong 64-bit
/// mix, so per-pulse results do not depend on the order in which pulses are
/// generated and a run is exactly reproducible from its seed.

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "homodyne/special.hpp"

namespace homodyne {

namespace detail {
/// Finalizing mix of splitmix64 (Stafford variant 13).
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}
}  // namespace detail

/// One independent random stream. Successive outputs walk a splitmix64
/// sequence whose starting point is a hash of (seed, stream index); streams
/// with different indices are statistically independent segments.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_index) {
        state_ = detail::mix64(detail::mix64(seed + 0x9E3779B97F4A7C15ull * (stream_index + 1)) +
                               stream_index + 0x632BE59BD9B4E019ull);
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return detail::mix64(state_);
    }

    /// Uniform draw strictly inside (0, 1) (safe for quantile transforms).
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via the inverse-CDF transform (exactly one uniform
    /// per draw, which keeps stream consumption predictable).
    double normal() { return normal_quantile(uniform()); }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    /// Poisson draw. Exact (Knuth product method) for small means; for large
    /// means the distribution is within ~1/sqrt(mean) of a rounded Gaussian,
    /// which is used instead (the library's use cases have mean >~ 1e6 where
    /// the approximation error is far below statistical resolution).
    long long poisson(double mean) {
        if (mean < 0.0) throw std::domain_error("poisson: negative mean");
        if (mean == 0.0) return 0;
        if (mean <= 50.0) {
            const double limit = std::exp(-mean);
            long long k = 0;
            double p = 1.0;
            do {
                ++k;
                p *= uniform();
            } while (p > limit);
            return k - 1;
        }
        const double draw = mean + std::sqrt(mean) * normal();
        return draw <= 0.0 ? 0 : static_cast<long long>(std::llround(draw));
    }

private:
    std::uint64_t state_;
};

}  // namespace homodyne
