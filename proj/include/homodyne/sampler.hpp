#pragma once

/// Inverse-CDF sampling of quadrature values from an arbitrary Fock-basis
/// state. The phase-independent pieces of the marginal are cached once as
/// banded cumulative tables
///   G_d(x) = Int_{-hw}^{x} sum_n rho_{n+d,n} psi_{n+d}(t) psi_n(t) dt,
/// so the CDF at any phase is
///   F(x; theta) = G_0(x) + 2 sum_{d>=1} Re(e^{-i d theta} G_d(x))
/// and one draw costs O(log n_nodes * dim).

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "homodyne/fock.hpp"
#include "homodyne/rng.hpp"

namespace homodyne {

class QuadratureSampler {
public:
    explicit QuadratureSampler(const DensityMatrix& rho, double half_width = 8.0,
                               int n_nodes = 8193)
        : dim_(rho.dim()), half_width_(half_width), n_nodes_(n_nodes) {
        if (n_nodes < 4096) {
            throw std::invalid_argument("QuadratureSampler: need at least 4096 grid nodes");
        }
        dx_ = 2.0 * half_width_ / (n_nodes_ - 1);
        // Band values C_d(x_k), then cumulative trapezoid integrals G_d.
        std::vector<std::vector<std::complex<double>>> bands(
            static_cast<std::size_t>(dim_),
            std::vector<std::complex<double>>(static_cast<std::size_t>(n_nodes_)));
        for (int k = 0; k < n_nodes_; ++k) {
            const double x = -half_width_ + k * dx_;
            const auto psi = hermite_wavefunctions(dim_ - 1, x);
            for (int d = 0; d < dim_; ++d) {
                std::complex<double> c{0.0, 0.0};
                for (int n = 0; n + d < dim_; ++n) {
                    c += rho.at(n + d, n) * (psi[static_cast<std::size_t>(n + d)] *
                                             psi[static_cast<std::size_t>(n)]);
                }
                bands[static_cast<std::size_t>(d)][static_cast<std::size_t>(k)] = c;
            }
        }
        cum_.assign(static_cast<std::size_t>(dim_),
                    std::vector<std::complex<double>>(static_cast<std::size_t>(n_nodes_)));
        for (int d = 0; d < dim_; ++d) {
            std::complex<double> acc{0.0, 0.0};
            cum_[static_cast<std::size_t>(d)][0] = acc;
            for (int k = 1; k < n_nodes_; ++k) {
                acc += 0.5 * dx_ *
                       (bands[static_cast<std::size_t>(d)][static_cast<std::size_t>(k - 1)] +
                        bands[static_cast<std::size_t>(d)][static_cast<std::size_t>(k)]);
                cum_[static_cast<std::size_t>(d)][static_cast<std::size_t>(k)] = acc;
            }
        }
    }

    int dim() const { return dim_; }

    /// CDF of the quadrature marginal at phase theta (grid-interpolated).
    double cdf(double theta, double x) const {
        const auto phases = band_phases(theta);
        if (x <= -half_width_) return 0.0;
        if (x >= half_width_) return cdf_at_node(phases, n_nodes_ - 1);
        const double u = (x + half_width_) / dx_;
        const int k = static_cast<int>(u);
        const double frac = u - k;
        const double lo = cdf_at_node(phases, k);
        const double hi = cdf_at_node(phases, k + 1);
        return lo + frac * (hi - lo);
    }

    /// One draw from the marginal at phase theta.
    double sample(double theta, RngStream& rng) const {
        const auto phases = band_phases(theta);
        const double total = cdf_at_node(phases, n_nodes_ - 1);
        const double target = rng.uniform() * total;
        // Bisect for the largest node with F <= target.
        int lo = 0;
        int hi = n_nodes_ - 1;
        while (hi - lo > 1) {
            const int mid = (lo + hi) / 2;
            if (cdf_at_node(phases, mid) <= target) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        const double f_lo = cdf_at_node(phases, lo);
        const double f_hi = cdf_at_node(phases, hi);
        const double frac = (f_hi > f_lo) ? (target - f_lo) / (f_hi - f_lo) : 0.5;
        return -half_width_ + (lo + frac) * dx_;
    }

private:
    std::vector<std::complex<double>> band_phases(double theta) const {
        std::vector<std::complex<double>> phases(static_cast<std::size_t>(dim_));
        const std::complex<double> rot = std::polar(1.0, -theta);
        std::complex<double> r{1.0, 0.0};
        for (int d = 0; d < dim_; ++d) {
            phases[static_cast<std::size_t>(d)] = r;
            r *= rot;
        }
        return phases;
    }

    double cdf_at_node(const std::vector<std::complex<double>>& phases, int k) const {
        double f = cum_[0][static_cast<std::size_t>(k)].real();
        for (int d = 1; d < dim_; ++d) {
            f += 2.0 * (phases[static_cast<std::size_t>(d)] *
                        cum_[static_cast<std::size_t>(d)][static_cast<std::size_t>(k)])
                           .real();
        }
        return f;
    }

    int dim_;
    double half_width_;
    int n_nodes_;
    double dx_;
    std::vector<std::vector<std::complex<double>>> cum_;
};

}  // namespace homodyne
