#pragma once

/// Exact Wigner functions of truncated Fock-basis states, evaluated through
/// the Laguerre-kernel expansion
///   W(q,p) = sum_{m,n} rho_{mn} W_{mn}(q,p),
///   W_{mn}(q,p) = ((-1)^n / pi) sqrt(2^{m-n} n!/m!) (q - i p)^{m-n}
///                 L_n^{m-n}(2 (q^2+p^2)) exp(-(q^2+p^2))        for m >= n,
///   W_{nm} = conj(W_{mn}).
/// This is the non-tomographic reference surface against which filtered
/// back-projection reconstructions are validated.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "homodyne/fock.hpp"

namespace homodyne {

/// Quasi-probability samples W(q,p) on a rectangular grid, stored row-major
/// over q (outer) then p (inner). Axes are uniform and ascending.
struct WignerGrid {
    std::vector<double> q_axis;
    std::vector<double> p_axis;
    std::vector<double> values;

    double& at(std::size_t iq, std::size_t ip) { return values[iq * p_axis.size() + ip]; }
    double at(std::size_t iq, std::size_t ip) const { return values[iq * p_axis.size() + ip]; }
};

/// Uniform symmetric axis [-half_width, +half_width] with n_points nodes.
inline std::vector<double> make_symmetric_axis(double half_width, int n_points) {
    if (n_points < 2) throw std::invalid_argument("make_symmetric_axis: need >= 2 points");
    if (!(half_width > 0.0)) throw std::invalid_argument("make_symmetric_axis: bad half width");
    std::vector<double> axis(static_cast<std::size_t>(n_points));
    const double dx = 2.0 * half_width / (n_points - 1);
    for (int i = 0; i < n_points; ++i) {
        axis[static_cast<std::size_t>(i)] = -half_width + i * dx;
    }
    return axis;
}

/// Throws unless the axis is strictly ascending with uniform spacing
/// (tolerance 1e-12); returns the spacing. `what` names the axis in errors.
inline double validate_uniform_axis(std::span<const double> axis, const char* what = "axis") {
    if (axis.size() < 2) {
        throw std::invalid_argument(std::string(what) + " needs at least 2 points");
    }
    const double dx = axis[1] - axis[0];
    if (!(dx > 0.0)) throw std::invalid_argument(std::string(what) + " must be strictly ascending");
    for (std::size_t i = 1; i < axis.size(); ++i) {
        const double step = axis[i] - axis[i - 1];
        if (std::abs(step - dx) > 1e-12) {
            throw std::invalid_argument(std::string(what) + " spacing must be uniform");
        }
    }
    return dx;
}

/// Exact Wigner value of the state at one phase-space point.
inline double wigner_point(const DensityMatrix& rho, double q, double p) {
    const int dim = rho.dim();
    const double r2 = q * q + p * p;
    const double gauss = std::exp(-r2);
    const double y = 2.0 * r2;
    const std::complex<double> zbar{q, -p};
    double total = 0.0;
    std::complex<double> zpow{1.0, 0.0};  // (q - ip)^d
    std::vector<double> lag(static_cast<std::size_t>(dim));
    for (int d = 0; d < dim; ++d) {
        // Associated Laguerre L_j^d(y) for j = 0 .. dim-1-d (upward recurrence).
        const int jmax = dim - 1 - d;
        lag[0] = 1.0;
        if (jmax >= 1) lag[1] = 1.0 + d - y;
        for (int j = 1; j < jmax; ++j) {
            lag[static_cast<std::size_t>(j) + 1] =
                ((2.0 * j + 1.0 + d - y) * lag[static_cast<std::size_t>(j)] -
                 (j + d) * lag[static_cast<std::size_t>(j) - 1]) /
                (j + 1.0);
        }
        double sign = 1.0;  // (-1)^n for n = 0,1,...
        for (int n = 0; n + d < dim; ++n) {
            const int m = n + d;
            const double mag = std::exp(0.5 * (d * std::numbers::ln2 +
                                               std::lgamma(n + 1.0) - std::lgamma(m + 1.0)));
            const std::complex<double> w_mn =
                (sign / std::numbers::pi) * mag * zpow * lag[static_cast<std::size_t>(n)] * gauss;
            if (d == 0) {
                total += rho.at(n, n).real() * w_mn.real();
            } else {
                total += 2.0 * (rho.at(m, n) * w_mn).real();
            }
            sign = -sign;
        }
        zpow *= zbar;
    }
    return total;
}

/// Exact Wigner function of the state sampled on the given axes.
inline WignerGrid wigner_from_density(const DensityMatrix& rho,
                                      std::vector<double> q_axis,
                                      std::vector<double> p_axis) {
    validate_uniform_axis(q_axis);
    validate_uniform_axis(p_axis);
    WignerGrid grid;
    grid.q_axis = std::move(q_axis);
    grid.p_axis = std::move(p_axis);
    grid.values.assign(grid.q_axis.size() * grid.p_axis.size(), 0.0);
    for (std::size_t iq = 0; iq < grid.q_axis.size(); ++iq) {
        for (std::size_t ip = 0; ip < grid.p_axis.size(); ++ip) {
            grid.at(iq, ip) = wigner_point(rho, grid.q_axis[iq], grid.p_axis[ip]);
        }
    }
    return grid;
}

/// Bilinear interpolation of a tabulated Wigner grid at (q, p); queries
/// outside the grid clamp to the edge.
inline double wigner_point_value(const WignerGrid& grid, double q, double p) {
    const double dq = validate_uniform_axis(grid.q_axis, "q axis");
    const double dp = validate_uniform_axis(grid.p_axis, "p axis");
    auto cell = [](double u, std::size_t n) {
        u = std::clamp(u, 0.0, static_cast<double>(n - 1));
        std::size_t i = std::min(static_cast<std::size_t>(u), n - 2);
        return std::pair<std::size_t, double>(i, u - static_cast<double>(i));
    };
    const auto [iq, fq] = cell((q - grid.q_axis.front()) / dq, grid.q_axis.size());
    const auto [ip, fp] = cell((p - grid.p_axis.front()) / dp, grid.p_axis.size());
    const std::size_t np = grid.p_axis.size();
    const double v00 = grid.values[iq * np + ip];
    const double v01 = grid.values[iq * np + ip + 1];
    const double v10 = grid.values[(iq + 1) * np + ip];
    const double v11 = grid.values[(iq + 1) * np + ip + 1];
    return (1.0 - fq) * ((1.0 - fp) * v00 + fp * v01) + fq * ((1.0 - fp) * v10 + fp * v11);
}

/// Riemann sum of the grid times the cell area (should be ~1 for grids that
/// cover the state).
inline double grid_total(const WignerGrid& grid) {
    const double dq = grid.q_axis[1] - grid.q_axis[0];
    const double dp = grid.p_axis[1] - grid.p_axis[0];
    KahanSum acc;
    for (double v : grid.values) acc.add(v);
    return acc.value() * dq * dp;
}

}  // namespace homodyne
