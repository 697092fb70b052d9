#pragma once

/// State reconstruction from quadrature data: phase-binned marginal
/// histograms, phase estimation from segment means, filtered back-projection
/// (inverse Radon) onto a Wigner-function grid, and pattern-function sampling
/// of Fock-basis density-matrix elements with statistical error bars.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "homodyne/ddreal.hpp"
#include "homodyne/detector.hpp"
#include "homodyne/errors.hpp"
#include "homodyne/fock.hpp"
#include "homodyne/numerics.hpp"
#include "homodyne/special.hpp"
#include "homodyne/wigner.hpp"

namespace homodyne {

/// Phase-binned quadrature histograms: one marginal distribution per scan
/// segment. `phases` holds the estimated (or scan) phase of each segment and
/// may be empty when no phase information has been assigned yet.
struct Marginals {
    int n_phases = 0;
    int n_bins = 0;
    std::vector<double> phases;     ///< One phase per segment, rad; empty = unset.
    std::vector<double> bin_edges;  ///< n_bins + 1 uniform edges, symmetric about 0.
    std::vector<long long> counts;  ///< Row-major n_phases x n_bins.
    std::vector<long long> totals;  ///< Sample count per segment.

    bool phases_set() const {
        return n_phases > 0 && static_cast<int>(phases.size()) == n_phases;
    }
    double bin_width() const { return bin_edges.at(1) - bin_edges.at(0); }
    double bin_center(int b) const { return 0.5 * (bin_edges.at(b) + bin_edges.at(b + 1)); }
    long long count(int segment, int b) const {
        return counts.at(static_cast<std::size_t>(segment) * n_bins + b);
    }
};

namespace detail {

inline void check_segmentation(std::size_t n_samples, int n_phases, int n_bins) {
    if (n_samples == 0) throw DataError("bin_marginals: empty sample set");
    if (n_phases < 1) throw ConfigError("bin_marginals: segment count must be positive");
    if (n_bins < 1) throw ConfigError("bin_marginals: bin count must be positive");
    if (n_samples % static_cast<std::size_t>(n_phases) != 0) {
        throw DataError("bin_marginals: sample count not divisible by segment count");
    }
}

/// Symmetric histogram half-width: the sample extremum rounded up to the
/// next multiple of 0.5 (never below 0.5), so repeated runs of the same
/// experiment produce comparable bin layouts.
inline double histogram_half_width(double max_abs) {
    if (!std::isfinite(max_abs)) throw DataError("bin_marginals: non-finite sample value");
    return std::max(0.5, std::ceil(max_abs / 0.5) * 0.5);
}

inline Marginals make_marginal_frame(std::size_t n_samples, int n_phases, int n_bins,
                                     double half_width) {
    Marginals m;
    m.n_phases = n_phases;
    m.n_bins = n_bins;
    m.bin_edges.resize(static_cast<std::size_t>(n_bins) + 1);
    for (int i = 0; i <= n_bins; ++i) {
        m.bin_edges[static_cast<std::size_t>(i)] =
            -half_width + 2.0 * half_width * static_cast<double>(i) / n_bins;
    }
    m.counts.assign(static_cast<std::size_t>(n_phases) * static_cast<std::size_t>(n_bins), 0);
    m.totals.assign(static_cast<std::size_t>(n_phases), 0);
    (void)n_samples;
    return m;
}

inline void deposit(Marginals& m, std::size_t segment, double value) {
    const double lo = m.bin_edges.front();
    const double dx = m.bin_width();
    long long b = static_cast<long long>(std::floor((value - lo) / dx));
    b = std::clamp<long long>(b, 0, m.n_bins - 1);
    ++m.counts[segment * static_cast<std::size_t>(m.n_bins) + static_cast<std::size_t>(b)];
    ++m.totals[segment];
}

}  // namespace detail

/// Slices time-ordered samples into contiguous segments (one per scan phase)
/// and histograms each segment over a shared symmetric range. Segment phases
/// are initialized from the per-sample scan phases.
inline Marginals bin_marginals(std::span<const QuadratureSample> samples, int n_phases = 64,
                               int n_bins = 128) {
    detail::check_segmentation(samples.size(), n_phases, n_bins);
    double max_abs = 0.0;
    for (const auto& s : samples) max_abs = std::max(max_abs, std::abs(s.value));
    Marginals m = detail::make_marginal_frame(samples.size(), n_phases, n_bins,
                                              detail::histogram_half_width(max_abs));
    const std::size_t per_segment = samples.size() / static_cast<std::size_t>(n_phases);
    std::vector<KahanSum> theta_sums(static_cast<std::size_t>(n_phases));
    for (std::size_t j = 0; j < samples.size(); ++j) {
        const std::size_t seg = j / per_segment;
        detail::deposit(m, seg, samples[j].value);
        theta_sums[seg].add(samples[j].theta);
    }
    m.phases.resize(static_cast<std::size_t>(n_phases));
    for (int i = 0; i < n_phases; ++i) {
        m.phases[static_cast<std::size_t>(i)] =
            theta_sums[static_cast<std::size_t>(i)].value() / static_cast<double>(per_segment);
    }
    return m;
}

/// Overload for bare quadrature values with no scan metadata: the segment
/// phases are left unset and must be assigned before reconstruction.
inline Marginals bin_marginals(std::span<const double> values, int n_phases = 64,
                               int n_bins = 128) {
    detail::check_segmentation(values.size(), n_phases, n_bins);
    double max_abs = 0.0;
    for (double v : values) max_abs = std::max(max_abs, std::abs(v));
    Marginals m = detail::make_marginal_frame(values.size(), n_phases, n_bins,
                                              detail::histogram_half_width(max_abs));
    const std::size_t per_segment = values.size() / static_cast<std::size_t>(n_phases);
    for (std::size_t j = 0; j < values.size(); ++j) detail::deposit(m, j / per_segment, values[j]);
    return m;
}

/// Histogram mean of each segment.
inline std::vector<double> segment_means(const Marginals& m) {
    std::vector<double> out(static_cast<std::size_t>(m.n_phases));
    for (int i = 0; i < m.n_phases; ++i) {
        KahanSum s;
        for (int b = 0; b < m.n_bins; ++b) {
            s.add(static_cast<double>(m.count(i, b)) * m.bin_center(b));
        }
        const auto total = m.totals.at(static_cast<std::size_t>(i));
        if (total <= 0) throw DataError("segment_means: empty segment");
        out[static_cast<std::size_t>(i)] = s.value() / static_cast<double>(total);
    }
    return out;
}

/// Standard error of each segment mean, from the histogram variance.
inline std::vector<double> segment_std_errs(const Marginals& m) {
    const std::vector<double> means = segment_means(m);
    std::vector<double> out(static_cast<std::size_t>(m.n_phases));
    for (int i = 0; i < m.n_phases; ++i) {
        KahanSum s;
        for (int b = 0; b < m.n_bins; ++b) {
            const double d = m.bin_center(b) - means[static_cast<std::size_t>(i)];
            s.add(static_cast<double>(m.count(i, b)) * d * d);
        }
        const double total = static_cast<double>(m.totals.at(static_cast<std::size_t>(i)));
        out[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, s.value() / total) / total);
    }
    return out;
}

/// Recovers the local-oscillator phase of each segment from the segment
/// means of a displaced (coherent-like) state: mean_i = sqrt(2)*A*cos(theta_i).
/// The arccos branch is resolved by requiring the phases to increase
/// monotonically across the scan, matching a monotone piezo sweep.
///
/// Throws PhaseUnresolvableError when every segment mean is statistically
/// consistent with zero (no phase reference in the data).
inline std::vector<double> estimate_phases(const Marginals& m,
                                           std::optional<double> amplitude_hint = std::nullopt) {
    if (m.n_phases < 1) throw DataError("estimate_phases: empty marginals");
    const std::vector<double> means = segment_means(m);
    const std::vector<double> errs = segment_std_errs(m);
    bool resolvable = false;
    for (int i = 0; i < m.n_phases; ++i) {
        if (std::abs(means[static_cast<std::size_t>(i)]) >=
            3.0 * errs[static_cast<std::size_t>(i)]) {
            resolvable = true;
            break;
        }
    }
    if (!resolvable) {
        throw PhaseUnresolvableError(
            "estimate_phases: all segment means are consistent with zero; "
            "the state carries no phase reference (fall back to scan phases)");
    }
    double amplitude = 0.0;
    if (amplitude_hint) {
        if (!(*amplitude_hint > 0.0)) {
            throw ConfigError("estimate_phases: amplitude hint must be positive");
        }
        amplitude = *amplitude_hint;
    } else {
        double max_mean = 0.0;
        for (double v : means) max_mean = std::max(max_mean, std::abs(v));
        amplitude = max_mean / std::numbers::sqrt2;
    }
    const double scale = std::numbers::sqrt2 * amplitude;
    const double two_pi = 2.0 * std::numbers::pi;
    const double spacing = two_pi / static_cast<double>(m.n_phases);

    std::vector<double> out(static_cast<std::size_t>(m.n_phases));
    for (int i = 0; i < m.n_phases; ++i) {
        const double c = std::clamp(means[static_cast<std::size_t>(i)] / scale, -1.0, 1.0);
        const double a = std::acos(c);  // principal branch in [0, pi]
        if (i == 0) {
            out[0] = a;
            continue;
        }
        const double prev = out[static_cast<std::size_t>(i) - 1];
        const double target = prev + spacing;
        double best = 0.0;
        double best_dist = -1.0;
        for (double base : {a, two_pi - a}) {
            const double k0 = std::floor((target - base) / two_pi);
            for (int dk = -1; dk <= 1; ++dk) {
                const double cand = base + two_pi * (k0 + dk);
                if (cand < prev - 1e-12) continue;
                const double dist = std::abs(cand - target);
                if (best_dist < 0.0 || dist < best_dist) {
                    best = cand;
                    best_dist = dist;
                }
            }
        }
        out[static_cast<std::size_t>(i)] = std::max(best, prev);
    }
    return out;
}

/// Band-limited back-projection kernel K(y) = (k_c y sin(k_c y) + cos(k_c y) - 1)/y^2,
/// the integral over |k| < k_c of |k| e^{iky} / 2. Evaluated by series near y = 0.
inline double radon_kernel(double y, double cutoff_kc) {
    if (std::abs(y) < 1e-3) {
        const double k2 = cutoff_kc * cutoff_kc;
        const double y2 = y * y;
        return k2 * (0.5 + k2 * y2 * (-0.125 + k2 * y2 / 144.0));
    }
    const double u = cutoff_kc * y;
    return (u * std::sin(u) + std::cos(u) - 1.0) / (y * y);
}

namespace detail {

/// Shared filtered-back-projection core. `weights` is row-major
/// n_segments x n_bins with each row summing to the segment's probability
/// mass (1 for a full marginal). Bin centers must be uniformly spaced.
inline WignerGrid radon_core(std::span<const double> phases, std::span<const double> centers,
                             std::span<const double> weights, double cutoff_kc,
                             std::vector<double> q_axis, std::vector<double> p_axis) {
    const std::size_t n_seg = phases.size();
    const std::size_t n_bins = centers.size();
    if (n_seg == 0) throw DataError("inverse_radon: no segments");
    if (n_bins < 2) throw DataError("inverse_radon: need at least two bins");
    if (weights.size() != n_seg * n_bins) {
        throw DataError("inverse_radon: weight table size mismatch");
    }
    const double dx = validate_uniform_axis(centers, "bin centers");
    WignerGrid grid;
    grid.q_axis = std::move(q_axis);
    grid.p_axis = std::move(p_axis);
    validate_uniform_axis(grid.q_axis, "q axis");
    validate_uniform_axis(grid.p_axis, "p axis");
    const std::size_t nq = grid.q_axis.size();
    const std::size_t np = grid.p_axis.size();
    grid.values.assign(nq * np, 0.0);

    // Incremental rotation for sin/cos of k_c*(x_b - t): successive bins step
    // the argument by the fixed angle k_c*dx.
    const double step = cutoff_kc * dx;
    const double sin_step = std::sin(step);
    const double cos_step = std::cos(step);
    const double series_window = 1e-3;

    for (std::size_t seg = 0; seg < n_seg; ++seg) {
        const double c = std::cos(phases[seg]);
        const double s = std::sin(phases[seg]);
        const double* row = weights.data() + seg * n_bins;
        for (std::size_t iq = 0; iq < nq; ++iq) {
            for (std::size_t ip = 0; ip < np; ++ip) {
                const double t = grid.q_axis[iq] * c + grid.p_axis[ip] * s;
                double y = centers[0] - t;
                double sn = std::sin(cutoff_kc * y);
                double cn = std::cos(cutoff_kc * y);
                double acc = 0.0;
                for (std::size_t b = 0; b < n_bins; ++b) {
                    const double w = row[b];
                    if (w != 0.0) {
                        double kv;
                        if (std::abs(y) < series_window) {
                            kv = radon_kernel(y, cutoff_kc);
                        } else {
                            kv = (cutoff_kc * y * sn + cn - 1.0) / (y * y);
                        }
                        acc += w * kv;
                    }
                    y += dx;
                    const double sn_next = sn * cos_step + cn * sin_step;
                    cn = cn * cos_step - sn * sin_step;
                    sn = sn_next;
                }
                grid.values[iq * np + ip] += acc;
            }
        }
    }
    const double scale = 1.0 / (2.0 * std::numbers::pi * static_cast<double>(n_seg));
    for (double& v : grid.values) v *= scale;
    return grid;
}

}  // namespace detail

/// Filtered back-projection of measured marginals onto a Wigner grid.
inline WignerGrid inverse_radon(const Marginals& m, double cutoff_kc,
                                const std::vector<double>& q_axis,
                                const std::vector<double>& p_axis) {
    if (!m.phases_set()) throw DataError("inverse_radon: segment phases are not set");
    if (!(cutoff_kc > 0.0)) throw ConfigError("inverse_radon: cutoff must be positive");
    std::vector<double> centers(static_cast<std::size_t>(m.n_bins));
    for (int b = 0; b < m.n_bins; ++b) centers[static_cast<std::size_t>(b)] = m.bin_center(b);
    std::vector<double> weights(m.counts.size());
    for (int i = 0; i < m.n_phases; ++i) {
        const auto total = m.totals.at(static_cast<std::size_t>(i));
        if (total <= 0) throw DataError("inverse_radon: empty segment");
        for (int b = 0; b < m.n_bins; ++b) {
            weights[static_cast<std::size_t>(i) * m.n_bins + b] =
                static_cast<double>(m.count(i, b)) / static_cast<double>(total);
        }
    }
    return detail::radon_core(m.phases, centers, weights, cutoff_kc, q_axis, p_axis);
}

/// Filtered back-projection of analytic marginal densities pr_i(x_b)
/// (probability density per segment, evaluated on uniform bin centers).
inline WignerGrid inverse_radon(const std::vector<double>& phases,
                                const std::vector<double>& bin_centers,
                                const std::vector<std::vector<double>>& densities,
                                double cutoff_kc, const std::vector<double>& q_axis,
                                const std::vector<double>& p_axis) {
    if (phases.empty()) throw DataError("inverse_radon: segment phases are not set");
    if (!(cutoff_kc > 0.0)) throw ConfigError("inverse_radon: cutoff must be positive");
    if (densities.size() != phases.size()) {
        throw DataError("inverse_radon: one density row required per phase");
    }
    const double dx = validate_uniform_axis(bin_centers, "bin centers");
    std::vector<double> weights;
    weights.reserve(phases.size() * bin_centers.size());
    for (const auto& row : densities) {
        if (row.size() != bin_centers.size()) {
            throw DataError("inverse_radon: density row size mismatch");
        }
        for (double v : row) weights.push_back(v * dx);
    }
    return detail::radon_core(phases, bin_centers, weights, cutoff_kc, q_axis, p_axis);
}

// ---------------------------------------------------------------------------
// Pattern-function sampling of density-matrix elements.
// ---------------------------------------------------------------------------

inline constexpr int kPatternDimCap = 25;

/// Tabulated sampling pattern functions f_{mn}(x) for 0 <= m,n < dim on a
/// uniform grid. Symmetric in (m,n); stored as the upper triangle.
class PatternTable {
public:
    PatternTable(int dim, std::vector<double> x_grid, std::vector<double> upper_triangle)
        : dim_(dim), x_grid_(std::move(x_grid)), values_(std::move(upper_triangle)) {
        x0_ = x_grid_.front();
        dx_ = x_grid_.at(1) - x_grid_.at(0);
    }

    int dim() const { return dim_; }
    const std::vector<double>& x_grid() const { return x_grid_; }

    /// Tabulated value at grid index i.
    double value(int m, int n, std::size_t i) const {
        return values_[row_offset(m, n) + i];
    }

    /// Linear interpolation at arbitrary x (clamped to the grid range).
    double operator()(int m, int n, double x) const {
        const std::size_t off = row_offset(m, n);
        const double u = (x - x0_) / dx_;
        if (u <= 0.0) return values_[off];
        const auto last = static_cast<double>(x_grid_.size() - 1);
        if (u >= last) return values_[off + x_grid_.size() - 1];
        const auto i = static_cast<std::size_t>(u);
        const double frac = u - static_cast<double>(i);
        const double lo = values_[off + i];
        return lo + frac * (values_[off + i + 1] - lo);
    }

private:
    std::size_t row_offset(int m, int n) const {
        if (m > n) std::swap(m, n);
        // Row index of (m,n), m <= n, in upper-triangle ordering.
        const std::size_t row = static_cast<std::size_t>(m) * dim_ -
                                static_cast<std::size_t>(m) * (m - 1) / 2 +
                                static_cast<std::size_t>(n - m);
        return row * x_grid_.size();
    }

    int dim_;
    std::vector<double> x_grid_;
    std::vector<double> values_;
    double x0_;
    double dx_;
};

namespace detail {

// The irregular solution phi is the minimal solution of the upward index
// recurrence wherever x lies outside a state's classically allowed region,
// so any seed or arithmetic roundoff acquires a psi-direction component that
// the recurrence amplifies by up to e^{x^2}. In plain double that produces
// O(1) errors near the classical boundary of the highest tabulated states;
// the construction below therefore runs entirely in double-double precision,
// with seeds marched along the axis as Taylor steps of the defining ODEs
//   D'(t) = 1 - 2 t D(t)   (Dawson),    E'(t) = t E(t)   (E = e^{t^2/2}).
// Forward marching is contractive for D and neutral for E, so the
// accumulated seed error stays near 1e-29 relative across the whole axis.

/// Marches Dawson's integral D(t) and the growth factor E(t) = e^{t^2/2}
/// from t = 0 to requested points in double-double precision. Targets may be
/// approached in either direction, but each marcher instance must be driven
/// monotonically away from zero for the step count to stay proportional to
/// the axis length.
class SeedMarcher {
public:
    /// Marches from the current position to exactly `target`.
    void advance_to(double target) {
        while (true) {
            const double rem = (DoubleDouble(target) - t_).value();
            if (rem == 0.0) return;
            const double h = std::clamp(rem, -kMaxStep, kMaxStep);
            step(h);
            if (h == rem) return;  // landed (up to the ~1e-31 position residual)
        }
    }

    DoubleDouble dawson() const { return d_; }
    DoubleDouble growth() const { return e_; }

private:
    static constexpr double kMaxStep = 0.01;
    static constexpr int kOrder = 22;  // truncation ~1e-37 at |t| < 9.5

    void step(double h) {
        // Taylor coefficients about the current position from the ODEs:
        // (j+1) a_{j+1} = [j=0] - 2 t a_j - 2 a_{j-1}, (j+1) b_{j+1} = t b_j + b_{j-1}.
        DoubleDouble a[kOrder + 1];
        DoubleDouble b[kOrder + 1];
        a[0] = d_;
        b[0] = e_;
        a[1] = DoubleDouble(1.0) - 2.0 * (t_ * d_);
        b[1] = t_ * e_;
        for (int j = 1; j < kOrder; ++j) {
            a[j + 1] = ((-2.0 * (t_ * a[j])) - 2.0 * a[j - 1]) / (j + 1.0);
            b[j + 1] = (t_ * b[j] + b[j - 1]) / (j + 1.0);
        }
        DoubleDouble da = a[kOrder];
        DoubleDouble db = b[kOrder];
        for (int j = kOrder; j-- > 0;) {
            da = da * h + a[j];
            db = db * h + b[j];
        }
        d_ = da;
        e_ = db;
        t_ = t_ + h;
    }

    DoubleDouble t_{};       // current position
    DoubleDouble d_{};       // D(t), Dawson's integral
    DoubleDouble e_{1.0};    // e^{t^2/2}
};

/// Regular (normalizable) and irregular oscillator solutions psi_n, phi_n at
/// x, for n <= nmax, normalized so the Wronskian psi phi' - psi' phi = 2.
/// `dawson_x` and `growth_x` are double-double values of D(x) and e^{x^2/2}
/// from a SeedMarcher. The psi recurrence is upward-stable and runs in
/// double; phi runs in double-double (see note above). `growing` receives
/// 2 pi^{1/4} e^{x^2/2}, the inhomogeneous term of phi_0'.
inline void oscillator_solutions(int nmax, double x, DoubleDouble dawson_x,
                                 DoubleDouble growth_x, std::vector<double>& psi,
                                 std::vector<double>& phi, double& growing) {
    psi.resize(static_cast<std::size_t>(nmax) + 1);
    phi.resize(static_cast<std::size_t>(nmax) + 1);
    const DoubleDouble quartic_root_pi{1.3313353638003897, -3.553686132694955e-17};
    const DoubleDouble sqrt2_dd{1.4142135623730951, -9.667293313452913e-17};
    const DoubleDouble big = 2.0 * (quartic_root_pi * growth_x);
    growing = big.value();
    psi[0] = kQuarticRootPiInv * std::exp(-0.5 * x * x);
    DoubleDouble phi_prev = big * dawson_x;
    phi[0] = phi_prev.value();
    if (nmax == 0) return;
    psi[1] = std::numbers::sqrt2 * x * psi[0];
    DoubleDouble phi_cur = (sqrt2_dd * x) * phi_prev - 0.5 * (sqrt2_dd * big);
    phi[1] = phi_cur.value();
    for (int k = 1; k < nmax; ++k) {
        const DoubleDouble a = dd_sqrt(dd_div(2.0, k + 1.0)) * x;
        const DoubleDouble b = dd_sqrt(dd_div(static_cast<double>(k), k + 1.0));
        const double ad = a.value();
        const double bd = b.value();
        psi[static_cast<std::size_t>(k) + 1] =
            ad * psi[static_cast<std::size_t>(k)] - bd * psi[static_cast<std::size_t>(k) - 1];
        const DoubleDouble phi_next = a * phi_cur - b * phi_prev;
        phi_prev = phi_cur;
        phi_cur = phi_next;
        phi[static_cast<std::size_t>(k) + 1] = phi_cur.value();
    }
}

inline double pattern_from_solutions(int m, int n, double x, const std::vector<double>& psi,
                                     const std::vector<double>& phi, double growing) {
    if (m > n) std::swap(m, n);  // evaluate on the bounded branch
    const auto mu = static_cast<std::size_t>(m);
    const auto nu = static_cast<std::size_t>(n);
    double f = -2.0 * x * psi[mu] * phi[nu];
    if (m > 0) f += std::sqrt(2.0 * m) * psi[mu - 1] * phi[nu];
    if (n > 0) {
        f += std::sqrt(2.0 * n) * psi[mu] * phi[nu - 1];
    } else {
        f += psi[mu] * growing;  // d/dx phi_0 carries an inhomogeneous term
    }
    return f;
}

}  // namespace detail

/// Direct (non-tabulated) evaluation of the sampling pattern function
/// f_{mn}(x) = d/dx [psi_m(x) phi_n(x)], with phi the irregular solution.
/// Marches the seed ODEs from the origin on every call; prefer a
/// PatternTable when evaluating in bulk.
inline double pattern_function(int m, int n, double x) {
    if (m < 0 || n < 0 || m >= kPatternDimCap || n >= kPatternDimCap) {
        throw std::range_error("pattern_function: index out of supported range");
    }
    detail::SeedMarcher marcher;
    marcher.advance_to(x);
    std::vector<double> psi;
    std::vector<double> phi;
    double growing = 0.0;
    detail::oscillator_solutions(std::max(m, n), x, marcher.dawson(), marcher.growth(), psi,
                                 phi, growing);
    return detail::pattern_from_solutions(m, n, x, psi, phi, growing);
}

/// Default tabulation grid for a given dimension: covers the classically
/// allowed region plus margin at spacing fine enough for 1e-4 interpolation.
inline std::vector<double> default_pattern_grid(int dim, double spacing = 0.0025) {
    const double half = std::max(5.0, std::sqrt(2.0 * dim)) + 2.0;
    const int half_count = static_cast<int>(std::ceil(half / spacing));
    std::vector<double> grid(2 * static_cast<std::size_t>(half_count) + 1);
    for (int i = -half_count; i <= half_count; ++i) {
        grid[static_cast<std::size_t>(i + half_count)] = spacing * i;
    }
    return grid;
}

/// Tabulates f_{mn} for all 0 <= m,n < dim over x_grid.
inline PatternTable build_pattern_table(int dim, const std::vector<double>& x_grid) {
    if (dim < 1 || dim > kPatternDimCap) {
        throw std::range_error("build_pattern_table: dimension outside stable range");
    }
    validate_uniform_axis(x_grid, "pattern grid");
    const double need = std::max(5.0, std::sqrt(2.0 * dim));
    if (x_grid.front() > -need || x_grid.back() < need) {
        throw ConfigError("build_pattern_table: grid must cover the classically allowed region");
    }
    const std::size_t nx = x_grid.size();
    const std::size_t n_rows = static_cast<std::size_t>(dim) * (dim + 1) / 2;
    std::vector<double> values(n_rows * nx);
    std::vector<double> psi;
    std::vector<double> phi;
    const auto fill_column = [&](std::size_t i, detail::SeedMarcher& marcher) {
        const double x = x_grid[i];
        marcher.advance_to(x);
        double growing = 0.0;
        detail::oscillator_solutions(dim - 1, x, marcher.dawson(), marcher.growth(), psi, phi,
                                     growing);
        std::size_t row = 0;
        for (int m = 0; m < dim; ++m) {
            for (int n = m; n < dim; ++n, ++row) {
                values[row * nx + i] = detail::pattern_from_solutions(m, n, x, psi, phi, growing);
            }
        }
    };
    // Each marcher starts at the origin and walks monotonically outward, one
    // per half-axis, so every grid point costs a single Taylor step.
    std::size_t first_nonneg = nx;
    for (std::size_t i = 0; i < nx; ++i) {
        if (x_grid[i] >= 0.0) {
            first_nonneg = i;
            break;
        }
    }
    {
        detail::SeedMarcher up;
        for (std::size_t i = first_nonneg; i < nx; ++i) fill_column(i, up);
    }
    {
        detail::SeedMarcher down;
        for (std::size_t i = first_nonneg; i-- > 0;) fill_column(i, down);
    }
    return PatternTable(dim, x_grid, std::move(values));
}

// ---------------------------------------------------------------------------
// Density-matrix sampling.
// ---------------------------------------------------------------------------

/// Density matrix estimated by pattern-function averaging, with elementwise
/// statistical standard errors.
struct ReconstructedState {
    DensityMatrix rho;
    std::vector<double> std_err;  ///< Row-major dim x dim.
    long long n_samples = 0;
    std::vector<std::string> warnings;

    double std_err_at(int m, int n) const {
        return std_err.at(static_cast<std::size_t>(m) * rho.dim() + n);
    }
};

/// Replaces each sample's scan phase with the estimated phase of the segment
/// it falls in (same contiguous time slicing as bin_marginals).
inline std::vector<QuadratureSample> assign_segment_phases(
    std::span<const QuadratureSample> samples, std::span<const double> phases) {
    if (phases.empty()) throw DataError("assign_segment_phases: no phases given");
    if (samples.empty() || samples.size() % phases.size() != 0) {
        throw DataError("assign_segment_phases: sample count not divisible by segment count");
    }
    const std::size_t per_segment = samples.size() / phases.size();
    std::vector<QuadratureSample> out(samples.begin(), samples.end());
    for (std::size_t j = 0; j < out.size(); ++j) out[j].theta = phases[j / per_segment];
    return out;
}

/// Estimates rho_{mn} = < f_{mn}(x_j) e^{i(m-n) theta_j} > over the samples,
/// using table interpolation for f. The estimator is Hermitian by
/// construction; std_err holds the per-element standard error of the mean.
inline ReconstructedState sample_density_matrix(std::span<const QuadratureSample> samples,
                                                int dim, const PatternTable& table) {
    if (samples.empty()) throw DataError("sample_density_matrix: empty sample set");
    if (dim < 1 || dim > table.dim()) {
        throw ConfigError("sample_density_matrix: dimension exceeds pattern table");
    }
    const std::size_t n_pairs = static_cast<std::size_t>(dim) * (dim + 1) / 2;
    std::vector<double> sum_re(n_pairs, 0.0);
    std::vector<double> sum_im(n_pairs, 0.0);
    std::vector<double> sum_sq(n_pairs, 0.0);

    std::vector<std::complex<double>> phase_pow(static_cast<std::size_t>(dim));
    for (const auto& sample : samples) {
        const std::complex<double> w(std::cos(sample.theta), std::sin(sample.theta));
        phase_pow[0] = 1.0;
        for (int d = 1; d < dim; ++d) phase_pow[static_cast<std::size_t>(d)] =
            phase_pow[static_cast<std::size_t>(d) - 1] * w;
        std::size_t pair = 0;
        for (int m = 0; m < dim; ++m) {
            for (int n = m; n < dim; ++n, ++pair) {
                const double f = table(m, n, sample.value);
                // e^{i(m-n)theta} = conj(w^{n-m}) for the stored m <= n branch
                const auto& ph = phase_pow[static_cast<std::size_t>(n - m)];
                sum_re[pair] += f * ph.real();
                sum_im[pair] -= f * ph.imag();
                sum_sq[pair] += f * f;
            }
        }
    }

    const auto n = static_cast<double>(samples.size());
    ReconstructedState state{DensityMatrix(dim), {}, static_cast<long long>(samples.size()), {}};
    state.std_err.assign(static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim), 0.0);
    std::size_t pair = 0;
    for (int m = 0; m < dim; ++m) {
        for (int nn = m; nn < dim; ++nn, ++pair) {
            const std::complex<double> mean(sum_re[pair] / n, sum_im[pair] / n);
            state.rho.at(m, nn) = (m == nn) ? std::complex<double>(mean.real(), 0.0) : mean;
            state.rho.at(nn, m) = std::conj(state.rho.at(m, nn));
            const double var = std::max(0.0, sum_sq[pair] / n - std::norm(mean));
            const double se = std::sqrt(var / n);
            state.std_err[static_cast<std::size_t>(m) * dim + nn] = se;
            state.std_err[static_cast<std::size_t>(nn) * dim + m] = se;
        }
    }
    state.rho.set_trace_deficit(1.0 - trace_of(state.rho));
    if (samples.size() < static_cast<std::size_t>(10) * static_cast<std::size_t>(dim) * dim) {
        state.warnings.push_back("sample_density_matrix: fewer than 10*dim^2 samples; "
                                 "statistical errors will be large");
    }
    return state;
}

/// Convenience overload taking phases from binned marginals; requires the
/// marginal phases to be set (estimated or scan).
inline ReconstructedState sample_density_matrix(std::span<const QuadratureSample> samples,
                                                const Marginals& m, int dim,
                                                const PatternTable& table) {
    if (!m.phases_set()) throw DataError("sample_density_matrix: marginal phases are not set");
    const auto reassigned = assign_segment_phases(samples, m.phases);
    return sample_density_matrix(reassigned, dim, table);
}

// ---------------------------------------------------------------------------
// Summary report.
// ---------------------------------------------------------------------------

struct ReconstructionReport {
    double mean_photons = 0.0;
    std::vector<double> photon_distribution;
    std::vector<double> poisson_reference;  ///< Same mean as the reconstruction.
    std::complex<double> fitted_alpha;      ///< Coherent amplitude of the estimate.
    std::optional<double> fidelity;         ///< Set when a reference amplitude is given.
};

inline ReconstructionReport reconstruct_report(
    const ReconstructedState& state,
    std::optional<std::complex<double>> reference_alpha = std::nullopt) {
    ReconstructionReport report;
    report.mean_photons = mean_photon_number(state.rho);
    report.photon_distribution = photon_number_distribution(state.rho);
    report.fitted_alpha = coherent_amplitude(state.rho);
    const int dim = state.rho.dim();
    report.poisson_reference.resize(static_cast<std::size_t>(dim));
    const double mean = std::max(0.0, report.mean_photons);
    for (int k = 0; k < dim; ++k) {
        report.poisson_reference[static_cast<std::size_t>(k)] =
            (mean == 0.0) ? (k == 0 ? 1.0 : 0.0)
                          : std::exp(-mean + k * std::log(mean) - std::lgamma(k + 1.0));
    }
    if (reference_alpha) {
        report.fidelity = fidelity_with_coherent(state.rho, *reference_alpha);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Peak-shape analysis.
// ---------------------------------------------------------------------------

/// Result of an isotropic Gaussian fit A exp(-((q-q0)^2+(p-p0)^2)/(2 w^2)).
struct GaussianPeakFit {
    double amplitude = 0.0;
    double q0 = 0.0;
    double p0 = 0.0;
    double width = 0.0;  ///< Gaussian sigma of the peak.
    double rms_residual = 0.0;
    int iterations = 0;
};

/// Fits an isotropic Gaussian to the dominant peak of a Wigner grid by
/// Gauss-Newton on the points near the maximum (|W| >= 5% of the peak within
/// radius 2.5), leaving far-field reconstruction ripple out of the fit.
inline GaussianPeakFit fit_gaussian_peak(const WignerGrid& grid) {
    const std::size_t nq = grid.q_axis.size();
    const std::size_t np = grid.p_axis.size();
    if (nq * np == 0 || grid.values.size() != nq * np) {
        throw DataError("fit_gaussian_peak: empty or inconsistent grid");
    }
    std::size_t peak = 0;
    for (std::size_t i = 1; i < grid.values.size(); ++i) {
        if (grid.values[i] > grid.values[peak]) peak = i;
    }
    GaussianPeakFit fit;
    fit.amplitude = grid.values[peak];
    fit.q0 = grid.q_axis[peak / np];
    fit.p0 = grid.p_axis[peak % np];
    fit.width = 1.0 / std::numbers::sqrt2;  // vacuum-width starting guess
    if (!(fit.amplitude > 0.0)) throw DataError("fit_gaussian_peak: no positive peak");

    struct Point {
        double q, p, w;
    };
    std::vector<Point> pts;
    for (std::size_t iq = 0; iq < nq; ++iq) {
        for (std::size_t ip = 0; ip < np; ++ip) {
            const double v = grid.values[iq * np + ip];
            const double dq = grid.q_axis[iq] - fit.q0;
            const double dp = grid.p_axis[ip] - fit.p0;
            if (std::abs(v) >= 0.05 * fit.amplitude && dq * dq + dp * dp <= 2.5 * 2.5) {
                pts.push_back({grid.q_axis[iq], grid.p_axis[ip], v});
            }
        }
    }
    if (pts.size() < 8) throw DataError("fit_gaussian_peak: too few points around the peak");

    for (int iter = 0; iter < 60; ++iter) {
        std::vector<double> jtj(16, 0.0);
        std::vector<double> jtr(4, 0.0);
        double ssq = 0.0;
        const double inv_w2 = 1.0 / (fit.width * fit.width);
        for (const auto& pt : pts) {
            const double dq = pt.q - fit.q0;
            const double dp = pt.p - fit.p0;
            const double r2 = dq * dq + dp * dp;
            const double e = std::exp(-0.5 * r2 * inv_w2);
            const double model = fit.amplitude * e;
            const double resid = pt.w - model;
            ssq += resid * resid;
            const double j[4] = {e, model * dq * inv_w2, model * dp * inv_w2,
                                 model * r2 * inv_w2 / fit.width};
            for (int a = 0; a < 4; ++a) {
                for (int b = 0; b < 4; ++b) jtj[static_cast<std::size_t>(a) * 4 + b] += j[a] * j[b];
                jtr[static_cast<std::size_t>(a)] += j[a] * resid;
            }
        }
        for (int a = 0; a < 4; ++a) jtj[static_cast<std::size_t>(a) * 4 + a] *= 1.0 + 1e-10;
        const std::vector<double> step = solve_linear(jtj, jtr, 4);
        fit.amplitude += step[0];
        fit.q0 += step[1];
        fit.p0 += step[2];
        fit.width += step[3];
        fit.iterations = iter + 1;
        if (!(fit.width > 1e-6) || !std::isfinite(fit.width)) {
            throw NumericalError("fit_gaussian_peak: diverged");
        }
        fit.rms_residual = std::sqrt(ssq / static_cast<double>(pts.size()));
        const double scale = std::abs(fit.amplitude) + std::abs(fit.width) + 1.0;
        if (std::abs(step[0]) + std::abs(step[1]) + std::abs(step[2]) + std::abs(step[3]) <
            1e-12 * scale) {
            break;
        }
    }
    fit.width = std::abs(fit.width);
    return fit;
}

}  // namespace homodyne
