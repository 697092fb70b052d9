#pragma once

/// Detector metrology on simulated or ingested data: noise-versus-power
/// fits with electronic-floor extraction, shot-to-electronic SNR and
/// common-mode subtraction figures, Welch power spectra with whiteness
/// metrics, and charge-injection linearity checks.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "homodyne/detector.hpp"
#include "homodyne/errors.hpp"
#include "homodyne/fock.hpp"
#include "homodyne/numerics.hpp"

namespace homodyne {

/// One point of a noise-power sweep: mean LO photon number and the measured
/// variance of the difference charge.
struct SweepPoint {
    double lo_photons = 0.0;
    double variance_e2 = 0.0;  ///< electrons^2
};

/// Result of fitting Var = gain * N + sigma_e^2 to a sweep.
struct NoiseScalingFit {
    double gain_fit = 0.0;      ///< electrons^2 per LO photon (kappa * eta estimate)
    double sigma_e_fit = 0.0;   ///< electronic-noise floor, electrons RMS
    double exponent_fit = 0.0;  ///< slope of log RMS_subtracted versus log N
    std::vector<double> residuals_e2;     ///< per-point variance residual about the line
    std::vector<std::size_t> excluded;    ///< indices dropped from the exponent fit
    std::vector<std::string> warnings;
};

namespace detail {

inline void validate_sweep(std::span<const SweepPoint> points) {
    if (points.size() < 6) {
        throw DataError("noise sweep: need at least 6 points");
    }
    double n_min = std::numeric_limits<double>::infinity();
    double n_max = 0.0;
    for (const auto& p : points) {
        if (!(p.lo_photons > 0.0) || !(p.variance_e2 > 0.0)) {
            throw DataError("noise sweep: photon numbers and variances must be positive");
        }
        n_min = std::min(n_min, p.lo_photons);
        n_max = std::max(n_max, p.lo_photons);
    }
    if (std::log10(n_max / n_min) < 1.5) {
        throw DataError("noise sweep: points must span at least 1.5 decades of LO power");
    }
}

}  // namespace detail

/// Weighted least-squares fit of Var = gain * N + sigma_e^2, weights
/// 1/Var^2 (constant relative precision of a sample variance). The exponent
/// comes from an unweighted log-log fit of sqrt(Var - sigma_e_fit^2) versus
/// N; points whose subtracted variance is not positive are excluded from it
/// and flagged in `excluded`/`warnings`.
inline NoiseScalingFit noise_scaling_fit(std::span<const SweepPoint> points) {
    detail::validate_sweep(points);
    // Weighted normal equations for (gain, offset): weight 1/Var^2 (constant
    // relative precision), with N rescaled by its maximum so the 2x2 system
    // stays well conditioned across many decades of LO power.
    double n_scale = 0.0;
    for (const auto& p : points) n_scale = std::max(n_scale, p.lo_photons);
    KahanSum a11;
    KahanSum a12;
    KahanSum a22;
    KahanSum b1;
    KahanSum b2;
    for (const auto& p : points) {
        const double w = 1.0 / (p.variance_e2 * p.variance_e2);
        const double x = p.lo_photons / n_scale;
        a11.add(w * x * x);
        a12.add(w * x);
        a22.add(w);
        b1.add(w * x * p.variance_e2);
        b2.add(w * p.variance_e2);
    }
    const std::vector<double> sol = solve_linear({a11.value(), a12.value(), a12.value(),
                                                  a22.value()},
                                                 {b1.value(), b2.value()}, 2);
    NoiseScalingFit fit;
    fit.gain_fit = sol[0] / n_scale;
    const double floor_var = sol[1];
    if (floor_var < 0.0) {
        fit.warnings.push_back("fitted electronic-noise variance is negative; clamped to 0");
    }
    fit.sigma_e_fit = std::sqrt(std::max(0.0, floor_var));

    fit.residuals_e2.reserve(points.size());
    for (const auto& p : points) {
        fit.residuals_e2.push_back(p.variance_e2 - (fit.gain_fit * p.lo_photons + floor_var));
    }

    // Log-log exponent of the background-subtracted RMS.
    KahanSum lx;
    KahanSum ly;
    KahanSum lxx;
    KahanSum lxy;
    std::size_t kept = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double sub = points[i].variance_e2 - floor_var;
        if (!(sub > 0.0)) {
            fit.excluded.push_back(i);
            fit.warnings.push_back("background-subtracted variance not positive at sweep index " +
                                   std::to_string(i) + "; point excluded from exponent fit");
            continue;
        }
        const double gx = std::log10(points[i].lo_photons);
        const double gy = std::log10(std::sqrt(sub));
        lx.add(gx);
        ly.add(gy);
        lxx.add(gx * gx);
        lxy.add(gx * gy);
        ++kept;
    }
    if (kept < 2) throw DataError("noise sweep: too few shot-noise-limited points for the exponent fit");
    const double kn = static_cast<double>(kept);
    const double denom = kn * lxx.value() - lx.value() * lx.value();
    if (denom == 0.0) throw DataError("noise sweep: exponent fit is degenerate");
    fit.exponent_fit = (kn * lxy.value() - lx.value() * ly.value()) / denom;
    return fit;
}

/// Shot-noise to electronic-noise clearance, 10 log10(kappa eta N / sigma_e^2).
/// Returns +infinity when the electronic noise is exactly zero.
inline double snr_db(const DetectorParams& params) {
    validate(params);
    if (params.sigma_e == 0.0) return std::numeric_limits<double>::infinity();
    const double shot_var = params.kappa * params.eta_total * params.lo_photons;
    return 10.0 * std::log10(shot_var / (params.sigma_e * params.sigma_e));
}

/// Common-mode subtraction headroom at the largest shot-noise-limited LO
/// power: 10 log10(N). The mean photocurrent of either diode scales with N
/// while the shot-noise variance of the difference does too, so N itself is
/// the power ratio by which the common mode exceeds the resolved noise.
inline double subtraction_db(double max_shot_limited_photons) {
    if (!(max_shot_limited_photons > 0.0)) {
        throw std::domain_error("subtraction_db: photon number must be positive");
    }
    return 10.0 * std::log10(max_shot_limited_photons);
}

/// Measurement-form subtraction figure: fits Var = a + b N + c N^2 to the
/// sweep and returns 10 log10 of the largest swept N whose quadratic
/// (classical leakage) term stays below half the linear shot term,
/// c N^2 <= b N / 2. A sweep with no such point raises DataError.
inline double measured_subtraction_db(std::span<const SweepPoint> points) {
    detail::validate_sweep(points);
    double n_scale = 0.0;
    for (const auto& p : points) n_scale = std::max(n_scale, p.lo_photons);
    // Weighted normal equations in powers of x = N / n_scale, weight 1/Var^2.
    double m[9] = {};
    double rhs[3] = {};
    for (const auto& p : points) {
        const double w = 1.0 / (p.variance_e2 * p.variance_e2);
        const double x = p.lo_photons / n_scale;
        double pow_row[3] = {1.0, x, x * x};
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) m[r * 3 + c] += w * pow_row[r] * pow_row[c];
            rhs[r] += w * pow_row[r] * p.variance_e2;
        }
    }
    const std::vector<double> sol = solve_linear({m[0], m[1], m[2], m[3], m[4], m[5], m[6],
                                                  m[7], m[8]},
                                                 {rhs[0], rhs[1], rhs[2]}, 3);
    const double b = sol[1] / n_scale;
    const double c = sol[2] / (n_scale * n_scale);
    double best = 0.0;
    for (const auto& p : points) {
        const double classical = std::max(0.0, c) * p.lo_photons * p.lo_photons;
        if (classical <= 0.5 * b * p.lo_photons) best = std::max(best, p.lo_photons);
    }
    if (best == 0.0) {
        throw DataError("measured_subtraction_db: no shot-noise-limited point in the sweep");
    }
    return 10.0 * std::log10(best);
}

/// Generates a vacuum-input noise sweep: one acquisition per LO power, each
/// from an independent seed, reduced to the sample variance of the raw
/// difference charges.
inline std::vector<SweepPoint> run_noise_sweep(const DetectorParams& base,
                                               std::span<const double> lo_photon_values,
                                               long long n_pulses_per_point,
                                               std::uint64_t seed) {
    if (lo_photon_values.empty()) throw ConfigError("run_noise_sweep: empty power list");
    std::vector<SweepPoint> sweep;
    sweep.reserve(lo_photon_values.size());
    const DensityMatrix vac = vacuum_density_matrix(1);
    for (std::size_t i = 0; i < lo_photon_values.size(); ++i) {
        DetectorParams params = base;
        params.lo_photons = lo_photon_values[i];
        AcquisitionConfig config;
        config.n_pulses = n_pulses_per_point;
        config.n_phases = 1;
        config.seed = seed + i;
        const AcquisitionResult run = run_acquisition(vac, params, config);
        KahanSum mean;
        for (const auto& rec : run.records) mean.add(rec.charge_e);
        const double mu = mean.value() / static_cast<double>(run.records.size());
        KahanSum ss;
        for (const auto& rec : run.records) {
            const double d = rec.charge_e - mu;
            ss.add(d * d);
        }
        sweep.push_back({lo_photon_values[i],
                         ss.value() / static_cast<double>(run.records.size() - 1)});
    }
    return sweep;
}

// ---------------------------------------------------------------------------
// Welch spectrum and whiteness.
// ---------------------------------------------------------------------------

/// Welch estimation parameters. Defaults: 2048-sample Hann window, 50%
/// overlap, at least 8 segments, flatness measured between 0.5x and 3.5x the
/// repetition rate with +-2 bins excluded around each harmonic.
struct SpectrumOptions {
    std::size_t window = 2048;      ///< segment length, power of two
    int min_segments = 8;
    int exclude_bins = 2;           ///< half-width masked around each harmonic
    double band_lo = 0.5;           ///< flatness band lower edge, units of rep rate
    double band_hi = 3.5;           ///< flatness band upper edge, units of rep rate
};

/// One-sided Welch power spectral density with repetition-rate bookkeeping.
struct SpectralReport {
    std::vector<double> frequency_hz;  ///< window/2 + 1 bins up to Nyquist
    std::vector<double> psd;           ///< electrons^2 per Hz
    double flatness_ratio = 0.0;       ///< max/min PSD over the inter-harmonic band
    std::vector<double> harmonic_hz;   ///< k * rep_rate below Nyquist
    std::vector<double> harmonic_prominence;  ///< peak near harmonic / band median
    int n_segments = 0;
};

/// Welch-averaged one-sided PSD of a detector trace, with a whiteness
/// (flatness) metric over the inter-harmonic band and per-harmonic
/// prominences relative to the band median.
inline SpectralReport spectrum_report(const Trace& trace, double rep_rate_hz,
                                      const SpectrumOptions& options = {}) {
    const std::size_t len = trace.values.size();
    const std::size_t w = options.window;
    if (w < 64 || (w & (w - 1)) != 0) {
        throw ConfigError("spectrum_report: window must be a power of two, at least 64");
    }
    if (options.exclude_bins < 0 || options.min_segments < 1) {
        throw ConfigError("spectrum_report: invalid masking or segment options");
    }
    if (!(rep_rate_hz > 0.0)) throw ConfigError("spectrum_report: repetition rate must be positive");
    if (!(options.band_lo >= 0.0) || !(options.band_hi > options.band_lo)) {
        throw ConfigError("spectrum_report: flatness band is empty or reversed");
    }
    if (len < 16384) {
        throw DataError("spectrum_report: trace must hold at least 16384 samples");
    }
    const std::size_t hop = w / 2;  // 50% overlap
    const std::size_t n_segments = (len - w) / hop + 1;
    if (n_segments < static_cast<std::size_t>(options.min_segments)) {
        throw DataError("spectrum_report: trace too short for the requested window "
                        "and segment count");
    }

    // Periodic Hann window and its power for the PSD normalization.
    std::vector<double> window(w);
    double window_power = 0.0;
    for (std::size_t i = 0; i < w; ++i) {
        window[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                          static_cast<double>(w)));
        window_power += window[i] * window[i];
    }

    const std::size_t n_bins = w / 2 + 1;
    std::vector<double> psd_accum(n_bins, 0.0);
    std::vector<std::complex<double>> seg(w);
    for (std::size_t s = 0; s < n_segments; ++s) {
        const double* src = trace.values.data() + s * hop;
        for (std::size_t i = 0; i < w; ++i) seg[i] = {src[i] * window[i], 0.0};
        fft_radix2(seg);
        for (std::size_t k = 0; k < n_bins; ++k) {
            const double mag2 = std::norm(seg[k]);
            psd_accum[k] += (k == 0 || k == w / 2) ? mag2 : 2.0 * mag2;
        }
    }

    SpectralReport report;
    report.n_segments = static_cast<int>(n_segments);
    report.frequency_hz.resize(n_bins);
    report.psd.resize(n_bins);
    const double df = trace.sample_rate_hz / static_cast<double>(w);
    const double norm = 1.0 / (static_cast<double>(n_segments) * trace.sample_rate_hz *
                               window_power);
    for (std::size_t k = 0; k < n_bins; ++k) {
        report.frequency_hz[k] = df * static_cast<double>(k);
        report.psd[k] = psd_accum[k] * norm;
    }

    const double nyquist = 0.5 * trace.sample_rate_hz;
    for (int k = 1; k * rep_rate_hz < nyquist; ++k) {
        report.harmonic_hz.push_back(k * rep_rate_hz);
    }

    // Inter-harmonic flatness band.
    const double f_lo = options.band_lo * rep_rate_hz;
    const double f_hi = std::min(options.band_hi * rep_rate_hz, nyquist);
    const double guard = options.exclude_bins * df;
    std::vector<double> band;
    for (std::size_t k = 1; k + 1 < n_bins; ++k) {
        const double f = report.frequency_hz[k];
        if (f < f_lo || f > f_hi) continue;
        bool masked = false;
        for (double h : report.harmonic_hz) {
            if (std::abs(f - h) <= guard) {
                masked = true;
                break;
            }
        }
        if (!masked) band.push_back(report.psd[k]);
    }
    if (band.size() < 8) {
        throw ConfigError("spectrum_report: inter-harmonic band holds fewer than 8 bins");
    }
    const auto [mn, mx] = std::minmax_element(band.begin(), band.end());
    const double band_min = *mn;
    const double band_max = *mx;  // nth_element below reorders the band
    std::nth_element(band.begin(), band.begin() + band.size() / 2, band.end());
    const double median = band[band.size() / 2];
    report.flatness_ratio =
        (band_min > 0.0) ? band_max / band_min : std::numeric_limits<double>::infinity();

    for (double h : report.harmonic_hz) {
        double peak = 0.0;
        for (std::size_t k = 0; k < n_bins; ++k) {
            if (std::abs(report.frequency_hz[k] - h) <= guard) peak = std::max(peak, report.psd[k]);
        }
        report.harmonic_prominence.push_back(median > 0.0 ? peak / median
                                                          : std::numeric_limits<double>::infinity());
    }
    return report;
}

// ---------------------------------------------------------------------------
// Charge-injection linearity.
// ---------------------------------------------------------------------------

/// Outcome of a charge-injection linearity check.
struct LinearityResult {
    double max_deviation = 0.0;  ///< max |residual| / measured full scale
    double threshold = 0.01;
    bool pass = true;
    double slope = 0.0;
    double intercept = 0.0;
};

/// Fits measured = slope * injected + intercept and reports the worst
/// residual as a fraction of the measured full scale (max - min).
inline LinearityResult linearity_check(std::span<const double> injected,
                                       std::span<const double> measured,
                                       double threshold = 0.01) {
    if (injected.size() != measured.size()) {
        throw std::invalid_argument("linearity_check: input lengths differ");
    }
    if (injected.size() < 5) throw DataError("linearity_check: need at least 5 points");
    if (!(threshold > 0.0)) throw ConfigError("linearity_check: threshold must be positive");
    const double n = static_cast<double>(injected.size());
    KahanSum sx;
    KahanSum sy;
    for (std::size_t i = 0; i < injected.size(); ++i) {
        sx.add(injected[i]);
        sy.add(measured[i]);
    }
    const double mx = sx.value() / n;
    const double my = sy.value() / n;
    KahanSum sxx;
    KahanSum sxy;
    for (std::size_t i = 0; i < injected.size(); ++i) {
        sxx.add((injected[i] - mx) * (injected[i] - mx));
        sxy.add((injected[i] - mx) * (measured[i] - my));
    }
    if (sxx.value() == 0.0) {
        throw DataError("linearity_check: degenerate input (all injected charges equal)");
    }
    LinearityResult result;
    result.threshold = threshold;
    result.slope = sxy.value() / sxx.value();
    result.intercept = my - result.slope * mx;
    const auto [lo, hi] = std::minmax_element(measured.begin(), measured.end());
    const double full_scale = *hi - *lo;
    double worst = 0.0;
    for (std::size_t i = 0; i < injected.size(); ++i) {
        worst = std::max(worst,
                         std::abs(measured[i] - (result.slope * injected[i] + result.intercept)));
    }
    result.max_deviation = (full_scale > 0.0) ? worst / full_scale : 0.0;
    result.pass = result.max_deviation <= threshold;
    return result;
}

}  // namespace homodyne
