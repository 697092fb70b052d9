#pragma once

/// Monte Carlo model of the pulsed balanced detector: per-pulse difference
/// charge from a quantum state, local-oscillator shot noise, electronic
/// noise, splitter imbalance, and a phase scan with slow drift.
///
/// Per pulse, with N the Poisson-drawn LO photon number:
///   Q = sqrt(2 kappa eta N) * x  +  imbalance * kappa * (N - N_mean)  +  Normal(0, sigma_e)
/// so a vacuum input at zero imbalance has Var(Q) = kappa*eta*N_mean + sigma_e^2.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "homodyne/fock.hpp"
#include "homodyne/rng.hpp"
#include "homodyne/sampler.hpp"

namespace homodyne {

/// Charge-collection factor calibrated so that the shot-to-electronic power
/// ratio 10*log10(kappa*eta*N / sigma_e^2) is exactly 14 dB at the reference
/// operating point (eta = 0.91, sigma_e = 730 e-, N = 1.6e8 photons/pulse).
/// The pulse-shaping chain samples only part of the photocharge; this single
/// factor absorbs that.
inline double default_kappa() {
    return std::pow(10.0, 1.4) * 730.0 * 730.0 / (0.91 * 1.6e8);
}

struct DetectorParams {
    double eta_total = 0.91;      ///< overall quantum efficiency
    double kappa = default_kappa();  ///< charge-collection factor (0,1]
    double sigma_e = 730.0;       ///< electronic noise, electrons RMS per pulse
    double imbalance = 0.0;       ///< residual splitting asymmetry delta in [0, 0.5)
    double lo_photons = 1.6e8;    ///< mean LO photons per pulse
    double rep_rate_hz = 204000.0;  ///< pulse repetition rate
    /// When false, the LO photon number is pinned at lo_photons instead of
    /// being drawn Poissonian (useful for exact round-trip checks).
    bool poissonian_lo = true;
};

inline void validate(const DetectorParams& p) {
    if (!(p.eta_total > 0.0 && p.eta_total <= 1.0)) {
        throw std::domain_error("DetectorParams: eta_total must lie in (0,1]");
    }
    if (!(p.kappa > 0.0 && p.kappa <= 1.0)) {
        throw std::domain_error("DetectorParams: kappa must lie in (0,1]");
    }
    if (!(p.sigma_e >= 0.0)) throw std::domain_error("DetectorParams: sigma_e must be >= 0");
    if (!(p.imbalance >= 0.0 && p.imbalance < 0.5)) {
        throw std::domain_error("DetectorParams: imbalance must lie in [0, 0.5)");
    }
    if (!(p.lo_photons > 0.0)) throw std::domain_error("DetectorParams: lo_photons must be > 0");
    if (!(p.rep_rate_hz > 0.0)) throw std::domain_error("DetectorParams: rep_rate_hz must be > 0");
}

/// How measured charges are converted back to quadrature units.
enum class Calibration {
    kTrueGain,     ///< divide by the model gain sqrt(2 kappa eta N_mean)
    kVacuumNoise,  ///< normalize so a vacuum input has variance exactly 1/2
};

struct AcquisitionConfig {
    long long n_pulses = 65536;
    int n_phases = 64;        ///< scan segments (phase advances linearly 0 -> 2pi)
    double drift_deg = 8.0;   ///< end-to-end RMS of the slow phase drift
    std::uint64_t seed = 12345;
    Calibration calibration = Calibration::kTrueGain;
};

inline void validate(const AcquisitionConfig& c) {
    if (c.n_pulses < 1) throw std::domain_error("AcquisitionConfig: n_pulses must be >= 1");
    if (c.n_phases < 1) throw std::domain_error("AcquisitionConfig: n_phases must be >= 1");
    if (c.n_pulses % c.n_phases != 0) {
        throw std::domain_error("AcquisitionConfig: n_pulses must be divisible by n_phases");
    }
    if (!(c.drift_deg >= 0.0)) throw std::domain_error("AcquisitionConfig: drift_deg must be >= 0");
}

struct PulseRecord {
    long long index;
    double theta_true;  ///< actual phase (scan + drift), wrapped to [0, 2pi)
    double charge_e;    ///< difference charge, electrons
    long long lo_n;     ///< LO photon count drawn for this pulse
};

struct QuadratureSample {
    double theta;  ///< commanded scan phase (drift is not known to the experimenter)
    double value;  ///< calibrated quadrature value
};

struct AcquisitionResult {
    std::vector<PulseRecord> records;
    std::vector<QuadratureSample> samples;
};

namespace detail {
struct PulseCharge {
    double charge_e;
    long long lo_n;
};

/// Draw order within a pulse stream is fixed: LO photon number, then the
/// electronic-noise deviate. (The quadrature draw, when used, comes first.)
inline PulseCharge pulse_charge_detail(double x, const DetectorParams& p, RngStream& rng) {
    const long long n = p.poissonian_lo ? rng.poisson(p.lo_photons)
                                        : static_cast<long long>(std::llround(p.lo_photons));
    const double shot_gain = std::sqrt(2.0 * p.kappa * p.eta_total * static_cast<double>(n));
    const double common_mode =
        p.imbalance * p.kappa * (static_cast<double>(n) - p.lo_photons);
    const double electronic = p.sigma_e * rng.normal();
    return {shot_gain * x + common_mode + electronic, n};
}
}  // namespace detail

/// Difference charge produced by one pulse carrying quadrature value x.
inline double pulse_charge(double x, const DetectorParams& params, RngStream& rng) {
    if (!std::isfinite(x)) throw std::domain_error("pulse_charge: non-finite quadrature");
    return detail::pulse_charge_detail(x, params, rng).charge_e;
}

/// Charge-to-quadrature conversion factor for the given calibration mode.
inline double calibration_gain(const DetectorParams& p, Calibration mode) {
    const double shot_var = p.kappa * p.eta_total * p.lo_photons;
    if (mode == Calibration::kTrueGain) return std::sqrt(2.0 * shot_var);
    const double imbalance_var = p.imbalance * p.imbalance * p.kappa * p.kappa * p.lo_photons;
    return std::sqrt(2.0 * (shot_var + imbalance_var + p.sigma_e * p.sigma_e));
}

/// Full phase-scanned acquisition: n_pulses pulses, LO phase advancing
/// linearly from 0 to 2pi with a Gaussian random-walk drift whose end-to-end
/// RMS equals drift_deg. Deterministic given the seed; per-pulse randomness
/// comes from independent counter-derived streams.
inline AcquisitionResult run_acquisition(const DensityMatrix& rho, const DetectorParams& params,
                                         const AcquisitionConfig& config) {
    validate(params);
    validate(config);
    const auto detected = apply_loss(rho, params.eta_total);
    const QuadratureSampler sampler(detected);

    // Slow drift: a random walk generated from its own dedicated stream
    // (index outside the per-pulse range), scaled so the final-step RMS is
    // drift_deg degrees.
    const double drift_rad = config.drift_deg * std::numbers::pi / 180.0;
    std::vector<double> drift(static_cast<std::size_t>(config.n_pulses), 0.0);
    if (drift_rad > 0.0 && config.n_pulses > 1) {
        RngStream walk(config.seed, 0x8000000000000000ull);
        const double step = drift_rad / std::sqrt(static_cast<double>(config.n_pulses - 1));
        double acc = 0.0;
        for (long long j = 1; j < config.n_pulses; ++j) {
            acc += step * walk.normal();
            drift[static_cast<std::size_t>(j)] = acc;
        }
    }

    const double gain = calibration_gain(params, config.calibration);
    AcquisitionResult out;
    out.records.reserve(static_cast<std::size_t>(config.n_pulses));
    out.samples.reserve(static_cast<std::size_t>(config.n_pulses));
    const double two_pi = 2.0 * std::numbers::pi;
    for (long long j = 0; j < config.n_pulses; ++j) {
        const double theta_scan = two_pi * static_cast<double>(j) /
                                  static_cast<double>(config.n_pulses);
        double theta_true = std::fmod(theta_scan + drift[static_cast<std::size_t>(j)], two_pi);
        if (theta_true < 0.0) theta_true += two_pi;
        RngStream stream(config.seed, static_cast<std::uint64_t>(j));
        const double x = sampler.sample(theta_true, stream);
        const auto pulse = detail::pulse_charge_detail(x, params, stream);
        out.records.push_back({j, theta_true, pulse.charge_e, pulse.lo_n});
        out.samples.push_back({theta_scan, pulse.charge_e / gain});
    }
    return out;
}

/// Time series produced by rendering each pulse as a unit-area raised-cosine
/// of the given width, scaled by its charge.
struct Trace {
    double sample_rate_hz;
    std::vector<double> values;
};

inline Trace emit_trace(const std::vector<PulseRecord>& records, const DetectorParams& params,
                        double shaping_width_us = 1.0, double sample_rate_hz = 4.08e6) {
    if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("emit_trace: bad sample rate");
    const double width_s = shaping_width_us * 1e-6;
    const double t_rep = 1.0 / params.rep_rate_hz;
    if (!(width_s > 0.0)) throw std::invalid_argument("emit_trace: bad shaping width");
    if (width_s > t_rep) {
        throw std::invalid_argument("emit_trace: shaping width exceeds the repetition period "
                                    "(pulses would overlap)");
    }
    if (records.empty()) throw std::invalid_argument("emit_trace: no pulses");
    const double duration = static_cast<double>(records.size()) * t_rep;
    const auto n_samples = static_cast<std::size_t>(std::llround(duration * sample_rate_hz));
    Trace trace{sample_rate_hz, std::vector<double>(n_samples, 0.0)};
    const double two_pi = 2.0 * std::numbers::pi;
    for (const auto& rec : records) {
        const double t0 = static_cast<double>(rec.index) * t_rep;
        const auto k_begin = static_cast<long long>(std::ceil(t0 * sample_rate_hz));
        const auto k_end = static_cast<long long>(std::floor((t0 + width_s) * sample_rate_hz));
        for (long long k = k_begin; k <= k_end; ++k) {
            if (k < 0 || k >= static_cast<long long>(n_samples)) continue;
            const double t = static_cast<double>(k) / sample_rate_hz - t0;
            const double shape = (1.0 - std::cos(two_pi * t / width_s)) / width_s;
            trace.values[static_cast<std::size_t>(k)] += rec.charge_e * shape;
        }
    }
    return trace;
}

}  // namespace homodyne
