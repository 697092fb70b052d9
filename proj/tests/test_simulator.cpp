#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "homodyne/detector.hpp"
#include "homodyne/fock.hpp"
#include "homodyne/sampler.hpp"

using namespace homodyne;

namespace {

double sample_mean(const std::vector<double>& v) {
    KahanSum s;
    for (double x : v) s.add(x);
    return s.value() / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
    const double m = sample_mean(v);
    KahanSum s;
    for (double x : v) s.add((x - m) * (x - m));
    return s.value() / static_cast<double>(v.size());
}

/// Kolmogorov-Smirnov distance between draws and an analytic CDF.
template <typename Cdf>
double ks_distance(std::vector<double> draws, Cdf cdf) {
    std::sort(draws.begin(), draws.end());
    const double n = static_cast<double>(draws.size());
    double d = 0.0;
    for (std::size_t i = 0; i < draws.size(); ++i) {
        const double f = cdf(draws[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
    }
    return d;
}

double gaussian_cdf(double x, double mu) { return 0.5 * (1.0 + std::erf(x - mu)); }

}  // namespace

TEST_CASE("quadrature sampler matches analytic distributions (KS test)", "[sampler]") {
    const int n_draws = 10000;
    // 99.9% two-sided KS quantile at n = 1e4 is 1.95/sqrt(n) ~ 0.0195; the
    // sampler's systematic CDF error is ~5e-5, so 0.02 catches real defects.
    const double ks_threshold = 0.02;

    // Vacuum: Gaussian, variance 1/2.
    {
        QuadratureSampler sampler(vacuum_density_matrix(1));
        RngStream rng(11, 0);
        std::vector<double> draws(n_draws);
        for (auto& d : draws) d = sampler.sample(0.4, rng);
        CHECK(ks_distance(draws, [](double x) { return gaussian_cdf(x, 0.0); }) < ks_threshold);
    }
    // Coherent state at a generic phase: displaced Gaussian.
    {
        QuadratureSampler sampler(coherent_density_matrix(2.24, 20));
        RngStream rng(12, 0);
        const double theta = 0.9;
        std::vector<double> draws(n_draws);
        for (auto& d : draws) d = sampler.sample(theta, rng);
        const double mu = std::numbers::sqrt2 * 2.24 * std::cos(theta);
        CHECK(ks_distance(draws, [mu](double x) { return gaussian_cdf(x, mu); }) < ks_threshold);
    }
    // One-photon state: pr(x) = 2 x^2 e^{-x^2}/sqrt(pi).
    {
        QuadratureSampler sampler(fock_density_matrix(1, 4));
        RngStream rng(13, 0);
        std::vector<double> draws(n_draws);
        for (auto& d : draws) d = sampler.sample(1.7, rng);
        auto cdf = [](double x) {
            return 0.5 * (1.0 + std::erf(x)) - x * std::exp(-x * x) / std::sqrt(std::numbers::pi);
        };
        CHECK(ks_distance(draws, cdf) < ks_threshold);
    }
}

TEST_CASE("quadrature sampler: moments and rare-region coverage", "[sampler]") {
    const int n = 100000;
    {
        QuadratureSampler sampler(vacuum_density_matrix(1));
        RngStream rng(21, 0);
        std::vector<double> draws(static_cast<std::size_t>(n));
        for (auto& d : draws) d = sampler.sample(0.0, rng);
        CHECK(sample_variance(draws) == Catch::Approx(0.5).margin(0.01));
    }
    {
        QuadratureSampler sampler(coherent_density_matrix(2.24, 20));
        RngStream rng(22, 0);
        std::vector<double> draws(static_cast<std::size_t>(n));
        for (auto& d : draws) d = sampler.sample(0.0, rng);
        CHECK(sample_mean(draws) == Catch::Approx(3.16783837971573).margin(0.01));
    }
    {
        // Central dip of the one-photon marginal: P(|x| < 0.1) is tiny and
        // known in closed form (erf(0.1) - 0.2 e^{-0.01}/sqrt(pi)).
        QuadratureSampler sampler(fock_density_matrix(1, 4));
        RngStream rng(23, 0);
        int hits = 0;
        for (int i = 0; i < n; ++i) {
            if (std::abs(sampler.sample(0.3, rng)) < 0.1) ++hits;
        }
        const double frac = static_cast<double>(hits) / n;
        CHECK(frac == Catch::Approx(0.000747755339391198).margin(2.7e-4));
    }
}

TEST_CASE("sampler CDF agrees with the analytic CDF and needs a dense grid", "[sampler]") {
    QuadratureSampler sampler(vacuum_density_matrix(1));
    for (double x : {-1.5, -0.2, 0.0, 0.8, 2.5}) {
        CHECK(sampler.cdf(0.0, x) == Catch::Approx(gaussian_cdf(x, 0.0)).margin(1e-5));
    }
    CHECK_THROWS_AS(QuadratureSampler(vacuum_density_matrix(1), 8.0, 1024),
                    std::invalid_argument);
}

TEST_CASE("pulse charge: electronic noise floor at zero input", "[simulator]") {
    DetectorParams params;
    params.sigma_e = 730.0;
    params.imbalance = 0.0;
    const int n = 100000;
    RngStream rng(31, 0);
    std::vector<double> charges(static_cast<std::size_t>(n));
    for (auto& q : charges) q = pulse_charge(0.0, params, rng);
    const double rms = std::sqrt(sample_variance(charges));
    CHECK(rms == Catch::Approx(730.0).epsilon(0.01));
}

TEST_CASE("pulse charge: vacuum variance is kappa*eta*N + sigma_e^2", "[simulator]") {
    DetectorParams params;  // defaults: eta 0.91, kappa calibrated, sigma_e 730, N 1.6e8
    const auto vac = vacuum_density_matrix(1);
    QuadratureSampler sampler(vac);
    const int n = 20000;
    std::vector<double> charges(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        RngStream pulse_rng(32, static_cast<std::uint64_t>(i) + 1);
        const double x = sampler.sample(0.0, pulse_rng);
        charges[static_cast<std::size_t>(i)] = pulse_charge(x, params, pulse_rng);
    }
    const double expected = params.kappa * params.eta_total * params.lo_photons +
                            params.sigma_e * params.sigma_e;
    const double se = expected * std::sqrt(2.0 / n);
    CHECK(sample_variance(charges) == Catch::Approx(expected).margin(3.5 * se));
}

TEST_CASE("pulse charge: background-subtracted RMS scales as sqrt(N)", "[simulator]") {
    DetectorParams params;
    const auto vac = vacuum_density_matrix(1);
    QuadratureSampler sampler(vac);
    const int n = 20000;
    auto variance_at = [&](double lo) {
        DetectorParams p = params;
        p.lo_photons = lo;
        std::vector<double> charges(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            RngStream rng(33, static_cast<std::uint64_t>(i));
            const double x = sampler.sample(0.0, rng);
            charges[static_cast<std::size_t>(i)] = pulse_charge(x, p, rng);
        }
        return sample_variance(charges);
    };
    const double sub_lo = variance_at(1e7) - params.sigma_e * params.sigma_e;
    const double sub_hi = variance_at(1e8) - params.sigma_e * params.sigma_e;
    // Variance linear in N means subtracted-RMS slope 1/2 on a log-log plot.
    const double slope = 0.5 * std::log10(sub_hi / sub_lo);
    CHECK(slope == Catch::Approx(0.5).margin(0.02));
    CHECK(sub_hi / (params.kappa * params.eta_total * 1e8) == Catch::Approx(1.0).margin(0.05));
}

TEST_CASE("charge-to-quadrature round trip is the identity", "[simulator]") {
    DetectorParams params;
    params.sigma_e = 0.0;
    params.imbalance = 0.0;
    params.poissonian_lo = false;
    const double gain = calibration_gain(params, Calibration::kTrueGain);
    for (double x : {-2.0, -0.3, 0.0, 0.7, 1.9}) {
        RngStream rng(34, 5);
        const double q = pulse_charge(x, params, rng);
        CHECK(q / gain == Catch::Approx(x).margin(1e-9));
    }
}

TEST_CASE("acquisition: layout, determinism, and exact scan phases", "[simulator]") {
    DetectorParams params;
    AcquisitionConfig config;
    config.n_pulses = 8192;
    config.n_phases = 64;
    config.seed = 77;
    const auto run1 = run_acquisition(vacuum_density_matrix(1), params, config);
    const auto run2 = run_acquisition(vacuum_density_matrix(1), params, config);
    REQUIRE(run1.records.size() == 8192);
    REQUIRE(run1.samples.size() == 8192);
    for (std::size_t i = 0; i < run1.records.size(); ++i) {
        REQUIRE(run1.records[i].charge_e == run2.records[i].charge_e);
        REQUIRE(run1.records[i].theta_true == run2.records[i].theta_true);
        REQUIRE(run1.samples[i].value == run2.samples[i].value);
    }

    // Different seed changes the data.
    AcquisitionConfig other = config;
    other.seed = 78;
    const auto run3 = run_acquisition(vacuum_density_matrix(1), params, other);
    CHECK(run3.records[0].charge_e != run1.records[0].charge_e);

    // Without drift the true phases are exactly the linear scan.
    AcquisitionConfig no_drift = config;
    no_drift.drift_deg = 0.0;
    DetectorParams pinned = params;
    pinned.poissonian_lo = false;
    const auto run4 = run_acquisition(vacuum_density_matrix(1), pinned, no_drift);
    for (long long j = 0; j < no_drift.n_pulses; ++j) {
        const double expected = 2.0 * std::numbers::pi * static_cast<double>(j) /
                                static_cast<double>(no_drift.n_pulses);
        REQUIRE(run4.records[static_cast<std::size_t>(j)].theta_true == expected);
    }

    CHECK_THROWS_AS([&] {
        AcquisitionConfig bad = config;
        bad.n_pulses = 100;  // not divisible by 64
        return run_acquisition(vacuum_density_matrix(1), params, bad);
    }(), std::domain_error);
}

TEST_CASE("acquisition: noiseless vacuum variance is 1/2 in every segment", "[simulator]") {
    DetectorParams params;
    params.sigma_e = 0.0;
    AcquisitionConfig config;
    config.n_pulses = 1048576;
    config.n_phases = 64;
    config.seed = 99;
    const auto run = run_acquisition(vacuum_density_matrix(1), params, config);
    const std::size_t per_segment = run.samples.size() / 64;
    REQUIRE(per_segment == 16384);
    KahanSum pooled;
    for (int s = 0; s < 64; ++s) {
        std::vector<double> seg(per_segment);
        for (std::size_t i = 0; i < per_segment; ++i) {
            seg[i] = run.samples[static_cast<std::size_t>(s) * per_segment + i].value;
        }
        const double v = sample_variance(seg);
        CHECK(v == Catch::Approx(0.5).margin(0.02));
        pooled.add(v);
    }
    CHECK(pooled.value() / 64.0 == Catch::Approx(0.5).margin(0.005));
}

TEST_CASE("acquisition: electronic noise adds in variance", "[simulator]") {
    DetectorParams quiet;
    quiet.sigma_e = 0.0;
    DetectorParams noisy;
    noisy.sigma_e = 500.0;
    AcquisitionConfig config;
    config.n_pulses = 65536;
    config.n_phases = 64;
    config.seed = 101;
    auto variance_of = [](const AcquisitionResult& run) {
        std::vector<double> v(run.samples.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = run.samples[i].value;
        return sample_variance(v);
    };
    const double v_quiet = variance_of(run_acquisition(vacuum_density_matrix(1), quiet, config));
    const double v_noisy = variance_of(run_acquisition(vacuum_density_matrix(1), noisy, config));
    // In true-gain units the electronic noise contributes sigma_e^2 / (2 kappa eta N).
    const double expected = 500.0 * 500.0 /
                            (2.0 * noisy.kappa * noisy.eta_total * noisy.lo_photons);
    const double se = 0.5 * std::sqrt(2.0 / static_cast<double>(config.n_pulses)) * 3.0;
    CHECK(v_noisy - v_quiet == Catch::Approx(expected).margin(3.0 * se));
}

TEST_CASE("acquisition: drifted phases have the configured end-to-end RMS", "[simulator]") {
    // Average the squared final drift over several seeds; each run's final
    // drift is theta_true - theta_scan of the last pulse (mod 2pi).
    DetectorParams params;
    params.poissonian_lo = false;
    params.sigma_e = 0.0;
    AcquisitionConfig config;
    config.n_pulses = 4096;
    config.n_phases = 64;
    config.drift_deg = 8.0;
    KahanSum sq;
    const int n_seeds = 200;
    for (int s = 0; s < n_seeds; ++s) {
        config.seed = static_cast<std::uint64_t>(1000 + s);
        const auto run = run_acquisition(vacuum_density_matrix(1), params, config);
        const auto& last = run.records.back();
        const double scan = 2.0 * std::numbers::pi *
                            static_cast<double>(last.index) /
                            static_cast<double>(config.n_pulses);
        double d = last.theta_true - scan;
        while (d > std::numbers::pi) d -= 2.0 * std::numbers::pi;
        while (d < -std::numbers::pi) d += 2.0 * std::numbers::pi;
        sq.add(d * d);
    }
    const double rms_deg = std::sqrt(sq.value() / n_seeds) * 180.0 / std::numbers::pi;
    CHECK(rms_deg == Catch::Approx(8.0).epsilon(0.15));
}

TEST_CASE("trace emission: unit area, overlap guard", "[simulator]") {
    DetectorParams params;  // rep rate 204 kHz
    std::vector<PulseRecord> one = {{0, 0.0, 1.0, 0}};
    const auto trace = emit_trace(one, params, 1.0, 4.0e6);
    KahanSum area;
    for (double v : trace.values) area.add(v);
    CHECK(area.value() / trace.sample_rate_hz == Catch::Approx(1.0).margin(1e-6));

    CHECK_THROWS_AS(emit_trace(one, params, 5.0, 4.0e6), std::invalid_argument);
    CHECK_THROWS_AS(emit_trace({}, params, 1.0, 4.0e6), std::invalid_argument);
}

TEST_CASE("detector parameter validation", "[simulator]") {
    DetectorParams p;
    p.eta_total = 1.2;
    CHECK_THROWS_AS(validate(p), std::domain_error);
    p = DetectorParams{};
    p.imbalance = 0.5;
    CHECK_THROWS_AS(validate(p), std::domain_error);
    p = DetectorParams{};
    p.lo_photons = 0.0;
    CHECK_THROWS_AS(validate(p), std::domain_error);
    p = DetectorParams{};
    p.sigma_e = -1.0;
    CHECK_THROWS_AS(validate(p), std::domain_error);
    CHECK_NOTHROW(validate(DetectorParams{}));
}
