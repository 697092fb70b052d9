#pragma once

/// Command layer behind the `homodyne` binary: named presets, the flat
/// key=value run configuration, and one function per subcommand
/// (simulate / reconstruct / characterize / spectrum / wigner).
///
/// Each command is a pure function of its configuration: outputs carry a
/// provenance header listing every resolved setting, and rerunning with the
/// same settings reproduces the files byte for byte. The argv front end in
/// tools/ is a thin veneer that maps flags onto configuration keys.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "homodyne/characterize.hpp"
#include "homodyne/detector.hpp"
#include "homodyne/errors.hpp"
#include "homodyne/fock.hpp"
#include "homodyne/io.hpp"
#include "homodyne/numerics.hpp"
#include "homodyne/tomography.hpp"
#include "homodyne/wigner.hpp"

namespace homodyne::cli {

/// Process exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;      ///< unexpected error
inline constexpr int kExitConfig = 2;       ///< invalid parameters or configuration
inline constexpr int kExitData = 3;         ///< missing, malformed, or insufficient data
inline constexpr int kExitNumerical = 4;    ///< numerical failure

inline constexpr std::string_view kFormatTag = "homodyne-csv-1";

// ---------------------------------------------------------------------------
// Run configuration.
// ---------------------------------------------------------------------------

/// Key=value settings for one command. Typed getters parse and range-check
/// on access and record the canonical form of every value they resolve
/// (defaults included), which becomes the provenance header of the outputs.
class RunConfig {
public:
    RunConfig() = default;
    explicit RunConfig(io::KeyValueMap values) : values_(std::move(values)) {}

    bool has(const std::string& key) const { return values_.find(key) != values_.end(); }

    /// Rejects keys outside the command's documented set. The `format` and
    /// `command` entries written by provenance headers are accepted
    /// everywhere so that a header can be replayed as a config file.
    void require_known(std::span<const std::string_view> allowed,
                       std::string_view command) const {
        for (const auto& [key, value] : values_) {
            if (key == "format") {
                if (value != kFormatTag) {
                    throw ConfigError("unsupported format \"" + value + "\" (expected " +
                                      std::string(kFormatTag) + ")");
                }
                continue;
            }
            if (key == "command") {
                if (value != command) {
                    throw ConfigError("config was produced by command \"" + value +
                                      "\" but is being run as \"" + std::string(command) + "\"");
                }
                continue;
            }
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                std::string msg = "unknown config key \"" + key + "\" for command \"" +
                                  std::string(command) + "\"";
                if (key.find("input.") == 0) {
                    msg += " (embedded `input.*` provenance describes the upstream file; "
                           "replay the upstream command with those keys first)";
                }
                throw ConfigError(msg);
            }
        }
    }

    double get_double(const std::string& key, double fallback) {
        double value = fallback;
        if (const auto it = values_.find(key); it != values_.end()) {
            const auto parsed = io::try_parse_double(it->second);
            if (!parsed || !std::isfinite(*parsed)) {
                throw ConfigError("key \"" + key + "\": expected a finite number, got \"" +
                                  it->second + "\"");
            }
            value = *parsed;
        }
        resolved_[key] = io::format_double(value);
        return value;
    }

    double get_positive(const std::string& key, double fallback) {
        const double value = get_double(key, fallback);
        if (!(value > 0.0)) {
            throw ConfigError("key \"" + key + "\": must be > 0, got " +
                              io::format_double(value));
        }
        return value;
    }

    long long get_int(const std::string& key, long long fallback, long long min_value,
                      long long max_value) {
        long long value = fallback;
        if (const auto it = values_.find(key); it != values_.end()) {
            const auto parsed = io::try_parse_int(it->second);
            if (!parsed) {
                throw ConfigError("key \"" + key + "\": expected an integer, got \"" +
                                  it->second + "\"");
            }
            value = *parsed;
        }
        if (value < min_value || value > max_value) {
            throw ConfigError("key \"" + key + "\": must lie in [" + io::format_int(min_value) +
                              ", " + io::format_int(max_value) + "], got " +
                              io::format_int(value));
        }
        resolved_[key] = io::format_int(value);
        return value;
    }

    std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) {
        std::uint64_t value = fallback;
        if (const auto it = values_.find(key); it != values_.end()) {
            const auto parsed = io::try_parse_uint(it->second);
            if (!parsed) {
                throw ConfigError("key \"" + key +
                                  "\": expected an unsigned integer, got \"" + it->second +
                                  "\"");
            }
            value = *parsed;
        }
        resolved_[key] = io::format_uint(value);
        return value;
    }

    bool get_bool(const std::string& key, bool fallback) {
        bool value = fallback;
        if (const auto it = values_.find(key); it != values_.end()) {
            if (it->second == "true" || it->second == "1") {
                value = true;
            } else if (it->second == "false" || it->second == "0") {
                value = false;
            } else {
                throw ConfigError("key \"" + key + "\": expected true/false, got \"" +
                                  it->second + "\"");
            }
        }
        resolved_[key] = value ? "true" : "false";
        return value;
    }

    std::string get_enum(const std::string& key, std::string_view fallback,
                         std::initializer_list<std::string_view> allowed) {
        std::string value(fallback);
        if (const auto it = values_.find(key); it != values_.end()) value = it->second;
        if (std::find(allowed.begin(), allowed.end(), value) == allowed.end()) {
            std::string expected;
            for (const auto& option : allowed) {
                if (!expected.empty()) expected += ", ";
                expected += option;
            }
            throw ConfigError("key \"" + key + "\": expected one of {" + expected +
                              "}, got \"" + value + "\"");
        }
        resolved_[key] = value;
        return value;
    }

    /// Paths are deliberately not recorded: provenance must describe the
    /// data, not where it happened to live on one machine.
    std::string get_path(const std::string& key) const {
        const auto it = values_.find(key);
        return it == values_.end() ? std::string() : it->second;
    }

    /// Non-recorded boolean for switches that select which files get
    /// written without affecting their bytes.
    bool get_output_switch(const std::string& key, bool fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        throw ConfigError("key \"" + key + "\": expected true/false, got \"" + it->second +
                          "\"");
    }

    /// Every key resolved so far, in canonical spelling.
    const io::KeyValueMap& resolved() const { return resolved_; }

private:
    io::KeyValueMap values_;
    io::KeyValueMap resolved_;
};

// ---------------------------------------------------------------------------
// Presets.
// ---------------------------------------------------------------------------

inline const std::vector<std::string_view>& preset_names() {
    static const std::vector<std::string_view> names = {"coherent-paper", "vacuum",
                                                        "single-photon"};
    return names;
}

/// Named parameter sets covering the pipeline end to end; commands pick the
/// keys they understand. All three run the detector at its reference
/// operating point and calibrate quadratures against the vacuum noise level.
inline io::KeyValueMap preset_values(std::string_view name) {
    const DetectorParams ref;  // reference operating point
    if (name == "coherent-paper") {
        // Vacuum-noise calibration rescales every quadrature by
        // 1/sqrt(1 + r), r = sigma_e^2/(kappa eta N). The source amplitude
        // is raised by the same factor so the reconstructed state lands at
        // a mean photon number of exactly 5.
        const double noise_ratio =
            ref.sigma_e * ref.sigma_e / (ref.kappa * ref.eta_total * ref.lo_photons);
        const double alpha = std::sqrt(5.0 * (1.0 + noise_ratio) / ref.eta_total);
        return {
            {"state", "coherent"},
            {"alpha_re", io::format_double(alpha)},
            {"alpha_im", "0"},
            {"eta_total", io::format_double(ref.eta_total)},
            {"dim", "16"},
            {"n_pulses", "262144"},
            {"n_phases", "64"},
            {"drift_deg", "8"},
            {"calibration", "vacuum-noise"},
            {"n_bins", "128"},
            {"cutoff", "7.25"},
            {"phase_source", "estimate"},
            {"grid_half", "6"},
            {"grid_points", "97"},
        };
    }
    if (name == "vacuum") {
        return {
            {"state", "vacuum"},
            {"eta_total", io::format_double(ref.eta_total)},
            {"dim", "16"},
            {"n_pulses", "262144"},
            {"n_phases", "64"},
            {"drift_deg", "8"},
            {"calibration", "vacuum-noise"},
            {"n_bins", "128"},
            {"cutoff", "7.25"},
            {"phase_source", "scan"},
            {"grid_half", "6"},
            {"grid_points", "97"},
        };
    }
    if (name == "single-photon") {
        // Number states carry no phase reference, so reconstruction uses the
        // commanded scan phases. The LO runs at the largest shot-noise
        // limited power to keep the electronic floor from washing out the
        // negativity at the origin.
        return {
            {"state", "fock"},
            {"fock_n", "1"},
            {"eta_total", io::format_double(ref.eta_total)},
            {"dim", "8"},
            {"lo_photons", "3e8"},
            {"n_pulses", "100000"},
            {"n_phases", "50"},
            {"drift_deg", "8"},
            {"calibration", "vacuum-noise"},
            {"n_bins", "128"},
            {"cutoff", "7.25"},
            {"phase_source", "scan"},
            {"grid_half", "4"},
            {"grid_points", "81"},
        };
    }
    throw ConfigError("unknown preset \"" + std::string(name) +
                      "\" (expected coherent-paper, vacuum, or single-photon)");
}

// ---------------------------------------------------------------------------
// Allowed keys per command.
// ---------------------------------------------------------------------------

inline constexpr std::string_view kSimulateKeys[] = {
    "state",      "alpha_re",  "alpha_im",   "fock_n",       "dim",
    "eta_total",  "kappa",     "sigma_e",    "imbalance",    "lo_photons",
    "rep_rate_hz", "poissonian_lo", "n_pulses", "n_phases",  "drift_deg",
    "calibration", "seed",     "full_records"};

inline constexpr std::string_view kReconstructKeys[] = {
    "input",     "dim",          "n_phases",     "n_bins",      "cutoff",
    "phase_source", "ref_alpha_re", "ref_alpha_im", "grid_half", "grid_points",
    "seed"};

inline constexpr std::string_view kCharacterizeKeys[] = {
    "input",       "eta_total", "kappa",   "sigma_e",  "imbalance",
    "rep_rate_hz", "poissonian_lo", "lo_min", "lo_max", "n_points",
    "pulses_per_point", "seed", "snr_at",  "subtraction_at"};

inline constexpr std::string_view kSpectrumKeys[] = {
    "input",       "eta_total",  "kappa",        "sigma_e",      "imbalance",
    "lo_photons",  "rep_rate_hz", "poissonian_lo", "n_pulses",   "seed",
    "shaping_width_us", "sample_rate_hz", "window_size", "min_segments",
    "exclude_bins", "band_lo",   "band_hi",      "save_trace"};

inline constexpr std::string_view kWignerKeys[] = {
    "state", "alpha_re", "alpha_im", "fock_n", "dim", "eta_total",
    "grid_half", "grid_points", "seed"};

inline std::span<const std::string_view> allowed_keys(std::string_view command) {
    if (command == "simulate") return kSimulateKeys;
    if (command == "reconstruct") return kReconstructKeys;
    if (command == "characterize") return kCharacterizeKeys;
    if (command == "spectrum") return kSpectrumKeys;
    if (command == "wigner") return kWignerKeys;
    throw ConfigError("unknown command \"" + std::string(command) + "\"");
}

/// Overlays preset, config file, and flag values (later wins). Preset
/// entries outside the command's key set are dropped silently — presets
/// span the whole pipeline by design. File and flag keys must be known.
inline RunConfig make_run_config(std::string_view command, std::string_view preset_name,
                                 const std::filesystem::path& config_path,
                                 const io::KeyValueMap& flag_overrides) {
    const auto allowed = allowed_keys(command);
    const auto known = [&](const std::string& key) {
        return key == "format" || key == "command" ||
               std::find(allowed.begin(), allowed.end(), key) != allowed.end();
    };
    io::KeyValueMap merged;
    if (!preset_name.empty()) {
        for (const auto& [key, value] : preset_values(preset_name)) {
            if (known(key)) merged[key] = value;
        }
    }
    if (!config_path.empty()) {
        for (const auto& [key, value] : io::read_config_file(config_path)) {
            merged[key] = value;  // unknown keys caught by require_known below
        }
    }
    for (const auto& [key, value] : flag_overrides) merged[key] = value;
    RunConfig cfg(std::move(merged));
    cfg.require_known(allowed, command);
    return cfg;
}

// ---------------------------------------------------------------------------
// Shared command plumbing.
// ---------------------------------------------------------------------------

namespace detail {

inline DetectorParams detector_from(RunConfig& cfg, bool with_lo_photons) {
    DetectorParams params;
    params.eta_total = cfg.get_double("eta_total", params.eta_total);
    params.kappa = cfg.get_double("kappa", params.kappa);
    params.sigma_e = cfg.get_double("sigma_e", params.sigma_e);
    params.imbalance = cfg.get_double("imbalance", params.imbalance);
    if (with_lo_photons) params.lo_photons = cfg.get_double("lo_photons", params.lo_photons);
    params.rep_rate_hz = cfg.get_double("rep_rate_hz", params.rep_rate_hz);
    params.poissonian_lo = cfg.get_bool("poissonian_lo", params.poissonian_lo);
    validate(params);
    return params;
}

/// Builds the source state named by `state` at truncation `dim`. Keys that
/// belong to a different state kind are rejected rather than ignored.
inline DensityMatrix build_state(RunConfig& cfg, int dim) {
    const std::string state = cfg.get_enum("state", "vacuum", {"vacuum", "coherent", "fock"});
    if (state != "coherent" && (cfg.has("alpha_re") || cfg.has("alpha_im"))) {
        throw ConfigError("alpha_re/alpha_im require state = coherent");
    }
    if (state != "fock" && cfg.has("fock_n")) {
        throw ConfigError("fock_n requires state = fock");
    }
    if (state == "coherent") {
        if (!cfg.has("alpha_re")) {
            throw ConfigError("state = coherent requires alpha_re");
        }
        const double re = cfg.get_double("alpha_re", 0.0);
        const double im = cfg.get_double("alpha_im", 0.0);
        return coherent_density_matrix({re, im}, dim);
    }
    if (state == "fock") {
        const auto n = cfg.get_int("fock_n", 1, 0, 64);
        if (n >= dim) {
            throw ConfigError("fock_n must be smaller than dim (got fock_n = " +
                              io::format_int(n) + ", dim = " + io::format_int(dim) + ")");
        }
        return fock_density_matrix(static_cast<int>(n), dim);
    }
    return vacuum_density_matrix(dim);
}

inline Calibration calibration_from(RunConfig& cfg) {
    const std::string mode =
        cfg.get_enum("calibration", "true-gain", {"true-gain", "vacuum-noise"});
    return mode == "true-gain" ? Calibration::kTrueGain : Calibration::kVacuumNoise;
}

inline io::KeyValueMap finalize_provenance(const RunConfig& cfg, std::string_view command) {
    io::KeyValueMap provenance = cfg.resolved();
    provenance["format"] = std::string(kFormatTag);
    provenance["command"] = std::string(command);
    return provenance;
}

/// Folds the provenance of an input file into this run's header under the
/// `input.` prefix, so the whole chain can be replayed from one header.
inline void embed_input_provenance(io::KeyValueMap& provenance,
                                   const io::KeyValueMap& input_provenance) {
    for (const auto& [key, value] : input_provenance) provenance["input." + key] = value;
}

inline void ensure_output_dir(const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw ConfigError("cannot create output directory " + out_dir.string() + ": " +
                          ec.message());
    }
}

inline std::vector<double> symmetric_axis(double half_width, long long points) {
    std::vector<double> axis(static_cast<std::size_t>(points));
    const double step = 2.0 * half_width / static_cast<double>(points - 1);
    for (long long k = 0; k < points; ++k) {
        axis[static_cast<std::size_t>(k)] = -half_width + static_cast<double>(k) * step;
    }
    return axis;
}

inline std::vector<double> log_spaced_powers(double lo, double hi, long long count) {
    std::vector<double> out(static_cast<std::size_t>(count));
    const double ratio = std::log(hi / lo) / static_cast<double>(count - 1);
    for (long long i = 0; i < count; ++i) {
        out[static_cast<std::size_t>(i)] = lo * std::exp(ratio * static_cast<double>(i));
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

/// Runs a phase-scanned acquisition and writes acquisition.csv.
inline void cmd_simulate(RunConfig cfg, const std::filesystem::path& out_dir,
                         std::ostream& log) {
    cfg.require_known(kSimulateKeys, "simulate");
    DetectorParams params = detail::detector_from(cfg, /*with_lo_photons=*/true);
    AcquisitionConfig acq_cfg;
    acq_cfg.n_pulses = cfg.get_int("n_pulses", acq_cfg.n_pulses, 1, 1LL << 31);
    acq_cfg.n_phases = static_cast<int>(cfg.get_int("n_phases", acq_cfg.n_phases, 1, 1 << 16));
    acq_cfg.drift_deg = cfg.get_double("drift_deg", acq_cfg.drift_deg);
    acq_cfg.seed = cfg.get_seed("seed", acq_cfg.seed);
    acq_cfg.calibration = detail::calibration_from(cfg);
    validate(acq_cfg);

    const auto dim = cfg.get_int("dim", 16, 1, 64);
    const DensityMatrix rho = detail::build_state(cfg, static_cast<int>(dim));
    const bool full_records = cfg.get_bool("full_records", false);

    const AcquisitionResult acq = run_acquisition(rho, params, acq_cfg);

    detail::ensure_output_dir(out_dir);
    const auto path = out_dir / "acquisition.csv";
    auto os = io::open_output(path);
    io::write_acquisition_csv(os, acq, detail::finalize_provenance(cfg, "simulate"),
                              full_records);
    log << "simulate: wrote " << path.string() << " (" << acq.samples.size() << " pulses)\n";
}

// ---------------------------------------------------------------------------
// reconstruct
// ---------------------------------------------------------------------------

/// Full reconstruction of an acquisition CSV: marginals, filtered
/// back-projection Wigner map, sampled density matrix, and a text report.
inline void cmd_reconstruct(RunConfig cfg, const std::filesystem::path& out_dir,
                            std::ostream& log) {
    cfg.require_known(kReconstructKeys, "reconstruct");
    const std::string input = cfg.get_path("input");
    if (input.empty()) throw ConfigError("reconstruct requires an input acquisition CSV");
    auto in = io::open_input(input);
    const io::AcquisitionData data = io::read_acquisition_csv(in);

    const auto dim = cfg.get_int("dim", 16, 1, kPatternDimCap);
    const auto n_phases = cfg.get_int("n_phases", 64, 1, 1 << 16);
    const auto n_bins = cfg.get_int("n_bins", 128, 8, 4096);
    const double cutoff = cfg.get_positive("cutoff", 7.25);
    const std::string phase_source =
        cfg.get_enum("phase_source", "estimate", {"estimate", "scan"});
    const double grid_half = cfg.get_positive("grid_half", 6.0);
    const auto grid_points = cfg.get_int("grid_points", 97, 9, 1001);
    if (grid_points % 2 == 0) {
        throw ConfigError("grid_points must be odd so the axes include the origin");
    }
    std::optional<std::complex<double>> ref_alpha;
    if (cfg.has("ref_alpha_re") || cfg.has("ref_alpha_im")) {
        ref_alpha = std::complex<double>(cfg.get_double("ref_alpha_re", 0.0),
                                         cfg.get_double("ref_alpha_im", 0.0));
    }

    Marginals marginals = bin_marginals(std::span<const QuadratureSample>(data.samples),
                                        static_cast<int>(n_phases), static_cast<int>(n_bins));
    const std::vector<double> scan_phases = marginals.phases;
    bool phases_estimated = false;
    if (phase_source == "estimate") {
        try {
            marginals.phases = estimate_phases(marginals);
            phases_estimated = true;
        } catch (const PhaseUnresolvableError& e) {
            throw DataError(std::string(e.what()) +
                            " — rerun with --phases scan to use the commanded scan phases");
        }
    }

    const WignerGrid wigner =
        inverse_radon(marginals, cutoff, detail::symmetric_axis(grid_half, grid_points),
                      detail::symmetric_axis(grid_half, grid_points));

    const PatternTable table =
        build_pattern_table(static_cast<int>(dim), default_pattern_grid(static_cast<int>(dim)));
    const ReconstructedState state = sample_density_matrix(
        std::span<const QuadratureSample>(data.samples), marginals, static_cast<int>(dim),
        table);
    const ReconstructionReport report = reconstruct_report(state, ref_alpha);

    // Drift diagnostic: the estimated phases minus the commanded scan,
    // after removing the arbitrary global offset.
    double drift_rms_deg = 0.0;
    double drift_max_deg = 0.0;
    if (phases_estimated) {
        KahanSum offset;
        for (std::size_t i = 0; i < marginals.phases.size(); ++i) {
            offset.add(marginals.phases[i] - scan_phases[i]);
        }
        const double mean_offset = offset.value() / static_cast<double>(marginals.phases.size());
        KahanSum sq;
        for (std::size_t i = 0; i < marginals.phases.size(); ++i) {
            const double residual = marginals.phases[i] - scan_phases[i] - mean_offset;
            sq.add(residual * residual);
            drift_max_deg = std::max(drift_max_deg, std::abs(residual));
        }
        drift_rms_deg = std::sqrt(sq.value() / static_cast<double>(marginals.phases.size())) *
                        180.0 / std::numbers::pi;
        drift_max_deg *= 180.0 / std::numbers::pi;
    }

    io::KeyValueMap provenance = detail::finalize_provenance(cfg, "reconstruct");
    detail::embed_input_provenance(provenance, data.provenance);

    detail::ensure_output_dir(out_dir);
    {
        auto os = io::open_output(out_dir / "marginals.csv");
        io::write_marginals_csv(os, marginals, provenance);
    }
    {
        auto os = io::open_output(out_dir / "wigner.csv");
        io::write_wigner_csv(os, wigner, provenance);
    }
    {
        auto os = io::open_output(out_dir / "density.csv");
        io::write_density_csv(os, state.rho, provenance);
    }

    const double origin_density = wigner_point(state.rho, 0.0, 0.0);
    const double origin_radon = wigner_point_value(wigner, 0.0, 0.0);
    {
        auto os = io::open_output(out_dir / "report.txt");
        io::write_provenance(os, provenance);
        os << "samples = " << io::format_int(state.n_samples) << '\n';
        os << "mean_photons = " << io::format_double(report.mean_photons) << '\n';
        os << "fitted_alpha_re = " << io::format_double(report.fitted_alpha.real()) << '\n';
        os << "fitted_alpha_im = " << io::format_double(report.fitted_alpha.imag()) << '\n';
        os << "fitted_alpha_abs = " << io::format_double(std::abs(report.fitted_alpha)) << '\n';
        if (report.fidelity) {
            os << "fidelity = " << io::format_double(*report.fidelity) << '\n';
        }
        os << "wigner_origin = " << io::format_double(origin_density) << '\n';
        os << "wigner_origin_radon = " << io::format_double(origin_radon) << '\n';
        os << "trace_deficit = " << io::format_double(state.rho.trace_deficit()) << '\n';
        if (phases_estimated) {
            os << "phase_drift_rms_deg = " << io::format_double(drift_rms_deg) << '\n';
            os << "phase_drift_max_deg = " << io::format_double(drift_max_deg) << '\n';
        }
        for (const auto& warning : state.warnings) os << "warning = " << warning << '\n';
        io::detail::check_stream_wrote(os, "report");
    }
    log << "reconstruct: mean photons " << io::format_double(report.mean_photons)
        << ", W(0,0) " << io::format_double(origin_density);
    if (report.fidelity) log << ", fidelity " << io::format_double(*report.fidelity);
    log << "; wrote marginals.csv, wigner.csv, density.csv, report.txt in "
        << out_dir.string() << '\n';
}

// ---------------------------------------------------------------------------
// characterize
// ---------------------------------------------------------------------------

/// Noise-versus-power metrology: either analyzes an existing sweep CSV or
/// simulates vacuum runs over a log-spaced LO grid, then fits the scaling.
inline void cmd_characterize(RunConfig cfg, const std::filesystem::path& out_dir,
                             std::ostream& log) {
    cfg.require_known(kCharacterizeKeys, "characterize");
    DetectorParams params = detail::detector_from(cfg, /*with_lo_photons=*/false);

    std::vector<SweepPoint> sweep;
    io::KeyValueMap input_provenance;
    const std::string input = cfg.get_path("input");
    if (input.empty()) {
        const double lo_min = cfg.get_positive("lo_min", 3e6);
        const double lo_max = cfg.get_positive("lo_max", 3e8);
        if (!(lo_max > lo_min)) throw ConfigError("lo_max must exceed lo_min");
        const auto n_points = cfg.get_int("n_points", 13, 6, 256);
        const auto pulses = cfg.get_int("pulses_per_point", 16384, 2, 1LL << 28);
        const auto seed = cfg.get_seed("seed", 12345);
        const std::vector<double> powers = detail::log_spaced_powers(lo_min, lo_max, n_points);
        sweep = run_noise_sweep(params, powers, pulses, seed);
    } else {
        auto in = io::open_input(input);
        io::SweepData data = io::read_sweep_csv(in);
        sweep = std::move(data.points);
        input_provenance = std::move(data.provenance);
    }

    const NoiseScalingFit fit = noise_scaling_fit(sweep);
    const double snr_at = cfg.get_positive("snr_at", 1.6e8);
    DetectorParams snr_params = params;
    snr_params.lo_photons = snr_at;
    const double snr = snr_db(snr_params);
    const double subtraction_at = cfg.get_positive("subtraction_at", 3e8);
    const double subtraction = subtraction_db(subtraction_at);
    std::optional<double> measured_subtraction;
    std::string measured_subtraction_note;
    try {
        measured_subtraction = measured_subtraction_db(sweep);
    } catch (const DataError& e) {
        measured_subtraction_note = e.what();
    }

    io::KeyValueMap provenance = detail::finalize_provenance(cfg, "characterize");
    detail::embed_input_provenance(provenance, input_provenance);

    detail::ensure_output_dir(out_dir);
    {
        auto os = io::open_output(out_dir / "sweep.csv");
        io::write_sweep_csv(os, sweep, provenance);
    }
    {
        auto os = io::open_output(out_dir / "residuals.csv");
        io::write_fit_residuals_csv(os, sweep, fit, provenance);
    }
    {
        auto os = io::open_output(out_dir / "report.txt");
        io::write_provenance(os, provenance);
        os << "points = " << io::format_int(static_cast<long long>(sweep.size())) << '\n';
        os << "sigma_e_fit_electrons = " << io::format_double(fit.sigma_e_fit) << '\n';
        os << "gain_fit_e2_per_photon = " << io::format_double(fit.gain_fit) << '\n';
        os << "exponent_fit = " << io::format_double(fit.exponent_fit) << '\n';
        os << "excluded_points = " << io::format_int(static_cast<long long>(fit.excluded.size()))
           << '\n';
        os << "snr_db = " << io::format_double(snr) << '\n';
        os << "subtraction_db = " << io::format_double(subtraction) << '\n';
        if (measured_subtraction) {
            os << "measured_subtraction_db = " << io::format_double(*measured_subtraction)
               << '\n';
        } else {
            os << "measured_subtraction_db = unavailable (" << measured_subtraction_note << ")\n";
        }
        for (const auto& warning : fit.warnings) os << "warning = " << warning << '\n';
        io::detail::check_stream_wrote(os, "report");
    }
    log << "characterize: sigma_e " << io::format_double(fit.sigma_e_fit) << " e-, exponent "
        << io::format_double(fit.exponent_fit) << ", snr " << io::format_double(snr)
        << " dB; wrote sweep.csv, residuals.csv, report.txt in " << out_dir.string() << '\n';
}

// ---------------------------------------------------------------------------
// spectrum
// ---------------------------------------------------------------------------

/// Welch spectral analysis of a detector trace: either an ingested trace
/// CSV or a freshly simulated vacuum pulse train.
inline void cmd_spectrum(RunConfig cfg, const std::filesystem::path& out_dir,
                         std::ostream& log) {
    cfg.require_known(kSpectrumKeys, "spectrum");
    const std::string input = cfg.get_path("input");
    const bool save_trace = cfg.get_output_switch("save_trace", false);

    Trace trace{0.0, {}};
    double rep_rate = 0.0;
    io::KeyValueMap input_provenance;
    if (input.empty()) {
        DetectorParams params = detail::detector_from(cfg, /*with_lo_photons=*/true);
        AcquisitionConfig acq_cfg;
        acq_cfg.n_pulses = cfg.get_int("n_pulses", 32768, 1, 1LL << 31);
        acq_cfg.n_phases = 1;
        acq_cfg.drift_deg = 0.0;
        acq_cfg.seed = cfg.get_seed("seed", 12345);
        const double shaping_us = cfg.get_positive("shaping_width_us", 0.5);
        const double sample_rate = cfg.get_positive("sample_rate_hz", 4.08e6);
        const AcquisitionResult acq =
            run_acquisition(vacuum_density_matrix(2), params, acq_cfg);
        trace = emit_trace(acq.records, params, shaping_us, sample_rate);
        rep_rate = params.rep_rate_hz;
    } else {
        auto in = io::open_input(input);
        io::TraceData data = io::read_trace_csv(in);
        trace = std::move(data.trace);
        input_provenance = std::move(data.provenance);
        // An explicit key wins; otherwise the trace's own header; otherwise
        // the detector default.
        double fallback = DetectorParams{}.rep_rate_hz;
        if (const auto it = input_provenance.find("rep_rate_hz");
            it != input_provenance.end()) {
            if (const auto parsed = io::try_parse_double(it->second); parsed && *parsed > 0.0) {
                fallback = *parsed;
            }
        }
        rep_rate = cfg.get_positive("rep_rate_hz", fallback);
    }

    SpectrumOptions options;
    options.window = static_cast<std::size_t>(cfg.get_int(
        "window_size", static_cast<long long>(options.window), 64, 1LL << 22));
    options.min_segments =
        static_cast<int>(cfg.get_int("min_segments", options.min_segments, 1, 1 << 20));
    options.exclude_bins =
        static_cast<int>(cfg.get_int("exclude_bins", options.exclude_bins, 0, 1 << 16));
    options.band_lo = cfg.get_positive("band_lo", options.band_lo);
    options.band_hi = cfg.get_positive("band_hi", options.band_hi);

    const SpectralReport report = spectrum_report(trace, rep_rate, options);

    io::KeyValueMap provenance = detail::finalize_provenance(cfg, "spectrum");
    detail::embed_input_provenance(provenance, input_provenance);

    detail::ensure_output_dir(out_dir);
    {
        auto os = io::open_output(out_dir / "psd.csv");
        io::write_psd_csv(os, report, provenance);
    }
    if (save_trace && input.empty()) {
        auto os = io::open_output(out_dir / "trace.csv");
        io::write_trace_csv(os, trace, provenance);
    }
    const double flatness_db = 10.0 * std::log10(report.flatness_ratio);
    {
        auto os = io::open_output(out_dir / "report.txt");
        io::write_provenance(os, provenance);
        os << "n_segments = " << io::format_int(static_cast<long long>(report.n_segments))
           << '\n';
        os << "flatness_ratio = " << io::format_double(report.flatness_ratio) << '\n';
        os << "flatness_db = " << io::format_double(flatness_db) << '\n';
        for (std::size_t k = 0; k < report.harmonic_hz.size(); ++k) {
            const std::string tag = io::format_int(static_cast<long long>(k + 1));
            os << "harmonic_" << tag << "_hz = " << io::format_double(report.harmonic_hz[k])
               << '\n';
            os << "harmonic_" << tag
               << "_prominence = " << io::format_double(report.harmonic_prominence[k]) << '\n';
        }
        io::detail::check_stream_wrote(os, "report");
    }
    log << "spectrum: flatness " << io::format_double(flatness_db) << " dB over "
        << report.n_segments << " segments; wrote psd.csv, report.txt in " << out_dir.string()
        << '\n';
}

// ---------------------------------------------------------------------------
// wigner
// ---------------------------------------------------------------------------

/// Exact-kernel Wigner map of an analytic state (optionally through loss),
/// for ground-truth comparisons against reconstructions.
inline void cmd_wigner(RunConfig cfg, const std::filesystem::path& out_dir,
                       std::ostream& log) {
    cfg.require_known(kWignerKeys, "wigner");
    const auto dim = cfg.get_int("dim", 16, 1, 64);
    DensityMatrix rho = detail::build_state(cfg, static_cast<int>(dim));
    const double eta = cfg.get_double("eta_total", 1.0);
    if (!(eta > 0.0 && eta <= 1.0)) {
        throw ConfigError("key \"eta_total\": must lie in (0, 1]");
    }
    if (eta < 1.0) rho = apply_loss(rho, eta);

    const double grid_half = cfg.get_positive("grid_half", 6.0);
    const auto grid_points = cfg.get_int("grid_points", 97, 9, 1001);
    if (grid_points % 2 == 0) {
        throw ConfigError("grid_points must be odd so the axes include the origin");
    }
    const WignerGrid grid =
        wigner_from_density(rho, detail::symmetric_axis(grid_half, grid_points),
                            detail::symmetric_axis(grid_half, grid_points));

    detail::ensure_output_dir(out_dir);
    const auto path = out_dir / "wigner.csv";
    auto os = io::open_output(path);
    io::write_wigner_csv(os, grid, detail::finalize_provenance(cfg, "wigner"));
    log << "wigner: W(0,0) = " << io::format_double(wigner_point_value(grid, 0.0, 0.0))
        << "; wrote " << path.string() << '\n';
}

// ---------------------------------------------------------------------------
// Error-to-exit-code mapping.
// ---------------------------------------------------------------------------

/// Runs a command body and maps the exception taxonomy onto process exit
/// codes; messages go to `err`.
template <typename F>
inline int run_guarded(F&& body, std::ostream& err) {
    try {
        body();
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::domain_error& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

/// Dispatches one parsed command by name.
inline void dispatch(std::string_view command, RunConfig cfg,
                     const std::filesystem::path& out_dir, std::ostream& log) {
    if (command == "simulate") {
        cmd_simulate(std::move(cfg), out_dir, log);
    } else if (command == "reconstruct") {
        cmd_reconstruct(std::move(cfg), out_dir, log);
    } else if (command == "characterize") {
        cmd_characterize(std::move(cfg), out_dir, log);
    } else if (command == "spectrum") {
        cmd_spectrum(std::move(cfg), out_dir, log);
    } else if (command == "wigner") {
        cmd_wigner(std::move(cfg), out_dir, log);
    } else {
        throw ConfigError("unknown command \"" + std::string(command) + "\"");
    }
}

}  // namespace homodyne::cli
