// Command-line front end for the homodyne toolkit. All real work lives in
// homodyne/cli.hpp; this file only maps flags onto configuration keys and
// exceptions onto exit codes (0 ok, 2 config, 3 data, 4 numerical).

#include <deque>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "homodyne/homodyne.hpp"

namespace {

/// Binds CLI11 options to configuration keys. Values parse through the same
/// key=value path as config files, so flags, files, and presets share one
/// validation route. Storage lives in a deque: CLI11 keeps references.
class KeyBinder {
public:
    explicit KeyBinder(CLI::App* cmd) : cmd_(cmd) {}

    /// --flag VALUE  ->  key = VALUE
    void bind(const std::string& flag, const std::string& key, const std::string& help) {
        auto& slot = slots_.emplace_back();
        slot.key = key;
        slot.option = cmd_->add_option(flag, slot.value, help);
    }

    /// --flag  ->  key = value (fixed)
    void bind_switch(const std::string& flag, const std::string& key, const std::string& value,
                     const std::string& help) {
        auto& slot = slots_.emplace_back();
        slot.key = key;
        slot.fixed = value;
        slot.option = cmd_->add_flag(flag, help);
    }

    /// --flag RE[,IM]  ->  key_re = RE [, key_im = IM]
    void bind_complex(const std::string& flag, const std::string& key_re,
                      const std::string& key_im, const std::string& help) {
        auto& slot = slots_.emplace_back();
        slot.key = key_re;
        slot.im_key = key_im;
        slot.option = cmd_->add_option(flag, slot.value, help);
    }

    homodyne::io::KeyValueMap overrides() const {
        homodyne::io::KeyValueMap map;
        for (const auto& slot : slots_) {
            if (slot.option->count() == 0) continue;
            if (slot.fixed) {
                map[slot.key] = *slot.fixed;
            } else if (slot.im_key) {
                const auto comma = slot.value.find(',');
                if (comma == std::string::npos) {
                    map[slot.key] = slot.value;
                } else {
                    if (slot.value.find(',', comma + 1) != std::string::npos) {
                        throw homodyne::ConfigError("expected RE or RE,IM, got \"" +
                                                    slot.value + "\"");
                    }
                    map[slot.key] = slot.value.substr(0, comma);
                    map[*slot.im_key] = slot.value.substr(comma + 1);
                }
            } else {
                map[slot.key] = slot.value;
            }
        }
        return map;
    }

private:
    struct Slot {
        CLI::Option* option = nullptr;
        std::string key;
        std::string value;
        std::optional<std::string> fixed;
        std::optional<std::string> im_key;
    };

    CLI::App* cmd_;
    std::deque<Slot> slots_;
};

struct Command {
    CLI::App* app = nullptr;
    std::string name;
    std::string config_path;
    std::string out_dir = ".";
    std::string preset;
    KeyBinder keys;

    Command(CLI::App& parent, std::string command_name, const std::string& description)
        : app(parent.add_subcommand(command_name, description)),
          name(std::move(command_name)),
          keys(app) {
        app->add_option("--config", config_path, "key = value settings file");
        app->add_option("--out", out_dir, "output directory (default: current)");
        app->add_option("--preset", preset,
                        "named parameter set: coherent-paper, vacuum, single-photon");
        keys.bind("--seed", "seed", "random seed");
    }

    void bind_detector(bool with_lo) {
        keys.bind("--eta", "eta_total", "overall detection efficiency in (0,1]");
        keys.bind("--kappa", "kappa", "charge-gain constant, electrons^2 per photon per unit");
        keys.bind("--sigma-e", "sigma_e", "electronic noise, electrons rms per pulse");
        keys.bind("--imbalance", "imbalance", "fractional splitting imbalance");
        keys.bind("--rep-rate", "rep_rate_hz", "pulse repetition rate, Hz");
        keys.bind_switch("--fixed-lo", "poissonian_lo", "false",
                         "disable local-oscillator photon-number fluctuations");
        if (with_lo) keys.bind("--lo", "lo_photons", "local-oscillator photons per pulse");
    }

    void bind_state() {
        keys.bind("--state", "state", "source state: vacuum, coherent, fock");
        keys.bind_complex("--alpha", "alpha_re", "alpha_im",
                          "coherent amplitude RE[,IM] (state = coherent)");
        keys.bind("--fock-n", "fock_n", "photon number (state = fock)");
        keys.bind("--dim", "dim", "Fock-space truncation");
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Pulsed balanced homodyne detector: quadrature acquisition Monte Carlo,\n"
        "quantum-state tomography, and detector noise metrology."};
    app.require_subcommand(1);

    Command simulate(app, "simulate",
                     "simulate a phase-scanned acquisition -> acquisition.csv");
    simulate.bind_state();
    simulate.bind_detector(/*with_lo=*/true);
    simulate.keys.bind("--pulses", "n_pulses", "number of pulses to acquire");
    simulate.keys.bind("--segments", "n_phases", "phase segments across the scan");
    simulate.keys.bind("--drift", "drift_deg", "end-to-end phase drift, degrees rms");
    simulate.keys.bind("--calibration", "calibration",
                       "quadrature scale: true-gain or vacuum-noise");
    simulate.keys.bind_switch("--full-records", "full_records", "true",
                              "also write per-pulse charge and LO photon columns");

    Command reconstruct(app, "reconstruct",
                        "tomography of an acquisition CSV -> marginals, Wigner map, "
                        "density matrix, report");
    reconstruct.keys.bind("--input", "input", "acquisition CSV to reconstruct");
    reconstruct.keys.bind("--dim", "dim", "Fock-space truncation of the estimate");
    reconstruct.keys.bind("--segments", "n_phases", "phase segments for binning");
    reconstruct.keys.bind("--bins", "n_bins", "histogram bins per segment");
    reconstruct.keys.bind("--cutoff", "cutoff", "filtered back-projection frequency cutoff");
    reconstruct.keys.bind("--phases", "phase_source",
                          "segment phases: estimate (from the data) or scan (commanded)");
    reconstruct.keys.bind_complex("--ref-alpha", "ref_alpha_re", "ref_alpha_im",
                                  "reference amplitude RE[,IM] for the fidelity line");
    reconstruct.keys.bind("--grid-half", "grid_half", "Wigner grid half-width");
    reconstruct.keys.bind("--grid-points", "grid_points", "Wigner grid points per axis (odd)");

    Command characterize(app, "characterize",
                         "noise vs LO power sweep and scaling fit -> sweep, residuals, report");
    characterize.bind_detector(/*with_lo=*/false);
    characterize.keys.bind("--input", "input", "existing sweep CSV (skips simulation)");
    characterize.keys.bind("--lo-min", "lo_min", "lowest LO photon number per pulse");
    characterize.keys.bind("--lo-max", "lo_max", "highest LO photon number per pulse");
    characterize.keys.bind("--points", "n_points", "sweep points, log-spaced");
    characterize.keys.bind("--pulses-per-point", "pulses_per_point", "pulses per sweep point");
    characterize.keys.bind("--snr-at", "snr_at", "report shot-to-electronic SNR at this LO");
    characterize.keys.bind("--subtraction-at", "subtraction_at",
                           "report common-mode subtraction capability at this LO");

    Command spectrum(app, "spectrum",
                     "Welch spectral analysis of a detector trace -> psd, report");
    spectrum.bind_detector(/*with_lo=*/true);
    spectrum.keys.bind("--input", "input", "existing trace CSV (skips simulation)");
    spectrum.keys.bind("--pulses", "n_pulses", "pulses in the simulated trace");
    spectrum.keys.bind("--shaping-us", "shaping_width_us", "pulse shaping width, microseconds");
    spectrum.keys.bind("--sample-rate", "sample_rate_hz", "trace sample rate, Hz");
    spectrum.keys.bind("--window", "window_size", "Welch segment length (power of two)");
    spectrum.keys.bind("--min-segments", "min_segments", "minimum Welch segments required");
    spectrum.keys.bind("--exclude-bins", "exclude_bins",
                       "bins masked around each repetition-rate harmonic");
    spectrum.keys.bind_switch("--save-trace", "save_trace", "true",
                              "also write the simulated trace to trace.csv");

    Command wigner(app, "wigner",
                   "exact Wigner map of an analytic state -> wigner.csv");
    wigner.bind_state();
    wigner.keys.bind("--eta", "eta_total", "apply loss before the map (default 1)");
    wigner.keys.bind("--grid-half", "grid_half", "grid half-width");
    wigner.keys.bind("--grid-points", "grid_points", "grid points per axis (odd)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints help or the parse error
        return code == 0 ? homodyne::cli::kExitOk : homodyne::cli::kExitConfig;
    }

    const Command* commands[] = {&simulate, &reconstruct, &characterize, &spectrum, &wigner};
    for (const Command* cmd : commands) {
        if (!cmd->app->parsed()) continue;
        return homodyne::cli::run_guarded(
            [&] {
                homodyne::cli::RunConfig cfg = homodyne::cli::make_run_config(
                    cmd->name, cmd->preset, cmd->config_path, cmd->keys.overrides());
                homodyne::cli::dispatch(cmd->name, std::move(cfg), cmd->out_dir, std::cout);
            },
            std::cerr);
    }
    return homodyne::cli::kExitFailure;  // unreachable: a subcommand is required
}
