#pragma once

/// Plain-text persistence: CSV writers/readers for every artifact the
/// toolkit produces (acquisitions, density matrices, Wigner grids, marginal
/// histograms, noise sweeps, traces, spectra) plus the flat key=value
/// configuration format.
///
/// All numbers are written with std::to_chars shortest round-trip
/// formatting, so a value survives write -> read exactly and repeated runs
/// with the same inputs produce byte-identical files. Every CSV starts with
/// a comment block of `# key = value` lines (the provenance header) that
/// records the fully resolved settings of the run that produced it.

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
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
#include "homodyne/tomography.hpp"
#include "homodyne/wigner.hpp"

namespace homodyne::io {

/// Ordered so that serialization is deterministic.
using KeyValueMap = std::map<std::string, std::string>;

// ---------------------------------------------------------------------------
// Number formatting and parsing.
// ---------------------------------------------------------------------------

inline std::string format_double(double value) {
    std::array<char, 40> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (res.ec != std::errc()) throw NumericalError("format_double: conversion failed");
    return std::string(buf.data(), res.ptr);
}

inline std::string format_int(long long value) {
    std::array<char, 24> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), res.ptr);
}

inline std::string format_uint(std::uint64_t value) {
    std::array<char, 24> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), res.ptr);
}

inline std::string_view trim(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = text.find_last_not_of(" \t\r\n");
    return text.substr(first, last - first + 1);
}

/// Strict full-token parse; rejects trailing junk and empty input.
inline std::optional<double> try_parse_double(std::string_view text) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    if (text.front() == '+') text.remove_prefix(1);  // from_chars rejects a leading '+'
    double value{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

inline std::optional<long long> try_parse_int(std::string_view text) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    if (text.front() == '+') text.remove_prefix(1);
    long long value{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

inline std::optional<std::uint64_t> try_parse_uint(std::string_view text) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    if (text.front() == '+') text.remove_prefix(1);
    std::uint64_t value{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

// ---------------------------------------------------------------------------
// Flat key=value configuration text.
// ---------------------------------------------------------------------------

/// Keys are lowercase identifiers, optionally dotted (used to namespace the
/// embedded provenance of an input file, e.g. "input.seed").
inline bool valid_key(std::string_view key) {
    if (key.empty()) return false;
    for (const char c : key) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '.';
        if (!ok) return false;
    }
    return true;
}

/// Parses `key = value` lines; blank lines and '#' comments are skipped.
/// Duplicate keys are rejected (almost always a configuration mistake).
inline KeyValueMap parse_key_values(std::istream& in) {
    KeyValueMap map;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected `key = value`, got \"" + std::string(body) + "\"");
        }
        const std::string key(trim(body.substr(0, eq)));
        const std::string value(trim(body.substr(eq + 1)));
        if (!valid_key(key)) {
            throw ConfigError("config line " + std::to_string(line_no) + ": invalid key \"" +
                              key + "\"");
        }
        if (value.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": key \"" + key +
                              "\" has an empty value");
        }
        if (!map.emplace(key, value).second) {
            throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key \"" +
                              key + "\"");
        }
    }
    return map;
}

inline KeyValueMap read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    return parse_key_values(in);
}

inline void write_key_values(std::ostream& os, const KeyValueMap& map) {
    for (const auto& [key, value] : map) os << key << " = " << value << '\n';
}

// ---------------------------------------------------------------------------
// Provenance headers.
// ---------------------------------------------------------------------------

/// `# key = value` comment lines; map order (sorted) keeps output stable.
inline void write_provenance(std::ostream& os, const KeyValueMap& provenance) {
    for (const auto& [key, value] : provenance) os << "# " << key << " = " << value << '\n';
}

/// Consumes the leading comment block of a CSV and returns its key=value
/// entries. Comment lines without '=' are ignored; the stream is left
/// positioned at the first non-comment line (the column header).
inline KeyValueMap read_provenance_header(std::istream& in) {
    KeyValueMap map;
    std::string line;
    while (in.peek() == '#') {
        if (!std::getline(in, line)) break;
        std::string_view body = trim(line);
        body.remove_prefix(1);  // '#'
        body = trim(body);
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) continue;
        const std::string key(trim(body.substr(0, eq)));
        const std::string value(trim(body.substr(eq + 1)));
        if (!valid_key(key) || value.empty()) continue;
        if (!map.emplace(key, value).second) {
            throw DataError("provenance header: duplicate key \"" + key + "\"");
        }
    }
    return map;
}

// ---------------------------------------------------------------------------
// Shared CSV plumbing.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

inline void expect_header(std::istream& in, std::string_view expected, const char* what) {
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError(std::string(what) + ": missing column header line");
    }
    if (trim(line) != expected) {
        throw DataError(std::string(what) + ": expected header \"" + std::string(expected) +
                        "\", got \"" + std::string(trim(line)) + "\"");
    }
}

inline double parse_field_double(std::string_view field, const char* what, int line_no) {
    const auto value = try_parse_double(field);
    if (!value || !std::isfinite(*value)) {
        throw DataError(std::string(what) + " line " + std::to_string(line_no) +
                        ": bad numeric field \"" + std::string(field) + "\"");
    }
    return *value;
}

inline long long parse_field_int(std::string_view field, const char* what, int line_no) {
    const auto value = try_parse_int(field);
    if (!value) {
        throw DataError(std::string(what) + " line " + std::to_string(line_no) +
                        ": bad integer field \"" + std::string(field) + "\"");
    }
    return *value;
}

inline void check_stream_wrote(std::ostream& os, const char* what) {
    os.flush();
    if (!os) throw DataError(std::string(what) + ": stream write failed");
}

}  // namespace detail

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open for reading: " + path.string());
    return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open for writing: " + path.string());
    return os;
}

// ---------------------------------------------------------------------------
// Acquisition CSV: index,theta_rad,quadrature[,charge_e,lo_n]
// ---------------------------------------------------------------------------

struct AcquisitionData {
    KeyValueMap provenance;
    std::vector<QuadratureSample> samples;
    std::vector<PulseRecord> records;  ///< Filled only when the extended columns are present.
    bool has_pulse_columns = false;
};

inline void write_acquisition_csv(std::ostream& os, const AcquisitionResult& acq,
                                  const KeyValueMap& provenance, bool full_records = false) {
    if (full_records && acq.records.size() != acq.samples.size()) {
        throw DataError("write_acquisition_csv: records and samples differ in length");
    }
    write_provenance(os, provenance);
    os << (full_records ? "index,theta_rad,quadrature,theta_true_rad,charge_e,lo_n"
                        : "index,theta_rad,quadrature")
       << '\n';
    for (std::size_t j = 0; j < acq.samples.size(); ++j) {
        os << format_int(static_cast<long long>(j)) << ','
           << format_double(acq.samples[j].theta) << ',' << format_double(acq.samples[j].value);
        if (full_records) {
            os << ',' << format_double(acq.records[j].theta_true) << ','
               << format_double(acq.records[j].charge_e) << ','
               << format_int(acq.records[j].lo_n);
        }
        os << '\n';
    }
    detail::check_stream_wrote(os, "write_acquisition_csv");
}

inline AcquisitionData read_acquisition_csv(std::istream& in) {
    AcquisitionData data;
    data.provenance = read_provenance_header(in);
    std::string line;
    if (!std::getline(in, line)) throw DataError("acquisition CSV: missing column header");
    const std::string_view header = trim(line);
    if (header == "index,theta_rad,quadrature,theta_true_rad,charge_e,lo_n") {
        data.has_pulse_columns = true;
    } else if (header != "index,theta_rad,quadrature") {
        throw DataError("acquisition CSV: unrecognized column header \"" + std::string(header) +
                        "\"");
    }
    const std::size_t n_fields = data.has_pulse_columns ? 6 : 3;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view body = trim(line);
        if (body.empty()) continue;
        const auto fields = detail::split_fields(body);
        if (fields.size() != n_fields) {
            throw DataError("acquisition CSV line " + std::to_string(line_no) + ": expected " +
                            std::to_string(n_fields) + " fields, got " +
                            std::to_string(fields.size()));
        }
        const long long index = detail::parse_field_int(fields[0], "acquisition CSV", line_no);
        const double theta = detail::parse_field_double(fields[1], "acquisition CSV", line_no);
        const double value = detail::parse_field_double(fields[2], "acquisition CSV", line_no);
        data.samples.push_back({theta, value});
        if (data.has_pulse_columns) {
            const double theta_true =
                detail::parse_field_double(fields[3], "acquisition CSV", line_no);
            const double charge = detail::parse_field_double(fields[4], "acquisition CSV", line_no);
            const long long lo_n = detail::parse_field_int(fields[5], "acquisition CSV", line_no);
            data.records.push_back({index, theta_true, charge, lo_n});
        }
    }
    if (data.samples.empty()) throw DataError("acquisition CSV: no data rows");
    return data;
}

// ---------------------------------------------------------------------------
// Density-matrix CSV: m,n,re,im (upper triangle sufficient, full accepted)
// ---------------------------------------------------------------------------

inline void write_density_csv(std::ostream& os, const DensityMatrix& rho,
                              const KeyValueMap& provenance = {}) {
    write_provenance(os, provenance);
    os << "m,n,re,im\n";
    for (int m = 0; m < rho.dim(); ++m) {
        for (int n = m; n < rho.dim(); ++n) {
            const auto value = rho.at(m, n);
            os << format_int(m) << ',' << format_int(n) << ',' << format_double(value.real())
               << ',' << format_double(value.imag()) << '\n';
        }
    }
    detail::check_stream_wrote(os, "write_density_csv");
}

struct DensityData {
    KeyValueMap provenance;
    DensityMatrix rho{1};
};

inline DensityData read_density_csv(std::istream& in) {
    constexpr int kMaxDim = 4096;
    DensityData data;
    data.provenance = read_provenance_header(in);
    detail::expect_header(in, "m,n,re,im", "density CSV");

    struct Entry {
        int m, n;
        std::complex<double> value;
    };
    std::vector<Entry> entries;
    int dim = 0;
    std::string line;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view body = trim(line);
        if (body.empty()) continue;
        const auto fields = detail::split_fields(body);
        if (fields.size() != 4) {
            throw DataError("density CSV line " + std::to_string(line_no) +
                            ": expected 4 fields");
        }
        const long long m = detail::parse_field_int(fields[0], "density CSV", line_no);
        const long long n = detail::parse_field_int(fields[1], "density CSV", line_no);
        if (m < 0 || n < 0 || m >= kMaxDim || n >= kMaxDim) {
            throw DataError("density CSV line " + std::to_string(line_no) +
                            ": index out of range");
        }
        const double re = detail::parse_field_double(fields[2], "density CSV", line_no);
        const double im = detail::parse_field_double(fields[3], "density CSV", line_no);
        entries.push_back({static_cast<int>(m), static_cast<int>(n), {re, im}});
        dim = std::max(dim, static_cast<int>(std::max(m, n)) + 1);
    }
    if (entries.empty()) throw DataError("density CSV: no data rows");

    DensityMatrix rho(dim);
    std::vector<char> seen(static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim), 0);
    auto seen_at = [&](int m, int n) -> char& {
        return seen[static_cast<std::size_t>(m) * static_cast<std::size_t>(dim) + n];
    };
    for (const auto& e : entries) {
        if (seen_at(e.m, e.n)) {
            throw DataError("density CSV: duplicate entry for (" + std::to_string(e.m) + "," +
                            std::to_string(e.n) + ")");
        }
        seen_at(e.m, e.n) = 1;
        rho.at(e.m, e.n) = e.value;
    }
    // Mirror missing lower-triangle entries; verify consistency where both
    // halves were given explicitly.
    constexpr double kHermitianTol = 1e-12;
    for (int m = 0; m < dim; ++m) {
        if (std::abs(rho.at(m, m).imag()) > kHermitianTol) {
            throw DataError("density CSV: diagonal entry (" + std::to_string(m) + "," +
                            std::to_string(m) + ") has a nonzero imaginary part");
        }
        for (int n = m + 1; n < dim; ++n) {
            const bool upper = seen_at(m, n) != 0;
            const bool lower = seen_at(n, m) != 0;
            if (upper && lower) {
                if (std::abs(rho.at(m, n) - std::conj(rho.at(n, m))) > kHermitianTol) {
                    throw DataError("density CSV: entries (" + std::to_string(m) + "," +
                                    std::to_string(n) + ") and transpose are not conjugates");
                }
            } else if (upper) {
                rho.at(n, m) = std::conj(rho.at(m, n));
            } else if (lower) {
                rho.at(m, n) = std::conj(rho.at(n, m));
            }
        }
    }
    rho.set_trace_deficit(1.0 - trace_of(rho));
    data.rho = std::move(rho);
    return data;
}

// ---------------------------------------------------------------------------
// Wigner CSV: q,p,w row-major
// ---------------------------------------------------------------------------

inline void write_wigner_csv(std::ostream& os, const WignerGrid& grid,
                             const KeyValueMap& provenance = {}) {
    if (grid.values.size() != grid.q_axis.size() * grid.p_axis.size()) {
        throw DataError("write_wigner_csv: inconsistent grid");
    }
    write_provenance(os, provenance);
    os << "q,p,w\n";
    for (std::size_t iq = 0; iq < grid.q_axis.size(); ++iq) {
        for (std::size_t ip = 0; ip < grid.p_axis.size(); ++ip) {
            os << format_double(grid.q_axis[iq]) << ',' << format_double(grid.p_axis[ip]) << ','
               << format_double(grid.values[iq * grid.p_axis.size() + ip]) << '\n';
        }
    }
    detail::check_stream_wrote(os, "write_wigner_csv");
}

struct WignerData {
    KeyValueMap provenance;
    WignerGrid grid;
};

inline WignerData read_wigner_csv(std::istream& in) {
    WignerData data;
    data.provenance = read_provenance_header(in);
    detail::expect_header(in, "q,p,w", "Wigner CSV");
    std::vector<double> qs, ps, ws;
    std::string line;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view body = trim(line);
        if (body.empty()) continue;
        const auto fields = detail::split_fields(body);
        if (fields.size() != 3) {
            throw DataError("Wigner CSV line " + std::to_string(line_no) + ": expected 3 fields");
        }
        qs.push_back(detail::parse_field_double(fields[0], "Wigner CSV", line_no));
        ps.push_back(detail::parse_field_double(fields[1], "Wigner CSV", line_no));
        ws.push_back(detail::parse_field_double(fields[2], "Wigner CSV", line_no));
    }
    if (ws.empty()) throw DataError("Wigner CSV: no data rows");

    // Row-major layout: p cycles fastest. The first block (constant q)
    // defines the p axis; its length must divide the row count evenly.
    std::size_t np = 1;
    while (np < qs.size() && qs[np] == qs[0]) ++np;
    if (qs.size() % np != 0) throw DataError("Wigner CSV: ragged grid");
    const std::size_t nq = qs.size() / np;
    data.grid.q_axis.resize(nq);
    data.grid.p_axis.assign(ps.begin(), ps.begin() + static_cast<std::ptrdiff_t>(np));
    for (std::size_t iq = 0; iq < nq; ++iq) {
        data.grid.q_axis[iq] = qs[iq * np];
        for (std::size_t ip = 0; ip < np; ++ip) {
            const std::size_t row = iq * np + ip;
            if (qs[row] != data.grid.q_axis[iq] || ps[row] != data.grid.p_axis[ip]) {
                throw DataError("Wigner CSV: grid is not a consistent row-major product grid");
            }
        }
    }
    data.grid.values = std::move(ws);
    return data;
}

// ---------------------------------------------------------------------------
// Marginals CSV: segment,theta_rad,bin_center,count
// ---------------------------------------------------------------------------

inline void write_marginals_csv(std::ostream& os, const Marginals& m,
                                const KeyValueMap& provenance = {}) {
    if (!m.phases_set()) {
        throw DataError("write_marginals_csv: segment phases are not set");
    }
    write_provenance(os, provenance);
    os << "segment,theta_rad,bin_center,count\n";
    for (int segment = 0; segment < m.n_phases; ++segment) {
        for (int b = 0; b < m.n_bins; ++b) {
            os << format_int(segment) << ','
               << format_double(m.phases[static_cast<std::size_t>(segment)]) << ','
               << format_double(m.bin_center(b)) << ',' << format_int(m.count(segment, b))
               << '\n';
        }
    }
    detail::check_stream_wrote(os, "write_marginals_csv");
}

// ---------------------------------------------------------------------------
// Noise-sweep CSV: lo_photons,variance_e2
// ---------------------------------------------------------------------------

inline void write_sweep_csv(std::ostream& os, std::span<const SweepPoint> sweep,
                            const KeyValueMap& provenance = {}) {
    write_provenance(os, provenance);
    os << "lo_photons,variance_e2\n";
    for (const auto& point : sweep) {
        os << format_double(point.lo_photons) << ',' << format_double(point.variance_e2) << '\n';
    }
    detail::check_stream_wrote(os, "write_sweep_csv");
}

struct SweepData {
    KeyValueMap provenance;
    std::vector<SweepPoint> points;
};

inline SweepData read_sweep_csv(std::istream& in) {
    SweepData data;
    data.provenance = read_provenance_header(in);
    detail::expect_header(in, "lo_photons,variance_e2", "sweep CSV");
    std::string line;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view body = trim(line);
        if (body.empty()) continue;
        const auto fields = detail::split_fields(body);
        if (fields.size() != 2) {
            throw DataError("sweep CSV line " + std::to_string(line_no) + ": expected 2 fields");
        }
        data.points.push_back({detail::parse_field_double(fields[0], "sweep CSV", line_no),
                               detail::parse_field_double(fields[1], "sweep CSV", line_no)});
    }
    if (data.points.empty()) throw DataError("sweep CSV: no data rows");
    return data;
}

/// Per-point fit diagnostics next to the raw sweep, for plotting.
inline void write_fit_residuals_csv(std::ostream& os, std::span<const SweepPoint> sweep,
                                    const NoiseScalingFit& fit,
                                    const KeyValueMap& provenance = {}) {
    if (fit.residuals_e2.size() != sweep.size()) {
        throw DataError("write_fit_residuals_csv: residual count does not match the sweep");
    }
    write_provenance(os, provenance);
    os << "lo_photons,variance_e2,fit_variance_e2,residual_e2,excluded\n";
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        const bool excluded =
            std::find(fit.excluded.begin(), fit.excluded.end(), i) != fit.excluded.end();
        const double fitted = sweep[i].variance_e2 - fit.residuals_e2[i];
        os << format_double(sweep[i].lo_photons) << ',' << format_double(sweep[i].variance_e2)
           << ',' << format_double(fitted) << ',' << format_double(fit.residuals_e2[i]) << ','
           << (excluded ? '1' : '0') << '\n';
    }
    detail::check_stream_wrote(os, "write_fit_residuals_csv");
}

// ---------------------------------------------------------------------------
// Trace CSV: sample_index,value (sample rate carried in the header)
// ---------------------------------------------------------------------------

inline void write_trace_csv(std::ostream& os, const Trace& trace,
                            const KeyValueMap& provenance = {}) {
    KeyValueMap merged = provenance;
    merged["sample_rate_hz"] = format_double(trace.sample_rate_hz);
    write_provenance(os, merged);
    os << "sample_index,value\n";
    for (std::size_t k = 0; k < trace.values.size(); ++k) {
        os << format_int(static_cast<long long>(k)) << ',' << format_double(trace.values[k])
           << '\n';
    }
    detail::check_stream_wrote(os, "write_trace_csv");
}

struct TraceData {
    KeyValueMap provenance;
    Trace trace{0.0, {}};
};

inline TraceData read_trace_csv(std::istream& in) {
    TraceData data;
    data.provenance = read_provenance_header(in);
    const auto rate_it = data.provenance.find("sample_rate_hz");
    if (rate_it == data.provenance.end()) {
        throw DataError("trace CSV: header is missing sample_rate_hz");
    }
    const auto rate = try_parse_double(rate_it->second);
    if (!rate || !(*rate > 0.0)) throw DataError("trace CSV: bad sample_rate_hz in header");
    data.trace.sample_rate_hz = *rate;
    detail::expect_header(in, "sample_index,value", "trace CSV");
    std::string line;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view body = trim(line);
        if (body.empty()) continue;
        const auto fields = detail::split_fields(body);
        if (fields.size() != 2) {
            throw DataError("trace CSV line " + std::to_string(line_no) + ": expected 2 fields");
        }
        data.trace.values.push_back(detail::parse_field_double(fields[1], "trace CSV", line_no));
    }
    if (data.trace.values.empty()) throw DataError("trace CSV: no data rows");
    return data;
}

// ---------------------------------------------------------------------------
// PSD CSV: frequency_hz,psd
// ---------------------------------------------------------------------------

inline void write_psd_csv(std::ostream& os, const SpectralReport& report,
                          const KeyValueMap& provenance = {}) {
    write_provenance(os, provenance);
    os << "frequency_hz,psd\n";
    for (std::size_t k = 0; k < report.frequency_hz.size(); ++k) {
        os << format_double(report.frequency_hz[k]) << ',' << format_double(report.psd[k])
           << '\n';
    }
    detail::check_stream_wrote(os, "write_psd_csv");
}

}  // namespace homodyne::io
