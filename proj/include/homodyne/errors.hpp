#pragma once

/// Exception taxonomy shared across the library. The command-line driver maps
/// these onto process exit codes, so throw the most specific type that fits:
///   ConfigError  — invalid parameters, malformed configuration
///   DataError    — structurally invalid or insufficient input data
///   NumericalError — an algorithm failed to converge or produced non-finite results

#include <stdexcept>
#include <string>

namespace homodyne {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when phase estimation finds no segment with a statistically
/// significant mean (e.g. vacuum or Fock-state data); callers should fall
/// back to the commanded scan phases.
struct PhaseUnresolvableError : DataError {
    explicit PhaseUnresolvableError(const std::string& what) : DataError(what) {}
};

struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace homodyne
