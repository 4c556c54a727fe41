#pragma once

#include <stdexcept>
#include <string>

namespace cbc {

// Base class for all errors raised by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Configuration or input validation failed before any run started.
struct ValidationError : Error {
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// The plant produced or received a non-finite value (experiment trip).
struct PlantFault : Error {
    explicit PlantFault(const std::string& msg) : Error(msg) {}
};

// A sample window was too short or inconsistent with the requested period.
struct InvalidWindow : Error {
    explicit InvalidWindow(const std::string& msg) : Error(msg) {}
};

// Fundamental forcing amplitude vanished; relative invasiveness is undefined.
struct InvasivenessUndefined : Error {
    explicit InvasivenessUndefined(const std::string& msg) : Error(msg) {}
};

// Filter design request was inconsistent (e.g. cutoff at or above Nyquist).
struct FilterDesignError : ValidationError {
    explicit FilterDesignError(const std::string& msg) : ValidationError(msg) {}
};

// A corrector (fixed-point or Newton) failed to converge.
struct CorrectorFailure : Error {
    explicit CorrectorFailure(const std::string& msg) : Error(msg) {}
};

// Secant predictor was given two coincident points.
struct DegenerateSecant : Error {
    explicit DegenerateSecant(const std::string& msg) : Error(msg) {}
};

// The tracked output does not respond to the control parameter; the method
// is not applicable (e.g. horizontal equilibrium branches).
struct ControlAuthorityError : Error {
    explicit ControlAuthorityError(const std::string& msg) : Error(msg) {}
};

// RBF interpolation system could not be solved reliably.
struct IllConditioned : Error {
    explicit IllConditioned(const std::string& msg) : Error(msg) {}
};

// Not enough fold data to locate a cusp.
struct InsufficientData : Error {
    explicit InsufficientData(const std::string& msg) : Error(msg) {}
};

}  // namespace cbc
