#pragma once

#include <stdexcept>
#include <string>

namespace selftest {

// Bad run configuration or malformed input files. CLI exit code 2.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// A per-copy optimality premise does not hold, or a counting bound that the
// premise guarantees was violated (the latter indicates a bug). CLI exit code 3.
class premise_violation : public std::runtime_error {
public:
    explicit premise_violation(const std::string& what) : std::runtime_error(what) {}
};

// Numerically degenerate data: zero-norm junk state, empty spectra, and the
// like. Reported, never silently repaired. CLI exit code 4.
class numerical_degeneracy : public std::runtime_error {
public:
    explicit numerical_degeneracy(const std::string& what) : std::runtime_error(what) {}
};

} // namespace selftest
