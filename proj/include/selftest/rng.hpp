#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "selftest/qmath.hpp"

namespace selftest::rng {

// splitmix64; used to derive independent substreams from (seed, labels...).
std::uint64_t mix(std::uint64_t x);

// Deterministic stream keyed by a seed and a label path, so per-copy /
// per-question draws depend only on their own key and never on draw order.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : engine_(mix(seed ^ 0x9e3779b97f4a7c15ull)) {}

    // Child stream for a labeled substructure (copy index, party, question...).
    Stream child(std::uint64_t label) const;

    double uniform();             // [0, 1)
    double normal();              // standard normal, Box-Muller on raw bits
    std::uint64_t bits();

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

qmath::ComplexMatrix random_hermitian(Stream& s, std::size_t n);
qmath::ComplexMatrix random_unitary(Stream& s, std::size_t n);
qmath::StateVector random_state(Stream& s, std::vector<std::size_t> subsystem_dims);

// Haar-like balanced reflection: random unitary conjugation of diag(+1..,-1..).
qmath::Reflection random_balanced_reflection(Stream& s, std::size_t even_dim);

} // namespace selftest::rng
