#include "selftest/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace selftest::rng {

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

Stream Stream::child(std::uint64_t label) const {
    // Derive from the engine's seed material, not its evolving state: children
    // are functions of (parent key, label) only.
    Stream c(0);
    std::mt19937_64 probe = engine_;
    c.engine_.seed(mix(probe() ^ mix(label)));
    return c;
}

std::uint64_t Stream::bits() { return engine_(); }

double Stream::uniform() {
    return double(engine_() >> 11) * 0x1.0p-53;
}

double Stream::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
}

qmath::ComplexMatrix random_hermitian(Stream& s, std::size_t n) {
    qmath::ComplexMatrix m(n, n);
    for (std::size_t r = 0; r < n; ++r) {
        m(r, r) = s.normal();
        for (std::size_t c = r + 1; c < n; ++c) {
            qmath::cplx e(s.normal() * 0.5, s.normal() * 0.5);
            m(r, c) = e;
            m(c, r) = std::conj(e);
        }
    }
    return m;
}

qmath::ComplexMatrix random_unitary(Stream& s, std::size_t n) {
    // Eigenvector matrix of a random Hermitian draw is unitary and plenty
    // generic for perturbations and test fixtures.
    return qmath::herm_eig(random_hermitian(s, n)).eigenvectors;
}

qmath::StateVector random_state(Stream& s, std::vector<std::size_t> subsystem_dims) {
    qmath::StateVector v = qmath::StateVector::zero(std::move(subsystem_dims));
    for (std::size_t i = 0; i < v.dim(); ++i) v[i] = qmath::cplx(s.normal(), s.normal());
    return v.normalized();
}

qmath::Reflection random_balanced_reflection(Stream& s, std::size_t even_dim) {
    if (even_dim % 2 != 0) throw std::invalid_argument("random_balanced_reflection: odd dimension");
    qmath::ComplexMatrix u = random_unitary(s, even_dim);
    qmath::ComplexMatrix scaled = u;
    for (std::size_t c = 0; c < even_dim; ++c) {
        const double sign = (c < even_dim / 2) ? 1.0 : -1.0;
        for (std::size_t r = 0; r < even_dim; ++r) scaled(r, c) *= sign;
    }
    qmath::ComplexMatrix m = qmath::multiply(scaled, u.adjoint());
    for (std::size_t i = 0; i < even_dim; ++i)
        for (std::size_t j = i; j < even_dim; ++j) {
            qmath::cplx avg = 0.5 * (m(i, j) + std::conj(m(j, i)));
            m(i, j) = avg;
            m(j, i) = std::conj(avg);
        }
    return qmath::Reflection(std::move(m));
}

} // namespace selftest::rng
