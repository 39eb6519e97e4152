#include "selftest/qmath.hpp"

#include <cstdint>
#include <stdexcept>

// Work threshold below which the OpenMP entry points skip spinning up a team.
// The per-element loops are written identically in both paths, so serial and
// parallel results are bit-for-bit equal regardless.
namespace {
constexpr std::int64_t kParallelGrain = 1 << 14;
}

namespace selftest::qmath {

namespace serial {

ComplexMatrix multiply(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("multiply: inner dimension mismatch");
    ComplexMatrix out(a.rows(), b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const cplx arc = a(r, k);
            if (arc == cplx{}) continue;
            for (std::size_t c = 0; c < b.cols(); ++c) out(r, c) += arc * b(k, c);
        }
    return out;
}

ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t ar = 0; ar < a.rows(); ++ar)
        for (std::size_t br = 0; br < b.rows(); ++br)
            for (std::size_t ac = 0; ac < a.cols(); ++ac) {
                const cplx e = a(ar, ac);
                for (std::size_t bc = 0; bc < b.cols(); ++bc)
                    out(ar * b.rows() + br, ac * b.cols() + bc) = e * b(br, bc);
            }
    return out;
}

StateVector apply_factor(const ComplexMatrix& m, const StateVector& v, std::size_t factor) {
    const auto& dims = v.subsystem_dims();
    if (factor >= dims.size()) throw std::invalid_argument("apply_factor: factor out of range");
    if (m.cols() != dims[factor])
        throw std::invalid_argument("apply_factor: matrix does not match factor dimension");

    std::size_t left = 1, right = 1;
    for (std::size_t i = 0; i < factor; ++i) left *= dims[i];
    for (std::size_t i = factor + 1; i < dims.size(); ++i) right *= dims[i];
    const std::size_t din = m.cols(), dout = m.rows();

    std::vector<std::size_t> out_dims = dims;
    out_dims[factor] = dout;
    StateVector out = StateVector::zero(out_dims);

    for (std::size_t l = 0; l < left; ++l)
        for (std::size_t o = 0; o < dout; ++o) {
            const std::size_t out_base = (l * dout + o) * right;
            for (std::size_t k = 0; k < din; ++k) {
                const cplx mok = m(o, k);
                if (mok == cplx{}) continue;
                const std::size_t in_base = (l * din + k) * right;
                for (std::size_t r = 0; r < right; ++r)
                    out[out_base + r] += mok * v[in_base + r];
            }
        }
    return out;
}

ComplexMatrix gram(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != b.rows()) throw std::invalid_argument("gram: vector dimension mismatch");
    ComplexMatrix out(a.cols(), b.cols());
    for (std::size_t i = 0; i < a.cols(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            cplx s = 0.0;
            for (std::size_t k = 0; k < a.rows(); ++k) s += std::conj(a(k, i)) * b(k, j);
            out(i, j) = s;
        }
    return out;
}

} // namespace serial

ComplexMatrix multiply(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("multiply: inner dimension mismatch");
    const std::int64_t work =
        std::int64_t(a.rows()) * std::int64_t(a.cols()) * std::int64_t(b.cols());
    ComplexMatrix out(a.rows(), b.cols());
    const std::int64_t nr = std::int64_t(a.rows());
#pragma omp parallel for schedule(static) if (work >= kParallelGrain)
    for (std::int64_t r = 0; r < nr; ++r)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const cplx arc = a(std::size_t(r), k);
            if (arc == cplx{}) continue;
            for (std::size_t c = 0; c < b.cols(); ++c) out(std::size_t(r), c) += arc * b(k, c);
        }
    return out;
}

ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    const std::int64_t work = std::int64_t(out.rows()) * std::int64_t(out.cols());
    const std::int64_t nar = std::int64_t(a.rows());
#pragma omp parallel for schedule(static) if (work >= kParallelGrain)
    for (std::int64_t ar = 0; ar < nar; ++ar)
        for (std::size_t br = 0; br < b.rows(); ++br)
            for (std::size_t ac = 0; ac < a.cols(); ++ac) {
                const cplx e = a(std::size_t(ar), ac);
                for (std::size_t bc = 0; bc < b.cols(); ++bc)
                    out(std::size_t(ar) * b.rows() + br, ac * b.cols() + bc) = e * b(br, bc);
            }
    return out;
}

StateVector apply_factor(const ComplexMatrix& m, const StateVector& v, std::size_t factor) {
    const auto& dims = v.subsystem_dims();
    if (factor >= dims.size()) throw std::invalid_argument("apply_factor: factor out of range");
    if (m.cols() != dims[factor])
        throw std::invalid_argument("apply_factor: matrix does not match factor dimension");

    std::size_t left = 1, right = 1;
    for (std::size_t i = 0; i < factor; ++i) left *= dims[i];
    for (std::size_t i = factor + 1; i < dims.size(); ++i) right *= dims[i];
    const std::size_t din = m.cols(), dout = m.rows();

    std::vector<std::size_t> out_dims = dims;
    out_dims[factor] = dout;
    StateVector out = StateVector::zero(out_dims);

    const std::int64_t slices = std::int64_t(left) * std::int64_t(dout);
    const std::int64_t work = slices * std::int64_t(din) * std::int64_t(right);
#pragma omp parallel for schedule(static) if (work >= kParallelGrain)
    for (std::int64_t s = 0; s < slices; ++s) {
        const std::size_t l = std::size_t(s) / dout;
        const std::size_t o = std::size_t(s) % dout;
        const std::size_t out_base = (l * dout + o) * right;
        for (std::size_t k = 0; k < din; ++k) {
            const cplx mok = m(o, k);
            if (mok == cplx{}) continue;
            const std::size_t in_base = (l * din + k) * right;
            for (std::size_t r = 0; r < right; ++r) out[out_base + r] += mok * v[in_base + r];
        }
    }
    return out;
}

ComplexMatrix gram(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != b.rows()) throw std::invalid_argument("gram: vector dimension mismatch");
    ComplexMatrix out(a.cols(), b.cols());
    const std::int64_t work =
        std::int64_t(a.cols()) * std::int64_t(b.cols()) * std::int64_t(a.rows());
    const std::int64_t ni = std::int64_t(a.cols());
#pragma omp parallel for schedule(static) if (work >= kParallelGrain)
    for (std::int64_t i = 0; i < ni; ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            cplx s = 0.0;
            for (std::size_t k = 0; k < a.rows(); ++k)
                s += std::conj(a(k, std::size_t(i))) * b(k, j);
            out(std::size_t(i), j) = s;
        }
    return out;
}

} // namespace selftest::qmath
