#include "selftest/qmath.hpp"

#include <cmath>
#include <stdexcept>

namespace selftest::qmath {

Reflection::Reflection(ComplexMatrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw std::invalid_argument("Reflection: matrix not square");
    if (!m_.is_hermitian(kHermitianTol * std::max(1.0, m_.max_abs())))
        throw std::invalid_argument("Reflection: matrix not Hermitian");
    ComplexMatrix sq = multiply(m_, m_);
    ComplexMatrix dev = sq - ComplexMatrix::identity(m_.rows());
    // Frobenius dominates the operator norm, so this is the stricter check.
    if (dev.frobenius_norm() > kInvolutiveTol)
        throw std::invalid_argument("Reflection: matrix is not involutive");
}

long Reflection::signature() const { return std::lround(m_.trace().real()); }

bool Reflection::balanced() const { return dim() % 2 == 0 && signature() == 0; }

Reflection sign_regularized(const ComplexMatrix& m, double zero_tol) {
    EigResult eig = herm_eig(m);
    const std::size_t n = m.rows();
    // R = Q diag(s) Q^dag with s = sign(lambda), zeros promoted to +1.
    ComplexMatrix scaled = eig.eigenvectors;
    for (std::size_t c = 0; c < n; ++c) {
        const double s = (std::abs(eig.eigenvalues[c]) < zero_tol)
                             ? 1.0
                             : (eig.eigenvalues[c] > 0.0 ? 1.0 : -1.0);
        for (std::size_t r = 0; r < n; ++r) scaled(r, c) *= s;
    }
    ComplexMatrix r = multiply(scaled, eig.eigenvectors.adjoint());
    // Kill the last-digit asymmetry from the reassembly so the Hermitian
    // invariant holds exactly.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            cplx avg = 0.5 * (r(i, j) + std::conj(r(j, i)));
            r(i, j) = avg;
            r(j, i) = std::conj(avg);
        }
    return Reflection(std::move(r));
}

namespace {

// Embed m into a space enlarged by `pad` dimensions, with `block` on the pad's
// diagonal entries (block.size() == pad).
ComplexMatrix extend_with_diag(const ComplexMatrix& m, const std::vector<double>& block) {
    const std::size_t n = m.rows(), pad = block.size();
    ComplexMatrix out(n + pad, n + pad);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) out(r, c) = m(r, c);
    for (std::size_t i = 0; i < pad; ++i) out(n + i, n + i) = block[i];
    return out;
}

StateVector zero_pad_factor(const StateVector& psi, std::size_t factor, std::size_t pad) {
    const auto& dims = psi.subsystem_dims();
    std::vector<std::size_t> out_dims = dims;
    out_dims[factor] += pad;

    std::size_t left = 1, right = 1;
    for (std::size_t i = 0; i < factor; ++i) left *= dims[i];
    for (std::size_t i = factor + 1; i < dims.size(); ++i) right *= dims[i];
    const std::size_t d = dims[factor];

    StateVector out = StateVector::zero(out_dims);
    for (std::size_t l = 0; l < left; ++l)
        for (std::size_t k = 0; k < d; ++k)
            for (std::size_t r = 0; r < right; ++r)
                out[(l * (d + pad) + k) * right + r] = psi[(l * d + k) * right + r];
    return out;
}

std::vector<double> balancing_block(long signature, std::size_t pad) {
    // Signature of the block must cancel the operator's own.
    const long want = -signature;
    if ((long(pad) + want) % 2 != 0 || std::labs(want) > long(pad))
        throw std::invalid_argument("balance: pad size cannot cancel the signature");
    const std::size_t plus = std::size_t((long(pad) + want) / 2);
    std::vector<double> block(pad, -1.0);
    for (std::size_t i = 0; i < plus; ++i) block[i] = 1.0;
    return block;
}

} // namespace

BalancedExtension balance_and_extend(const Reflection& r, const StateVector& psi,
                                     std::size_t factor) {
    if (factor >= psi.subsystem_dims().size())
        throw std::invalid_argument("balance_and_extend: factor out of range");
    if (psi.subsystem_dims()[factor] != r.dim())
        throw std::invalid_argument("balance_and_extend: reflection does not act on the factor");

    BalancedExtension out;
    if (r.balanced()) {
        out.reflection = r;
        out.state = psi;
        out.added_dim = 0;
        return out;
    }
    const long sig = r.signature();
    std::size_t pad = std::size_t(std::labs(sig));
    if ((r.dim() + pad) % 2 != 0) ++pad;  // keep the enlarged dimension even
    out.reflection = Reflection(extend_with_diag(r.matrix(), balancing_block(sig, pad)));
    out.state = zero_pad_factor(psi, factor, pad);
    out.added_dim = pad;
    return out;
}

BalancedSide balance_side(const std::vector<Reflection>& rs, const StateVector& psi,
                          std::size_t factor) {
    if (rs.empty()) throw std::invalid_argument("balance_side: empty reflection list");
    const std::size_t d = rs.front().dim();
    for (const Reflection& r : rs)
        if (r.dim() != d) throw std::invalid_argument("balance_side: mixed dimensions");
    if (factor >= psi.subsystem_dims().size() || psi.subsystem_dims()[factor] != d)
        throw std::invalid_argument("balance_side: reflections do not act on the factor");

    std::size_t pad = 0;
    for (const Reflection& r : rs) pad = std::max(pad, std::size_t(std::labs(r.signature())));
    if ((d + pad) % 2 != 0) ++pad;

    BalancedSide out;
    out.added_dim = pad;
    if (pad == 0) {  // zero signatures on an even dimension: already balanced
        out.reflections = rs;
        out.state = psi;
        return out;
    }
    out.reflections.reserve(rs.size());
    for (const Reflection& r : rs)
        out.reflections.emplace_back(extend_with_diag(r.matrix(), balancing_block(r.signature(), pad)));
    out.state = zero_pad_factor(psi, factor, pad);
    return out;
}

} // namespace selftest::qmath
