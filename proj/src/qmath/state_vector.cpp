#include "selftest/qmath.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace selftest::qmath {

namespace {
std::size_t dims_product(const std::vector<std::size_t>& dims) {
    std::size_t p = 1;
    for (std::size_t d : dims) p *= d;
    return p;
}
} // namespace

StateVector::StateVector(std::vector<cplx> amplitudes, std::vector<std::size_t> subsystem_dims)
    : amps_(std::move(amplitudes)), dims_(std::move(subsystem_dims)) {
    if (dims_.empty()) throw std::invalid_argument("StateVector: no subsystems");
    if (dims_product(dims_) != amps_.size())
        throw std::invalid_argument("StateVector: subsystem dims do not multiply to dimension");
}

StateVector StateVector::zero(std::vector<std::size_t> subsystem_dims) {
    std::size_t d = dims_product(subsystem_dims);
    return StateVector(std::vector<cplx>(d), std::move(subsystem_dims));
}

StateVector StateVector::basis_state(std::vector<std::size_t> subsystem_dims, std::size_t index) {
    StateVector v = zero(std::move(subsystem_dims));
    if (index >= v.dim()) throw std::invalid_argument("basis_state: index out of range");
    v[index] = 1.0;
    return v;
}

double StateVector::norm() const {
    double s = 0.0;
    for (const cplx& a : amps_) s += std::norm(a);
    return std::sqrt(s);
}

StateVector StateVector::normalized() const {
    double n = norm();
    if (n == 0.0) throw numerical_degeneracy("normalized: zero-norm vector");
    StateVector out = *this;
    for (cplx& a : out.amps_) a /= n;
    return out;
}

bool StateVector::is_normalized(double tol) const { return std::abs(norm() - 1.0) <= tol; }

StateVector StateVector::reshaped(std::vector<std::size_t> subsystem_dims) const {
    return StateVector(amps_, std::move(subsystem_dims));
}

cplx inner(const StateVector& a, const StateVector& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("inner: dimension mismatch");
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

double distance(const StateVector& a, const StateVector& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("distance: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) s += std::norm(a[i] - b[i]);
    return std::sqrt(s);
}

StateVector tensor(const StateVector& a, const StateVector& b) {
    std::vector<std::size_t> dims = a.subsystem_dims();
    dims.insert(dims.end(), b.subsystem_dims().begin(), b.subsystem_dims().end());
    StateVector out = StateVector::zero(std::move(dims));
    for (std::size_t i = 0; i < a.dim(); ++i) {
        if (a[i] == cplx{}) continue;
        for (std::size_t j = 0; j < b.dim(); ++j) out[i * b.dim() + j] = a[i] * b[j];
    }
    return out;
}

StateVector permute_subsystems(const StateVector& v, const std::vector<std::size_t>& perm) {
    const auto& dims = v.subsystem_dims();
    const std::size_t m = dims.size();
    if (perm.size() != m) throw std::invalid_argument("permute_subsystems: wrong permutation size");
    std::vector<bool> seen(m, false);
    for (std::size_t p : perm) {
        if (p >= m || seen[p]) throw std::invalid_argument("permute_subsystems: not a permutation");
        seen[p] = true;
    }

    std::vector<std::size_t> out_dims(m);
    for (std::size_t j = 0; j < m; ++j) out_dims[j] = dims[perm[j]];

    // Strides of each input factor in the input (row-major) layout.
    std::vector<std::size_t> in_stride(m, 1);
    for (std::size_t i = m; i-- > 1;) in_stride[i - 1] = in_stride[i] * dims[i];

    StateVector out = StateVector::zero(out_dims);
    std::vector<std::size_t> digits(m, 0);  // digits of the output index, factor-major
    for (std::size_t oi = 0; oi < out.dim(); ++oi) {
        std::size_t ii = 0;
        for (std::size_t j = 0; j < m; ++j) ii += digits[j] * in_stride[perm[j]];
        out[oi] = v[ii];
        for (std::size_t j = m; j-- > 0;) {  // increment mixed-radix counter
            if (++digits[j] < out_dims[j]) break;
            digits[j] = 0;
        }
    }
    return out;
}

JunkDistance min_dist_over_junk(const StateVector& v, const StateVector& target,
                                const std::vector<std::size_t>& target_subsystems) {
    const auto& dims = v.subsystem_dims();
    const std::size_t m = dims.size();
    if (target_subsystems.empty() || target_subsystems.size() >= m)
        throw std::invalid_argument("min_dist_over_junk: target must cover a proper subset");
    std::vector<bool> is_target(m, false);
    for (std::size_t s : target_subsystems) {
        if (s >= m || is_target[s])
            throw std::invalid_argument("min_dist_over_junk: bad subsystem index");
        is_target[s] = true;
    }
    {
        std::size_t td = 1;
        std::size_t j = 0;
        for (std::size_t s : target_subsystems) {
            if (target.subsystem_dims().size() <= j || target.subsystem_dims()[j] != dims[s])
                throw std::invalid_argument("min_dist_over_junk: target factor dims mismatch");
            td *= dims[s];
            ++j;
        }
        if (td != target.dim())
            throw std::invalid_argument("min_dist_over_junk: target dimension mismatch");
    }

    // Partial overlap w = (<target| (x) I)|v> on the junk factors.
    std::vector<std::size_t> junk_dims;
    for (std::size_t i = 0; i < m; ++i)
        if (!is_target[i]) junk_dims.push_back(dims[i]);
    StateVector w = StateVector::zero(junk_dims);

    std::vector<std::size_t> in_stride(m, 1);
    for (std::size_t i = m; i-- > 1;) in_stride[i - 1] = in_stride[i] * dims[i];

    // Walk junk and target indices as mixed-radix counters over their factors.
    std::vector<std::size_t> junk_factors, target_factors;
    for (std::size_t i = 0; i < m; ++i)
        if (!is_target[i]) junk_factors.push_back(i);
    target_factors = target_subsystems;

    std::vector<std::size_t> jd(junk_factors.size(), 0);
    for (std::size_t ji = 0; ji < w.dim(); ++ji) {
        std::size_t base = 0;
        for (std::size_t a = 0; a < junk_factors.size(); ++a)
            base += jd[a] * in_stride[junk_factors[a]];

        cplx acc = 0.0;
        std::vector<std::size_t> td(target_factors.size(), 0);
        for (std::size_t ti = 0; ti < target.dim(); ++ti) {
            std::size_t off = 0;
            for (std::size_t a = 0; a < target_factors.size(); ++a)
                off += td[a] * in_stride[target_factors[a]];
            acc += std::conj(target[ti]) * v[base + off];
            for (std::size_t a = target_factors.size(); a-- > 0;) {
                if (++td[a] < target.subsystem_dims()[a]) break;
                td[a] = 0;
            }
        }
        w[ji] = acc;

        for (std::size_t a = junk_factors.size(); a-- > 0;) {
            if (++jd[a] < junk_dims[a]) break;
            jd[a] = 0;
        }
    }

    JunkDistance out;
    out.overlap_norm = w.norm();
    const double vn2 = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < v.dim(); ++i) s += std::norm(v[i]);
        return s;
    }();
    // ||v - t(x)j||^2 = ||v||^2 + 1 - 2 Re<j|w>, minimized at j = w/||w||.
    double d2 = vn2 + 1.0 - 2.0 * out.overlap_norm;
    out.distance = std::sqrt(std::max(0.0, d2));
    if (out.overlap_norm > 0.0) {
        out.junk = w;
        for (cplx& a : out.junk.amplitudes()) a /= out.overlap_norm;
    } else {
        out.junk = w;  // zero vector, flagged by overlap_norm == 0
    }
    return out;
}

} // namespace selftest::qmath
