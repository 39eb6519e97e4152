#pragma once

#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

#include "selftest/errors.hpp"

namespace selftest::qmath {

using cplx = std::complex<double>;

inline constexpr double kHermitianTol = 1e-12;   // entrywise M == M^dag
inline constexpr double kInvolutiveTol = 1e-10;  // R^2 == I, operator norm
inline constexpr double kDefaultZeroTol = 1e-9;  // kernel-eigenvalue cutoff

// Dense complex matrix, row-major. Small and value-semantic; every operator
// in the lab (projectors, reflections, isometry blocks) lives in one of these.
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols) {}
    ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries);

    static ComplexMatrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    cplx& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    const std::vector<cplx>& entries() const { return data_; }
    std::vector<cplx>& entries() { return data_; }

    ComplexMatrix adjoint() const;
    cplx trace() const;
    double max_abs() const;
    double frobenius_norm() const;

    bool is_hermitian(double tol = kHermitianTol) const;
    bool same_shape(const ComplexMatrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    ComplexMatrix& operator+=(const ComplexMatrix& other);
    ComplexMatrix& operator-=(const ComplexMatrix& other);
    ComplexMatrix& operator*=(cplx scale);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> data_;
};

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator*(cplx scale, ComplexMatrix m);
ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);

// Vector on a tensor product of subsystems. `subsystem_dims` lists the factor
// dimensions in order; their product is the total dimension. Normalization is
// a contract of the caller (states are unit vectors, intermediates like M|psi>
// are not), checked where an operation requires it.
class StateVector {
public:
    StateVector() = default;
    StateVector(std::vector<cplx> amplitudes, std::vector<std::size_t> subsystem_dims);

    static StateVector zero(std::vector<std::size_t> subsystem_dims);
    static StateVector basis_state(std::vector<std::size_t> subsystem_dims, std::size_t index);

    std::size_t dim() const { return amps_.size(); }
    const std::vector<std::size_t>& subsystem_dims() const { return dims_; }

    cplx& operator[](std::size_t i) { return amps_[i]; }
    const cplx& operator[](std::size_t i) const { return amps_[i]; }
    const std::vector<cplx>& amplitudes() const { return amps_; }
    std::vector<cplx>& amplitudes() { return amps_; }

    double norm() const;
    StateVector normalized() const;  // throws numerical_degeneracy on zero norm
    bool is_normalized(double tol = 1e-12) const;

    // Reinterpret the factor structure without touching amplitudes
    // (product of new dims must equal dim()).
    StateVector reshaped(std::vector<std::size_t> subsystem_dims) const;

private:
    std::vector<cplx> amps_;
    std::vector<std::size_t> dims_;
};

cplx inner(const StateVector& a, const StateVector& b);  // <a|b>
double distance(const StateVector& a, const StateVector& b);
StateVector tensor(const StateVector& a, const StateVector& b);

// ---------------------------------------------------------------------------
// Kernels. The unqualified entry points parallelize their independent output
// slices with OpenMP when enabled; `serial::` holds the reference loops the
// tests and the benchmark compare against. Both orders of summation are
// identical per output element, so results are bit-for-bit equal.
// ---------------------------------------------------------------------------

ComplexMatrix multiply(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b);

// Apply `m` to one tensor factor of `v`. Rectangular matrices change that
// factor's dimension (this is how isometries grow the space).
StateVector apply_factor(const ComplexMatrix& m, const StateVector& v, std::size_t factor);

// Gram matrix G(i,j) = <a_i|b_j> of two column families, stored as dim x count
// matrices whose columns are the vectors.
ComplexMatrix gram(const ComplexMatrix& a, const ComplexMatrix& b);

namespace serial {
ComplexMatrix multiply(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b);
StateVector apply_factor(const ComplexMatrix& m, const StateVector& v, std::size_t factor);
ComplexMatrix gram(const ComplexMatrix& a, const ComplexMatrix& b);
} // namespace serial

// Reorder tensor factors: output factor j is input factor perm[j].
StateVector permute_subsystems(const StateVector& v, const std::vector<std::size_t>& perm);

// ---------------------------------------------------------------------------
// Hermitian eigendecomposition -- the single audited primitive behind
// sign/absolute-value regularization and balancing.
// ---------------------------------------------------------------------------

struct EigResult {
    std::vector<double> eigenvalues;  // ascending
    ComplexMatrix eigenvectors;       // columns, unitary
};

// Throws std::invalid_argument on non-Hermitian input.
EigResult herm_eig(const ComplexMatrix& m);

// Hermitian involution (R = R^dag, R^2 = I). Validated on construction.
class Reflection {
public:
    Reflection() = default;
    explicit Reflection(ComplexMatrix m);

    const ComplexMatrix& matrix() const { return m_; }
    std::size_t dim() const { return m_.rows(); }

    // #(+1 eigenvalues) - #(-1 eigenvalues); integer trace of a reflection.
    long signature() const;
    bool balanced() const;

private:
    ComplexMatrix m_;
};

// sign(m) with eigenvalues below zero_tol in magnitude mapped to +1.
Reflection sign_regularized(const ComplexMatrix& m, double zero_tol = kDefaultZeroTol);

struct JunkDistance {
    double distance = 0.0;
    double overlap_norm = 0.0;  // norm of (<target| (x) I)|v>; 0 means no overlap
    StateVector junk;           // normalized partial overlap; zero vector if overlap_norm == 0
};

// min over unit |j> of || v - target (x) j ||, with the optimizer.
// `target_subsystems` names the factors of v (in order) that target lives on.
JunkDistance min_dist_over_junk(const StateVector& v, const StateVector& target,
                                const std::vector<std::size_t>& target_subsystems);

struct BalancedExtension {
    Reflection reflection;
    StateVector state;
    std::size_t added_dim = 0;  // enlargement of the acted-on factor
};

// Direct-sum enlargement making r balanced; the state is zero-padded on the
// new block, so expectations of anything supported on the original block are
// untouched. `factor` names the factor of psi that r acts on.
BalancedExtension balance_and_extend(const Reflection& r, const StateVector& psi,
                                     std::size_t factor);

struct BalancedSide {
    std::vector<Reflection> reflections;
    StateVector state;
    std::size_t added_dim = 0;
};

// Common enlargement balancing a whole family acting on the same factor.
BalancedSide balance_side(const std::vector<Reflection>& rs, const StateVector& psi,
                          std::size_t factor);

} // namespace selftest::qmath
