#include "selftest/qmath.hpp"

#include <Eigen/Dense>

#include <stdexcept>

namespace selftest::qmath {

EigResult herm_eig(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("herm_eig: matrix not square");
    // Tolerance scales with magnitude so that sums of many operators stay
    // admissible; exact-arithmetic inputs land far below it either way.
    const double tol = kHermitianTol * std::max(1.0, m.max_abs());
    if (!m.is_hermitian(tol)) throw std::invalid_argument("herm_eig: matrix not Hermitian");

    using EMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const EMat> mapped(m.entries().data(), static_cast<Eigen::Index>(m.rows()),
                                  static_cast<Eigen::Index>(m.cols()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(mapped);
    if (solver.info() != Eigen::Success)
        throw numerical_degeneracy("herm_eig: eigendecomposition failed to converge");

    EigResult out;
    const auto n = m.rows();
    out.eigenvalues.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
    out.eigenvectors = ComplexMatrix(n, n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
            out.eigenvectors(r, c) = solver.eigenvectors()(static_cast<Eigen::Index>(r),
                                                           static_cast<Eigen::Index>(c));
    return out;
}

} // namespace selftest::qmath
