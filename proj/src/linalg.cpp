#include "jcas/linalg.hpp"

#include <Eigen/SVD>

namespace jcas {

bool all_finite(const ComplexMatrix& m) {
    return m.allFinite();
}

EigDecomposition hermitian_eig(const ComplexMatrix& m, bool require_hermitian) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument("hermitian_eig: matrix must be square");
    }
    if (require_hermitian) {
        const double dev = (m - m.adjoint()).cwiseAbs().maxCoeff();
        if (dev > 1e-8) {
            throw std::invalid_argument("hermitian_eig: input is not Hermitian");
        }
    }
    const ComplexMatrix sym = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("hermitian_eig: eigensolver failed to converge");
    }

    // Eigen returns ascending order; flip to descending.
    const Eigen::Index n = m.rows();
    EigDecomposition out;
    out.eigenvalues = solver.eigenvalues().reverse();
    out.eigenvectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        out.eigenvectors.col(k) = solver.eigenvectors().col(n - 1 - k);
    }
    return out;
}

SvdDecomposition svd(const ComplexMatrix& m) {
    Eigen::JacobiSVD<ComplexMatrix> solver(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    SvdDecomposition out;
    out.left = solver.matrixU();
    out.singular_values = solver.singularValues();
    out.right = solver.matrixV();
    return out;
}

ComplexMatrix pseudo_inverse(const ComplexMatrix& m, double tol) {
    if (tol <= 0.0) {
        throw std::invalid_argument("pseudo_inverse: tol must be positive");
    }
    Eigen::JacobiSVD<ComplexMatrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVector& sv = solver.singularValues();
    const double cutoff = sv.size() > 0 ? tol * sv(0) : 0.0;
    RealVector inv = RealVector::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff && sv(i) > 0.0) inv(i) = 1.0 / sv(i);
    }
    return solver.matrixV() * inv.asDiagonal() * solver.matrixU().adjoint();
}

ComplexMatrix nullspace_basis(const ComplexMatrix& m, Eigen::Index rank) {
    if (rank >= m.cols()) {
        throw std::invalid_argument("nullspace_basis: rank >= cols, no nullspace");
    }
    const SvdDecomposition dec = svd(m);
    return dec.right.rightCols(m.cols() - rank);
}

}  // namespace jcas
