#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>

namespace jcas {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Hermitian eigendecomposition with eigenvalues sorted descending.
/// Column k of `eigenvectors` pairs with `eigenvalues[k]`; columns are
/// orthonormal. When eigenvalues tie within numerical precision the order of
/// the paired vectors is unspecified; callers must only rely on the spanned
/// subspaces.
struct EigDecomposition {
    RealVector eigenvalues;
    ComplexMatrix eigenvectors;
};

/// Full SVD, A = left * diag(singular_values) * right^H, singular values
/// sorted descending. `left` is m x m and `right` is n x n, so the trailing
/// columns of `right` span the nullspace and the trailing columns of `left`
/// span the left nullspace.
struct SvdDecomposition {
    ComplexMatrix left;
    RealVector singular_values;
    ComplexMatrix right;
};

bool all_finite(const ComplexMatrix& m);

/// Eigendecomposition of a Hermitian matrix. With `require_hermitian` the
/// input is checked against max|m - m^H| <= 1e-8 and rejected otherwise;
/// either way the decomposition acts on the Hermitian part (m + m^H)/2.
/// Throws std::invalid_argument on a non-square or non-Hermitian input.
EigDecomposition hermitian_eig(const ComplexMatrix& m, bool require_hermitian = true);

/// Full singular value decomposition of an arbitrary complex matrix.
SvdDecomposition svd(const ComplexMatrix& m);

/// Moore-Penrose pseudo-inverse. Singular values below tol * sigma_max are
/// treated as zero. Throws std::invalid_argument for tol <= 0.
ComplexMatrix pseudo_inverse(const ComplexMatrix& m, double tol = 1e-13);

/// Orthonormal basis of the nullspace of `m`, assuming its rank is known to
/// be `rank`: the trailing cols - rank right singular vectors. Throws
/// std::invalid_argument when rank >= cols (no nullspace).
ComplexMatrix nullspace_basis(const ComplexMatrix& m, Eigen::Index rank);

}  // namespace jcas
