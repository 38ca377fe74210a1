#pragma once

#include <Eigen/Core>

namespace fmnes {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace linalg {

// Entry-wise symmetry tolerance: |A(i,j) - A(j,i)| <= kSymmetryTol * max(1, |A(i,j)|).
inline constexpr double kSymmetryTol = 1e-9;
// inverse() refuses matrices whose |det| does not exceed this.
inline constexpr double kSingularDetTol = 1e-300;

struct EigenDecomposition {
  Vector values;   // descending
  Matrix vectors;  // column k pairs with values(k); orthonormal columns
};

/// Throws std::invalid_argument naming the worst asymmetric entry when `a`
/// is not square or not symmetric within kSymmetryTol.
void require_symmetric(const Matrix& a);

/// Eigendecomposition of a symmetric matrix. Eigenvalues are sorted in
/// descending order and each eigenvector is signed so that its first
/// nonzero component is positive.
EigenDecomposition sym_eigen(const Matrix& a);

/// Matrix exponential of a symmetric matrix, V diag(exp(l)) V^T.
/// The zero matrix maps to the identity exactly.
Matrix sym_exp(const Matrix& a);

double det(const Matrix& a);
double trace(const Matrix& a);

/// Throws std::domain_error when |det(a)| <= kSingularDetTol.
Matrix inverse(const Matrix& a);

// Symmetric part 0.5 (A + A^T); used to clean round-off out of products like B B^T.
Matrix symmetrize(const Matrix& a);

}  // namespace linalg
}  // namespace fmnes
