#include "fmnes/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace fmnes::linalg {

void require_symmetric(const Matrix& a) {
  if (a.rows() != a.cols()) {
    std::ostringstream msg;
    msg << "expected a square matrix, got " << a.rows() << "x" << a.cols();
    throw std::invalid_argument(msg.str());
  }
  double worst = 0.0;
  Eigen::Index wi = 0, wj = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < a.cols(); ++j) {
      const double scale = std::max(1.0, std::abs(a(i, j)));
      const double excess = std::abs(a(i, j) - a(j, i)) / scale;
      if (!(excess <= worst)) {  // also catches NaN
        worst = excess;
        wi = i;
        wj = j;
      }
    }
  }
  if (!(worst <= kSymmetryTol)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "matrix is not symmetric: entry (" << wi << "," << wj << ") = " << a(wi, wj)
        << " but (" << wj << "," << wi << ") = " << a(wj, wi);
    throw std::invalid_argument(msg.str());
  }
}

EigenDecomposition sym_eigen(const Matrix& a) {
  require_symmetric(a);
  const Eigen::Index n = a.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("symmetric eigensolver did not converge");
  }
  const Vector& ascending = solver.eigenvalues();
  const Matrix& basis = solver.eigenvectors();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index l, Eigen::Index r) {
    return ascending(l) > ascending(r);
  });

  EigenDecomposition out{Vector(n), Matrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.values(k) = ascending(src);
    Vector v = basis.col(src);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(v(i)) > 1e-12) {
        if (v(i) < 0.0) v = -v;
        break;
      }
    }
    out.vectors.col(k) = v;
  }
  return out;
}

Matrix sym_exp(const Matrix& a) {
  require_symmetric(a);
  if ((a.array() == 0.0).all()) {
    return Matrix::Identity(a.rows(), a.cols());
  }
  const EigenDecomposition eig = sym_eigen(a);
  const Vector scale = eig.values.array().exp().matrix();
  Matrix out = eig.vectors * scale.asDiagonal() * eig.vectors.transpose();
  return symmetrize(out);
}

double det(const Matrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("det: matrix is not square");
  if (a.rows() == 0) return 1.0;
  return a.partialPivLu().determinant();
}

double trace(const Matrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("trace: matrix is not square");
  return a.trace();
}

Matrix inverse(const Matrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("inverse: matrix is not square");
  const Eigen::PartialPivLU<Matrix> lu(a);
  const double d = lu.determinant();
  if (!(std::abs(d) > kSingularDetTol)) {
    std::ostringstream msg;
    msg << "inverse: matrix is singular (det = " << d << ", reciprocal condition estimate "
        << lu.rcond() << ")";
    throw std::domain_error(msg.str());
  }
  return lu.inverse();
}

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

}  // namespace fmnes::linalg
