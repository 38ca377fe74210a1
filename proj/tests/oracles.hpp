#pragma once

// Independent reference implementations used only by the tests. They avoid
// Eigen's decompositions and the library code paths on purpose.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fmnes/engine.hpp"
#include "fmnes/linalg.hpp"
#include "fmnes/rng.hpp"

namespace oracle {

using fmnes::Matrix;
using fmnes::Vector;

struct EigenPairs {
  std::vector<double> values;  // descending
  Matrix vectors;
};

// Cyclic Jacobi rotations until the off-diagonal mass vanishes.
inline EigenPairs jacobi_eigen(Matrix a) {
  const Eigen::Index n = a.rows();
  Matrix v = Matrix::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return a(x, x) > a(y, y); });
  EigenPairs out;
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.values.push_back(a(src, src));
    Vector col = v.col(src);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(col(i)) > 1e-12) {
        if (col(i) < 0) col = -col;
        break;
      }
    }
    out.vectors.col(k) = col;
  }
  return out;
}

inline Matrix series_exp(const Matrix& a, int terms = 30) {
  const Eigen::Index n = a.rows();
  Matrix sum = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int k = 1; k < terms; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

// Gauss-Jordan elimination with partial pivoting. Returns {inverse, det}.
inline std::pair<Matrix, double> gauss_inverse(Matrix a) {
  const Eigen::Index n = a.rows();
  Matrix inv = Matrix::Identity(n, n);
  double det = 1.0;
  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::Index piv = col;
    for (Eigen::Index r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    if (a(piv, col) == 0.0) throw std::domain_error("singular");
    if (piv != col) {
      a.row(piv).swap(a.row(col));
      inv.row(piv).swap(inv.row(col));
      det = -det;
    }
    const double p = a(col, col);
    det *= p;
    a.row(col) /= p;
    inv.row(col) /= p;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a(r, col);
      a.row(r) -= f * a.row(col);
      inv.row(r) -= f * inv.row(col);
    }
  }
  return {inv, det};
}

inline Matrix random_symmetric(fmnes::Rng& rng, Eigen::Index n, double scale = 1.0) {
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) m(i, j) = m(j, i) = scale * rng.normal();
  return m;
}

// Unit-determinant transform with moderate anisotropy, built by hand.
inline Matrix random_unimodular(fmnes::Rng& rng, Eigen::Index n) {
  Matrix b = Matrix::Identity(n, n) + 0.3 * Matrix::NullaryExpr(n, n, [&] { return rng.normal(); });
  const double d = gauss_inverse(b).second;
  const double s = std::pow(std::abs(d), -1.0 / static_cast<double>(n));
  b *= s;
  if (d < 0) b.col(0) = -b.col(0);
  return b;
}

// ---- direct formula evaluations --------------------------------------------

inline std::vector<double> rank_weights(std::size_t lambda) {
  std::vector<double> hat(lambda);
  double sum = 0.0;
  for (std::size_t i = 0; i < lambda; ++i) {
    hat[i] = std::max(0.0, std::log(lambda / 2.0 + 1.0) - std::log(static_cast<double>(i + 1)));
    sum += hat[i];
  }
  std::vector<double> w(lambda);
  for (std::size_t i = 0; i < lambda; ++i) w[i] = hat[i] / sum - 1.0 / static_cast<double>(lambda);
  return w;
}

inline double mu_eff(const std::vector<double>& w) {
  double s = 0.0;
  for (double x : w) s += (x + 1.0 / static_cast<double>(w.size())) * (x + 1.0 / static_cast<double>(w.size()));
  return 1.0 / s;
}

// No shift: exp(alpha ||z||) taken literally.
inline std::vector<double> distance_weights(const std::vector<double>& norms, double alpha) {
  const std::size_t lambda = norms.size();
  std::vector<double> hat(lambda);
  double sum = 0.0;
  for (std::size_t i = 0; i < lambda; ++i) {
    hat[i] = std::max(0.0, std::log(lambda / 2.0 + 1.0) - std::log(static_cast<double>(i + 1))) *
             std::exp(alpha * norms[i]);
    sum += hat[i];
  }
  std::vector<double> w(lambda);
  for (std::size_t i = 0; i < lambda; ++i) w[i] = hat[i] / sum - 1.0 / static_cast<double>(lambda);
  return w;
}

inline Vector p_sigma(const Vector& prev, const std::vector<Vector>& sorted_z,
                      const std::vector<double>& w, double c_sigma, double mu) {
  Vector sum = Vector::Zero(prev.size());
  for (std::size_t i = 0; i < sorted_z.size(); ++i) sum += w[i] * sorted_z[i];
  return (1.0 - c_sigma) * prev + std::sqrt(c_sigma * (2.0 - c_sigma) * mu) * sum;
}

struct Gradients {
  Vector delta;
  Matrix moment;
  double sigma;
  Matrix shape;
};

inline Gradients gradients(const std::vector<Vector>& z, const std::vector<double>& w) {
  const Eigen::Index d = z.front().size();
  Gradients g{Vector::Zero(d), Matrix::Zero(d, d), 0.0, Matrix()};
  for (std::size_t i = 0; i < z.size(); ++i) {
    g.delta += w[i] * z[i];
    g.moment += w[i] * (z[i] * z[i].transpose() - Matrix::Identity(d, d));
  }
  g.sigma = g.moment.trace() / static_cast<double>(d);
  g.shape = g.moment - g.sigma * Matrix::Identity(d, d);
  return g;
}

inline Vector p_c(const Vector& prev, const Matrix& old_b, const Vector& g_delta, double c_c,
                  double mu) {
  return (1.0 - c_c) * prev + std::sqrt(c_c * (2.0 - c_c) * mu) * (old_b * g_delta);
}

// Preference as a pairwise predicate, used for brute-force sorting.
inline bool better(const fmnes::EvaluatedSolution& a, const fmnes::EvaluatedSolution& b) {
  if (a.feasible && !b.feasible) return true;
  if (!a.feasible && b.feasible) return false;
  if (a.feasible) return a.value < b.value;
  return a.z.norm() < b.z.norm();
}

}  // namespace oracle
