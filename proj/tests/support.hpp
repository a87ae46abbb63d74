#pragma once

// Shared helpers for the test executables: seeded random instances and
// central finite differences.

#include <cmath>
#include <cstdint>
#include <random>

#include "epsode/loss.hpp"
#include "epsode/types.hpp"

namespace testing {

using epsode::Index;
using epsode::Matrix;
using epsode::SymMatrix;
using epsode::Vector;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

  Vector normal_vector(Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  Matrix normal_matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

  // Well-conditioned symmetric positive definite matrix.
  SymMatrix spd(Index n, double ridge = 1.0) {
    const Matrix a = normal_matrix(n, n);
    SymMatrix s = a * a.transpose() / static_cast<double>(n);
    s.diagonal().array() += ridge;
    return s;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline double relative_error(const Matrix& a, const Matrix& b) {
  return max_abs(a - b) / std::max(1.0, max_abs(b));
}

// Central differences with step 1e-6 (1 + ||x||).
inline Vector fd_gradient(const epsode::LossModel& m, const Vector& x) {
  const double h = 1e-6 * (1.0 + x.norm());
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vector a = x, b = x;
    a(i) += h;
    b(i) -= h;
    g(i) = (m.value(a) - m.value(b)) / (2.0 * h);
  }
  return g;
}

inline Matrix fd_hessian(const epsode::LossModel& m, const Vector& x) {
  const double h = 1e-6 * (1.0 + x.norm());
  Matrix hess(x.size(), x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vector a = x, b = x;
    a(i) += h;
    b(i) -= h;
    hess.col(i) = (m.gradient(a) - m.gradient(b)) / (2.0 * h);
  }
  return hess;
}

inline Matrix fd_dh_action(const epsode::LossModel& m, const Vector& x, const Vector& v) {
  const double eps = 1e-5 / (1.0 + v.norm());
  return (m.hessian(x + eps * v) - m.hessian(x - eps * v)) / (2.0 * eps);
}

}  // namespace testing
