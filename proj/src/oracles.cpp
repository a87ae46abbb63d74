#include "epsode/oracles.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "epsode/error.hpp"

namespace epsode::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double guarded_value(const std::function<double(const Vector&)>& f, const Vector& x) {
  if (!x.allFinite()) return kInf;
  try {
    const double v = f(x);
    return std::isfinite(v) ? v : kInf;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::domain_error) return kInf;
    throw;
  }
}

// Damped Newton on phi(b) = f(b) + sigma/2 ||U b - a||^2.
Vector augmented_newton(const LossModel& m, const Matrix& u, const Vector& a, double sigma,
                        Vector b) {
  auto phi = [&](const Vector& x) {
    if (!m.in_domain(x)) return kInf;
    const double q = u.rows() ? (u * x - a).squaredNorm() : 0.0;
    return m.value(x) + 0.5 * sigma * q;
  };
  double f = guarded_value(phi, b);
  if (!std::isfinite(f)) fail(ErrorCode::no_convergence, "oracle start is outside the domain");
  for (int it = 0; it < 100; ++it) {
    Vector g = m.gradient(b);
    Matrix h = m.hessian(b);
    if (u.rows()) {
      g += sigma * u.transpose() * (u * b - a);
      h += sigma * u.transpose() * u;
    }
    if (g.lpNorm<Eigen::Infinity>() <= 1e-13 * (1.0 + std::abs(f))) break;
    Eigen::LDLT<Matrix> ldlt(h);
    Vector step = -ldlt.solve(g);
    if (!step.allFinite() || g.dot(step) >= 0) step = -g;
    double t = 1.0;
    bool moved = false;
    while (t > 1e-16) {
      const Vector trial = b + t * step;
      const double ft = guarded_value(phi, trial);
      if (ft <= f + 1e-4 * t * g.dot(step) || (t == 1.0 && std::abs(ft - f) <= 1e-15 * std::abs(f))) {
        moved = trial != b;
        b = trial;
        f = ft;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
  }
  return b;
}

enum class Prox { penalty, indicator };

OracleResult admm(const LossModel& m, const ConstraintSystem& cs, double rho, Prox kind,
                  const AdmmOptions& opts) {
  const Matrix u = cs.stacked();
  const Vector c = cs.stacked_offsets();
  const Index n_eq = cs.equalities();
  OracleResult out;
  Vector b = m.initial_point();
  if (u.rows() == 0) {
    out.solution = augmented_newton(m, u, Vector(0), 0.0, b);
    out.objective = m.value(out.solution);
    out.converged = true;
    return out;
  }
  double sigma = 1.0;
  Vector z = u * b - c;
  Vector w = Vector::Zero(u.rows());
  for (long it = 1; it <= opts.max_iterations; ++it) {
    b = augmented_newton(m, u, c + z - w, sigma, b);
    const Vector ub = u * b - c;
    const Vector x = ub + w;
    const Vector z_old = z;
    const double thr = rho / sigma;
    for (Index k = 0; k < x.size(); ++k) {
      const double v = x(k);
      if (kind == Prox::indicator) {
        z(k) = k < n_eq ? 0.0 : std::min(v, 0.0);
      } else if (k < n_eq) {
        z(k) = v > thr ? v - thr : (v < -thr ? v + thr : 0.0);
      } else {
        z(k) = v > thr ? v - thr : (v >= 0 ? 0.0 : v);
      }
    }
    w += ub - z;
    const double primal = (ub - z).lpNorm<Eigen::Infinity>();
    const double dual = sigma * (u.transpose() * (z - z_old)).lpNorm<Eigen::Infinity>();
    const double scale_p = 1.0 + std::max(ub.lpNorm<Eigen::Infinity>(), z.lpNorm<Eigen::Infinity>());
    const double scale_d = 1.0 + sigma * (u.transpose() * w).lpNorm<Eigen::Infinity>();
    out.iterations = it;
    if (primal <= opts.tol * scale_p && dual <= opts.tol * scale_d) {
      out.converged = true;
      break;
    }
    if (it % 20 == 0) {
      if (primal / scale_p > 10.0 * dual / scale_d) {
        sigma *= 2.0;
        w /= 2.0;
      } else if (dual / scale_d > 10.0 * primal / scale_p) {
        sigma /= 2.0;
        w *= 2.0;
      }
    }
  }
  if (!out.converged) {
    std::ostringstream msg;
    msg << "ADMM did not converge in " << opts.max_iterations << " iterations";
    fail(ErrorCode::no_convergence, msg.str());
  }
  out.solution = b;
  out.objective = m.value(b) + (kind == Prox::penalty ? rho * cs.penalty(b) : 0.0);
  return out;
}

double soft(double x, double t) { return x > t ? x - t : (x < -t ? x + t : 0.0); }

// Lawson-Hanson nonnegative least squares.
Vector nnls(const Matrix& a, const Vector& y) {
  const Index n = a.cols();
  Vector x = Vector::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  for (int outer = 0; outer < 3 * n + 10; ++outer) {
    const Vector grad = a.transpose() * (y - a * x);
    Index best = -1;
    double best_val = 1e-14 * (1.0 + grad.lpNorm<Eigen::Infinity>());
    for (Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && grad(j) > best_val) {
        best_val = grad(j);
        best = j;
      }
    }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;
    for (int inner = 0; inner < 3 * n + 10; ++inner) {
      std::vector<Index> idx;
      for (Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
      }
      Matrix ap(a.rows(), static_cast<Index>(idx.size()));
      for (std::size_t k = 0; k < idx.size(); ++k) ap.col(static_cast<Index>(k)) = a.col(idx[k]);
      const Vector zp = ap.colPivHouseholderQr().solve(y);
      bool feasible = true;
      for (Index k = 0; k < zp.size(); ++k) feasible = feasible && zp(k) > 0;
      if (feasible) {
        x.setZero();
        for (std::size_t k = 0; k < idx.size(); ++k) x(idx[k]) = zp(static_cast<Index>(k));
        break;
      }
      double alpha = 1.0;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const double zk = zp(static_cast<Index>(k));
        if (zk <= 0) alpha = std::min(alpha, x(idx[k]) / (x(idx[k]) - zk));
      }
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const Index j = idx[k];
        x(j) += alpha * (zp(static_cast<Index>(k)) - x(j));
        if (x(j) <= 1e-15) {
          x(j) = 0.0;
          passive[static_cast<std::size_t>(j)] = false;
        }
      }
    }
  }
  return x;
}

double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm,
               double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double diff = left + right - whole;
  if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
  return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double glasso_objective(const SymMatrix& s, const Matrix& om, double rho) {
  Eigen::LLT<Matrix> llt(om);
  if (llt.info() != Eigen::Success) return kInf;
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  double pen = 0.0;
  for (Index j = 0; j < om.cols(); ++j) {
    for (Index i = j + 1; i < om.rows(); ++i) pen += std::abs(om(i, j));
  }
  return -logdet + (s * om).trace() + rho * pen;
}

}  // namespace

OracleResult prox_grad_fixed_rho(const LossModel& m, const ConstraintSystem& cs, double rho,
                                 const AdmmOptions& opts) {
  if (!(rho >= 0)) fail(ErrorCode::invalid_argument, "rho must be nonnegative");
  if (m.dim() != cs.params()) fail(ErrorCode::invalid_argument, "dimension mismatch");
  return admm(m, cs, rho, Prox::penalty, opts);
}

OracleResult constrained_solve(const LossModel& m, const ConstraintSystem& cs,
                               const AdmmOptions& opts) {
  if (m.dim() != cs.params()) fail(ErrorCode::invalid_argument, "dimension mismatch");
  return admm(m, cs, 0.0, Prox::indicator, opts);
}

Vector pava(const Vector& y, bool nondecreasing) {
  const Index n = y.size();
  const double sign = nondecreasing ? 1.0 : -1.0;
  std::vector<double> level;
  std::vector<Index> count;
  for (Index i = 0; i < n; ++i) {
    level.push_back(sign * y(i));
    count.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] > level.back()) {
      const double w1 = static_cast<double>(count[count.size() - 2]);
      const double w2 = static_cast<double>(count.back());
      const double merged = (w1 * level[level.size() - 2] + w2 * level.back()) / (w1 + w2);
      const Index c = count[count.size() - 2] + count.back();
      level.pop_back();
      count.pop_back();
      level.back() = merged;
      count.back() = c;
    }
  }
  Vector out(n);
  Index pos = 0;
  for (std::size_t b = 0; b < level.size(); ++b) {
    for (Index k = 0; k < count[b]; ++k) out(pos++) = sign * level[b];
  }
  return out;
}

Matrix glasso_coordinate(const SymMatrix& sigma_hat, double rho, double gap_tol) {
  const Index p = sigma_hat.rows();
  if (p < 2 || sigma_hat.cols() != p) fail(ErrorCode::invalid_argument, "glasso needs a square matrix, p >= 2");
  const double lambda = 0.5 * rho;  // per symmetric entry
  Matrix w = sigma_hat;
  Matrix beta = Matrix::Zero(p - 1, p);
  for (int sweep = 0; sweep < 10000; ++sweep) {
    for (Index j = 0; j < p; ++j) {
      std::vector<Index> idx;
      for (Index k = 0; k < p; ++k) {
        if (k != j) idx.push_back(k);
      }
      const Index q = p - 1;
      Matrix w11(q, q);
      Vector s12(q);
      for (Index a = 0; a < q; ++a) {
        s12(a) = sigma_hat(idx[a], j);
        for (Index b = 0; b < q; ++b) w11(a, b) = w(idx[a], idx[b]);
      }
      Vector bj = beta.col(j);
      for (int cd = 0; cd < 100000; ++cd) {
        double change = 0.0;
        for (Index k = 0; k < q; ++k) {
          const double r = s12(k) - w11.row(k).dot(bj) + w11(k, k) * bj(k);
          const double nk = soft(r, lambda) / w11(k, k);
          change = std::max(change, std::abs(nk - bj(k)));
          bj(k) = nk;
        }
        if (change < 1e-15) break;
      }
      beta.col(j) = bj;
      const Vector w12 = w11 * bj;
      for (Index a = 0; a < q; ++a) {
        w(idx[a], j) = w12(a);
        w(j, idx[a]) = w12(a);
      }
    }
    const Matrix om = w.inverse();
    double pen = 0.0;
    for (Index j = 0; j < p; ++j) {
      for (Index i = 0; i < p; ++i) {
        if (i != j) pen += std::abs(om(i, j));
      }
    }
    const double gap = (sigma_hat * om).trace() - static_cast<double>(p) + lambda * pen;
    if (std::abs(gap) < gap_tol) return 0.5 * (om + om.transpose());
  }
  fail(ErrorCode::no_convergence, "graphical lasso coordinate descent did not converge");
}

Matrix glasso_grid_2x2(const SymMatrix& s, double rho) {
  if (s.rows() != 2 || s.cols() != 2) fail(ErrorCode::invalid_argument, "grid search needs p = 2");
  Eigen::Vector3d center(1.0 / s(0, 0), 0.0, 1.0 / s(1, 1));
  Eigen::Vector3d radius(center(0), std::sqrt(center(0) * center(2)), center(2));
  auto objective = [&](const Eigen::Vector3d& x) {
    Matrix om(2, 2);
    om << x(0), x(1), x(1), x(2);
    return glasso_objective(s, om, rho);
  };
  constexpr int half = 10;
  double best = objective(center);
  for (int level = 0; level < 150; ++level) {
    Eigen::Vector3d arg = center;
    for (int i = -half; i <= half; ++i) {
      for (int j = -half; j <= half; ++j) {
        for (int k = -half; k <= half; ++k) {
          const Eigen::Vector3d x =
              center + Eigen::Vector3d(i * radius(0), j * radius(1), k * radius(2)) / half;
          const double v = objective(x);
          if (v < best) {
            best = v;
            arg = x;
          }
        }
      }
    }
    center = arg;
    radius *= 0.7;
  }
  Matrix om(2, 2);
  om << center(0), center(1), center(1), center(2);
  return om;
}

double quadrature_j(int a, int b, double r, double s, double tol) {
  if (a < 0 || b < 0 || a + b > 3) fail(ErrorCode::invalid_argument, "quadrature_j needs a, b >= 0, a + b <= 3");
  const std::function<double(double)> f = [=](double t) {
    return std::pow(1.0 - t, a) * std::pow(t, b) * std::exp((1.0 - t) * r + t * s);
  };
  const double fa = f(0.0), fm = f(0.5), fb = f(1.0);
  const double whole = (fa + 4.0 * fm + fb) / 6.0;
  // The absolute target is tightened for small integrals so that the result
  // also carries about ten significant digits.
  const double target = std::min(tol, 1e-12 * std::abs(whole));
  return simpson(f, 0.0, 1.0, fa, fm, fb, whole, target > 0 ? target : tol, 50);
}

KktReport kkt_residual(const LossModel& m, const ConstraintSystem& cs, const Vector& b,
                       double active_tol) {
  KktReport out;
  const Index p = b.size();
  const Vector g = m.gradient(b);
  const Vector re = cs.equality_residuals(b);
  const Vector ri = cs.inequality_residuals(b);
  out.feasibility = std::max(re.size() ? re.lpNorm<Eigen::Infinity>() : 0.0,
                             ri.size() ? ri.cwiseMax(0.0).maxCoeff() : 0.0);

  std::vector<Index> act;
  for (Index j = 0; j < ri.size(); ++j) {
    if (ri(j) >= -active_tol) act.push_back(j);
  }
  Matrix wa(p, static_cast<Index>(act.size()));
  for (std::size_t k = 0; k < act.size(); ++k) {
    wa.col(static_cast<Index>(k)) = cs.w().row(act[k]).transpose();
  }

  // Remove the free equality multipliers by working in the null space of V.
  Matrix null = Matrix::Identity(p, p);
  if (cs.equalities() > 0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(cs.v().transpose());
    const Matrix q = qr.householderQ() * Matrix::Identity(p, p);
    null = q.rightCols(p - qr.rank());
  }
  const Vector lambda_a = act.empty() ? Vector(0) : nnls(null.transpose() * wa, -null.transpose() * g);
  Vector r = g + wa * lambda_a;
  if (cs.equalities() > 0) {
    const Vector mu = cs.v().transpose().colPivHouseholderQr().solve(-r);
    r += cs.v().transpose() * mu;
  }
  out.stationarity = r.lpNorm<Eigen::Infinity>();
  out.multipliers = Vector::Zero(ri.size());
  for (std::size_t k = 0; k < act.size(); ++k) {
    const double l = lambda_a(static_cast<Index>(k));
    out.multipliers(act[k]) = l;
    out.complementarity = std::max(out.complementarity, l * std::abs(ri(act[k])));
  }
  return out;
}

}  // namespace epsode::oracle
