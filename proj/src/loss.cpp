#include "epsode/loss.hpp"

#include <cmath>
#include <sstream>

#include "epsode/error.hpp"
#include "epsode/log.hpp"

namespace epsode {

std::unique_ptr<LossModel> LossModel::restrict_to(std::span<const Index>) const {
  fail(ErrorCode::unsupported_loss, name() + " loss cannot be split by observation");
}

Vector unconstrained_minimum(const LossModel& m, const NewtonOptions& opts) {
  return unconstrained_minimum(m, m.initial_point(), opts);
}

namespace {

double safe_value(const LossModel& m, const Vector& x) {
  if (!x.allFinite() || !m.in_domain(x)) return std::numeric_limits<double>::infinity();
  try {
    return m.value(x);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::domain_error) return std::numeric_limits<double>::infinity();
    throw;
  }
}

Vector newton_direction(const SymMatrix& h, const Vector& g) {
  Eigen::LLT<Matrix> llt(h);
  if (llt.info() == Eigen::Success) return -llt.solve(g);
  // Levenberg shift for flat or indefinite curvature.
  const Index p = h.rows();
  double shift = 1e-10 * (1.0 + h.diagonal().cwiseAbs().maxCoeff());
  for (int k = 0; k < 40; ++k, shift *= 10.0) {
    Eigen::LLT<Matrix> shifted(h + shift * Matrix::Identity(p, p));
    if (shifted.info() == Eigen::Success) return -shifted.solve(g);
  }
  return -g;
}

}  // namespace

Vector unconstrained_minimum(const LossModel& m, Vector x, const NewtonOptions& opts) {
  if (x.size() != m.dim()) fail(ErrorCode::invalid_argument, "start point has wrong length");
  double f = safe_value(m, x);
  if (!std::isfinite(f)) fail(ErrorCode::domain_error, "start point outside the loss domain");

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    const Vector g = m.gradient(x);
    if (!g.allFinite()) break;
    const Vector d = newton_direction(m.hessian(x), g);
    // A vanishing gradient only counts when the Newton step vanishes too;
    // along a recession direction (separable logistic data) the gradient
    // decays while the steps stay of order one.
    if (g.lpNorm<Eigen::Infinity>() < opts.gradient_tol * (1.0 + std::abs(f)) &&
        d.lpNorm<Eigen::Infinity>() <= 1e-4 * (1.0 + x.lpNorm<Eigen::Infinity>())) {
      log::debug("newton converged in {} iterations", iter);
      return x;
    }
    const double slope = g.dot(d);
    double t = 1.0;
    bool accepted = false;
    if (-slope <= 1e-14 * (1.0 + std::abs(f))) {
      // Decrease is below round-off; take the full step and let the gradient
      // test decide.
      const Vector xn = x + d;
      const double fn = safe_value(m, xn);
      if (std::isfinite(fn)) {
        x = xn;
        f = fn;
        accepted = true;
      }
    }
    while (!accepted && t > 1e-20) {
      const Vector xn = x + t * d;
      const double fn = safe_value(m, xn);
      if (fn <= f + opts.armijo_slope * t * slope) {
        x = xn;
        f = fn;
        accepted = true;
      } else {
        t *= opts.backtrack;
      }
    }
    if (!accepted) break;
    if (x.lpNorm<Eigen::Infinity>() > 1e12) {
      fail(ErrorCode::divergence, "Newton iterates diverge; the minimum is not attained");
    }
  }
  std::ostringstream msg;
  msg << "Newton minimization of " << m.name() << " loss did not converge in "
      << opts.max_iterations << " iterations";
  fail(ErrorCode::divergence, msg.str());
}

}  // namespace epsode
