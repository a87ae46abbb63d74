#pragma once

#include <memory>
#include <span>
#include <string>

#include "epsode/types.hpp"

namespace epsode {

/// Smooth convex loss f with derivatives up to third order.
///
/// The third derivative is only exposed through its action along a
/// direction: dh_action(x, v) = d/dt H(x + t v) at t = 0, a symmetric p x p
/// matrix. Implementations are immutable and safe to evaluate concurrently.
class LossModel {
 public:
  virtual ~LossModel() = default;

  virtual Index dim() const = 0;
  virtual std::string name() const = 0;

  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual SymMatrix hessian(const Vector& x) const = 0;
  virtual SymMatrix dh_action(const Vector& x, const Vector& v) const = 0;

  virtual bool strictly_convex() const { return true; }
  // False outside the effective domain (e.g. an indefinite precision matrix).
  virtual bool in_domain(const Vector& /*x*/) const { return true; }
  // Starting point for the Newton minimizer.
  virtual Vector initial_point() const { return Vector::Zero(dim()); }

  // Negative log-likelihood used by AIC/BIC; defaults to the loss itself.
  virtual double negative_loglik(const Vector& x) const { return value(x); }
  // Sample size entering BIC.
  virtual double sample_size() const { return 1.0; }
  // True when df = p - |Z| is only a heuristic for this loss.
  virtual bool df_is_heuristic() const { return false; }

  // Observation-level splitting for cross validation. A loss that cannot be
  // split reports zero observations.
  virtual Index observations() const { return 0; }
  virtual std::unique_ptr<LossModel> restrict_to(std::span<const Index> rows) const;
};

struct NewtonOptions {
  int max_iterations = 200;
  double armijo_slope = 1e-4;
  double backtrack = 0.5;
  double gradient_tol = 1e-9;
};

/// Damped Newton minimization of f from m.initial_point(). Converged when
/// ||grad f||_inf < gradient_tol * (1 + |f|). Throws ErrorCode::divergence.
Vector unconstrained_minimum(const LossModel& m, const NewtonOptions& opts = {});
Vector unconstrained_minimum(const LossModel& m, Vector start, const NewtonOptions& opts = {});

}  // namespace epsode
