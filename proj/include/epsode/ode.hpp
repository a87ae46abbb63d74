#pragma once

#include <functional>
#include <vector>

#include "epsode/types.hpp"

namespace epsode {

struct OdeOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  // |g_k(t*, y(t*))| target for located events.
  double event_tol = 1e-9;
  // Width of the event bracket in t.
  double event_time_tol = 1e-10;
  // Gaps within this distance of zero at t0 are not armed.
  double dead_band = 1e-12;
  // Events located within this window of the earliest one are reported together.
  double simultaneous_window = 1e-10;
  // <= 0 selects |t_max - t0| / 10.
  double max_step = 0.0;
  long max_steps = 1000000;
};

/// dy/dt = rhs(t, y) with a vector of gap functions. An event fires when a
/// gap that was positive crosses zero; gaps start armed only if they exceed
/// the dead band at t0 and become armed once they do.
struct IvpProblem {
  std::function<Vector(double, const Vector&)> rhs;
  std::function<Vector(double, const Vector&)> gaps;  // may be empty
  double t0 = 0.0;
  double t_max = 1.0;  // may be below t0 for backward integration
  Vector y0;
};

/// One accepted Dormand-Prince step with its continuous extension.
struct StepResult {
  double t0 = 0.0;
  double h = 0.0;
  double error = 0.0;  // scaled error norm, <= 1
  Vector y0;
  Vector y1;
  // Dense output coefficients.
  Vector c2, c3, c4, c5;

  double t1() const { return t0 + h; }
  Vector at(double t) const;
  // Leading `n` components only.
  Vector head_at(double t, Index n) const;
};

struct IntegrationResult {
  std::vector<StepResult> trajectory;
  double t = 0.0;
  Vector y;
  bool reached_t_max = false;
  // Gap indices firing at t (ascending); empty when t_max was reached.
  std::vector<Index> events;
  // More than one gap located within the simultaneous window.
  bool simultaneous = false;
  long rhs_evaluations = 0;
  long rejected_steps = 0;
};

/// Adaptive Dormand-Prince 5(4) integration with event location.
///
/// rhs may throw Error with ErrorCode::domain_error for trial states; the
/// step is then rejected and shortened. Throws ErrorCode::step_size_underflow
/// and ErrorCode::non_finite_derivative.
IntegrationResult integrate(const IvpProblem& problem, const OdeOptions& opts = {});

}  // namespace epsode
