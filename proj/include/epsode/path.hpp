#pragma once

#include <optional>
#include <string>
#include <vector>

#include "epsode/constraints.hpp"
#include "epsode/loss.hpp"
#include "epsode/ode.hpp"
#include "epsode/sweep.hpp"

namespace epsode {

enum class RowSet : unsigned char { negative, zero, positive };

/// Sign pattern of the constraint residuals: N/Z/P for equality rows and for
/// inequality rows. Stacked row indices put equality rows first.
struct SetConfiguration {
  std::vector<RowSet> eq;
  std::vector<RowSet> ineq;

  Index equalities() const { return static_cast<Index>(eq.size()); }
  Index rows() const { return static_cast<Index>(eq.size() + ineq.size()); }
  RowSet at(Index row) const;
  void set(Index row, RowSet s);
  bool is_equality(Index row) const { return row < equalities(); }

  // Stacked indices of Z_E followed by Z_I, ascending.
  std::vector<Index> active() const;
  Index active_count() const;
  // N_E, P_E and P_I all empty.
  bool terminal() const;

  bool operator==(const SetConfiguration&) const = default;
};

SetConfiguration classify(const Vector& residuals_eq, const Vector& residuals_ineq, double tol);

// 1e-8 * (1 + ||d||_inf + ||e||_inf)
double default_residual_tol(const ConstraintSystem& cs);

/// u = -sum_{N_E} v_i + sum_{P_E} v_i + sum_{P_I} w_j.
Vector penalty_direction(const ConstraintSystem& cs, const SetConfiguration& cfg);
/// Active rows U_Z in SetConfiguration::active() order.
Matrix active_matrix(const ConstraintSystem& cs, const SetConfiguration& cfg);

/// -P(beta) u. Throws ErrorCode::not_strictly_convex when H(beta) is not
/// positive definite and ErrorCode::rank_deficient_active_set.
Vector segment_rhs_direct(const LossModel& m, const ConstraintSystem& cs,
                          const SetConfiguration& cfg, const Vector& beta);

/// -Y (Y' H Y)^-1 Y' u for a basis Y of the null space of the active rows.
/// Throws ErrorCode::reduced_hessian_singular.
Vector segment_rhs_nullspace(const LossModel& m, const ConstraintSystem& cs,
                             const SetConfiguration& cfg, const Vector& beta,
                             const NullBasis& basis);

struct ActiveCoefficients {
  std::vector<Index> rows;  // stacked indices, as SetConfiguration::active()
  Vector values;            // r_Z
  Vector s;                 // equality part, in [-1, 1]
  Vector t;                 // inequality part, in [0, 1]
};

/// r_Z = -Q(beta)' [grad f(beta) / rho + u]. For rho below 1e-12 the
/// gradient term is dropped (its limit vanishes along the path).
ActiveCoefficients active_coefficients(const LossModel& m, const ConstraintSystem& cs,
                                       const SetConfiguration& cfg, const Vector& beta,
                                       double rho);

/// Same coefficients from a least-squares solve of the stationarity system
/// U_Z' r = -(grad f / rho + u); needs no Hessian inverse.
ActiveCoefficients active_coefficients_lsq(const LossModel& m, const ConstraintSystem& cs,
                                           const SetConfiguration& cfg, const Vector& beta,
                                           double rho);

/// Derivative of the swept tableau along the path: F G F' with F the first
/// p columns of the tableau and G = DH(beta)[P u].
SymMatrix tableau_mode_step(const SweepTableau& t, const LossModel& m, const Vector& u,
                            const Vector& beta);

Index degrees_of_freedom(const SetConfiguration& cfg, Index p);

struct InformationCriteria {
  double aic;
  double bic;
};

/// aic = -l + df, bic = -l + (log n / 2) df, with neg_loglik = -l.
InformationCriteria information_criteria(double neg_loglik, Index df, double n);

enum class OdeMode { direct, nullspace, tableau };
enum class Direction { forward, backward };
enum class PathStatus { terminated, rho_max, reached_zero };

const char* to_string(OdeMode mode);
const char* to_string(Direction direction);
const char* to_string(PathStatus status);

struct PathOptions {
  OdeMode mode = OdeMode::direct;
  Direction direction = Direction::forward;
  double rho_max = 1e6;
  OdeOptions ode;
  double residual_tol = -1.0;  // < 0 selects default_residual_tol
  double coefficient_tol = 1e-9;
  // ||beta||_inf beyond this aborts with ErrorCode::divergence.
  double beta_bound = 1e10;
  long max_events = 100000;
  // Backward mode: fully regularized solution; computed when absent.
  std::optional<Vector> start;
  NewtonOptions newton;
};

struct Transition {
  Index row;  // stacked index
  RowSet from;
  RowSet to;
};

struct Kink {
  double rho;
  Vector beta;
  Transition transition;
  Index df_before;
  Index df_after;
  bool simultaneous;
};

struct PathSegment {
  double rho_a;
  double rho_b;
  SetConfiguration config;
  OdeMode mode;
  Vector beta_a;
  Vector beta_b;
  // Accepted ODE steps restricted to the p coefficients.
  std::vector<StepResult> steps;
};

class PathSolution {
 public:
  Index params() const { return params_; }
  Direction direction() const { return direction_; }
  OdeMode mode() const { return mode_; }
  PathStatus status() const { return status_; }
  double rho_start() const { return rho_start_; }
  double rho_end() const { return rho_end_; }

  const std::vector<PathSegment>& segments() const { return segments_; }
  const std::vector<Kink>& kinks() const { return kinks_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  bool df_heuristic() const { return df_heuristic_; }

  /// beta(rho); constant beyond the terminal end of the path.
  Vector beta_at(double rho) const;
  const SetConfiguration& config_at(double rho) const;
  Index df_at(double rho) const { return degrees_of_freedom(config_at(rho), params_); }

  /// Endpoints, every kink and a uniform grid of `intervals` steps, in path
  /// order without duplicates.
  std::vector<double> sample_grid(int intervals = 20) const;

 private:
  friend class PathBuilder;

  const PathSegment& segment_at(double rho) const;

  Index params_ = 0;
  Direction direction_ = Direction::forward;
  OdeMode mode_ = OdeMode::direct;
  PathStatus status_ = PathStatus::terminated;
  double rho_start_ = 0.0;
  double rho_end_ = 0.0;
  bool df_heuristic_ = false;
  std::vector<PathSegment> segments_;
  std::vector<Kink> kinks_;
  std::vector<std::string> warnings_;
};

/// Traces the solution path of min f(b) + rho ||V b - d||_1 + rho ||W b - e||_+.
PathSolution run_path(const LossModel& m, const ConstraintSystem& cs, const PathOptions& opts = {});

/// Minimizer of f subject to V b = d (the rho -> infinity limit without
/// inequality rows). Throws ErrorCode::invalid_argument for inconsistent rows.
Vector equality_constrained_minimum(const LossModel& m, const ConstraintSystem& cs,
                                    const NewtonOptions& opts = {});

}  // namespace epsode
