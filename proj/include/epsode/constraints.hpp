#pragma once

#include <optional>
#include <string>
#include <vector>

#include "epsode/types.hpp"

namespace epsode {

/// Penalty geometry rho * ||V b - d||_1 + rho * ||W b - e||_+.
///
/// Equality rows (V, d) are penalized in absolute value, inequality rows
/// (W, e) in positive part, so every scheme is normalized to W b <= e.
class ConstraintSystem {
 public:
  ConstraintSystem() = default;
  explicit ConstraintSystem(Index params);
  ConstraintSystem(Matrix v, Vector d, Matrix w, Vector e);

  Index params() const { return params_; }
  Index equalities() const { return v_.rows(); }
  Index inequalities() const { return w_.rows(); }
  Index rows() const { return equalities() + inequalities(); }

  const Matrix& v() const { return v_; }
  const Vector& d() const { return d_; }
  const Matrix& w() const { return w_; }
  const Vector& e() const { return e_; }

  // All rows stacked, equality rows first.
  Matrix stacked() const;
  Vector stacked_offsets() const;
  // Row k of the stacked system (k < equalities() is an equality row).
  Eigen::RowVectorXd row(Index k) const;

  Vector equality_residuals(const Vector& b) const { return v_ * b - d_; }
  Vector inequality_residuals(const Vector& b) const { return w_ * b - e_; }
  // ||V b - d||_1 + ||W b - e||_+ (the penalty at rho = 1).
  double penalty(const Vector& b) const;

 private:
  Index params_ = 0;
  Matrix v_;
  Vector d_;
  Matrix w_;
  Vector e_;
};

enum class Monotone { nondecreasing, nonincreasing };
enum class Shape { convex, concave };

ConstraintSystem lasso(Index p);
ConstraintSystem fused_lasso(Index p);
/// (order + 1)-th differences; for order >= 2 one lower-order boundary row
/// is added at each end (second differences for the cubic case).
ConstraintSystem trend_filter(Index p, int order);
ConstraintSystem isotone(Index p, Monotone direction);
ConstraintSystem shape(Index p, Shape kind, std::optional<Vector> grid = std::nullopt);
ConstraintSystem nonnegative(Index p);

struct GraphEdge {
  Index i;
  Index j;
  double correlation;
};

/// Graph-guided fused lasso with a fixed ratio lambda_G / lambda_L: one row
/// per edge, ratio * (b_i / sqrt(d_i) - sgn(r_ij) b_j / sqrt(d_j)), followed by
/// the identity rows of the lasso part.
ConstraintSystem graph_guided(Index p, const std::vector<GraphEdge>& edges,
                              const Vector& degrees, double ratio);

/// Lasso on the off-diagonal entries of a precision matrix parameterized as
/// in GgmLoss.
ConstraintSystem ggm_offdiagonal(Index nodes);

struct Block {
  ConstraintSystem system;
  Index offset = 0;
  double weight = 1.0;
};

/// Block-diagonal assembly over a parameter vector of length p. Blocks may
/// leave parameters unpenalized but must not overlap.
ConstraintSystem concat(const std::vector<Block>& blocks, Index p);

}  // namespace epsode
