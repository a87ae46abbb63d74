#include "epsode/constraints.hpp"

#include <cmath>
#include <sstream>

#include "epsode/error.hpp"
#include "epsode/losses.hpp"

namespace epsode {

namespace {

void check_rows(const Matrix& m, const char* what) {
  for (Index i = 0; i < m.rows(); ++i) {
    if ((m.row(i).array() == 0.0).all()) {
      std::ostringstream msg;
      msg << what << " row " << i << " is all zero";
      fail(ErrorCode::invalid_argument, msg.str());
    }
  }
}

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

// Forward difference stencil of the given order: (-1)^(order - i) C(order, i).
Eigen::RowVectorXd difference_stencil(int order) {
  Eigen::RowVectorXd s(order + 1);
  for (int i = 0; i <= order; ++i) {
    s(i) = ((order - i) % 2 == 0 ? 1.0 : -1.0) * binomial(order, i);
  }
  return s;
}

}  // namespace

ConstraintSystem::ConstraintSystem(Index params)
    : params_(params), v_(0, params), d_(0), w_(0, params), e_(0) {}

ConstraintSystem::ConstraintSystem(Matrix v, Vector d, Matrix w, Vector e)
    : v_(std::move(v)), d_(std::move(d)), w_(std::move(w)), e_(std::move(e)) {
  params_ = v_.rows() > 0 ? v_.cols() : w_.cols();
  if (v_.rows() == 0) v_.resize(0, params_);
  if (w_.rows() == 0) w_.resize(0, params_);
  if (v_.cols() != params_ || w_.cols() != params_) {
    fail(ErrorCode::invalid_argument, "V and W must have the same column count");
  }
  if (d_.size() != v_.rows() || e_.size() != w_.rows()) {
    fail(ErrorCode::invalid_argument, "offset length does not match row count");
  }
  if (!v_.allFinite() || !w_.allFinite() || !d_.allFinite() || !e_.allFinite()) {
    fail(ErrorCode::invalid_argument, "non-finite constraint entries");
  }
  check_rows(v_, "V");
  check_rows(w_, "W");
}

Matrix ConstraintSystem::stacked() const {
  Matrix u(rows(), params_);
  u << v_, w_;
  return u;
}

Vector ConstraintSystem::stacked_offsets() const {
  Vector c(rows());
  c << d_, e_;
  return c;
}

Eigen::RowVectorXd ConstraintSystem::row(Index k) const {
  return k < equalities() ? Eigen::RowVectorXd(v_.row(k)) : Eigen::RowVectorXd(w_.row(k - equalities()));
}

double ConstraintSystem::penalty(const Vector& b) const {
  return equality_residuals(b).lpNorm<1>() + inequality_residuals(b).cwiseMax(0.0).sum();
}

ConstraintSystem lasso(Index p) {
  if (p < 1) fail(ErrorCode::dimension_too_small, "lasso needs p >= 1");
  return {Matrix::Identity(p, p), Vector::Zero(p), Matrix(0, p), Vector(0)};
}

ConstraintSystem fused_lasso(Index p) {
  if (p < 2) fail(ErrorCode::dimension_too_small, "fused lasso needs p >= 2");
  return trend_filter(p, 0);
}

ConstraintSystem trend_filter(Index p, int order) {
  if (order < 0) fail(ErrorCode::invalid_argument, "trend filter order must be nonnegative");
  if (p < order + 2) {
    std::ostringstream msg;
    msg << "trend filter of order " << order << " needs p >= " << order + 2;
    fail(ErrorCode::dimension_too_small, msg.str());
  }
  const Eigen::RowVectorXd interior = difference_stencil(order + 1);
  const Index n_interior = p - order - 1;
  const int boundary_order = order >= 2 ? (order + 2) / 2 : 0;
  const Index n_rows = n_interior + (boundary_order > 0 ? 2 : 0);
  Matrix v = Matrix::Zero(n_rows, p);
  Index row = 0;
  if (boundary_order > 0) {
    const Eigen::RowVectorXd edge = -difference_stencil(boundary_order);
    v.block(row++, 0, 1, edge.size()) = edge;
    for (Index i = 0; i < n_interior; ++i) v.block(row++, i, 1, interior.size()) = interior;
    v.block(row++, p - edge.size(), 1, edge.size()) = edge;
  } else {
    for (Index i = 0; i < n_interior; ++i) v.block(row++, i, 1, interior.size()) = interior;
  }
  return {v, Vector::Zero(n_rows), Matrix(0, p), Vector(0)};
}

ConstraintSystem isotone(Index p, Monotone direction) {
  if (p < 2) fail(ErrorCode::dimension_too_small, "isotone constraints need p >= 2");
  Matrix w = Matrix::Zero(p - 1, p);
  const double sign = direction == Monotone::nondecreasing ? 1.0 : -1.0;
  for (Index i = 0; i + 1 < p; ++i) {
    w(i, i) = sign;
    w(i, i + 1) = -sign;
  }
  return {Matrix(0, p), Vector(0), w, Vector::Zero(p - 1)};
}

ConstraintSystem shape(Index p, Shape kind, std::optional<Vector> grid) {
  if (p < 3) fail(ErrorCode::dimension_too_small, "shape constraints need p >= 3");
  if (grid) {
    if (grid->size() != p) fail(ErrorCode::invalid_argument, "shape grid length must equal p");
    for (Index i = 0; i + 1 < p; ++i) {
      if (!((*grid)(i + 1) > (*grid)(i))) {
        fail(ErrorCode::non_increasing_grid, "shape grid must be strictly increasing");
      }
    }
  }
  // Concave rows: slope(i+1, i+2) - slope(i, i+1) <= 0.
  Matrix w = Matrix::Zero(p - 2, p);
  for (Index i = 0; i + 2 < p; ++i) {
    const double left = grid ? 1.0 / ((*grid)(i + 1) - (*grid)(i)) : 1.0;
    const double right = grid ? 1.0 / ((*grid)(i + 2) - (*grid)(i + 1)) : 1.0;
    w(i, i) = left;
    w(i, i + 1) = -left - right;
    w(i, i + 2) = right;
  }
  if (kind == Shape::convex) w = -w;
  return {Matrix(0, p), Vector(0), w, Vector::Zero(p - 2)};
}

ConstraintSystem nonnegative(Index p) {
  if (p < 1) fail(ErrorCode::dimension_too_small, "nonnegativity needs p >= 1");
  return {Matrix(0, p), Vector(0), -Matrix::Identity(p, p), Vector::Zero(p)};
}

ConstraintSystem graph_guided(Index p, const std::vector<GraphEdge>& edges,
                              const Vector& degrees, double ratio) {
  if (p < 1) fail(ErrorCode::dimension_too_small, "graph penalty needs p >= 1");
  if (!(ratio > 0)) fail(ErrorCode::invalid_argument, "graph penalty ratio must be positive");
  if (!edges.empty() && degrees.size() != p) {
    fail(ErrorCode::invalid_argument, "one degree per node is required");
  }
  const auto n_edges = static_cast<Index>(edges.size());
  Matrix v = Matrix::Zero(n_edges + p, p);
  for (Index k = 0; k < n_edges; ++k) {
    const auto& edge = edges[static_cast<std::size_t>(k)];
    std::ostringstream where;
    where << "edge (" << edge.i << ", " << edge.j << ")";
    if (edge.i < 0 || edge.j < 0 || edge.i >= p || edge.j >= p || edge.i == edge.j) {
      fail(ErrorCode::invalid_edge, where.str() + " has invalid endpoints");
    }
    if (!std::isfinite(edge.correlation)) {
      fail(ErrorCode::invalid_edge, where.str() + " has a non-finite correlation");
    }
    if (!(degrees(edge.i) > 0) || !(degrees(edge.j) > 0)) {
      fail(ErrorCode::invalid_edge, where.str() + " touches a node with nonpositive degree");
    }
    const double sgn = edge.correlation > 0 ? 1.0 : (edge.correlation < 0 ? -1.0 : 0.0);
    v(k, edge.i) = ratio / std::sqrt(degrees(edge.i));
    v(k, edge.j) = -ratio * sgn / std::sqrt(degrees(edge.j));
  }
  v.bottomRows(p) = Matrix::Identity(p, p);
  return {v, Vector::Zero(n_edges + p), Matrix(0, p), Vector(0)};
}

ConstraintSystem ggm_offdiagonal(Index nodes) {
  if (nodes < 2) fail(ErrorCode::dimension_too_small, "graphical lasso needs at least two nodes");
  const Index q = GgmLoss::param_count(nodes);
  const Index pairs = nodes * (nodes - 1) / 2;
  Matrix v = Matrix::Zero(pairs, q);
  Index row = 0;
  for (Index j = 0; j < nodes; ++j) {
    for (Index i = j + 1; i < nodes; ++i) v(row++, GgmLoss::param_index(nodes, i, j)) = 1.0;
  }
  return {v, Vector::Zero(pairs), Matrix(0, q), Vector(0)};
}

ConstraintSystem concat(const std::vector<Block>& blocks, Index p) {
  std::vector<int> owner(static_cast<std::size_t>(p), -1);
  Index eq_rows = 0, ineq_rows = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& blk = blocks[b];
    if (blk.offset < 0 || blk.offset + blk.system.params() > p) {
      fail(ErrorCode::overlap, "block extends beyond the parameter vector");
    }
    if (!(blk.weight > 0)) fail(ErrorCode::invalid_argument, "block weight must be positive");
    for (Index k = 0; k < blk.system.params(); ++k) {
      auto& o = owner[static_cast<std::size_t>(blk.offset + k)];
      if (o >= 0) {
        std::ostringstream msg;
        msg << "parameter " << blk.offset + k << " is claimed by blocks " << o << " and " << b;
        fail(ErrorCode::overlap, msg.str());
      }
      o = static_cast<int>(b);
    }
    eq_rows += blk.system.equalities();
    ineq_rows += blk.system.inequalities();
  }
  Matrix v = Matrix::Zero(eq_rows, p);
  Vector d(eq_rows);
  Matrix w = Matrix::Zero(ineq_rows, p);
  Vector e(ineq_rows);
  Index er = 0, ir = 0;
  for (const auto& blk : blocks) {
    const auto& s = blk.system;
    v.block(er, blk.offset, s.equalities(), s.params()) = blk.weight * s.v();
    d.segment(er, s.equalities()) = blk.weight * s.d();
    w.block(ir, blk.offset, s.inequalities(), s.params()) = blk.weight * s.w();
    e.segment(ir, s.inequalities()) = blk.weight * s.e();
    er += s.equalities();
    ir += s.inequalities();
  }
  if (eq_rows == 0 && ineq_rows == 0) return ConstraintSystem(p);
  ConstraintSystem out(v, d, w, e);
  return out;
}

}  // namespace epsode
