#include "epsode/sweep.hpp"

#include <cmath>
#include <sstream>

#include "epsode/error.hpp"

namespace epsode {

namespace {

double pivot_scale(const SymMatrix& a, double scale) {
  return scale >= 0.0 ? scale : a.cwiseAbs().maxCoeff();
}

void check_pivot(const SymMatrix& a, Index k, double scale) {
  if (k < 0 || k >= a.rows()) {
    fail(ErrorCode::invalid_argument, "sweep index out of range");
  }
  const double pivot = a(k, k);
  if (!(std::abs(pivot) > kPivotTolerance * (1.0 + pivot_scale(a, scale)))) {
    std::ostringstream msg;
    msg << "pivot " << pivot << " at diagonal " << k
        << " is too small (linearly dependent active constraints?)";
    fail(ErrorCode::pivot_too_small, msg.str());
  }
}

// sign = +1 for sweep, -1 for inverse sweep.
void apply(SymMatrix& a, Index k, double scale, double sign) {
  check_pivot(a, k, scale);
  const Index n = a.rows();
  const double pivot = a(k, k);
  const Vector col = a.col(k);
  for (Index j = 0; j < n; ++j) {
    if (j == k) continue;
    for (Index i = j; i < n; ++i) {
      if (i == k) continue;
      const double v = a(i, j) - col(i) * col(j) / pivot;
      a(i, j) = v;
      a(j, i) = v;
    }
  }
  for (Index i = 0; i < n; ++i) {
    if (i == k) continue;
    a(i, k) = sign * col(i) / pivot;
    a(k, i) = a(i, k);
  }
  a(k, k) = -1.0 / pivot;
}

}  // namespace

void sweep_in_place(SymMatrix& a, Index k, double scale) { apply(a, k, scale, 1.0); }

void inverse_sweep_in_place(SymMatrix& a, Index k, double scale) {
  apply(a, k, scale, -1.0);
}

SymMatrix sweep(const SymMatrix& a, Index k, double scale) {
  SymMatrix out = a;
  sweep_in_place(out, k, scale);
  return out;
}

SymMatrix inverse_sweep(const SymMatrix& a, Index k, double scale) {
  SymMatrix out = a;
  inverse_sweep_in_place(out, k, scale);
  return out;
}

KktBlocks kkt_blocks(const SymMatrix& h_inv, const Matrix& u_active) {
  const Index p = h_inv.rows();
  if (u_active.rows() == 0) {
    return {h_inv, Matrix(p, 0), Matrix(0, 0)};
  }
  if (u_active.cols() != p) {
    fail(ErrorCode::invalid_argument, "active constraint matrix has wrong column count");
  }
  const Matrix hu = h_inv * u_active.transpose();  // H^-1 U'
  const SymMatrix m = u_active * hu;
  // Rank test on the Jacobi-scaled U H^-1 U'.
  const Vector diag = m.diagonal();
  bool independent = diag.minCoeff() > 0 && diag.allFinite();
  if (independent) {
    const Vector s = diag.cwiseSqrt().cwiseInverse();
    Eigen::LLT<Matrix> scaled(s.asDiagonal() * m * s.asDiagonal());
    independent = scaled.info() == Eigen::Success && scaled.matrixLLT().diagonal().minCoeff() > 1e-7;
  }
  if (!independent) {
    fail(ErrorCode::rank_deficient_active_set,
         "active constraint rows are linearly dependent");
  }
  Eigen::LDLT<Matrix> ldlt(m);
  const Matrix m_inv = ldlt.solve(Matrix::Identity(m.rows(), m.cols()));
  KktBlocks out;
  out.q = hu * m_inv;
  out.r = -m_inv;
  out.p = h_inv - out.q * hu.transpose();
  out.p = 0.5 * (out.p + out.p.transpose());

  const double residual = (out.p * u_active.transpose()).norm();
  if (residual > 1e-6 * h_inv.norm() * u_active.norm()) {
    fail(ErrorCode::rank_deficient_active_set,
         "projected inverse does not annihilate the active rows");
  }
  return out;
}

NullBasis::NullBasis(Matrix active_matrix) : active_(std::move(active_matrix)) {
  const Index p = active_.cols();
  if (active_.rows() == 0) {
    basis_ = Matrix::Identity(p, p);
    return;
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(active_.transpose());
  qr.setThreshold(1e-12);
  rank_ = qr.rank();
  const Matrix q = qr.householderQ() * Matrix::Identity(p, p);
  basis_ = q.rightCols(p - rank_);
}

NullBasis null_basis(const Matrix& u_active) { return NullBasis(u_active); }

SweepTableau::SweepTableau(const SymMatrix& h_inv, const Matrix& u_all)
    : params_(h_inv.rows()),
      constraints_(u_all.rows()),
      table_(params_ + constraints_, params_ + constraints_),
      swept_(static_cast<std::size_t>(constraints_), false) {
  if (constraints_ > 0 && u_all.cols() != params_) {
    fail(ErrorCode::invalid_argument, "constraint matrix has wrong column count");
  }
  Matrix border(params_ + constraints_, params_);
  border.topRows(params_) = Matrix::Identity(params_, params_);
  if (constraints_ > 0) border.bottomRows(constraints_) = u_all;
  table_ = border * h_inv * border.transpose();
  table_ = 0.5 * (table_ + table_.transpose());
  scale_.resize(static_cast<std::size_t>(constraints_));
  for (Index k = 0; k < constraints_; ++k) {
    scale_[static_cast<std::size_t>(k)] = std::abs(table_(params_ + k, params_ + k));
  }
}

std::vector<Index> SweepTableau::active() const {
  std::vector<Index> out;
  for (Index k = 0; k < constraints_; ++k) {
    if (swept(k)) out.push_back(k);
  }
  return out;
}

void SweepTableau::set_matrix(SymMatrix table) {
  if (table.rows() != table_.rows() || table.cols() != table_.cols()) {
    fail(ErrorCode::invalid_argument, "tableau size mismatch");
  }
  table_ = std::move(table);
}

void SweepTableau::update(Index constraint, bool activate) {
  if (constraint < 0 || constraint >= constraints_) {
    fail(ErrorCode::invalid_argument, "tableau constraint index out of range");
  }
  const auto slot = static_cast<std::size_t>(constraint);
  if (swept_[slot] == activate) {
    fail(ErrorCode::invalid_argument,
         activate ? "constraint is already swept" : "constraint is not swept");
  }
  const Index k = params_ + constraint;
  if (activate) {
    sweep_in_place(table_, k, scale_[slot]);
  } else {
    inverse_sweep_in_place(table_, k, scale_[slot]);
  }
  swept_[slot] = activate;
}

Matrix SweepTableau::p_block() const { return table_.topLeftCorner(params_, params_); }

Matrix SweepTableau::q_block() const {
  const auto act = active();
  Matrix q(params_, static_cast<Index>(act.size()));
  for (std::size_t c = 0; c < act.size(); ++c) {
    q.col(static_cast<Index>(c)) = table_.block(0, params_ + act[c], params_, 1);
  }
  return q;
}

Matrix SweepTableau::r_block() const {
  const auto act = active();
  const auto z = static_cast<Index>(act.size());
  Matrix r(z, z);
  for (Index i = 0; i < z; ++i) {
    for (Index j = 0; j < z; ++j) {
      r(i, j) = table_(params_ + act[static_cast<std::size_t>(i)],
                       params_ + act[static_cast<std::size_t>(j)]);
    }
  }
  return r;
}

SweepTableau tableau_sweep_update(SweepTableau t, Index constraint, bool activate) {
  t.update(constraint, activate);
  return t;
}

}  // namespace epsode
