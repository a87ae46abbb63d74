#include "epsode/path.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "epsode/error.hpp"
#include "epsode/log.hpp"

namespace epsode {

namespace {

constexpr double kRhoFloor = 1e-12;

// Cholesky of the Jacobi-scaled matrix, so that losses whose curvature
// varies over many orders of magnitude are not mistaken for singular ones.
bool scaled_positive_definite(const SymMatrix& h) {
  const Vector d = h.diagonal();
  if (!(d.minCoeff() > 0) || !d.allFinite()) return false;
  const Vector s = d.cwiseSqrt().cwiseInverse();
  Eigen::LLT<Matrix> llt(s.asDiagonal() * h * s.asDiagonal());
  return llt.info() == Eigen::Success && llt.matrixLLT().diagonal().minCoeff() > 1e-7;
}

SymMatrix hessian_inverse(const LossModel& m, const Vector& beta) {
  const SymMatrix h = m.hessian(beta);
  if (!scaled_positive_definite(h)) {
    fail(ErrorCode::not_strictly_convex, "Hessian is not positive definite");
  }
  Eigen::LLT<Matrix> llt(h);
  const Index p = h.rows();
  SymMatrix inv = llt.solve(Matrix::Identity(p, p));
  return 0.5 * (inv + inv.transpose());
}

Vector stationarity_target(const LossModel& m, const Vector& u, const Vector& beta, double rho) {
  if (rho < kRhoFloor) return u;
  return m.gradient(beta) / rho + u;
}

ActiveCoefficients pack(const SetConfiguration& cfg, Vector values) {
  ActiveCoefficients out;
  out.rows = cfg.active();
  out.values = std::move(values);
  Index n_eq = 0;
  for (Index r : out.rows) n_eq += cfg.is_equality(r) ? 1 : 0;
  out.s = out.values.head(n_eq);
  out.t = out.values.tail(out.values.size() - n_eq);
  return out;
}

Vector lsq_coefficients(const Matrix& uz, const Vector& target) {
  if (uz.rows() == 0) return Vector(0);
  return -uz.transpose().colPivHouseholderQr().solve(target);
}

Vector flatten(const Vector& beta, const SymMatrix& table) {
  Vector y(beta.size() + table.size());
  y.head(beta.size()) = beta;
  y.tail(table.size()) = Eigen::Map<const Vector>(table.data(), table.size());
  return y;
}

SymMatrix unflatten_table(const Vector& y, Index p, Index n) {
  return Eigen::Map<const Matrix>(y.data() + p, n, n);
}

SymMatrix raw_tableau_step(const SymMatrix& table, Index p, const LossModel& m, const Vector& u,
                           const Vector& beta) {
  const Matrix f = table.leftCols(p);
  const Vector v = f.topRows(p) * u;
  const SymMatrix g = m.dh_action(beta, v);
  SymMatrix out = f * g * f.transpose();
  return 0.5 * (out + out.transpose());
}

// Everything that stays fixed along one segment.
struct Segment {
  const LossModel& m;
  const ConstraintSystem& cs;
  SetConfiguration cfg;
  OdeMode mode;
  Index p;
  Vector u;
  Matrix uz;
  Vector cz;  // offsets of the active rows
  std::vector<Index> active;
  std::optional<NullBasis> basis;
  Index table_size = 0;
  double beta_bound;

  Segment(const LossModel& loss, const ConstraintSystem& system, SetConfiguration config,
          OdeMode ode_mode, Index tableau_size, double bound)
      : m(loss), cs(system), cfg(std::move(config)), mode(ode_mode), p(system.params()),
        table_size(tableau_size), beta_bound(bound) {
    u = penalty_direction(cs, cfg);
    uz = active_matrix(cs, cfg);
    active = cfg.active();
    const Vector offsets = cs.stacked_offsets();
    cz.resize(static_cast<Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k) cz(static_cast<Index>(k)) = offsets(active[k]);
    if (mode == OdeMode::nullspace) basis.emplace(uz);
  }

  Vector beta_of(const Vector& y) const { return y.head(p); }

  void check_bound(const Vector& beta) const {
    if (beta.lpNorm<Eigen::Infinity>() > beta_bound) {
      std::ostringstream msg;
      msg << "coefficients exceed " << beta_bound << "; the penalized objective is not coercive";
      fail(ErrorCode::divergence, msg.str());
    }
  }

  Vector rhs(const Vector& y) const {
    const Vector beta = beta_of(y);
    check_bound(beta);
    if (!m.in_domain(beta)) fail(ErrorCode::domain_error, "state left the loss domain");
    switch (mode) {
      case OdeMode::direct: {
        const KktBlocks blocks = kkt_blocks(hessian_inverse(m, beta), uz);
        return -blocks.p * u;
      }
      case OdeMode::nullspace:
        return nullspace_direction(beta);
      case OdeMode::tableau: {
        const SymMatrix table = unflatten_table(y, p, table_size);
        Vector dy(y.size());
        dy.head(p) = -table.topLeftCorner(p, p) * u;
        const SymMatrix dt = raw_tableau_step(table, p, m, u, beta);
        dy.tail(dt.size()) = Eigen::Map<const Vector>(dt.data(), dt.size());
        return dy;
      }
    }
    return {};
  }

  Vector nullspace_direction(const Vector& beta) const {
    const Matrix& y = basis->basis();
    if (y.cols() == 0) return Vector::Zero(p);
    const SymMatrix reduced = y.transpose() * m.hessian(beta) * y;
    if (!scaled_positive_definite(reduced)) {
      fail(ErrorCode::reduced_hessian_singular, "reduced Hessian Y'HY is singular");
    }
    Eigen::LLT<Matrix> llt(reduced);
    return -y * llt.solve(y.transpose() * u);
  }

  // Q(beta) in the order of `active`.
  Matrix q_matrix(const Vector& y) const {
    if (mode == OdeMode::tableau) {
      const SymMatrix table = unflatten_table(y, p, table_size);
      Matrix q(p, static_cast<Index>(active.size()));
      for (std::size_t k = 0; k < active.size(); ++k) {
        q.col(static_cast<Index>(k)) = table.block(0, p + active[k], p, 1);
      }
      return q;
    }
    return kkt_blocks(hessian_inverse(m, beta_of(y)), uz).q;
  }

  Vector coefficients(double rho, const Vector& y) const {
    if (active.empty()) return Vector(0);
    const Vector beta = beta_of(y);
    const Vector target = stationarity_target(m, u, beta, rho);
    if (mode == OdeMode::nullspace) return lsq_coefficients(uz, target);
    return -q_matrix(y).transpose() * target;
  }

  Vector gaps(double rho, const Vector& y) const {
    const Vector beta = beta_of(y);
    const Index rows = cfg.rows();
    Vector g = Vector::Ones(2 * rows);
    const Vector res_eq = cs.equality_residuals(beta);
    const Vector res_in = cs.inequality_residuals(beta);
    const Vector c = coefficients(rho, y);
    Index a = 0;
    for (Index k = 0; k < rows; ++k) {
      const RowSet s = cfg.at(k);
      const bool eq = cfg.is_equality(k);
      if (s == RowSet::zero) {
        const double ck = c(a++);
        g(2 * k) = 1.0 - ck;
        g(2 * k + 1) = eq ? 1.0 + ck : ck;
      } else {
        const double res = eq ? res_eq(k) : res_in(k - cfg.equalities());
        g(2 * k) = s == RowSet::positive ? res : -res;
      }
    }
    return g;
  }

  // Moves beta back onto {U_Z b = c_Z} after an event.
  Vector project(const Vector& y) const {
    if (active.empty()) return y;
    Vector out = y;
    const Vector beta = beta_of(y);
    const Vector res = uz * beta - cz;
    if (mode == OdeMode::nullspace) {
      out.head(p) -= uz.completeOrthogonalDecomposition().solve(res);
    } else {
      out.head(p) -= q_matrix(y) * res;
    }
    return out;
  }
};

}  // namespace

RowSet SetConfiguration::at(Index row) const {
  return row < equalities() ? eq[static_cast<std::size_t>(row)]
                            : ineq[static_cast<std::size_t>(row - equalities())];
}

void SetConfiguration::set(Index row, RowSet s) {
  if (row < equalities()) {
    eq[static_cast<std::size_t>(row)] = s;
  } else {
    ineq[static_cast<std::size_t>(row - equalities())] = s;
  }
}

std::vector<Index> SetConfiguration::active() const {
  std::vector<Index> out;
  for (Index k = 0; k < rows(); ++k) {
    if (at(k) == RowSet::zero) out.push_back(k);
  }
  return out;
}

Index SetConfiguration::active_count() const {
  return static_cast<Index>(std::count(eq.begin(), eq.end(), RowSet::zero) +
                            std::count(ineq.begin(), ineq.end(), RowSet::zero));
}

bool SetConfiguration::terminal() const {
  return std::none_of(eq.begin(), eq.end(), [](RowSet s) { return s != RowSet::zero; }) &&
         std::none_of(ineq.begin(), ineq.end(), [](RowSet s) { return s == RowSet::positive; });
}

SetConfiguration classify(const Vector& residuals_eq, const Vector& residuals_ineq, double tol) {
  auto sign_of = [tol](double r) {
    if (std::abs(r) <= tol) return RowSet::zero;
    return r < 0 ? RowSet::negative : RowSet::positive;
  };
  SetConfiguration cfg;
  for (Index i = 0; i < residuals_eq.size(); ++i) cfg.eq.push_back(sign_of(residuals_eq(i)));
  for (Index j = 0; j < residuals_ineq.size(); ++j) cfg.ineq.push_back(sign_of(residuals_ineq(j)));
  return cfg;
}

double default_residual_tol(const ConstraintSystem& cs) {
  const double d = cs.d().size() ? cs.d().lpNorm<Eigen::Infinity>() : 0.0;
  const double e = cs.e().size() ? cs.e().lpNorm<Eigen::Infinity>() : 0.0;
  return 1e-8 * (1.0 + d + e);
}

Vector penalty_direction(const ConstraintSystem& cs, const SetConfiguration& cfg) {
  Vector u = Vector::Zero(cs.params());
  for (Index i = 0; i < cs.equalities(); ++i) {
    const RowSet s = cfg.eq[static_cast<std::size_t>(i)];
    if (s == RowSet::positive) u += cs.v().row(i).transpose();
    if (s == RowSet::negative) u -= cs.v().row(i).transpose();
  }
  for (Index j = 0; j < cs.inequalities(); ++j) {
    if (cfg.ineq[static_cast<std::size_t>(j)] == RowSet::positive) u += cs.w().row(j).transpose();
  }
  return u;
}

Matrix active_matrix(const ConstraintSystem& cs, const SetConfiguration& cfg) {
  const auto rows = cfg.active();
  Matrix uz(static_cast<Index>(rows.size()), cs.params());
  for (std::size_t k = 0; k < rows.size(); ++k) uz.row(static_cast<Index>(k)) = cs.row(rows[k]);
  return uz;
}

Vector segment_rhs_direct(const LossModel& m, const ConstraintSystem& cs,
                          const SetConfiguration& cfg, const Vector& beta) {
  const KktBlocks blocks = kkt_blocks(hessian_inverse(m, beta), active_matrix(cs, cfg));
  return -blocks.p * penalty_direction(cs, cfg);
}

Vector segment_rhs_nullspace(const LossModel& m, const ConstraintSystem& cs,
                             const SetConfiguration& cfg, const Vector& beta,
                             const NullBasis& basis) {
  Segment seg(m, cs, cfg, OdeMode::direct, 0, std::numeric_limits<double>::infinity());
  seg.basis.emplace(basis);
  return seg.nullspace_direction(beta);
}

ActiveCoefficients active_coefficients(const LossModel& m, const ConstraintSystem& cs,
                                       const SetConfiguration& cfg, const Vector& beta,
                                       double rho) {
  const Matrix uz = active_matrix(cs, cfg);
  if (uz.rows() == 0) return pack(cfg, Vector(0));
  const KktBlocks blocks = kkt_blocks(hessian_inverse(m, beta), uz);
  const Vector target = stationarity_target(m, penalty_direction(cs, cfg), beta, rho);
  return pack(cfg, -blocks.q.transpose() * target);
}

ActiveCoefficients active_coefficients_lsq(const LossModel& m, const ConstraintSystem& cs,
                                           const SetConfiguration& cfg, const Vector& beta,
                                           double rho) {
  const Vector target = stationarity_target(m, penalty_direction(cs, cfg), beta, rho);
  return pack(cfg, lsq_coefficients(active_matrix(cs, cfg), target));
}

SymMatrix tableau_mode_step(const SweepTableau& t, const LossModel& m, const Vector& u,
                            const Vector& beta) {
  return raw_tableau_step(t.matrix(), t.params(), m, u, beta);
}

Index degrees_of_freedom(const SetConfiguration& cfg, Index p) { return p - cfg.active_count(); }

InformationCriteria information_criteria(double neg_loglik, Index df, double n) {
  if (!(n >= 1)) fail(ErrorCode::invalid_argument, "sample size must be at least 1");
  const auto k = static_cast<double>(df);
  return {neg_loglik + k, neg_loglik + 0.5 * std::log(n) * k};
}

const char* to_string(OdeMode mode) {
  switch (mode) {
    case OdeMode::direct: return "direct";
    case OdeMode::nullspace: return "nullspace";
    case OdeMode::tableau: return "tableau";
  }
  return "?";
}

const char* to_string(Direction direction) {
  return direction == Direction::forward ? "forward" : "backward";
}

const char* to_string(PathStatus status) {
  switch (status) {
    case PathStatus::terminated: return "terminated";
    case PathStatus::rho_max: return "rho_max";
    case PathStatus::reached_zero: return "reached_zero";
  }
  return "?";
}

namespace {

class ReducedLoss final : public LossModel {
 public:
  ReducedLoss(const LossModel& m, Vector base, Matrix basis)
      : m_(m), base_(std::move(base)), y_(std::move(basis)) {}

  Index dim() const override { return y_.cols(); }
  std::string name() const override { return m_.name(); }
  double value(const Vector& z) const override { return m_.value(lift(z)); }
  Vector gradient(const Vector& z) const override {
    return y_.transpose() * m_.gradient(lift(z));
  }
  SymMatrix hessian(const Vector& z) const override {
    return y_.transpose() * m_.hessian(lift(z)) * y_;
  }
  SymMatrix dh_action(const Vector& z, const Vector& v) const override {
    return y_.transpose() * m_.dh_action(lift(z), y_ * v) * y_;
  }
  bool in_domain(const Vector& z) const override { return m_.in_domain(lift(z)); }

  Vector lift(const Vector& z) const { return base_ + y_ * z; }

 private:
  const LossModel& m_;
  Vector base_;
  Matrix y_;
};

}  // namespace

Vector equality_constrained_minimum(const LossModel& m, const ConstraintSystem& cs,
                                    const NewtonOptions& opts) {
  if (cs.equalities() == 0) return unconstrained_minimum(m, opts);
  const Vector x0 = m.initial_point();
  const Vector gap = cs.v() * x0 - cs.d();
  const Vector base = x0 - cs.v().completeOrthogonalDecomposition().solve(gap);
  if ((cs.v() * base - cs.d()).lpNorm<Eigen::Infinity>() > default_residual_tol(cs)) {
    fail(ErrorCode::invalid_argument, "equality rows V b = d are inconsistent");
  }
  const NullBasis nb(cs.v());
  if (nb.basis().cols() == 0) return base;
  const ReducedLoss reduced(m, base, nb.basis());
  return reduced.lift(unconstrained_minimum(reduced, opts));
}

class PathBuilder {
 public:
  PathBuilder(const LossModel& m, const ConstraintSystem& cs, const PathOptions& opts)
      : m_(m), cs_(cs), opts_(opts), p_(cs.params()) {
    if (m.dim() != cs.params()) {
      fail(ErrorCode::invalid_argument, "loss dimension and constraint columns differ");
    }
    if (!(opts.rho_max > 0)) fail(ErrorCode::invalid_argument, "rho_max must be positive");
    residual_tol_ = opts.residual_tol >= 0 ? opts.residual_tol : default_residual_tol(cs);
    mode_ = opts.mode;
    sol_.params_ = p_;
    sol_.direction_ = opts.direction;
    sol_.mode_ = opts.mode;
    sol_.df_heuristic_ = m.df_is_heuristic();
  }

  PathSolution run() {
    if (opts_.direction == Direction::forward) {
      start_forward();
    } else {
      start_backward();
    }
    trace();
    return std::move(sol_);
  }

 private:
  double target() const {
    return opts_.direction == Direction::forward ? opts_.rho_max : 0.0;
  }

  void start_forward() {
    beta_ = unconstrained_minimum(m_, opts_.newton);
    rho_ = 0.0;
    cfg_ = classify(cs_.equality_residuals(beta_), cs_.inequality_residuals(beta_), residual_tol_);
    choose_mode();
    settle();
    init_tableau();
    sol_.rho_start_ = 0.0;
  }

  void start_backward() {
    if (opts_.start) {
      beta_ = *opts_.start;
      if (beta_.size() != p_) fail(ErrorCode::invalid_argument, "backward start has wrong length");
    } else {
      if (cs_.inequalities() > 0) {
        fail(ErrorCode::invalid_argument,
             "backward mode needs a supplied start when inequality rows are present");
      }
      beta_ = equality_constrained_minimum(m_, cs_, opts_.newton);
    }
    cfg_ = classify(cs_.equality_residuals(beta_), cs_.inequality_residuals(beta_), residual_tol_);
    for (Index j = 0; j < cs_.inequalities(); ++j) {
      if (cfg_.ineq[static_cast<std::size_t>(j)] == RowSet::positive) {
        fail(ErrorCode::invalid_argument, "backward start violates an inequality row");
      }
    }
    if (!cfg_.terminal()) {
      fail(ErrorCode::invalid_argument, "backward start does not satisfy V b = d");
    }
    choose_mode();

    // With u = 0 the active coefficients scale as c1 / rho.
    Segment seg(m_, cs_, cfg_, mode_ == OdeMode::tableau ? OdeMode::direct : mode_, 0,
                opts_.beta_bound);
    const Vector c1 = seg.coefficients(1.0, beta_);
    double rho0 = 0.0;
    for (std::size_t k = 0; k < seg.active.size(); ++k) {
      const double c = c1(static_cast<Index>(k));
      const bool eq = cfg_.is_equality(seg.active[k]);
      if (!eq && c < 0) {
        // Slack row whose multiplier would be negative: it belongs to N_I.
        cfg_.set(seg.active[k], RowSet::negative);
        continue;
      }
      rho0 = std::max(rho0, eq ? std::abs(c) : c);
    }
    rho_ = std::min(rho0, opts_.rho_max);
    sol_.rho_start_ = rho_;
    push_segment(rho_, rho_, beta_, beta_, {});

    // Rows whose coefficient sits on its boundary at rho0 leave Z there.
    std::vector<Transition> leaving;
    if (rho0 > 0) {
      for (std::size_t k = 0; k < seg.active.size(); ++k) {
        const Index row = seg.active[k];
        if (cfg_.at(row) != RowSet::zero) continue;
        const double c = c1(static_cast<Index>(k)) / rho0;
        if (1.0 - std::abs(c) <= opts_.coefficient_tol) {
          leaving.push_back({row, RowSet::zero, c > 0 ? RowSet::positive : RowSet::negative});
        }
      }
    }
    init_tableau();
    for (const auto& t : leaving) apply(t, leaving.size() > 1);
    if (leaving.size() > 1) warn_simultaneous(leaving);
    settle();
  }

  void choose_mode() {
    if (mode_ == OdeMode::nullspace) return;
    bool singular = !m_.strictly_convex();
    if (!singular) {
      try {
        hessian_inverse(m_, beta_);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::not_strictly_convex) throw;
        singular = true;
      }
    }
    if (!singular) return;
    if (mode_ == OdeMode::tableau) {
      fail(ErrorCode::not_strictly_convex, "tableau mode needs a positive definite Hessian");
    }
    std::ostringstream msg;
    msg << "Hessian is singular at rho = " << rho_ << "; switched to null-space mode";
    sol_.warnings_.push_back(msg.str());
    log::info("{}", msg.str());
    mode_ = OdeMode::nullspace;
    sol_.mode_ = mode_;
  }

  void init_tableau() {
    if (mode_ != OdeMode::tableau) return;
    tableau_.emplace(hessian_inverse(m_, beta_), cs_.stacked());
    for (Index row : cfg_.active()) tableau_->update(row, true);
  }

  Vector state() const {
    if (mode_ != OdeMode::tableau) return beta_;
    return flatten(beta_, tableau_->matrix());
  }

  Index table_size() const { return mode_ == OdeMode::tableau ? p_ + cs_.rows() : 0; }

  // Moves Z rows whose coefficient is outside its range into N or P until
  // the configuration is consistent at the current rho.
  void settle() {
    for (Index guard = 0; guard <= cs_.rows(); ++guard) {
      const Segment seg(m_, cs_, cfg_, mode_, table_size(), opts_.beta_bound);
      if (seg.active.empty()) return;
      const Vector c = seg.coefficients(rho_, state());
      double worst = opts_.coefficient_tol;
      std::optional<Transition> move;
      for (std::size_t k = 0; k < seg.active.size(); ++k) {
        const Index row = seg.active[k];
        const double ck = c(static_cast<Index>(k));
        const double lo = cfg_.is_equality(row) ? -1.0 : 0.0;
        if (ck - 1.0 > worst) {
          worst = ck - 1.0;
          move = Transition{row, RowSet::zero, RowSet::positive};
        } else if (lo - ck > worst) {
          worst = lo - ck;
          move = Transition{row, RowSet::zero, RowSet::negative};
        }
      }
      if (!move) return;
      log::debug("start: row {} moves out of Z (coefficient off by {:.3e})", move->row, worst);
      cfg_.set(move->row, move->to);
      if (tableau_) tableau_->update(move->row, false);
    }
    fail(ErrorCode::path_halted, "could not find a consistent starting configuration");
  }

  void apply(const Transition& t, bool simultaneous) {
    const Index df_before = degrees_of_freedom(cfg_, p_);
    cfg_.set(t.row, t.to);
    if (tableau_) tableau_->update(t.row, t.to == RowSet::zero);
    sol_.kinks_.push_back({rho_, beta_, t, df_before, degrees_of_freedom(cfg_, p_), simultaneous});
    log::debug("kink at rho = {:.12g}: row {} {} -> {}", rho_, t.row, static_cast<int>(t.from),
               static_cast<int>(t.to));
  }

  void warn_simultaneous(const std::vector<Transition>& ts) {
    std::ostringstream msg;
    msg << "SimultaneousEventWarning: rows";
    for (const auto& t : ts) msg << ' ' << t.row;
    msg << " change together at rho = " << rho_;
    sol_.warnings_.push_back(msg.str());
    log::info("{}", msg.str());
  }

  void push_segment(double a, double b, const Vector& beta_a, const Vector& beta_b,
                    std::vector<StepResult> steps) {
    for (auto& s : steps) {
      if (s.y0.size() == p_) continue;
      s.y0 = s.y0.head(p_).eval();
      s.y1 = s.y1.head(p_).eval();
      s.c2 = s.c2.head(p_).eval();
      s.c3 = s.c3.head(p_).eval();
      s.c4 = s.c4.head(p_).eval();
      s.c5 = s.c5.head(p_).eval();
    }
    sol_.segments_.push_back({a, b, cfg_, mode_, beta_a, beta_b, std::move(steps)});
  }

  bool done() const {
    if (opts_.direction == Direction::forward) return cfg_.terminal() || rho_ >= opts_.rho_max;
    return rho_ <= 0.0;
  }

  void trace() {
    double last_rho = rho_;
    long repeats = 0;
    long events = 0;
    while (!done()) {
      if (mode_ == OdeMode::direct) choose_mode();
      const Segment seg(m_, cs_, cfg_, mode_, table_size(), opts_.beta_bound);
      IvpProblem ivp;
      ivp.rhs = [&seg](double, const Vector& y) { return seg.rhs(y); };
      ivp.gaps = [&seg](double t, const Vector& y) { return seg.gaps(t, y); };
      ivp.t0 = rho_;
      ivp.t_max = target();
      ivp.y0 = events > 0 ? seg.project(state()) : state();
      IntegrationResult res = integrate(ivp, opts_.ode);

      const Vector beta_a = ivp.y0.head(p_);
      const Vector& y = res.y;
      beta_ = y.head(p_);
      if (tableau_) tableau_->set_matrix(unflatten_table(y, p_, table_size()));
      push_segment(rho_, res.t, beta_a, beta_, std::move(res.trajectory));
      rho_ = res.t;

      if (res.reached_t_max) {
        sol_.status_ =
            opts_.direction == Direction::forward ? PathStatus::rho_max : PathStatus::reached_zero;
        break;
      }
      if (rho_ == last_rho) {
        if (++repeats > 4 * (cs_.rows() + 1)) {
          std::ostringstream msg;
          msg << "active set keeps changing at rho = " << rho_ << " without progress";
          fail(ErrorCode::path_halted, msg.str());
        }
      } else {
        repeats = 0;
        last_rho = rho_;
      }
      if (++events > opts_.max_events) fail(ErrorCode::path_halted, "too many events");

      // One transition per located event; the others re-fire from the next
      // (zero-length) segment if they still apply.
      const Index gap = res.events.front();
      const Index row = gap / 2;
      const RowSet from = cfg_.at(row);
      RowSet to = RowSet::zero;
      if (from == RowSet::zero) to = gap % 2 == 0 ? RowSet::positive : RowSet::negative;
      if (res.simultaneous) {
        std::vector<Transition> ts;
        for (Index g : res.events) ts.push_back({g / 2, cfg_.at(g / 2), RowSet::zero});
        warn_simultaneous(ts);
      }
      const bool refire = !sol_.kinks_.empty() && sol_.kinks_.back().rho == rho_;
      apply({row, from, to}, res.simultaneous || refire);
    }
    if (opts_.direction == Direction::forward && cfg_.terminal()) {
      sol_.status_ = PathStatus::terminated;
      const Segment last(m_, cs_, cfg_, mode_, table_size(), opts_.beta_bound);
      const Vector beta_a = beta_;
      beta_ = last.project(state()).head(p_);
      push_segment(rho_, rho_, beta_a, beta_, {});
    } else if (opts_.direction == Direction::backward && rho_ <= 0.0) {
      sol_.status_ = PathStatus::reached_zero;
    }
    sol_.rho_end_ = rho_;
  }

  const LossModel& m_;
  const ConstraintSystem& cs_;
  const PathOptions& opts_;
  Index p_;
  double residual_tol_ = 0.0;
  OdeMode mode_;
  double rho_ = 0.0;
  Vector beta_;
  SetConfiguration cfg_;
  std::optional<SweepTableau> tableau_;
  PathSolution sol_;
};

PathSolution run_path(const LossModel& m, const ConstraintSystem& cs, const PathOptions& opts) {
  return PathBuilder(m, cs, opts).run();
}

const PathSegment& PathSolution::segment_at(double rho) const {
  if (segments_.empty()) fail(ErrorCode::invalid_argument, "empty path");
  for (auto it = segments_.rbegin(); it != segments_.rend(); ++it) {
    const double lo = std::min(it->rho_a, it->rho_b);
    const double hi = std::max(it->rho_a, it->rho_b);
    if (rho >= lo && rho <= hi) return *it;
  }
  const bool beyond_start = direction_ == Direction::forward ? rho < rho_start_ : rho > rho_start_;
  return beyond_start ? segments_.front() : segments_.back();
}

const SetConfiguration& PathSolution::config_at(double rho) const { return segment_at(rho).config; }

Vector PathSolution::beta_at(double rho) const {
  if (segments_.empty()) fail(ErrorCode::invalid_argument, "empty path");
  const double sign = direction_ == Direction::forward ? 1.0 : -1.0;
  if (sign * (rho - rho_start_) <= 0) return segments_.front().beta_a;
  if (sign * (rho - rho_end_) >= 0) return segments_.back().beta_b;
  for (const auto& seg : segments_) {
    if (sign * (rho - seg.rho_a) < 0 || sign * (rho - seg.rho_b) > 0) continue;
    if (rho == seg.rho_a) return seg.beta_a;
    if (rho == seg.rho_b) return seg.beta_b;
    for (const auto& step : seg.steps) {
      if (sign * (rho - step.t1()) <= 0) return step.head_at(rho, params_);
    }
    return seg.beta_b;
  }
  return segments_.back().beta_b;
}

std::vector<double> PathSolution::sample_grid(int intervals) const {
  std::vector<double> out;
  if (intervals < 1) intervals = 1;
  for (int k = 0; k <= intervals; ++k) {
    out.push_back(k == intervals ? rho_end_
                                 : rho_start_ + (rho_end_ - rho_start_) * k / intervals);
  }
  for (const auto& kink : kinks_) out.push_back(kink.rho);
  if (direction_ == Direction::forward) {
    std::sort(out.begin(), out.end());
  } else {
    std::sort(out.begin(), out.end(), std::greater<>());
  }
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace epsode
