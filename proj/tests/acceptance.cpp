// Acceptance gate: one line per criterion, exit status 0 only when all pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "epsode/constraints.hpp"
#include "epsode/error.hpp"
#include "epsode/j_kernel.hpp"
#include "epsode/losses.hpp"
#include "epsode/oracles.hpp"
#include "epsode/path.hpp"
#include "epsode/sweep.hpp"
#include "support.hpp"

using namespace epsode;
using testing::max_abs;
using testing::relative_error;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Records the worst value of a quantity against its bound.
class Bound {
 public:
  Bound(std::string name, double limit) : name_(std::move(name)), limit_(limit) {}
  void see(double v) {
    if (!(v <= worst_)) worst_ = v;
  }
  bool ok() const { return worst_ < limit_; }
  std::string text() const {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s %.2e (< %.0e)", name_.c_str(), worst_, limit_);
    return buf;
  }

 private:
  std::string name_;
  double limit_;
  double worst_ = 0.0;
};

Outcome combine(std::initializer_list<const Bound*> bounds, std::string extra = {}) {
  Outcome o;
  for (const Bound* b : bounds) {
    o.pass = o.pass && b->ok();
    if (!o.detail.empty()) o.detail += ", ";
    o.detail += b->text();
  }
  if (!extra.empty()) o.detail += ", " + extra;
  return o;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

GlmLoss logistic_data(testing::Rng& rng, Index n, Index p) {
  Matrix x = rng.normal_matrix(n, p);
  const Vector truth = rng.normal_vector(p);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    const double prob = 1.0 / (1.0 + std::exp(-x.row(i).dot(truth)));
    y(i) = rng.uniform(0.0, 1.0) < prob ? 1.0 : 0.0;
  }
  // A duplicated row with both labels keeps the data from being separable.
  y(0) = 1.0;
  y(1) = 0.0;
  x.row(1) = x.row(0);
  return GlmLoss(x, y, GlmFamily::logistic);
}

double uniform_in_path(testing::Rng& rng, const PathSolution& sol) {
  return rng.uniform(std::min(sol.rho_start(), sol.rho_end()), std::max(sol.rho_start(), sol.rho_end()));
}

Outcome soft_threshold() {
  const Vector b = vec({2.0, -1.0});
  const QuadraticLoss m = QuadraticLoss::centered(b);
  const PathSolution sol = run_path(m, lasso(2));
  Bound kink("kink error", 1e-8), path("path error", 1e-8);
  if (sol.kinks().size() != 2) return {false, "expected 2 kinks, got " + std::to_string(sol.kinks().size())};
  kink.see(std::abs(sol.kinks()[0].rho - 1.0));
  kink.see(std::abs(sol.kinks()[1].rho - 2.0));
  for (int i = 0; i < 100; ++i) {
    const double rho = 3.0 * i / 99.0;
    Vector exact(2);
    for (Index j = 0; j < 2; ++j) exact(j) = std::copysign(std::max(std::abs(b(j)) - rho, 0.0), b(j));
    path.see(max_abs(sol.beta_at(rho) - exact));
  }
  return combine({&kink, &path});
}

Outcome random_quadratic_lasso() {
  Bound err("max deviation from fixed-rho oracle", 1e-4);
  for (int seed = 0; seed < 20; ++seed) {
    testing::Rng rng(1000 + seed);
    const Matrix x = rng.normal_matrix(20, 5);
    const Vector y = x * rng.normal_vector(5) + rng.normal_vector(20);
    const QuadraticLoss m = QuadraticLoss::least_squares(x, y);
    const ConstraintSystem cs = lasso(5);
    const PathSolution sol = run_path(m, cs);
    for (int k = 0; k < 10; ++k) {
      const double rho = uniform_in_path(rng, sol);
      err.see(max_abs(sol.beta_at(rho) - oracle::prox_grad_fixed_rho(m, cs, rho).solution));
    }
  }
  return combine({&err});
}

Outcome isotone_endpoint() {
  Bound err("terminal error vs PAVA", 1e-6);
  testing::Rng rng(2000);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector y = rng.normal_vector(10);
    const PathSolution sol = run_path(QuadraticLoss::centered(y), isotone(10, Monotone::nondecreasing));
    if (sol.status() != PathStatus::terminated) return {false, "path did not terminate"};
    err.see(max_abs(sol.beta_at(sol.rho_end()) - oracle::pava(y)));
  }
  return combine({&err});
}

Outcome stationarity_sweep() {
  Bound resid("stationarity residual", 1e-6), range("coefficient range excess", 1e-7);
  for (int seed = 0; seed < 10; ++seed) {
    testing::Rng rng(3000 + seed);
    const GlmLoss m = logistic_data(rng, 50, 5);
    const ConstraintSystem cs = lasso(5);
    const PathSolution sol = run_path(m, cs);
    for (double rho : sol.sample_grid(100)) {
      if (rho <= 0.0) continue;
      const Vector beta = sol.beta_at(rho);
      const SetConfiguration& cfg = sol.config_at(rho);
      const ActiveCoefficients r = active_coefficients(m, cs, cfg, beta, rho);
      Vector g = m.gradient(beta) + rho * penalty_direction(cs, cfg);
      if (r.values.size() > 0) g += rho * active_matrix(cs, cfg).transpose() * r.values;
      resid.see(g.lpNorm<Eigen::Infinity>());
      for (Index i = 0; i < r.s.size(); ++i) range.see(std::abs(r.s(i)) - 1.0);
      for (Index i = 0; i < r.t.size(); ++i) range.see(std::max(-r.t(i), r.t(i) - 1.0));
    }
  }
  return combine({&resid, &range});
}

Outcome graphical_model() {
  Bound err("error vs glasso", 1e-4), limit("terminal error vs diag(1/s_ii)", 1e-4);
  double min_eig = 1e300;
  for (int seed = 0; seed < 10; ++seed) {
    testing::Rng rng(4000 + seed);
    const SymMatrix s = rng.spd(4, 0.5);
    const GgmLoss m(s, 50.0);
    const ConstraintSystem cs = ggm_offdiagonal(4);
    const PathSolution sol = run_path(m, cs);
    for (int k = 0; k < 5; ++k) {
      const double rho = uniform_in_path(rng, sol);
      err.see(max_abs(m.omega(sol.beta_at(rho)) - oracle::glasso_coordinate(s, rho)));
    }
    for (double rho : sol.sample_grid(200)) {
      const Matrix omega = m.omega(sol.beta_at(rho));
      min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Matrix>(omega).eigenvalues().minCoeff());
    }
    const Matrix diag = s.diagonal().cwiseInverse().asDiagonal();
    limit.see(max_abs(m.omega(sol.beta_at(sol.rho_end())) - diag));
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "smallest eigenvalue %.3e", min_eig);
  Outcome o = combine({&err, &limit}, buf);
  o.pass = o.pass && min_eig > 0.0;
  return o;
}

Outcome log_concave_density() {
  std::mt19937_64 engine(20240601);
  std::extreme_value_distribution<double> gumbel(0.0, 1.0);
  std::vector<double> sample(25);
  for (double& v : sample) v = gumbel(engine);
  const LogConcaveLoss m = LogConcaveLoss::from_sample(sample);
  const ConstraintSystem cs = shape(m.dim(), Shape::concave, m.support());
  const PathSolution sol = run_path(m, cs);
  if (sol.status() != PathStatus::terminated) return {false, "path did not terminate"};
  const Vector phi = sol.beta_at(sol.rho_end());
  Bound feas("concavity violation", 1e-8), kkt("KKT residual", 1e-6), mass("mass error", 1e-6);
  feas.see(std::max(0.0, cs.inequality_residuals(phi).maxCoeff()));
  const oracle::KktReport report = oracle::kkt_residual(m, cs, phi);
  kkt.see(std::max(report.stationarity, report.complementarity));
  // Trapezoid rule for exp of the piecewise-linear log density on a fine
  // subdivision of every support interval.
  const Vector& x = m.support();
  double total = 0.0;
  const int sub = 20000;
  for (Index k = 0; k + 1 < x.size(); ++k) {
    const double h = (x(k + 1) - x(k)) / sub;
    double acc = 0.5 * (std::exp(phi(k)) + std::exp(phi(k + 1)));
    for (int j = 1; j < sub; ++j) {
      const double t = static_cast<double>(j) / sub;
      acc += std::exp((1.0 - t) * phi(k) + t * phi(k + 1));
    }
    total += acc * h;
  }
  mass.see(std::abs(total - 1.0));
  return combine({&feas, &kkt, &mass});
}

Outcome j_kernel_agreement() {
  Bound err("relative error vs quadrature", 1e-9);
  testing::Rng rng(6000);
  for (int i = 0; i < 1000; ++i) {
    const int a = rng.integer(0, 3);
    const int b = rng.integer(0, 3 - a);
    const double r = rng.uniform(-5.0, 5.0);
    double gap;
    switch (i % 4) {
      case 0: gap = rng.uniform(0.0, 1e-6); break;
      case 1: gap = rng.uniform(0.5, 1.5); break;
      default: gap = rng.uniform(0.0, 3.0); break;
    }
    const double s = r + (rng.integer(0, 1) ? gap : -gap);
    const double q = oracle::quadrature_j(a, b, r, s);
    err.see(std::abs(j_kernel(a, b, r, s) - q) / std::abs(q));
  }
  return combine({&err});
}

Outcome derivative_stack() {
  Bound grad("gradient", 1e-5), hess("Hessian", 1e-5), dh("Hessian derivative", 1e-4);
  testing::Rng rng(7000);
  auto check = [&](const LossModel& m, const Vector& x) {
    grad.see(relative_error(m.gradient(x), testing::fd_gradient(m, x)));
    hess.see(relative_error(m.hessian(x), testing::fd_hessian(m, x)));
    for (int k = 0; k < 3; ++k) {
      const Vector v = rng.normal_vector(m.dim());
      dh.see(relative_error(m.dh_action(x, v), testing::fd_dh_action(m, x, v)));
    }
  };
  // Quadratic.
  const Matrix xq = rng.normal_matrix(12, 4);
  check(QuadraticLoss::least_squares(xq, rng.normal_vector(12)), rng.normal_vector(4));
  // Generalized linear models, including a quasi-likelihood with its own variance.
  const Matrix x = rng.normal_matrix(10, 3) / std::sqrt(3.0);
  const Vector beta = rng.normal_vector(3) * 0.5;
  Vector y01(10), counts(10);
  for (Index i = 0; i < 10; ++i) {
    y01(i) = rng.integer(0, 1);
    counts(i) = rng.integer(0, 4);
  }
  check(GlmLoss(x, y01, GlmFamily::logistic), beta);
  check(GlmLoss(x, counts, GlmFamily::poisson), beta);
  check(GlmLoss(x, rng.normal_vector(10), GlmFamily::normal, 1.5), beta);
  check(QuasiLoss(x, counts + Vector::Constant(10, 0.5), Link::log(), VarianceFunction::mu_squared), beta);
  // Gaussian graphical model.
  const GgmLoss g(rng.spd(4), 20.0);
  check(g, g.vectorize(rng.spd(4)));
  // Log-concave density.
  std::vector<double> sample(12);
  for (double& v : sample) v = rng.normal();
  const LogConcaveLoss lc = LogConcaveLoss::from_sample(sample);
  check(lc, rng.normal_vector(lc.dim()));
  return combine({&grad, &hess, &dh});
}

Outcome mode_agreement() {
  testing::Rng rng(9000);
  const GlmLoss m = logistic_data(rng, 80, 8);
  const ConstraintSystem cs = fused_lasso(8);
  PathOptions opts;
  const PathSolution direct = run_path(m, cs, opts);
  opts.mode = OdeMode::nullspace;
  const PathSolution reduced = run_path(m, cs, opts);
  opts.mode = OdeMode::tableau;
  const PathSolution table = run_path(m, cs, opts);
  Bound err("max coefficient difference", 1e-5);
  err.see(std::abs(direct.rho_end() - reduced.rho_end()));
  err.see(std::abs(direct.rho_end() - table.rho_end()));
  for (double rho : direct.sample_grid(400)) {
    const Vector b = direct.beta_at(rho);
    err.see(max_abs(b - reduced.beta_at(rho)));
    err.see(max_abs(b - table.beta_at(rho)));
  }
  return combine({&err}, std::to_string(direct.kinks().size()) + " kinks");
}

Outcome sweep_algebra() {
  Bound inv("involution", 1e-10), comm("commutativity", 1e-10), full("full sweep", 1e-10);
  testing::Rng rng(10000);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = rng.integer(2, 7);
    const SymMatrix a = rng.spd(n);
    const Index k = rng.integer(0, static_cast<int>(n) - 1);
    const Index l = (k + 1 + rng.integer(0, static_cast<int>(n) - 2)) % n;
    inv.see(relative_error(inverse_sweep(sweep(a, k), k), a));
    comm.see(relative_error(sweep(sweep(a, k), l), sweep(sweep(a, l), k)));
    SymMatrix s = a;
    for (Index i = 0; i < n; ++i) s = sweep(s, i);
    full.see(relative_error(s, -a.inverse()));
  }
  return combine({&inv, &comm, &full});
}

Outcome df_bookkeeping() {
  long kinks = 0, singles = 0;
  bool ok = true;
  std::string why;
  auto audit = [&](const LossModel& m, const ConstraintSystem& cs, const PathOptions& opts) {
    const PathSolution sol = run_path(m, cs, opts);
    const Index p = m.dim();
    for (const PathSegment& seg : sol.segments()) {
      const double mid = 0.5 * (seg.rho_a + seg.rho_b);
      if (sol.df_at(mid) != p - sol.config_at(mid).active_count()) {
        ok = false;
        why = "df differs from p - |Z|";
      }
    }
    for (const Kink& k : sol.kinks()) {
      ++kinks;
      if (sol.df_at(k.rho) != k.df_after) {
        ok = false;
        why = "df at a kink is not the post-kink value";
      }
      if (k.simultaneous) continue;
      ++singles;
      if (std::abs(k.df_after - k.df_before) != 1) {
        ok = false;
        why = "single-event kink changed df by other than one";
      }
    }
  };
  testing::Rng rng(11000);
  audit(QuadraticLoss::centered(vec({2.0, -1.0})), lasso(2), {});
  for (int seed = 0; seed < 5; ++seed) {
    const Matrix x = rng.normal_matrix(30, 6);
    audit(QuadraticLoss::least_squares(x, rng.normal_vector(30)), fused_lasso(6), {});
    audit(QuadraticLoss::centered(rng.normal_vector(8)), isotone(8, Monotone::nondecreasing), {});
    audit(logistic_data(rng, 60, 5), lasso(5), {});
    audit(GgmLoss(rng.spd(3), 30.0), ggm_offdiagonal(3), {});
  }
  PathOptions backward;
  backward.direction = Direction::backward;
  audit(QuadraticLoss::centered(rng.normal_vector(5)), lasso(5), backward);
  Outcome o;
  o.pass = ok && singles > 0;
  o.detail = std::to_string(kinks) + " kinks, " + std::to_string(singles) + " single-event";
  if (!why.empty()) o.detail += ", " + why;
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double max_seconds;  // <= 0: no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "soft-threshold exactness", 1.0, soft_threshold},
      {2, "random quadratic lasso vs fixed-rho oracle", 10.0, random_quadratic_lasso},
      {3, "isotone endpoint vs PAVA", 5.0, isotone_endpoint},
      {4, "logistic lasso stationarity sweep", 0.0, stationarity_sweep},
      {5, "graphical model vs glasso", 0.0, graphical_model},
      {6, "log-concave density on Gumbel draws", 30.0, log_concave_density},
      {7, "J-kernel vs quadrature", 0.0, j_kernel_agreement},
      {8, "derivative stack vs finite differences", 0.0, derivative_stack},
      {9, "direct, null-space and tableau mode agreement", 0.0, mode_agreement},
      {10, "sweep algebra", 0.0, sweep_algebra},
      {11, "degrees-of-freedom bookkeeping", 0.0, df_bookkeeping},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const Error& e) {
      o = {false, std::string("error ") + to_string(e.code()) + ": " + e.what()};
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char timing[64];
    if (c.max_seconds > 0) {
      std::snprintf(timing, sizeof timing, "%.2f s of %.0f s", secs, c.max_seconds);
      if (secs >= c.max_seconds) o.pass = false;
    } else {
      std::snprintf(timing, sizeof timing, "%.2f s", secs);
    }
    std::printf("criterion %2d %s: %s [%s; %s]\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(),
                timing);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
