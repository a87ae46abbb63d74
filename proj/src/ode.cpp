#include "epsode/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "epsode/error.hpp"
#include "epsode/log.hpp"

namespace epsode {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

class Stepper {
 public:
  Stepper(const IvpProblem& problem, const OdeOptions& opts, long& evaluations)
      : problem_(problem), opts_(opts), evaluations_(evaluations) {}

  // Evaluates rhs; nullopt for a domain error or a non-finite result.
  std::optional<Vector> eval(double t, const Vector& y) const {
    ++evaluations_;
    try {
      Vector f = problem_.rhs(t, y);
      if (f.size() != y.size()) fail(ErrorCode::invalid_argument, "rhs has wrong length");
      if (!f.allFinite()) return std::nullopt;
      return f;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::domain_error) return std::nullopt;
      throw;
    }
  }

  // One trial step; nullopt when a stage left the domain.
  std::optional<std::pair<StepResult, Vector>> step(double t, const Vector& y, const Vector& k1,
                                                    double h) const {
    auto k2 = eval(t + c2 * h, y + h * a21 * k1);
    if (!k2) return std::nullopt;
    auto k3 = eval(t + c3 * h, y + h * (a31 * k1 + a32 * *k2));
    if (!k3) return std::nullopt;
    auto k4 = eval(t + c4 * h, y + h * (a41 * k1 + a42 * *k2 + a43 * *k3));
    if (!k4) return std::nullopt;
    auto k5 = eval(t + c5 * h, y + h * (a51 * k1 + a52 * *k2 + a53 * *k3 + a54 * *k4));
    if (!k5) return std::nullopt;
    auto k6 = eval(t + h, y + h * (a61 * k1 + a62 * *k2 + a63 * *k3 + a64 * *k4 + a65 * *k5));
    if (!k6) return std::nullopt;
    Vector y1 = y + h * (a71 * k1 + a73 * *k3 + a74 * *k4 + a75 * *k5 + a76 * *k6);
    auto k7 = eval(t + h, y1);
    if (!k7) return std::nullopt;

    const Vector err = h * (e1 * k1 + e3 * *k3 + e4 * *k4 + e5 * *k5 + e6 * *k6 + e7 * *k7);
    const Vector sc = (opts_.abs_tol + opts_.rel_tol * y.cwiseAbs().cwiseMax(y1.cwiseAbs()).array())
                          .matrix();
    const double norm = y.size() == 0 ? 0.0 : std::sqrt((err.cwiseQuotient(sc)).squaredNorm() /
                                                        static_cast<double>(y.size()));
    StepResult s;
    s.t0 = t;
    s.h = h;
    s.error = norm;
    s.y0 = y;
    s.y1 = y1;
    s.c2 = y1 - y;
    s.c3 = h * k1 - s.c2;
    s.c4 = s.c2 - h * *k7 - s.c3;
    s.c5 = h * (d1 * k1 + d3 * *k3 + d4 * *k4 + d5 * *k5 + d6 * *k6 + d7 * *k7);
    return std::make_pair(std::move(s), std::move(*k7));
  }

 private:
  const IvpProblem& problem_;
  const OdeOptions& opts_;
  long& evaluations_;
};

double initial_step(const Stepper& stepper, double t0, const Vector& y0, const Vector& f0,
                    double dir, double h_max, const OdeOptions& opts) {
  if (y0.size() == 0) return dir * h_max;
  const Vector sc = (opts.abs_tol + opts.rel_tol * y0.cwiseAbs().array()).matrix();
  const double n = std::sqrt(static_cast<double>(y0.size()));
  const double dy = y0.cwiseQuotient(sc).norm() / n;
  const double df = f0.cwiseQuotient(sc).norm() / n;
  double h0 = (dy < 1e-5 || df < 1e-5) ? 1e-6 : 0.01 * dy / df;
  h0 = std::min(h0, h_max);
  const auto f1 = stepper.eval(t0 + dir * h0, y0 + dir * h0 * f0);
  double h1 = h0;
  if (f1) {
    const double d2 = (*f1 - f0).cwiseQuotient(sc).norm() / n / h0;
    const double big = std::max(df, d2);
    h1 = big <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / big, 0.2);
  }
  return dir * std::min({100.0 * h0, h1, h_max});
}

Vector gap_values(const IvpProblem& problem, double t, const Vector& y) {
  return problem.gaps ? problem.gaps(t, y) : Vector();
}

// Illinois iteration for the zero of gap k on the dense output of `s`.
double locate(const IvpProblem& problem, const StepResult& s, Index k, double ga, double gb,
              double time_tol) {
  double a = s.t0, b = s.t1();
  int side = 0;
  for (int it = 0; it < 200 && std::abs(b - a) > time_tol; ++it) {
    double c = (a * gb - b * ga) / (gb - ga);
    if (!std::isfinite(c) || (c - a) * (c - b) > 0) c = 0.5 * (a + b);
    const double gc = gap_values(problem, c, s.at(c))(k);
    if (gc > 0) {
      a = c;
      ga = gc;
      if (side == -1) gb *= 0.5;
      side = -1;
    } else {
      b = c;
      gb = gc;
      if (gc == 0) return c;
      if (side == 1) ga *= 0.5;
      side = 1;
    }
  }
  return std::abs(ga) < std::abs(gb) ? a : b;
}

}  // namespace

Vector StepResult::at(double t) const {
  if (h == 0.0) return y0;
  const double th = (t - t0) / h;
  const double th1 = 1.0 - th;
  return y0 + th * (c2 + th1 * (c3 + th * (c4 + th1 * c5)));
}

Vector StepResult::head_at(double t, Index n) const {
  if (h == 0.0) return y0.head(n);
  const double th = (t - t0) / h;
  const double th1 = 1.0 - th;
  return y0.head(n) +
         th * (c2.head(n) + th1 * (c3.head(n) + th * (c4.head(n) + th1 * c5.head(n))));
}

IntegrationResult integrate(const IvpProblem& problem, const OdeOptions& opts) {
  if (!(opts.rel_tol > 0) || !(opts.abs_tol > 0)) {
    fail(ErrorCode::invalid_argument, "ODE tolerances must be positive");
  }
  IntegrationResult out;
  Stepper stepper(problem, opts, out.rhs_evaluations);
  double t = problem.t0;
  Vector y = problem.y0;
  out.t = t;
  out.y = y;
  const double span = problem.t_max - problem.t0;
  if (span == 0.0) {
    out.reached_t_max = true;
    return out;
  }
  const double dir = span > 0 ? 1.0 : -1.0;
  const double h_max = opts.max_step > 0 ? opts.max_step : std::abs(span) / 10.0;

  auto k1 = stepper.eval(t, y);
  if (!k1) fail(ErrorCode::non_finite_derivative, "derivative is not finite at the segment start");

  Vector g = gap_values(problem, t, y);
  std::vector<bool> armed(static_cast<std::size_t>(g.size()));
  for (Index k = 0; k < g.size(); ++k) armed[static_cast<std::size_t>(k)] = g(k) > opts.dead_band;

  double h = initial_step(stepper, t, y, *k1, dir, h_max, opts);
  bool last_rejected = false;
  for (long n = 0; n < opts.max_steps; ++n) {
    if (dir * (t + h - problem.t_max) > 0) h = problem.t_max - t;
    if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t))) {
      std::ostringstream msg;
      msg << "step size underflow at t = " << t << " (possible missed kink or stiffness)";
      fail(ErrorCode::step_size_underflow, msg.str());
    }
    auto trial = stepper.step(t, y, *k1, h);
    if (!trial || !(trial->first.error <= 1.0)) {
      ++out.rejected_steps;
      const double err = trial ? trial->first.error : std::numeric_limits<double>::infinity();
      const double fac = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.25;
      h *= std::min(fac, 0.9);
      last_rejected = true;
      continue;
    }
    StepResult& s = trial->first;
    const bool at_end = s.t1() == problem.t_max;
    const Vector g1 = gap_values(problem, s.t1(), s.y1);

    // Crossing candidates and their located times.
    std::vector<std::pair<double, Index>> hits;
    for (Index k = 0; k < g1.size(); ++k) {
      const auto slot = static_cast<std::size_t>(k);
      if (armed[slot] && g1(k) <= 0) {
        const double tk = locate(problem, s, k, g(k), g1(k), opts.event_time_tol * 1e-3);
        hits.emplace_back(tk, k);
      } else if (!armed[slot] && g1(k) < -opts.event_tol) {
        // A zero gap moving in the crossing direction fires immediately.
        hits.emplace_back(s.t0, k);
      }
    }
    if (!hits.empty()) {
      std::sort(hits.begin(), hits.end(), [dir](const auto& x, const auto& z) {
        return dir * x.first < dir * z.first || (x.first == z.first && x.second < z.second);
      });
      const double t_first = hits.front().first;
      double t_star = t_first;
      const Index lead = hits.front().second;
      StepResult event_step;
      if (t_star == s.t0) {
        event_step.t0 = s.t0;
        event_step.y0 = s.y0;
        event_step.y1 = s.y0;
      } else {
        // Re-step to the located time, then polish with secant updates on
        // freshly integrated states.
        auto restep = [&](double tt) {
          auto r = stepper.step(s.t0, s.y0, *k1, tt - s.t0);
          if (!r) fail(ErrorCode::non_finite_derivative, "derivative left the domain at an event");
          return std::move(r->first);
        };
        event_step = restep(t_star);
        double g_star = gap_values(problem, t_star, event_step.y1)(lead);
        double t_prev = s.t1();
        double g_prev = g1(lead);
        for (int it = 0; it < 8 && std::abs(g_star) > 1e-3 * opts.event_tol; ++it) {
          if (g_star == g_prev) break;
          const double t_next = t_star - g_star * (t_star - t_prev) / (g_star - g_prev);
          if (!std::isfinite(t_next) || dir * (t_next - s.t0) <= 0 || dir * (t_next - s.t1()) > 0) {
            break;
          }
          t_prev = t_star;
          g_prev = g_star;
          t_star = t_next;
          event_step = restep(t_star);
          g_star = gap_values(problem, t_star, event_step.y1)(lead);
        }
        if (std::abs(g_star) > opts.event_tol) {
          log::debug("event gap {} left at {:.3e} after refinement", lead, g_star);
        }
      }
      for (const auto& [tk, k] : hits) {
        if (dir * (tk - t_first) <= opts.simultaneous_window) out.events.push_back(k);
      }
      std::sort(out.events.begin(), out.events.end());
      out.simultaneous = out.events.size() > 1;
      out.t = t_star;
      out.y = event_step.y1;
      if (event_step.t0 == s.t0 && event_step.h != 0.0) out.trajectory.push_back(std::move(event_step));
      return out;
    }

    t = s.t1();
    y = s.y1;
    k1 = std::move(trial->second);
    g = g1;
    for (Index k = 0; k < g.size(); ++k) {
      if (g(k) > opts.dead_band) armed[static_cast<std::size_t>(k)] = true;
    }
    const double err = s.error;
    out.trajectory.push_back(std::move(s));
    if (at_end) {
      out.t = t;
      out.y = y;
      out.reached_t_max = true;
      return out;
    }
    double fac = err == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
    if (last_rejected) fac = std::min(fac, 1.0);
    last_rejected = false;
    h = dir * std::min(std::abs(h) * fac, h_max);
  }
  fail(ErrorCode::step_size_underflow, "maximum number of ODE steps exceeded");
}

}  // namespace epsode
