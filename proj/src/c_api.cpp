#include "epsode.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "epsode/crossval.hpp"
#include "epsode/error.hpp"
#include "epsode/log.hpp"
#include "epsode/oracles.hpp"
#include "epsode/path.hpp"
#include "epsode/problem.hpp"

// Paths keep the spec alive after the problem handle is freed. Option
// setters copy the spec first so they never touch one a path refers to.
struct epsode_problem {
  std::shared_ptr<const epsode::ProblemSpec> spec;
  std::string loss_name;

  epsode::PathOptions& options() {
    auto copy = std::make_shared<epsode::ProblemSpec>(*spec);
    epsode::PathOptions& o = copy->options;
    spec = std::move(copy);
    return o;
  }
};

struct epsode_path {
  std::shared_ptr<const epsode::ProblemSpec> spec;
  epsode::PathSolution solution;
  std::vector<epsode_sample> samples;
  std::vector<epsode::Vector> betas;
};

struct epsode_crossval {
  epsode::CrossValidation result;
};

namespace {

thread_local std::string last_error;

epsode_status record(epsode_status status, const std::string& message) {
  last_error = message;
  epsode::log::debug("call failed: {}", message);
  return status;
}

// Runs body, translating exceptions into status codes and the thread-local
// message. Successful calls clear the message.
template <typename Body>
epsode_status guarded(Body&& body) {
  try {
    body();
    last_error.clear();
    return EPSODE_OK;
  } catch (const epsode::Error& e) {
    return record(static_cast<epsode_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return record(EPSODE_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return record(EPSODE_INTERNAL_ERROR, e.what());
  }
}

void require(bool ok, const char* message) {
  if (!ok) epsode::fail(epsode::ErrorCode::invalid_argument, message);
}

epsode_row_set to_c(epsode::RowSet s) {
  switch (s) {
    case epsode::RowSet::negative: return EPSODE_SET_N;
    case epsode::RowSet::zero: return EPSODE_SET_Z;
    case epsode::RowSet::positive: return EPSODE_SET_P;
  }
  return EPSODE_SET_Z;
}

epsode_problem* wrap(epsode::ProblemSpec spec) {
  auto* p = new epsode_problem{std::make_shared<const epsode::ProblemSpec>(std::move(spec)), {}};
  p->loss_name = p->spec->loss->name();
  return p;
}

}  // namespace

extern "C" {

const char* epsode_last_error(void) { return last_error.c_str(); }

const char* epsode_status_name(epsode_status status) {
  if (status == EPSODE_OK) return "ok";
  if (status == EPSODE_INTERNAL_ERROR) return "internal_error";
  return epsode::to_string(static_cast<epsode::ErrorCode>(status));
}

epsode_status epsode_problem_load(const char* spec_path, epsode_problem** out) {
  return guarded([&] {
    require(spec_path && out, "null argument");
    *out = nullptr;
    *out = wrap(epsode::load_problem(spec_path));
  });
}

epsode_status epsode_problem_parse(const char* json_text, const char* base_dir, epsode_problem** out) {
  return guarded([&] {
    require(json_text && out, "null argument");
    *out = nullptr;
    *out = wrap(epsode::parse_problem(json_text, base_dir ? base_dir : "."));
  });
}

void epsode_problem_free(epsode_problem* problem) { delete problem; }

size_t epsode_problem_params(const epsode_problem* problem) {
  return problem ? static_cast<size_t>(problem->spec->loss->dim()) : 0;
}

size_t epsode_problem_equalities(const epsode_problem* problem) {
  return problem ? static_cast<size_t>(problem->spec->constraints.equalities()) : 0;
}

size_t epsode_problem_inequalities(const epsode_problem* problem) {
  return problem ? static_cast<size_t>(problem->spec->constraints.inequalities()) : 0;
}

const char* epsode_problem_loss_name(const epsode_problem* problem) {
  return problem ? problem->loss_name.c_str() : "";
}

epsode_status epsode_problem_set_mode(epsode_problem* problem, epsode_mode mode) {
  return guarded([&] {
    require(problem, "null problem");
    switch (mode) {
      case EPSODE_MODE_DIRECT: problem->options().mode = epsode::OdeMode::direct; return;
      case EPSODE_MODE_NULLSPACE: problem->options().mode = epsode::OdeMode::nullspace; return;
      case EPSODE_MODE_TABLEAU: problem->options().mode = epsode::OdeMode::tableau; return;
    }
    require(false, "unknown mode");
  });
}

epsode_status epsode_problem_set_direction(epsode_problem* problem, epsode_direction direction) {
  return guarded([&] {
    require(problem, "null problem");
    require(direction == EPSODE_FORWARD || direction == EPSODE_BACKWARD, "unknown direction");
    problem->options().direction =
        direction == EPSODE_FORWARD ? epsode::Direction::forward : epsode::Direction::backward;
  });
}

epsode_status epsode_problem_set_rho_max(epsode_problem* problem, double rho_max) {
  return guarded([&] {
    require(problem, "null problem");
    require(rho_max > 0 && std::isfinite(rho_max), "rho_max must be positive and finite");
    problem->options().rho_max = rho_max;
  });
}

epsode_status epsode_problem_set_rel_tol(epsode_problem* problem, double rel_tol) {
  return guarded([&] {
    require(problem, "null problem");
    require(rel_tol > 0 && rel_tol < 1, "rel_tol must lie in (0, 1)");
    problem->options().ode.rel_tol = rel_tol;
  });
}

epsode_status epsode_solve(const epsode_problem* problem, epsode_path** out) {
  return guarded([&] {
    require(problem && out, "null argument");
    *out = nullptr;
    auto path = std::make_unique<epsode_path>();
    path->spec = problem->spec;
    const auto& spec = *path->spec;
    path->solution = epsode::run_path(*spec.loss, spec.constraints, spec.options);
    const double n = spec.loss->sample_size();
    for (double rho : path->solution.sample_grid(spec.sample_intervals)) {
      epsode::Vector beta = path->solution.beta_at(rho);
      const auto df = path->solution.df_at(rho);
      const double nll = spec.loss->negative_loglik(beta);
      const auto ic = epsode::information_criteria(nll, df, n);
      path->samples.push_back({rho, static_cast<double>(df), nll, ic.aic, ic.bic});
      path->betas.push_back(std::move(beta));
    }
    *out = path.release();
  });
}

void epsode_path_free(epsode_path* path) { delete path; }

epsode_path_status epsode_path_status_of(const epsode_path* path) {
  if (!path) return EPSODE_PATH_TERMINATED;
  switch (path->solution.status()) {
    case epsode::PathStatus::terminated: return EPSODE_PATH_TERMINATED;
    case epsode::PathStatus::rho_max: return EPSODE_PATH_RHO_MAX;
    case epsode::PathStatus::reached_zero: return EPSODE_PATH_REACHED_ZERO;
  }
  return EPSODE_PATH_TERMINATED;
}

const char* epsode_path_status_name(epsode_path_status status) {
  switch (status) {
    case EPSODE_PATH_TERMINATED: return epsode::to_string(epsode::PathStatus::terminated);
    case EPSODE_PATH_RHO_MAX: return epsode::to_string(epsode::PathStatus::rho_max);
    case EPSODE_PATH_REACHED_ZERO: return epsode::to_string(epsode::PathStatus::reached_zero);
  }
  return "unknown";
}

void epsode_path_rho_range(const epsode_path* path, double* rho_start, double* rho_end) {
  if (!path) return;
  if (rho_start) *rho_start = path->solution.rho_start();
  if (rho_end) *rho_end = path->solution.rho_end();
}

const char* epsode_path_mode_name(const epsode_path* path) {
  return path ? epsode::to_string(path->solution.mode()) : "";
}

const char* epsode_path_direction_name(const epsode_path* path) {
  return path ? epsode::to_string(path->solution.direction()) : "";
}

int epsode_path_df_heuristic(const epsode_path* path) {
  return path && path->solution.df_heuristic() ? 1 : 0;
}

size_t epsode_path_kink_count(const epsode_path* path) {
  return path ? path->solution.kinks().size() : 0;
}

epsode_status epsode_path_kink(const epsode_path* path, size_t index, epsode_kink* out) {
  return guarded([&] {
    require(path && out, "null argument");
    require(index < path->solution.kinks().size(), "kink index out of range");
    const auto& k = path->solution.kinks()[index];
    const auto eq = static_cast<size_t>(path->spec->constraints.equalities());
    const auto row = static_cast<size_t>(k.transition.row);
    out->rho = k.rho;
    out->row = row;
    out->is_equality = row < eq ? 1 : 0;
    out->local_row = row < eq ? row : row - eq;
    out->from = to_c(k.transition.from);
    out->to = to_c(k.transition.to);
    out->df_before = static_cast<size_t>(k.df_before);
    out->df_after = static_cast<size_t>(k.df_after);
    out->simultaneous = k.simultaneous ? 1 : 0;
  });
}

size_t epsode_path_warning_count(const epsode_path* path) {
  return path ? path->solution.warnings().size() : 0;
}

const char* epsode_path_warning(const epsode_path* path, size_t index) {
  if (!path || index >= path->solution.warnings().size()) return nullptr;
  return path->solution.warnings()[index].c_str();
}

epsode_status epsode_path_evaluate(const epsode_path* path, double rho, double* beta) {
  return guarded([&] {
    require(path && beta, "null argument");
    require(std::isfinite(rho), "rho must be finite");
    const epsode::Vector b = path->solution.beta_at(rho);
    std::copy(b.data(), b.data() + b.size(), beta);
  });
}

size_t epsode_path_sample_count(const epsode_path* path) { return path ? path->samples.size() : 0; }

epsode_status epsode_path_sample(const epsode_path* path, size_t index, epsode_sample* out,
                                 double* beta) {
  return guarded([&] {
    require(path && out, "null argument");
    require(index < path->samples.size(), "sample index out of range");
    *out = path->samples[index];
    if (beta) {
      const auto& b = path->betas[index];
      std::copy(b.data(), b.data() + b.size(), beta);
    }
  });
}

epsode_status epsode_path_select(const epsode_path* path, epsode_criterion criterion, size_t* index) {
  return guarded([&] {
    require(path && index, "null argument");
    require(criterion == EPSODE_AIC || criterion == EPSODE_BIC, "unknown criterion");
    require(!path->samples.empty(), "path has no samples");
    auto value = [&](const epsode_sample& s) { return criterion == EPSODE_AIC ? s.aic : s.bic; };
    size_t best = 0;
    for (size_t i = 1; i < path->samples.size(); ++i) {
      if (value(path->samples[i]) < value(path->samples[best])) best = i;
    }
    *index = best;
  });
}

epsode_status epsode_crossval_run(const epsode_problem* problem, size_t folds, uint64_t seed,
                                  epsode_crossval** out) {
  return guarded([&] {
    require(problem && out, "null argument");
    *out = nullptr;
    const auto& spec = *problem->spec;
    auto cv = std::make_unique<epsode_crossval>();
    cv->result = epsode::cross_validate(*spec.loss, spec.constraints, spec.options,
                                        static_cast<epsode::Index>(folds), seed,
                                        spec.sample_intervals);
    *out = cv.release();
  });
}

void epsode_crossval_free(epsode_crossval* cv) { delete cv; }

size_t epsode_crossval_folds(const epsode_crossval* cv) { return cv ? cv->result.errors.size() : 0; }

size_t epsode_crossval_grid_size(const epsode_crossval* cv) { return cv ? cv->result.grid.size() : 0; }

double epsode_crossval_rho(const epsode_crossval* cv, size_t index) {
  return cv && index < cv->result.grid.size() ? cv->result.grid[index] : std::nan("");
}

double epsode_crossval_fold_error(const epsode_crossval* cv, size_t fold, size_t index) {
  if (!cv || fold >= cv->result.errors.size() || index >= cv->result.grid.size()) return std::nan("");
  return cv->result.errors[fold][index];
}

double epsode_crossval_mean(const epsode_crossval* cv, size_t index) {
  return cv && index < cv->result.mean.size() ? cv->result.mean[index] : std::nan("");
}

double epsode_crossval_standard_error(const epsode_crossval* cv, size_t index) {
  return cv && index < cv->result.standard_error.size() ? cv->result.standard_error[index]
                                                        : std::nan("");
}

double epsode_crossval_best_rho(const epsode_crossval* cv) {
  return cv ? cv->result.best_rho : std::nan("");
}

size_t epsode_crossval_observations(const epsode_crossval* cv) {
  return cv ? cv->result.fold_of.size() : 0;
}

size_t epsode_crossval_fold_of(const epsode_crossval* cv, size_t observation) {
  if (!cv || observation >= cv->result.fold_of.size()) return static_cast<size_t>(-1);
  return static_cast<size_t>(cv->result.fold_of[observation]);
}

epsode_status epsode_oracle_pava(const double* y, size_t n, int nondecreasing, double* out) {
  return guarded([&] {
    require(y && out && n > 0, "null or empty argument");
    const epsode::Vector v = epsode::oracle::pava(
        Eigen::Map<const epsode::Vector>(y, static_cast<epsode::Index>(n)), nondecreasing != 0);
    std::copy(v.data(), v.data() + v.size(), out);
  });
}

epsode_status epsode_oracle_quadrature_j(int a, int b, double r, double s, double* out) {
  return guarded([&] {
    require(out, "null argument");
    require(a >= 0 && b >= 0 && a + b <= 3, "a and b must be nonnegative with a + b <= 3");
    require(std::isfinite(r) && std::isfinite(s), "r and s must be finite");
    *out = epsode::oracle::quadrature_j(a, b, r, s);
  });
}

epsode_status epsode_oracle_glasso(const double* sigma_hat, size_t p, double rho, double* omega) {
  return guarded([&] {
    require(sigma_hat && omega && p > 0, "null or empty argument");
    require(rho >= 0 && std::isfinite(rho), "rho must be nonnegative");
    const auto dim = static_cast<epsode::Index>(p);
    const epsode::Matrix s = Eigen::Map<const epsode::Matrix>(sigma_hat, dim, dim);
    const epsode::Matrix w = epsode::oracle::glasso_coordinate(s, rho);
    std::copy(w.data(), w.data() + w.size(), omega);
  });
}

epsode_status epsode_oracle_glasso_grid(const double* sigma_hat, double rho, double* omega) {
  return guarded([&] {
    require(sigma_hat && omega, "null argument");
    require(rho >= 0 && std::isfinite(rho), "rho must be nonnegative");
    const epsode::Matrix s = Eigen::Map<const epsode::Matrix>(sigma_hat, 2, 2);
    const epsode::Matrix w = epsode::oracle::glasso_grid_2x2(s, rho);
    std::copy(w.data(), w.data() + w.size(), omega);
  });
}

epsode_status epsode_oracle_penalized(const epsode_problem* problem, double rho, double* beta) {
  return guarded([&] {
    require(problem && beta, "null argument");
    require(rho >= 0 && std::isfinite(rho), "rho must be nonnegative");
    const auto r = epsode::oracle::prox_grad_fixed_rho(*problem->spec->loss, problem->spec->constraints, rho);
    std::copy(r.solution.data(), r.solution.data() + r.solution.size(), beta);
  });
}

}  // extern "C"
