#ifndef EPSODE_H
#define EPSODE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define EPSODE_API __declspec(dllexport)
#else
#define EPSODE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Opaque handles. Every handle returned by the library is released with the
   matching *_free function; passing NULL to a *_free function is allowed. */
typedef struct epsode_problem epsode_problem;
typedef struct epsode_path epsode_path;
typedef struct epsode_crossval epsode_crossval;

typedef enum epsode_status {
  EPSODE_OK = 0,
  EPSODE_INVALID_ARGUMENT = 1,
  EPSODE_SPEC_ERROR,
  EPSODE_IO_ERROR,
  EPSODE_DOMAIN_ERROR,
  EPSODE_PIVOT_TOO_SMALL,
  EPSODE_RANK_DEFICIENT_ACTIVE_SET,
  EPSODE_NOT_STRICTLY_CONVEX,
  EPSODE_REDUCED_HESSIAN_SINGULAR,
  EPSODE_DIVERGENCE,
  EPSODE_STEP_SIZE_UNDERFLOW,
  EPSODE_NON_FINITE_DERIVATIVE,
  EPSODE_NO_CONVERGENCE,
  EPSODE_UNSUPPORTED_LOSS,
  EPSODE_DIMENSION_TOO_SMALL,
  EPSODE_NON_INCREASING_GRID,
  EPSODE_INVALID_EDGE,
  EPSODE_OVERLAP,
  EPSODE_PATH_HALTED,
  EPSODE_INTERNAL_ERROR = 100
} epsode_status;

typedef enum epsode_mode { EPSODE_MODE_DIRECT, EPSODE_MODE_NULLSPACE, EPSODE_MODE_TABLEAU } epsode_mode;
typedef enum epsode_direction { EPSODE_FORWARD, EPSODE_BACKWARD } epsode_direction;

typedef enum epsode_path_status {
  EPSODE_PATH_TERMINATED, /* every constraint satisfied */
  EPSODE_PATH_RHO_MAX,    /* forward run stopped at rho_max */
  EPSODE_PATH_REACHED_ZERO
} epsode_path_status;

typedef enum epsode_row_set { EPSODE_SET_N, EPSODE_SET_Z, EPSODE_SET_P } epsode_row_set;
typedef enum epsode_criterion { EPSODE_AIC, EPSODE_BIC } epsode_criterion;

/* Message of the last failed call on this thread ("" when none). */
EPSODE_API const char* epsode_last_error(void);
EPSODE_API const char* epsode_status_name(epsode_status status);

/* ---- problems ---------------------------------------------------------- */

EPSODE_API epsode_status epsode_problem_load(const char* spec_path, epsode_problem** out);
/* Parses JSON text; relative data file names resolve against base_dir. */
EPSODE_API epsode_status epsode_problem_parse(const char* json_text, const char* base_dir,
                                              epsode_problem** out);
EPSODE_API void epsode_problem_free(epsode_problem* problem);

EPSODE_API size_t epsode_problem_params(const epsode_problem* problem);
EPSODE_API size_t epsode_problem_equalities(const epsode_problem* problem);
EPSODE_API size_t epsode_problem_inequalities(const epsode_problem* problem);
/* Loss name, e.g. "quadratic" or "glm(logistic)". Owned by the problem. */
EPSODE_API const char* epsode_problem_loss_name(const epsode_problem* problem);

/* Overrides of the options read from the spec. */
EPSODE_API epsode_status epsode_problem_set_mode(epsode_problem* problem, epsode_mode mode);
EPSODE_API epsode_status epsode_problem_set_direction(epsode_problem* problem,
                                                      epsode_direction direction);
EPSODE_API epsode_status epsode_problem_set_rho_max(epsode_problem* problem, double rho_max);
EPSODE_API epsode_status epsode_problem_set_rel_tol(epsode_problem* problem, double rel_tol);

/* ---- solution paths ---------------------------------------------------- */

EPSODE_API epsode_status epsode_solve(const epsode_problem* problem, epsode_path** out);
EPSODE_API void epsode_path_free(epsode_path* path);

EPSODE_API epsode_path_status epsode_path_status_of(const epsode_path* path);
EPSODE_API const char* epsode_path_status_name(epsode_path_status status);
EPSODE_API void epsode_path_rho_range(const epsode_path* path, double* rho_start, double* rho_end);
/* "direct", "nullspace" or "tableau"; "forward" or "backward". */
EPSODE_API const char* epsode_path_mode_name(const epsode_path* path);
EPSODE_API const char* epsode_path_direction_name(const epsode_path* path);
/* Nonzero when df = p - |Z| is only a heuristic for the loss. */
EPSODE_API int epsode_path_df_heuristic(const epsode_path* path);

typedef struct epsode_kink {
  double rho;
  size_t row;        /* stacked index: equality rows first */
  int is_equality;   /* nonzero for an equality row */
  size_t local_row;  /* index within its own block (V or W) */
  epsode_row_set from;
  epsode_row_set to;
  size_t df_before;
  size_t df_after;
  int simultaneous;
} epsode_kink;

EPSODE_API size_t epsode_path_kink_count(const epsode_path* path);
EPSODE_API epsode_status epsode_path_kink(const epsode_path* path, size_t index, epsode_kink* out);

EPSODE_API size_t epsode_path_warning_count(const epsode_path* path);
/* Owned by the path; NULL when the index is out of range. */
EPSODE_API const char* epsode_path_warning(const epsode_path* path, size_t index);

/* beta(rho) into a caller buffer of epsode_problem_params() entries. */
EPSODE_API epsode_status epsode_path_evaluate(const epsode_path* path, double rho, double* beta);

typedef struct epsode_sample {
  double rho;
  double df;
  double neg_loglik;
  double aic;
  double bic;
} epsode_sample;

/* Report grid: endpoints, kinks and the uniform grid of the spec's sample
   count, in path order. */
EPSODE_API size_t epsode_path_sample_count(const epsode_path* path);
/* beta may be NULL; otherwise it receives epsode_problem_params() entries. */
EPSODE_API epsode_status epsode_path_sample(const epsode_path* path, size_t index,
                                            epsode_sample* out, double* beta);
/* Sample minimizing the criterion (first one on ties). */
EPSODE_API epsode_status epsode_path_select(const epsode_path* path, epsode_criterion criterion,
                                            size_t* index);

/* ---- cross validation -------------------------------------------------- */

EPSODE_API epsode_status epsode_crossval_run(const epsode_problem* problem, size_t folds,
                                             uint64_t seed, epsode_crossval** out);
EPSODE_API void epsode_crossval_free(epsode_crossval* cv);

EPSODE_API size_t epsode_crossval_folds(const epsode_crossval* cv);
EPSODE_API size_t epsode_crossval_grid_size(const epsode_crossval* cv);
EPSODE_API double epsode_crossval_rho(const epsode_crossval* cv, size_t index);
/* Held-out loss summed over the fold's observations. */
EPSODE_API double epsode_crossval_fold_error(const epsode_crossval* cv, size_t fold, size_t index);
/* Mean held-out loss per observation and its standard error across folds. */
EPSODE_API double epsode_crossval_mean(const epsode_crossval* cv, size_t index);
EPSODE_API double epsode_crossval_standard_error(const epsode_crossval* cv, size_t index);
EPSODE_API double epsode_crossval_best_rho(const epsode_crossval* cv);
EPSODE_API size_t epsode_crossval_observations(const epsode_crossval* cv);
EPSODE_API size_t epsode_crossval_fold_of(const epsode_crossval* cv, size_t observation);

/* ---- reference solvers ------------------------------------------------- */

EPSODE_API epsode_status epsode_oracle_pava(const double* y, size_t n, int nondecreasing,
                                            double* out);
EPSODE_API epsode_status epsode_oracle_quadrature_j(int a, int b, double r, double s,
                                                    double* out);
/* sigma_hat and omega are p x p, column-major. */
EPSODE_API epsode_status epsode_oracle_glasso(const double* sigma_hat, size_t p, double rho,
                                              double* omega);
EPSODE_API epsode_status epsode_oracle_glasso_grid(const double* sigma_hat, double rho,
                                                   double* omega);
/* Fixed-rho penalized minimizer of a loaded problem. */
EPSODE_API epsode_status epsode_oracle_penalized(const epsode_problem* problem, double rho,
                                                 double* beta);

#ifdef __cplusplus
}
#endif

#endif /* EPSODE_H */
