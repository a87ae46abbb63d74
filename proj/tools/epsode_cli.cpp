// Command-line front end over the C interface of libepsode.
//
//   epsode solve <spec> --out <dir> [--mode M] [--direction D] [--rho-max R] [--rel-tol T]
//   epsode crossval <spec> --folds k --seed s --out <dir>
//   epsode oracle <name> <args...>
//
// Exit status: 0 on success, 1 for usage and specification errors, 2 when
// the solver fails. Nothing is written to the output directory on failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "epsode.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitSpec = 1;
constexpr int kExitSolver = 2;

struct Failure {
  int exit_code;
  std::string message;
};

using ProblemPtr = std::unique_ptr<epsode_problem, decltype(&epsode_problem_free)>;
using PathPtr = std::unique_ptr<epsode_path, decltype(&epsode_path_free)>;
using CrossvalPtr = std::unique_ptr<epsode_crossval, decltype(&epsode_crossval_free)>;

void check(epsode_status status, int exit_code, const std::string& context) {
  if (status == EPSODE_OK) return;
  throw Failure{exit_code, context + ": " + epsode_status_name(status) + ": " + epsode_last_error()};
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* set_name(epsode_row_set s) {
  switch (s) {
    case EPSODE_SET_N: return "N";
    case EPSODE_SET_Z: return "Z";
    case EPSODE_SET_P: return "P";
  }
  return "?";
}

ProblemPtr load(const std::string& spec_path) {
  epsode_problem* raw = nullptr;
  check(epsode_problem_load(spec_path.c_str(), &raw), kExitSpec, spec_path);
  return ProblemPtr(raw, &epsode_problem_free);
}

// All files are rendered in memory first and written only once every
// computation has succeeded.
void write_outputs(const fs::path& dir, const std::vector<std::pair<std::string, std::string>>& files) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Failure{kExitSpec, "cannot create " + dir.string() + ": " + ec.message()};
  for (const auto& [name, content] : files) {
    std::ofstream out(dir / name, std::ios::binary);
    out << content;
    if (!out) throw Failure{kExitSpec, "cannot write " + (dir / name).string()};
  }
}

struct SolveArgs {
  std::string spec;
  std::string out;
  std::optional<std::string> mode;
  std::optional<std::string> direction;
  std::optional<double> rho_max;
  std::optional<double> rel_tol;
};

int run_solve(const SolveArgs& args) {
  ProblemPtr problem = load(args.spec);
  if (args.mode) {
    const epsode_mode m = *args.mode == "direct"      ? EPSODE_MODE_DIRECT
                          : *args.mode == "nullspace" ? EPSODE_MODE_NULLSPACE
                                                      : EPSODE_MODE_TABLEAU;
    check(epsode_problem_set_mode(problem.get(), m), kExitSpec, "--mode");
  }
  if (args.direction) {
    check(epsode_problem_set_direction(problem.get(),
                                       *args.direction == "forward" ? EPSODE_FORWARD : EPSODE_BACKWARD),
          kExitSpec, "--direction");
  }
  if (args.rho_max) check(epsode_problem_set_rho_max(problem.get(), *args.rho_max), kExitSpec, "--rho-max");
  if (args.rel_tol) check(epsode_problem_set_rel_tol(problem.get(), *args.rel_tol), kExitSpec, "--rel-tol");

  epsode_path* raw = nullptr;
  check(epsode_solve(problem.get(), &raw), kExitSolver, "solve");
  PathPtr path(raw, &epsode_path_free);
  const size_t p = epsode_problem_params(problem.get());

  std::ostringstream csv;
  csv << "rho";
  for (size_t j = 1; j <= p; ++j) csv << ",beta_" << j;
  csv << ",df,neg_loglik,aic,bic\n";
  std::vector<double> beta(p);
  const size_t samples = epsode_path_sample_count(path.get());
  for (size_t i = 0; i < samples; ++i) {
    epsode_sample s;
    check(epsode_path_sample(path.get(), i, &s, beta.data()), kExitSolver, "sample");
    csv << num(s.rho);
    for (double b : beta) csv << ',' << num(b);
    csv << ',' << num(s.df) << ',' << num(s.neg_loglik) << ',' << num(s.aic) << ',' << num(s.bic) << '\n';
  }

  std::ostringstream kinks;
  const size_t kink_count = epsode_path_kink_count(path.get());
  for (size_t i = 0; i < kink_count; ++i) {
    epsode_kink k;
    check(epsode_path_kink(path.get(), i, &k), kExitSolver, "kink");
    nlohmann::ordered_json line;
    line["rho"] = k.rho;
    line["event"] = k.to == EPSODE_SET_Z ? "residual_hit" : "coefficient_hit";
    line["row"] = k.row;
    line["kind"] = k.is_equality ? "equality" : "inequality";
    line["local_row"] = k.local_row;
    line["from"] = set_name(k.from);
    line["to"] = set_name(k.to);
    line["df_before"] = k.df_before;
    line["df_after"] = k.df_after;
    line["simultaneous"] = k.simultaneous != 0;
    kinks << line.dump() << '\n';
  }

  double rho_start = 0.0, rho_end = 0.0;
  epsode_path_rho_range(path.get(), &rho_start, &rho_end);
  std::ostringstream report;
  report << "loss: " << epsode_problem_loss_name(problem.get()) << '\n'
         << "parameters: " << p << '\n'
         << "equality rows: " << epsode_problem_equalities(problem.get()) << '\n'
         << "inequality rows: " << epsode_problem_inequalities(problem.get()) << '\n'
         << "direction: " << epsode_path_direction_name(path.get()) << '\n'
         << "mode: " << epsode_path_mode_name(path.get()) << '\n'
         << "status: " << epsode_path_status_name(epsode_path_status_of(path.get())) << '\n'
         << "rho start: " << num(rho_start) << '\n'
         << "rho end: " << num(rho_end) << '\n'
         << "kinks: " << kink_count << '\n';
  for (const auto& [criterion, label] : {std::pair{EPSODE_AIC, "AIC"}, std::pair{EPSODE_BIC, "BIC"}}) {
    size_t best = 0;
    check(epsode_path_select(path.get(), criterion, &best), kExitSolver, "select");
    epsode_sample s;
    check(epsode_path_sample(path.get(), best, &s, nullptr), kExitSolver, "sample");
    report << label << " choice: rho " << num(s.rho) << ", df " << num(s.df) << ", "
           << label << ' ' << num(criterion == EPSODE_AIC ? s.aic : s.bic) << '\n';
  }
  if (epsode_path_df_heuristic(path.get())) {
    report << "note: df = p - |Z| is a heuristic for this loss; AIC and BIC are indicative only\n";
  }
  const size_t warnings = epsode_path_warning_count(path.get());
  for (size_t i = 0; i < warnings; ++i) report << "warning: " << epsode_path_warning(path.get(), i) << '\n';

  write_outputs(args.out, {{"path.csv", csv.str()}, {"kinks.jsonl", kinks.str()}, {"report.txt", report.str()}});
  return 0;
}

struct CrossvalArgs {
  std::string spec;
  std::string out;
  size_t folds = 5;
  uint64_t seed = 1;
};

int run_crossval(const CrossvalArgs& args) {
  ProblemPtr problem = load(args.spec);
  epsode_crossval* raw = nullptr;
  const epsode_status status = epsode_crossval_run(problem.get(), args.folds, args.seed, &raw);
  const bool request_error = status == EPSODE_UNSUPPORTED_LOSS || status == EPSODE_INVALID_ARGUMENT;
  check(status, request_error ? kExitSpec : kExitSolver, "crossval");
  CrossvalPtr cv(raw, &epsode_crossval_free);

  const size_t k = epsode_crossval_folds(cv.get());
  const size_t grid = epsode_crossval_grid_size(cv.get());
  std::ostringstream csv;
  csv << "rho,mean,standard_error";
  for (size_t f = 1; f <= k; ++f) csv << ",fold_" << f;
  csv << '\n';
  for (size_t i = 0; i < grid; ++i) {
    csv << num(epsode_crossval_rho(cv.get(), i)) << ',' << num(epsode_crossval_mean(cv.get(), i)) << ','
        << num(epsode_crossval_standard_error(cv.get(), i));
    for (size_t f = 0; f < k; ++f) csv << ',' << num(epsode_crossval_fold_error(cv.get(), f, i));
    csv << '\n';
  }

  std::ostringstream folds;
  folds << "observation,fold\n";
  const size_t n = epsode_crossval_observations(cv.get());
  for (size_t i = 0; i < n; ++i) folds << i + 1 << ',' << epsode_crossval_fold_of(cv.get(), i) + 1 << '\n';

  std::ostringstream report;
  report << "loss: " << epsode_problem_loss_name(problem.get()) << '\n'
         << "observations: " << n << '\n'
         << "folds: " << k << '\n'
         << "seed: " << args.seed << '\n'
         << "grid points: " << grid << '\n'
         << "best rho: " << num(epsode_crossval_best_rho(cv.get())) << '\n';

  write_outputs(args.out, {{"cv.csv", csv.str()}, {"folds.csv", folds.str()}, {"report.txt", report.str()}});
  return 0;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw Failure{kExitSpec, "not a number: '" + item + "'"};
    out.push_back(v);
  }
  if (out.empty()) throw Failure{kExitSpec, "empty list"};
  return out;
}

double parse_scalar(const std::string& text) {
  const auto v = parse_list(text);
  if (v.size() != 1) throw Failure{kExitSpec, "expected one number, got '" + text + "'"};
  return v.front();
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + num(v[i]);
  return out;
}

const char* kOracleUsage =
    "oracles:\n"
    "  pava <y1,y2,...> [nonincreasing]\n"
    "  quadrature_j <a> <b> <r> <s>\n"
    "  glasso <s11,s12,...,spp> <rho>       (p x p covariance, row by row)\n"
    "  glasso_grid <s11,s12,s21,s22> <rho>\n"
    "  penalized <spec> <rho>\n";

int run_oracle(const std::string& name, const std::vector<std::string>& args) {
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (args.size() < lo || args.size() > hi) throw Failure{kExitSpec, "wrong arguments for " + name + "\n" + kOracleUsage};
  };
  if (name == "pava") {
    need(1, 2);
    const auto y = parse_list(args[0]);
    bool up = true;
    if (args.size() == 2) {
      if (args[1] != "nonincreasing" && args[1] != "nondecreasing") throw Failure{kExitSpec, "unknown order '" + args[1] + "'"};
      up = args[1] == "nondecreasing";
    }
    std::vector<double> out(y.size());
    check(epsode_oracle_pava(y.data(), y.size(), up ? 1 : 0, out.data()), kExitSolver, "pava");
    std::cout << join(out) << '\n';
    return 0;
  }
  if (name == "quadrature_j") {
    need(4, 4);
    const double a = parse_scalar(args[0]), b = parse_scalar(args[1]);
    if (a != static_cast<int>(a) || b != static_cast<int>(b)) throw Failure{kExitSpec, "a and b must be integers"};
    double out = 0.0;
    check(epsode_oracle_quadrature_j(static_cast<int>(a), static_cast<int>(b), parse_scalar(args[2]),
                                     parse_scalar(args[3]), &out),
          kExitSpec, "quadrature_j");
    std::cout << num(out) << '\n';
    return 0;
  }
  if (name == "glasso" || name == "glasso_grid") {
    need(2, 2);
    const auto s = parse_list(args[0]);
    std::size_t p = 0;
    while (p * p < s.size()) ++p;
    if (p * p != s.size()) throw Failure{kExitSpec, "covariance must have p*p entries"};
    if (name == "glasso_grid" && p != 2) throw Failure{kExitSpec, "glasso_grid takes a 2 x 2 covariance"};
    std::vector<double> omega(s.size());
    const double rho = parse_scalar(args[1]);
    // Row-by-row input of a symmetric matrix is also its column-major form.
    check(name == "glasso" ? epsode_oracle_glasso(s.data(), p, rho, omega.data())
                           : epsode_oracle_glasso_grid(s.data(), rho, omega.data()),
          kExitSolver, name);
    for (std::size_t i = 0; i < p; ++i) {
      std::vector<double> row;
      for (std::size_t j = 0; j < p; ++j) row.push_back(omega[i + j * p]);
      std::cout << join(row) << '\n';
    }
    return 0;
  }
  if (name == "penalized") {
    need(2, 2);
    ProblemPtr problem = load(args[0]);
    std::vector<double> beta(epsode_problem_params(problem.get()));
    check(epsode_oracle_penalized(problem.get(), parse_scalar(args[1]), beta.data()), kExitSolver, "penalized");
    std::cout << join(beta) << '\n';
    return 0;
  }
  throw Failure{kExitSpec, "unknown oracle '" + name + "'\n" + kOracleUsage};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact solution paths of penalized convex problems"};
  app.require_subcommand(1);

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "trace the solution path of a problem spec");
  solve_cmd->add_option("spec", solve.spec, "problem file (JSON)")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--out", solve.out, "output directory")->required();
  solve_cmd->add_option("--mode", solve.mode, "direct, nullspace or tableau")
      ->check(CLI::IsMember({"direct", "nullspace", "tableau"}));
  solve_cmd->add_option("--direction", solve.direction, "forward or backward")
      ->check(CLI::IsMember({"forward", "backward"}));
  solve_cmd->add_option("--rho-max", solve.rho_max, "largest rho of a forward run")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--rel-tol", solve.rel_tol, "relative integration tolerance")->check(CLI::PositiveNumber);

  CrossvalArgs crossval;
  auto* cv_cmd = app.add_subcommand("crossval", "k-fold cross validation along the path");
  cv_cmd->add_option("spec", crossval.spec, "problem file (JSON)")->required()->check(CLI::ExistingFile);
  cv_cmd->add_option("--folds", crossval.folds, "number of folds")->required()->check(CLI::Range(2, 1000000));
  cv_cmd->add_option("--seed", crossval.seed, "seed of the fold assignment")->capture_default_str();
  cv_cmd->add_option("--out", crossval.out, "output directory")->required();

  std::string oracle_name;
  auto* oracle_cmd = app.add_subcommand("oracle", "run a reference solver");
  oracle_cmd->footer(kOracleUsage);
  oracle_cmd->add_option("name", oracle_name, "oracle name")->required();
  // Arguments after the name are passed through untouched so that negative
  // numbers are not mistaken for flags.
  oracle_cmd->prefix_command();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitSpec;
  }

  try {
    if (*solve_cmd) return run_solve(solve);
    if (*cv_cmd) return run_crossval(crossval);
    return run_oracle(oracle_name, oracle_cmd->remaining());
  } catch (const Failure& f) {
    std::cerr << "epsode: " << f.message << '\n';
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "epsode: " << e.what() << '\n';
    return kExitSolver;
  }
}
