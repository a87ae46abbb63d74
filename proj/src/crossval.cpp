#include "epsode/crossval.hpp"

#include <cmath>
#include <future>
#include <random>

#include "epsode/error.hpp"

namespace epsode {

std::vector<Index> assign_folds(Index n, Index k, std::uint64_t seed) {
  if (k < 2 || k > n) fail(ErrorCode::invalid_argument, "fold count must lie in [2, n]");
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::mt19937_64 rng(seed);
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  std::vector<Index> fold(static_cast<std::size_t>(n));
  for (Index pos = 0; pos < n; ++pos) fold[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = pos % k;
  return fold;
}

CrossValidation cross_validate(const LossModel& m, const ConstraintSystem& cs,
                               const PathOptions& opts, Index folds, std::uint64_t seed,
                               int sample_intervals) {
  const Index n = m.observations();
  if (n == 0) fail(ErrorCode::unsupported_loss, m.name() + " loss cannot be split by observation");

  CrossValidation cv;
  cv.fold_of = assign_folds(n, folds, seed);
  cv.grid = run_path(m, cs, opts).sample_grid(sample_intervals);

  auto run_fold = [&](Index f) {
    std::vector<Index> train, test;
    for (Index i = 0; i < n; ++i) (cv.fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    const auto train_loss = m.restrict_to(train);
    const auto test_loss = m.restrict_to(test);
    const PathSolution path = run_path(*train_loss, cs, opts);
    std::vector<double> err;
    err.reserve(cv.grid.size());
    for (double rho : cv.grid) err.push_back(test_loss->value(path.beta_at(rho)));
    return err;
  };

  std::vector<std::future<std::vector<double>>> jobs;
  for (Index f = 0; f < folds; ++f) jobs.push_back(std::async(std::launch::async, run_fold, f));
  for (auto& job : jobs) cv.errors.push_back(job.get());

  const auto g = cv.grid.size();
  const double k = static_cast<double>(folds);
  cv.mean.assign(g, 0.0);
  cv.standard_error.assign(g, 0.0);
  std::size_t best = 0;
  for (std::size_t j = 0; j < g; ++j) {
    // Fold errors are sums over held-out observations; normalize per observation.
    double total = 0.0;
    for (const auto& e : cv.errors) total += e[j];
    cv.mean[j] = total / static_cast<double>(n);
    double ss = 0.0;
    for (Index f = 0; f < folds; ++f) {
      Index size = 0;
      for (Index fo : cv.fold_of) size += fo == f;
      const double per_obs = cv.errors[static_cast<std::size_t>(f)][j] / static_cast<double>(size);
      ss += (per_obs - cv.mean[j]) * (per_obs - cv.mean[j]);
    }
    cv.standard_error[j] = std::sqrt(ss / (k - 1.0) / k);
    if (cv.mean[j] < cv.mean[best]) best = j;
  }
  cv.best_rho = cv.grid[best];
  return cv;
}

}  // namespace epsode
