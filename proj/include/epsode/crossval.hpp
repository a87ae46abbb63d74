#pragma once

#include <cstdint>
#include <vector>

#include "epsode/constraints.hpp"
#include "epsode/loss.hpp"
#include "epsode/path.hpp"

namespace epsode {

struct CrossValidation {
  std::vector<double> grid;                // rho values, in path order
  std::vector<Index> fold_of;              // fold of each observation
  std::vector<std::vector<double>> errors; // errors[fold][grid index]: held-out loss
  std::vector<double> mean;                // mean held-out loss per observation
  std::vector<double> standard_error;
  double best_rho = 0.0;
};

/// Fold labels 0..k-1 for n observations: a seeded Fisher-Yates shuffle of
/// 0..n-1, position i of the shuffled order going to fold i mod k.
std::vector<Index> assign_folds(Index n, Index k, std::uint64_t seed);

/// k-fold cross validation over the sample grid of the full-data path (which
/// contains every kink). Folds are solved concurrently. Throws
/// ErrorCode::unsupported_loss for losses without observation splitting.
CrossValidation cross_validate(const LossModel& m, const ConstraintSystem& cs,
                               const PathOptions& opts, Index folds, std::uint64_t seed,
                               int sample_intervals = 20);

}  // namespace epsode
