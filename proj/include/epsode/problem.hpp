#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "epsode/constraints.hpp"
#include "epsode/loss.hpp"
#include "epsode/path.hpp"

namespace epsode {

/// A loss, a penalty geometry and solver options, as read from a JSON
/// problem file. See README for the format.
struct ProblemSpec {
  std::shared_ptr<const LossModel> loss;
  ConstraintSystem constraints;
  PathOptions options;
  // Uniform sampling intervals for reports (at least 20).
  int sample_intervals = 20;
};

/// Throws Error with ErrorCode::spec_error (format), ErrorCode::io_error
/// (unreadable files) or a builder error code.
ProblemSpec load_problem(const std::filesystem::path& spec_file);
ProblemSpec parse_problem(std::string_view json_text, const std::filesystem::path& base_dir);

/// Numeric CSV (RFC 4180 quoting, '#' comment lines, blank lines skipped).
Matrix read_csv_matrix(const std::filesystem::path& file);
/// A single row or a single column.
Vector read_csv_vector(const std::filesystem::path& file);

}  // namespace epsode
