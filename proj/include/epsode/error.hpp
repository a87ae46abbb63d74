#pragma once

#include <stdexcept>
#include <string>

namespace epsode {

enum class ErrorCode {
  invalid_argument = 1,
  spec_error,
  io_error,
  domain_error,
  pivot_too_small,
  rank_deficient_active_set,
  not_strictly_convex,
  reduced_hessian_singular,
  divergence,
  step_size_underflow,
  non_finite_derivative,
  no_convergence,
  unsupported_loss,
  dimension_too_small,
  non_increasing_grid,
  invalid_edge,
  overlap,
  path_halted,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace epsode
