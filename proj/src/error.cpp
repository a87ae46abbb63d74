#include "epsode/error.hpp"

namespace epsode {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::spec_error: return "SpecError";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::domain_error: return "DomainError";
    case ErrorCode::pivot_too_small: return "PivotTooSmall";
    case ErrorCode::rank_deficient_active_set: return "RankDeficientActiveSet";
    case ErrorCode::not_strictly_convex: return "NotStrictlyConvex";
    case ErrorCode::reduced_hessian_singular: return "ReducedHessianSingular";
    case ErrorCode::divergence: return "DivergenceError";
    case ErrorCode::step_size_underflow: return "StepSizeUnderflow";
    case ErrorCode::non_finite_derivative: return "NonFiniteDerivative";
    case ErrorCode::no_convergence: return "NoConvergence";
    case ErrorCode::unsupported_loss: return "UnsupportedLoss";
    case ErrorCode::dimension_too_small: return "DimensionTooSmall";
    case ErrorCode::non_increasing_grid: return "NonIncreasingGrid";
    case ErrorCode::invalid_edge: return "InvalidEdge";
    case ErrorCode::overlap: return "OverlapError";
    case ErrorCode::path_halted: return "PathHalted";
  }
  return "Unknown";
}

}  // namespace epsode
