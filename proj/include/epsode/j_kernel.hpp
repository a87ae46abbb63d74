#pragma once

namespace epsode {

// Below this |s - r| the series branch is used instead of the closed forms.
inline constexpr double kJSeriesSwitch = 1.0;

/// J_ab(r, s) = integral over [0, 1] of (1-t)^a t^b exp((1-t) r + t s) dt,
/// for a, b >= 0 and a + b <= 3.
///
/// Away from the diagonal the closed forms for J_00, J_10, J_01, J_11 are
/// lifted to higher orders with the two three-term recurrences. Near r = s
/// those recurrences lose every significant digit, so the confluent
/// hypergeometric series (expanded around the smaller argument, where all
/// terms are positive) is summed instead.
double j_kernel(int a, int b, double r, double s);

// The two branches, exposed for continuity checks.
double j_kernel_closed(int a, int b, double r, double s);
double j_kernel_series(int a, int b, double r, double s);

}  // namespace epsode
