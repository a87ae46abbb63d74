#include "epsode/j_kernel.hpp"

#include <cmath>

#include "epsode/error.hpp"

namespace epsode {

namespace {

void check_order(int a, int b) {
  if (a < 0 || b < 0 || a + b > 3) {
    fail(ErrorCode::invalid_argument, "j_kernel supports a, b >= 0 with a + b <= 3");
  }
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

double j_kernel_series(int a, int b, double r, double s) {
  check_order(a, b);
  // J_ab(r,s) = e^r a! b! / (a+b+1)! * 1F1(b+1; a+b+2; s-r), and by the
  // reflection J_ab(r,s) = J_ba(s,r) we always expand with a nonnegative
  // argument so the series has no cancellation.
  if (s < r) return j_kernel_series(b, a, s, r);
  const double z = s - r;
  const double upper = b + 1.0;
  const double lower = a + b + 2.0;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 0; k < 2000; ++k) {
    term *= (upper + k) / (lower + k) * z / (k + 1.0);
    sum += term;
    if (term <= 1e-17 * sum) break;
  }
  return std::exp(r) * factorial(a) * factorial(b) / factorial(a + b + 1) * sum;
}

double j_kernel_closed(int a, int b, double r, double s) {
  check_order(a, b);
  const double d = s - r;
  if (d == 0.0) {
    return std::exp(r) * factorial(a) * factorial(b) / factorial(a + b + 1);
  }
  const double er = std::exp(r);
  const double es = std::exp(s);
  const double diff = es - er;
  const double j00 = diff / d;
  const double j10 = -er / d + diff / (d * d);
  const double j01 = es / d - diff / (d * d);
  const double j11 = (es + er) / (d * d) - 2.0 * diff / (d * d * d);

  // Lower a: J_ab = (a+b+d)/d J_{a-1,b} - (a-1)/d J_{a-2,b}.
  // Lower b: J_ab = -(a+b-d)/d J_{a,b-1} + (b-1)/d J_{a,b-2}.
  const auto down_a = [d](int aa, int bb, double prev1, double prev2) {
    return (aa + bb + d) / d * prev1 - (aa - 1) / d * prev2;
  };
  const auto down_b = [d](int aa, int bb, double prev1, double prev2) {
    return -(aa + bb - d) / d * prev1 + (bb - 1) / d * prev2;
  };

  switch (a * 4 + b) {
    case 0: return j00;
    case 4: return j10;
    case 1: return j01;
    case 5: return j11;
    case 8: return down_a(2, 0, j10, j00);
    case 2: return down_b(0, 2, j01, j00);
    case 9: return down_a(2, 1, j11, j01);
    case 6: return down_b(1, 2, j11, j10);
    case 12: return down_a(3, 0, down_a(2, 0, j10, j00), j10);
    case 3: return down_b(0, 3, down_b(0, 2, j01, j00), j01);
    default: break;
  }
  fail(ErrorCode::invalid_argument, "unreachable j_kernel order");
}

double j_kernel(int a, int b, double r, double s) {
  if (std::abs(s - r) < kJSeriesSwitch) return j_kernel_series(a, b, r, s);
  return j_kernel_closed(a, b, r, s);
}

}  // namespace epsode
