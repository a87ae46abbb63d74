#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "epsode/error.hpp"
#include "epsode/j_kernel.hpp"
#include "epsode/losses.hpp"
#include "support.hpp"

using namespace epsode;
using testing::max_abs;
using testing::relative_error;

namespace {

void check_derivatives(const LossModel& m, const Vector& x, testing::Rng& rng) {
  const Vector g = m.gradient(x);
  CHECK(relative_error(g, testing::fd_gradient(m, x)) < 1e-5);
  const SymMatrix h = m.hessian(x);
  CHECK(max_abs(h - h.transpose()) <= 1e-12 * std::max(1.0, max_abs(h)));
  CHECK(relative_error(h, testing::fd_hessian(m, x)) < 1e-5);
  CHECK(h.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff() > -1e-10 * std::max(1.0, max_abs(h)));
  for (int k = 0; k < 3; ++k) {
    const Vector v = rng.normal_vector(m.dim());
    const SymMatrix d = m.dh_action(x, v);
    CHECK(max_abs(d - d.transpose()) <= 1e-12 * std::max(1.0, max_abs(d)));
    CHECK(relative_error(d, testing::fd_dh_action(m, x, v)) < 1e-4);
  }
}

void check_midpoint_convexity(const LossModel& m, const Vector& a, const Vector& b) {
  const double mid = m.value((a + b) / 2.0);
  CHECK(mid <= (m.value(a) + m.value(b)) / 2.0 + 1e-12 * (1.0 + std::abs(mid)));
}

Matrix design(testing::Rng& rng, Index n, Index p) { return rng.normal_matrix(n, p) / std::sqrt(static_cast<double>(p)); }

Vector bernoulli(testing::Rng& rng, const Matrix& x, const Vector& beta) {
  Vector y(x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    const double mu = 1.0 / (1.0 + std::exp(-x.row(i).dot(beta)));
    y(i) = rng.uniform(0, 1) < mu ? 1.0 : 0.0;
  }
  return y;
}

Vector poisson_counts(testing::Rng& rng, const Matrix& x, const Vector& beta) {
  Vector y(x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    std::poisson_distribution<int> pois(std::exp(x.row(i).dot(beta)));
    y(i) = pois(rng.engine());
  }
  return y;
}

// Random precision matrix packed in the loss's parameter order.
Vector ggm_point(const GgmLoss& m, testing::Rng& rng) { return m.vectorize(rng.spd(m.nodes())); }

}  // namespace

TEST_CASE("quadratic loss values and derivatives") {
  Vector b(2);
  b << 2.0, -1.0;
  const QuadraticLoss m = QuadraticLoss::centered(b);
  CHECK(m.value(b) == 0.0);
  CHECK(max_abs(m.gradient(b)) == 0.0);
  CHECK(max_abs(m.hessian(b) - Matrix::Identity(2, 2)) == 0.0);
  Vector v(2);
  v << 0.3, 7.0;
  CHECK(max_abs(m.dh_action(b, v)) == 0.0);
  CHECK(unconstrained_minimum(m) == b);
}

TEST_CASE("least squares derivatives") {
  testing::Rng rng(1);
  const QuadraticLoss m = QuadraticLoss::least_squares(design(rng, 12, 4), rng.normal_vector(12));
  const Vector x = rng.normal_vector(4);
  check_derivatives(m, x, rng);
  check_midpoint_convexity(m, x, rng.normal_vector(4));
  const Vector xmin = unconstrained_minimum(m);
  CHECK(max_abs(m.gradient(xmin)) < 1e-9 * (1.0 + std::abs(m.value(xmin))));
}

TEST_CASE("logistic loss at zero with one observation is log 2") {
  const GlmLoss m(Matrix::Ones(1, 1), Vector::Ones(1), GlmFamily::logistic);
  CHECK(m.value(Vector::Zero(1)) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("GLM derivatives match finite differences") {
  testing::Rng rng(2);
  const Matrix x = design(rng, 10, 3);
  const Vector beta = rng.normal_vector(3);
  SUBCASE("normal") {
    const GlmLoss m(x, x * beta + rng.normal_vector(10), GlmFamily::normal, 1.5);
    check_derivatives(m, rng.normal_vector(3), rng);
  }
  SUBCASE("logistic") {
    const GlmLoss m(x, bernoulli(rng, x, beta), GlmFamily::logistic);
    const Vector at = rng.normal_vector(3);
    check_derivatives(m, at, rng);
    check_midpoint_convexity(m, at, rng.normal_vector(3));
  }
  SUBCASE("poisson") {
    const GlmLoss m(x, poisson_counts(rng, x, beta), GlmFamily::poisson);
    check_derivatives(m, rng.normal_vector(3) * 0.5, rng);
  }
}

TEST_CASE("logistic Hessian is X' diag(mu (1 - mu)) X") {
  testing::Rng rng(3);
  const Matrix x = design(rng, 30, 4);
  const GlmLoss m(x, bernoulli(rng, x, rng.normal_vector(4)), GlmFamily::logistic);
  const Vector b = rng.normal_vector(4);
  Vector w(30);
  for (Index i = 0; i < 30; ++i) {
    const double mu = 1.0 / (1.0 + std::exp(-x.row(i).dot(b)));
    w(i) = mu * (1.0 - mu);
  }
  const Matrix expected = x.transpose() * w.asDiagonal() * x;
  CHECK(max_abs(m.hessian(b) - expected) < 1e-10);
}

TEST_CASE("GLM responses outside the family range are rejected") {
  Vector y(2);
  y << 0.0, 2.0;
  CHECK_THROWS_AS(GlmLoss(Matrix::Ones(2, 1), y, GlmFamily::logistic), Error);
  y << 1.0, 0.5;
  CHECK_THROWS_AS(GlmLoss(Matrix::Ones(2, 1), y, GlmFamily::poisson), Error);
}

TEST_CASE("quasi-likelihood with a canonical link reproduces the GLM") {
  testing::Rng rng(4);
  const Matrix x = design(rng, 15, 3);
  const Vector b = rng.normal_vector(3);
  SUBCASE("logit and binomial variance") {
    const Vector y = bernoulli(rng, x, rng.normal_vector(3));
    const GlmLoss glm(x, y, GlmFamily::logistic);
    const QuasiLoss quasi(x, y, Link::logit(), VarianceFunction::binomial);
    CHECK(max_abs(quasi.gradient(b) - glm.gradient(b)) < 1e-10);
    CHECK(max_abs(quasi.hessian(b) - glm.hessian(b)) < 1e-10);
  }
  SUBCASE("log and mu variance") {
    const Vector y = poisson_counts(rng, x, rng.normal_vector(3) * 0.5);
    const GlmLoss glm(x, y, GlmFamily::poisson);
    const QuasiLoss quasi(x, y, Link::log(), VarianceFunction::mu);
    CHECK(max_abs(quasi.gradient(b) - glm.gradient(b)) < 1e-10);
    CHECK(max_abs(quasi.hessian(b) - glm.hessian(b)) < 1e-10);
  }
}

TEST_CASE("quasi-likelihood derivatives match finite differences") {
  testing::Rng rng(5);
  const Matrix x = design(rng, 12, 3);
  SUBCASE("probit link with binomial variance") {
    const Vector y = bernoulli(rng, x, rng.normal_vector(3));
    const QuasiLoss m(x, y, Link::probit(), VarianceFunction::binomial);
    check_derivatives(m, rng.normal_vector(3) * 0.5, rng);
  }
  SUBCASE("log link with squared-mean variance") {
    Vector y(12);
    for (Index i = 0; i < 12; ++i) y(i) = rng.uniform(0.5, 3.0);
    const QuasiLoss m(x, y, Link::log(), VarianceFunction::mu_squared);
    check_derivatives(m, rng.normal_vector(3) * 0.3, rng);
  }
  SUBCASE("identity link with constant variance") {
    const QuasiLoss m(x, rng.normal_vector(12), Link::identity(), VarianceFunction::constant, 2.0);
    check_derivatives(m, rng.normal_vector(3), rng);
  }
}

TEST_CASE("GGM value at the identity") {
  for (Index p : {2, 3, 5}) {
    const GgmLoss m(SymMatrix::Identity(p, p));
    CHECK(m.value(m.vectorize(Matrix::Identity(p, p))) == doctest::Approx(static_cast<double>(p)));
  }
}

TEST_CASE("GGM parameter layout is column-major lower triangle") {
  CHECK(GgmLoss::param_index(3, 0, 0) == 0);
  CHECK(GgmLoss::param_index(3, 1, 0) == 1);
  CHECK(GgmLoss::param_index(3, 2, 0) == 2);
  CHECK(GgmLoss::param_index(3, 1, 1) == 3);
  CHECK(GgmLoss::param_index(3, 2, 1) == 4);
  CHECK(GgmLoss::param_index(3, 2, 2) == 5);
  testing::Rng rng(6);
  const GgmLoss m(rng.spd(4));
  const Matrix w = rng.spd(4);
  const Matrix back = m.omega(m.vectorize(w));
  CHECK(max_abs(back - w) == 0.0);
  CHECK(max_abs(back - back.transpose()) == 0.0);
}

TEST_CASE("GGM gradient vanishes at the inverse covariance") {
  testing::Rng rng(7);
  const SymMatrix s = rng.spd(4);
  const GgmLoss m(s);
  const Vector x = m.vectorize(s.inverse());
  CHECK(max_abs(m.gradient(x)) < 1e-12);
  CHECK(relative_error(m.omega(unconstrained_minimum(m)), s.inverse()) < 1e-8);
}

TEST_CASE("GGM derivatives match finite differences") {
  testing::Rng rng(8);
  const GgmLoss m(rng.spd(4));
  const Vector x = ggm_point(m, rng);
  check_derivatives(m, x, rng);
  check_midpoint_convexity(m, x, ggm_point(m, rng));
}

TEST_CASE("GGM outside the positive definite cone is a domain error") {
  const GgmLoss m(SymMatrix::Identity(2, 2));
  Matrix w(2, 2);
  w << 1.0, 1.0, 1.0, 1.0;
  CHECK_FALSE(m.in_domain(m.vectorize(w)));
  try {
    (void)m.value(m.vectorize(w));
    FAIL("expected DomainError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::domain_error);
  }
  w(0, 1) = w(1, 0) = 0.999;
  CHECK(m.in_domain(m.vectorize(w)));
  CHECK(std::isfinite(m.value(m.vectorize(w))));
}

TEST_CASE("log-concave Hessian with two support points") {
  Vector support(2), freq(2), phi(2);
  support << 0.0, 1.5;
  freq << 0.5, 0.5;
  phi << -0.3, 0.4;
  const LogConcaveLoss m(support, freq, 2.0);
  const double d = 1.5;
  const SymMatrix h = m.hessian(phi);
  CHECK(h(0, 0) == doctest::Approx(d * j_kernel(2, 0, phi(0), phi(1))).epsilon(1e-14));
  CHECK(h(0, 1) == doctest::Approx(d * j_kernel(1, 1, phi(0), phi(1))).epsilon(1e-14));
  CHECK(h(1, 1) == doctest::Approx(d * j_kernel(0, 2, phi(0), phi(1))).epsilon(1e-14));
  const SymMatrix dh = m.dh_action(phi, Vector::Unit(2, 0));
  CHECK(dh(0, 0) == doctest::Approx(d * j_kernel(3, 0, phi(0), phi(1))).epsilon(1e-14));
  CHECK(dh(0, 1) == doctest::Approx(d * j_kernel(2, 1, phi(0), phi(1))).epsilon(1e-14));
  CHECK(dh(1, 1) == doctest::Approx(d * j_kernel(1, 2, phi(0), phi(1))).epsilon(1e-14));
}

TEST_CASE("log-concave derivatives and structure") {
  testing::Rng rng(9);
  std::vector<double> sample;
  for (int i = 0; i < 25; ++i) sample.push_back(rng.normal());
  const LogConcaveLoss m = LogConcaveLoss::from_sample(sample);
  Vector phi(m.dim());
  for (Index i = 0; i < m.dim(); ++i) phi(i) = -0.5 * m.support()(i) * m.support()(i) + 0.1 * rng.normal();
  check_derivatives(m, phi, rng);
  const SymMatrix h = m.hessian(phi);
  for (Index i = 0; i < m.dim(); ++i)
    for (Index j = 0; j < m.dim(); ++j)
      if (std::abs(i - j) > 1) CHECK(h(i, j) == 0.0);
  const Vector x = unconstrained_minimum(m);
  CHECK(max_abs(m.gradient(x)) < 1e-9 * (1.0 + std::abs(m.value(x))));
}

TEST_CASE("log-concave input validation") {
  Vector support(3), freq(3);
  support << 0.0, 1.0, 1.0;
  freq << 0.2, 0.3, 0.5;
  CHECK_THROWS_AS(LogConcaveLoss(support, freq, 3.0), Error);
  support << 0.0, 1.0, 2.0;
  freq << 0.2, 0.3, 0.4;
  CHECK_THROWS_AS(LogConcaveLoss(support, freq, 3.0), Error);
}

TEST_CASE("observation splitting") {
  testing::Rng rng(10);
  const Matrix x = design(rng, 8, 2);
  const Vector y = bernoulli(rng, x, rng.normal_vector(2));
  const GlmLoss m(x, y, GlmFamily::logistic);
  CHECK(m.observations() == 8);
  const std::vector<Index> first{0, 1, 2, 3}, second{4, 5, 6, 7};
  const auto a = m.restrict_to(first);
  const auto b = m.restrict_to(second);
  const Vector beta = rng.normal_vector(2);
  CHECK(a->value(beta) + b->value(beta) == doctest::Approx(m.value(beta)).epsilon(1e-13));
  const GgmLoss g(SymMatrix::Identity(2, 2));
  CHECK(g.observations() == 0);
  try {
    (void)g.restrict_to(first);
    FAIL("expected UnsupportedLoss");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unsupported_loss);
  }
}

TEST_CASE("separable logistic data has no minimum") {
  Matrix x(4, 1);
  x << -2.0, -1.0, 1.0, 2.0;
  Vector y(4);
  y << 0.0, 0.0, 1.0, 1.0;
  const GlmLoss m(x, y, GlmFamily::logistic);
  try {
    (void)unconstrained_minimum(m);
    FAIL("expected DivergenceError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::divergence);
  }
}
