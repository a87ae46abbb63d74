#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "epsode/constraints.hpp"
#include "epsode/error.hpp"
#include "epsode/losses.hpp"
#include "support.hpp"

using namespace epsode;
using testing::max_abs;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix m(static_cast<Index>(r.size()), static_cast<Index>(r.begin()->size()));
  Index i = 0;
  for (const auto& row : r) {
    Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

void expect_code(ErrorCode code, const std::function<void()>& f) {
  try {
    f();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

}  // namespace

TEST_CASE("lasso") {
  const ConstraintSystem one = lasso(1);
  CHECK(one.v() == Matrix::Identity(1, 1));
  CHECK(one.d() == Vector::Zero(1));
  CHECK(one.inequalities() == 0);
  CHECK(lasso(3).v() == Matrix::Identity(3, 3));
  testing::Rng rng(1);
  const Vector b = rng.normal_vector(6);
  CHECK(lasso(6).penalty(b) == doctest::Approx(b.lpNorm<1>()).epsilon(1e-12));
}

TEST_CASE("fused lasso") {
  const ConstraintSystem cs = fused_lasso(3);
  CHECK(cs.v() == rows({{-1, 1, 0}, {0, -1, 1}}));
  CHECK(max_abs(cs.v() * Vector::Constant(3, 4.2)) == 0.0);
  Vector b(3);
  b << 0, 1, 3;
  CHECK(cs.equality_residuals(b) == Vector((Vector(2) << 1, 2).finished()));
  testing::Rng rng(2);
  const Vector r = rng.normal_vector(7);
  double hand = 0.0;
  for (Index i = 0; i + 1 < 7; ++i) hand += std::abs(r(i + 1) - r(i));
  CHECK(fused_lasso(7).penalty(r) == doctest::Approx(hand).epsilon(1e-12));
}

TEST_CASE("cubic trend filter with boundary rows") {
  const ConstraintSystem cs = trend_filter(8, 3);
  const Matrix expected = rows({{-1, 2, -1, 0, 0, 0, 0, 0},
                                {1, -4, 6, -4, 1, 0, 0, 0},
                                {0, 1, -4, 6, -4, 1, 0, 0},
                                {0, 0, 1, -4, 6, -4, 1, 0},
                                {0, 0, 0, 1, -4, 6, -4, 1},
                                {0, 0, 0, 0, 0, -1, 2, -1}});
  CHECK(cs.v() == expected);
  Vector cubic(8);
  for (Index i = 0; i < 8; ++i) {
    const double t = static_cast<double>(i);
    cubic(i) = 0.5 * t * t * t - 2.0 * t * t + t - 3.0;
  }
  const Vector r = cs.equality_residuals(cubic);
  CHECK(max_abs(r.segment(1, 4)) < 1e-10);
}

TEST_CASE("trend filter orders") {
  CHECK(trend_filter(5, 0).v() == fused_lasso(5).v());
  for (int k = 0; k <= 4; ++k) {
    const ConstraintSystem cs = trend_filter(12, k);
    Vector poly(12);
    for (Index i = 0; i < 12; ++i) poly(i) = std::pow(static_cast<double>(i) / 3.0, k) + 1.0;
    const Index boundary = k >= 2 ? 1 : 0;
    const Vector r = cs.equality_residuals(poly);
    CHECK(max_abs(r.segment(boundary, 12 - k - 1)) < 1e-9);
  }
  expect_code(ErrorCode::dimension_too_small, [] { (void)trend_filter(4, 3); });
}

TEST_CASE("isotone") {
  const ConstraintSystem up = isotone(3, Monotone::nondecreasing);
  CHECK(up.w() == rows({{1, -1, 0}, {0, 1, -1}}));
  CHECK(up.equalities() == 0);
  Vector b(3);
  b << 1, 2, 3;
  CHECK(up.inequality_residuals(b) == Vector::Constant(2, -1.0));
  CHECK(up.penalty(b) == 0.0);
  Vector c(2);
  c << 2, 1;
  CHECK(isotone(2, Monotone::nondecreasing).penalty(c) == 1.0);
  CHECK(isotone(3, Monotone::nonincreasing).w() == -up.w());
}

TEST_CASE("shape on a uniform grid") {
  const ConstraintSystem concave = shape(5, Shape::concave);
  CHECK(concave.w() == rows({{1, -2, 1, 0, 0}, {0, 1, -2, 1, 0}, {0, 0, 1, -2, 1}}));
  CHECK(shape(5, Shape::convex).w() == -concave.w());
  Vector affine(5);
  affine << 1, 3, 5, 7, 9;
  CHECK(max_abs(concave.inequality_residuals(affine)) == 0.0);
  Vector bump(3);
  bump << 0, 0, 1;
  CHECK(shape(3, Shape::concave).inequality_residuals(bump)(0) == 1.0);
}

TEST_CASE("shape on a non-uniform grid") {
  Vector t(4);
  t << 0.0, 0.5, 2.0, 2.25;
  const ConstraintSystem cs = shape(4, Shape::concave, t);
  testing::Rng rng(3);
  Vector b = rng.normal_vector(4);
  for (Index i = 0; i < 2; ++i) {
    const double slope_change = (b(i + 2) - b(i + 1)) / (t(i + 2) - t(i + 1)) - (b(i + 1) - b(i)) / (t(i + 1) - t(i));
    CHECK(cs.inequality_residuals(b)(i) == doctest::Approx(slope_change).epsilon(1e-12));
  }
  const Vector affine = 2.0 * t + Vector::Constant(4, 1.0);
  CHECK(max_abs(cs.inequality_residuals(affine)) < 1e-14);
  CHECK(max_abs(shape(4, Shape::convex, t).w() + cs.w()) == 0.0);
  Vector bad(4);
  bad << 0.0, 1.0, 1.0, 2.0;
  expect_code(ErrorCode::non_increasing_grid, [&] { (void)shape(4, Shape::concave, bad); });
}

TEST_CASE("graph guided") {
  const Vector deg = Vector::Ones(4);
  CHECK(graph_guided(4, {}, deg, 2.5).v() == Matrix::Identity(4, 4));
  const ConstraintSystem pos = graph_guided(4, {{0, 1, 0.7}}, deg, 1.0);
  CHECK(pos.equalities() == 5);
  CHECK(pos.v().row(0) == rows({{1, -1, 0, 0}}));
  CHECK(pos.v().bottomRows(4) == Matrix::Identity(4, 4));
  const ConstraintSystem neg = graph_guided(4, {{0, 1, -0.7}}, deg, 1.0);
  CHECK(neg.v().row(0) == rows({{1, 1, 0, 0}}));
  Vector d(3);
  d << 4.0, 1.0, 9.0;
  const ConstraintSystem scaled = graph_guided(3, {{0, 2, 0.3}}, d, 2.0);
  CHECK(scaled.v()(0, 0) == doctest::Approx(2.0 / 2.0));
  CHECK(scaled.v()(0, 2) == doctest::Approx(-2.0 / 3.0));
  expect_code(ErrorCode::invalid_edge, [&] { (void)graph_guided(4, {{0, 4, 0.5}}, deg, 1.0); });
  expect_code(ErrorCode::invalid_edge, [&] { (void)graph_guided(4, {{2, 2, 0.5}}, deg, 1.0); });
}

TEST_CASE("ggm off-diagonal lasso") {
  const ConstraintSystem cs = ggm_offdiagonal(3);
  CHECK(cs.params() == 6);
  CHECK(cs.equalities() == 3);
  const GgmLoss m(SymMatrix::Identity(3, 3));
  Matrix w(3, 3);
  w << 2, 0.3, -0.1, 0.3, 1, 0.4, -0.1, 0.4, 3;
  CHECK(cs.penalty(m.vectorize(w)) == doctest::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("concat") {
  const ConstraintSystem single = concat({{fused_lasso(4), 0, 1.0}}, 4);
  CHECK(single.v() == fused_lasso(4).v());
  CHECK(concat({{lasso(2), 0, 1.0}, {lasso(3), 2, 1.0}}, 5).v() == lasso(5).v());
  expect_code(ErrorCode::overlap, [] { (void)concat({{lasso(3), 0, 1.0}, {lasso(3), 2, 1.0}}, 6); });
}

TEST_CASE("mixed layout of trend filters and shape blocks") {
  // Five trend-filtered covariates, one monotone and one concave, ten bins each.
  std::vector<Block> blocks;
  Index offset = 0, expected_v = 0, expected_w = 0;
  for (int j = 0; j < 7; ++j) {
    Block b;
    b.offset = offset;
    if (j == 3) {
      b.system = isotone(10, Monotone::nondecreasing);
    } else if (j == 4) {
      b.system = shape(10, Shape::concave);
    } else {
      b.system = trend_filter(10, 3);
    }
    expected_v += b.system.equalities();
    expected_w += b.system.inequalities();
    blocks.push_back(b);
    offset += 10;
  }
  const ConstraintSystem cs = concat(blocks, 70);
  CHECK(cs.equalities() == expected_v);
  CHECK(cs.inequalities() == expected_w);
  CHECK(cs.rows() == 5 * 8 + 9 + 8);
}

TEST_CASE("penalty weights scale the rows") {
  const ConstraintSystem cs = concat({{lasso(2), 0, 3.0}}, 2);
  Vector b(2);
  b << 1.0, -2.0;
  CHECK(cs.penalty(b) == doctest::Approx(9.0));
}

TEST_CASE("constraint validation") {
  expect_code(ErrorCode::invalid_argument, [] { (void)ConstraintSystem(Matrix::Zero(1, 2), Vector::Zero(1), Matrix(0, 2), Vector(0)); });
  expect_code(ErrorCode::invalid_argument, [] { (void)ConstraintSystem(Matrix::Ones(1, 2), Vector::Zero(2), Matrix(0, 2), Vector(0)); });
}
