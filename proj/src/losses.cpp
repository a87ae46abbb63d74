#include "epsode/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "epsode/error.hpp"
#include "epsode/j_kernel.hpp"

namespace epsode {

namespace {

void check_data(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) {
    fail(ErrorCode::invalid_argument, "design rows and response length differ");
  }
  if (x.rows() == 0 || x.cols() == 0) fail(ErrorCode::invalid_argument, "empty design matrix");
  if (!x.allFinite() || !y.allFinite()) fail(ErrorCode::invalid_argument, "non-finite data");
}

Matrix select_rows(const Matrix& x, std::span<const Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= x.rows()) fail(ErrorCode::invalid_argument, "row out of range");
    out.row(static_cast<Index>(i)) = x.row(rows[i]);
  }
  return out;
}

Vector select_rows(const Vector& y, std::span<const Index> rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Index>(i)) = y(rows[i]);
  return out;
}

// X' diag(w) X
SymMatrix weighted_gram(const Matrix& x, const Vector& w) {
  SymMatrix h = x.transpose() * w.asDiagonal() * x;
  return 0.5 * (h + h.transpose());
}

double softplus(double u) { return u > 0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u)); }

double sigmoid(double u) {
  if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

}  // namespace

// ---------------------------------------------------------------- quadratic

QuadraticLoss QuadraticLoss::centered(Vector center) {
  const Index p = center.size();
  return centered(SymMatrix::Identity(p, p), std::move(center));
}

QuadraticLoss QuadraticLoss::centered(SymMatrix a, Vector center) {
  if (a.rows() != a.cols() || a.rows() != center.size() || center.size() == 0) {
    fail(ErrorCode::invalid_argument, "quadratic: matrix and center sizes differ");
  }
  QuadraticLoss q;
  q.a_ = std::move(a);
  q.c_ = q.a_ * center;
  q.center_ = std::move(center);
  q.finish();
  return q;
}

QuadraticLoss QuadraticLoss::least_squares(Matrix x, Vector y) {
  check_data(x, y);
  QuadraticLoss q;
  q.a_ = x.transpose() * x;
  q.c_ = x.transpose() * y;
  q.x_ = std::move(x);
  q.y_ = std::move(y);
  q.finish();
  return q;
}

void QuadraticLoss::finish() {
  a_ = 0.5 * (a_ + a_.transpose());
  Eigen::LDLT<Matrix> ldlt(a_);
  const double scale = 1.0 + a_.diagonal().cwiseAbs().maxCoeff();
  strictly_convex_ = ldlt.info() == Eigen::Success && ldlt.isPositive() &&
                     ldlt.vectorD().minCoeff() > 1e-12 * scale;
}

double QuadraticLoss::value(const Vector& b) const {
  if (x_.size() > 0) return 0.5 * (y_ - x_ * b).squaredNorm();
  const Vector diff = b - center_;
  return 0.5 * diff.dot(a_ * diff);
}

Vector QuadraticLoss::gradient(const Vector& b) const {
  if (x_.size() > 0) return a_ * b - c_;
  return a_ * (b - center_);
}

SymMatrix QuadraticLoss::hessian(const Vector&) const { return a_; }

SymMatrix QuadraticLoss::dh_action(const Vector&, const Vector&) const {
  return SymMatrix::Zero(dim(), dim());
}

double QuadraticLoss::sample_size() const {
  return x_.size() > 0 ? static_cast<double>(x_.rows()) : static_cast<double>(dim());
}

std::unique_ptr<LossModel> QuadraticLoss::restrict_to(std::span<const Index> rows) const {
  if (x_.size() == 0) return LossModel::restrict_to(rows);
  return std::make_unique<QuadraticLoss>(least_squares(select_rows(x_, rows), select_rows(y_, rows)));
}

// ---------------------------------------------------------------------- GLM

GlmLoss::GlmLoss(Matrix x, Vector y, GlmFamily family, double sigma)
    : x_(std::move(x)), y_(std::move(y)), family_(family), sigma_(sigma) {
  check_data(x_, y_);
  if (!(sigma_ > 0)) fail(ErrorCode::invalid_argument, "glm: sigma must be positive");
  scale_ = family_ == GlmFamily::normal ? sigma_ * sigma_ : 1.0;
  for (Index i = 0; i < y_.size(); ++i) {
    const double yi = y_(i);
    if (family_ == GlmFamily::logistic && yi != 0.0 && yi != 1.0) {
      fail(ErrorCode::invalid_argument, "logistic response must be 0 or 1");
    }
    if (family_ == GlmFamily::poisson && (yi < 0.0 || yi != std::floor(yi))) {
      fail(ErrorCode::invalid_argument, "poisson response must be a nonnegative integer");
    }
  }
}

std::string GlmLoss::name() const {
  switch (family_) {
    case GlmFamily::normal: return "glm(normal)";
    case GlmFamily::logistic: return "glm(logistic)";
    case GlmFamily::poisson: return "glm(poisson)";
  }
  return "glm";
}

double GlmLoss::value(const Vector& b) const {
  const Vector eta = x_ * b;
  double sum = 0.0;
  for (Index i = 0; i < eta.size(); ++i) {
    const double u = eta(i);
    const double y = y_(i);
    switch (family_) {
      case GlmFamily::normal: sum += 0.5 * (y - u) * (y - u); break;
      case GlmFamily::logistic: sum += softplus(u) - y * u; break;
      case GlmFamily::poisson: sum += std::exp(u) - y * u; break;
    }
  }
  return sum / scale_;
}

Vector GlmLoss::gradient(const Vector& b) const {
  const Vector eta = x_ * b;
  Vector resid(eta.size());
  for (Index i = 0; i < eta.size(); ++i) {
    double mean = eta(i);
    if (family_ == GlmFamily::logistic) mean = sigmoid(eta(i));
    if (family_ == GlmFamily::poisson) mean = std::exp(eta(i));
    resid(i) = mean - y_(i);
  }
  return x_.transpose() * resid / scale_;
}

SymMatrix GlmLoss::hessian(const Vector& b) const {
  const Vector eta = x_ * b;
  Vector w(eta.size());
  for (Index i = 0; i < eta.size(); ++i) {
    switch (family_) {
      case GlmFamily::normal: w(i) = 1.0; break;
      case GlmFamily::logistic: {
        const double mu = sigmoid(eta(i));
        w(i) = mu * (1.0 - mu);
        break;
      }
      case GlmFamily::poisson: w(i) = std::exp(eta(i)); break;
    }
  }
  return weighted_gram(x_, w / scale_);
}

SymMatrix GlmLoss::dh_action(const Vector& b, const Vector& v) const {
  const Vector eta = x_ * b;
  const Vector xv = x_ * v;
  Vector w(eta.size());
  for (Index i = 0; i < eta.size(); ++i) {
    switch (family_) {
      case GlmFamily::normal: w(i) = 0.0; break;
      case GlmFamily::logistic: {
        const double mu = sigmoid(eta(i));
        w(i) = mu * (1.0 - mu) * (1.0 - 2.0 * mu);
        break;
      }
      case GlmFamily::poisson: w(i) = std::exp(eta(i)); break;
    }
    w(i) *= xv(i);
  }
  return weighted_gram(x_, w / scale_);
}

std::unique_ptr<LossModel> GlmLoss::restrict_to(std::span<const Index> rows) const {
  return std::make_unique<GlmLoss>(select_rows(x_, rows), select_rows(y_, rows), family_, sigma_);
}

// -------------------------------------------------------------------- links

Link Link::identity() {
  return {"identity", [](double e) { return e; }, [](double) { return 1.0; },
          [](double) { return 0.0; }, [](double) { return 0.0; }};
}

Link Link::log() {
  const auto ex = [](double e) { return std::exp(e); };
  return {"log", ex, ex, ex, ex};
}

Link Link::logit() {
  return {"logit", [](double e) { return sigmoid(e); },
          [](double e) {
            const double m = sigmoid(e);
            return m * (1.0 - m);
          },
          [](double e) {
            const double m = sigmoid(e);
            return m * (1.0 - m) * (1.0 - 2.0 * m);
          },
          [](double e) {
            const double m = sigmoid(e);
            return m * (1.0 - m) * (1.0 - 6.0 * m + 6.0 * m * m);
          }};
}

Link Link::probit() {
  const auto pdf = [](double e) { return std::exp(-0.5 * e * e) / std::sqrt(2.0 * std::numbers::pi); };
  return {"probit", [](double e) { return 0.5 * std::erfc(-e / std::numbers::sqrt2); }, pdf,
          [pdf](double e) { return -e * pdf(e); },
          [pdf](double e) { return (e * e - 1.0) * pdf(e); }};
}

Link Link::by_name(const std::string& name) {
  if (name == "identity") return identity();
  if (name == "log") return log();
  if (name == "logit") return logit();
  if (name == "probit") return probit();
  fail(ErrorCode::invalid_argument, "unknown link '" + name + "'");
}

VarianceFunction variance_by_name(const std::string& name) {
  if (name == "constant" || name == "1") return VarianceFunction::constant;
  if (name == "mu") return VarianceFunction::mu;
  if (name == "mu^2" || name == "mu_squared") return VarianceFunction::mu_squared;
  if (name == "mu(1-mu)" || name == "binomial") return VarianceFunction::binomial;
  fail(ErrorCode::invalid_argument, "unknown variance function '" + name + "'");
}

// -------------------------------------------------------------------- quasi

QuasiLoss::QuasiLoss(Matrix x, Vector y, Link link, VarianceFunction variance, double sigma)
    : x_(std::move(x)), y_(std::move(y)), link_(std::move(link)), variance_(variance),
      sigma2_(sigma * sigma) {
  check_data(x_, y_);
  if (!(sigma > 0)) fail(ErrorCode::invalid_argument, "quasi: sigma must be positive");
  if (!link_.mu || !link_.d1 || !link_.d2 || !link_.d3) {
    fail(ErrorCode::invalid_argument, "quasi: link needs mu and three derivatives");
  }
  for (Index i = 0; i < y_.size(); ++i) {
    const double yi = y_(i);
    const bool ok = variance_ == VarianceFunction::constant ||
                    (variance_ == VarianceFunction::mu && yi >= 0.0) ||
                    (variance_ == VarianceFunction::mu_squared && yi > 0.0) ||
                    (variance_ == VarianceFunction::binomial && yi >= 0.0 && yi <= 1.0);
    if (!ok) fail(ErrorCode::invalid_argument, "quasi: response outside the variance domain");
  }
}

bool QuasiLoss::strictly_convex() const {
  return (link_.name == "identity" && variance_ == VarianceFunction::constant) ||
         (link_.name == "log" && variance_ == VarianceFunction::mu) ||
         (link_.name == "logit" && variance_ == VarianceFunction::binomial);
}

bool QuasiLoss::in_domain(const Vector& b) const {
  const Vector eta = x_ * b;
  for (Index i = 0; i < eta.size(); ++i) {
    const double mu = link_.mu(eta(i));
    if (!std::isfinite(mu)) return false;
    switch (variance_) {
      case VarianceFunction::constant: break;
      case VarianceFunction::mu:
      case VarianceFunction::mu_squared:
        if (!(mu > 0.0)) return false;
        break;
      case VarianceFunction::binomial:
        if (!(mu > 0.0 && mu < 1.0)) return false;
        break;
    }
  }
  return true;
}

double QuasiLoss::value(const Vector& b) const {
  if (!in_domain(b)) fail(ErrorCode::domain_error, "quasi: mean outside the variance domain");
  const Vector eta = x_ * b;
  double q = 0.0;
  for (Index i = 0; i < eta.size(); ++i) {
    const double mu = link_.mu(eta(i));
    const double y = y_(i);
    switch (variance_) {
      case VarianceFunction::constant: q += -0.5 * (y - mu) * (y - mu); break;
      case VarianceFunction::mu: q += xlogy(y, mu) - mu; break;
      case VarianceFunction::mu_squared: q += -y / mu - std::log(mu); break;
      case VarianceFunction::binomial: q += xlogy(y, mu) + xlogy(1.0 - y, 1.0 - mu); break;
    }
  }
  return -q / sigma2_;
}

QuasiLoss::Derivs QuasiLoss::eta_derivatives(double eta, double y) const {
  const double mu = link_.mu(eta);
  const double m1 = link_.d1(eta);
  const double m2 = link_.d2(eta);
  const double m3 = link_.d3(eta);
  // w = 1 / V(mu) and its first two derivatives in mu.
  double w = 1.0, w1 = 0.0, w2 = 0.0;
  switch (variance_) {
    case VarianceFunction::constant: break;
    case VarianceFunction::mu:
      w = 1.0 / mu;
      w1 = -w * w;
      w2 = 2.0 * w * w * w;
      break;
    case VarianceFunction::mu_squared: {
      const double i = 1.0 / mu;
      w = i * i;
      w1 = -2.0 * i * i * i;
      w2 = 6.0 * i * i * i * i;
      break;
    }
    case VarianceFunction::binomial: {
      const double a = 1.0 / mu;
      const double c = 1.0 / (1.0 - mu);
      w = a + c;
      w1 = -a * a + c * c;
      w2 = 2.0 * (a * a * a + c * c * c);
      break;
    }
  }
  // dQ/dmu = g(mu) = (y - mu) w(mu)
  const double r = y - mu;
  const double g = r * w;
  const double g1 = -w + r * w1;
  const double g2 = -2.0 * w1 + r * w2;
  return {g * m1, g1 * m1 * m1 + g * m2, g2 * m1 * m1 * m1 + 3.0 * g1 * m1 * m2 + g * m3};
}

Vector QuasiLoss::gradient(const Vector& b) const {
  const Vector eta = x_ * b;
  Vector d(eta.size());
  for (Index i = 0; i < eta.size(); ++i) d(i) = -eta_derivatives(eta(i), y_(i)).d1;
  return x_.transpose() * d / sigma2_;
}

SymMatrix QuasiLoss::hessian(const Vector& b) const {
  const Vector eta = x_ * b;
  Vector w(eta.size());
  for (Index i = 0; i < eta.size(); ++i) w(i) = -eta_derivatives(eta(i), y_(i)).d2;
  return weighted_gram(x_, w / sigma2_);
}

SymMatrix QuasiLoss::dh_action(const Vector& b, const Vector& v) const {
  const Vector eta = x_ * b;
  const Vector xv = x_ * v;
  Vector w(eta.size());
  for (Index i = 0; i < eta.size(); ++i) w(i) = -eta_derivatives(eta(i), y_(i)).d3 * xv(i);
  return weighted_gram(x_, w / sigma2_);
}

std::unique_ptr<LossModel> QuasiLoss::restrict_to(std::span<const Index> rows) const {
  return std::make_unique<QuasiLoss>(select_rows(x_, rows), select_rows(y_, rows), link_,
                                     variance_, std::sqrt(sigma2_));
}

// ---------------------------------------------------------------------- GGM

GgmLoss::GgmLoss(SymMatrix sigma_hat, double sample_size)
    : sigma_(std::move(sigma_hat)), n_(sample_size) {
  const Index p = sigma_.rows();
  if (p == 0 || sigma_.cols() != p) fail(ErrorCode::invalid_argument, "ggm: covariance must be square");
  if (!sigma_.allFinite()) fail(ErrorCode::invalid_argument, "ggm: non-finite covariance");
  const double tol = 1e-10 * (1.0 + sigma_.cwiseAbs().maxCoeff());
  if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() > tol) {
    fail(ErrorCode::invalid_argument, "ggm: covariance is not symmetric");
  }
  for (Index i = 0; i < p; ++i) {
    if (!(sigma_(i, i) > 0)) fail(ErrorCode::invalid_argument, "ggm: covariance diagonal must be positive");
  }
  sigma_ = 0.5 * (sigma_ + sigma_.transpose());
  for (Index j = 0; j < p; ++j) {
    for (Index i = j; i < p; ++i) entries_.emplace_back(i, j);
  }
}

Index GgmLoss::param_index(Index nodes, Index i, Index j) {
  if (i < j) std::swap(i, j);
  return j * nodes - j * (j - 1) / 2 + (i - j);
}

Matrix GgmLoss::omega(const Vector& x) const {
  if (x.size() != dim()) fail(ErrorCode::invalid_argument, "ggm: parameter has wrong length");
  const Index p = nodes();
  Matrix om(p, p);
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    const auto [i, j] = entries_[k];
    om(i, j) = x(static_cast<Index>(k));
    om(j, i) = x(static_cast<Index>(k));
  }
  return om;
}

Vector GgmLoss::vectorize(const Matrix& om) const {
  Vector x(dim());
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    x(static_cast<Index>(k)) = om(entries_[k].first, entries_[k].second);
  }
  return x;
}

Matrix GgmLoss::checked_inverse(const Vector& x, double* log_det) const {
  const Matrix om = omega(x);
  Eigen::LLT<Matrix> llt(om);
  if (llt.info() != Eigen::Success || !om.allFinite()) {
    fail(ErrorCode::domain_error, "ggm: precision matrix is not positive definite");
  }
  if (log_det) {
    *log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  }
  return llt.solve(Matrix::Identity(nodes(), nodes()));
}

bool GgmLoss::in_domain(const Vector& x) const {
  if (x.size() != dim() || !x.allFinite()) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(omega(x), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() > 0.0;
}

double GgmLoss::value(const Vector& x) const {
  double log_det = 0.0;
  checked_inverse(x, &log_det);
  return -log_det + (sigma_.cwiseProduct(omega(x))).sum();
}

Vector GgmLoss::gradient(const Vector& x) const {
  const Matrix g = sigma_ - checked_inverse(x);
  Vector out(dim());
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    const auto [i, j] = entries_[k];
    out(static_cast<Index>(k)) = i == j ? g(i, i) : 2.0 * g(i, j);
  }
  return out;
}

namespace {

// Sum over the (one or two) matrix positions represented by parameters k and l
// of fn(a, b, c, d) with (a, b) a position of k and (c, d) a position of l.
template <typename Fn>
double position_sum(std::pair<Index, Index> k, std::pair<Index, Index> l, Fn&& fn) {
  const std::pair<Index, Index> pk[2] = {k, {k.second, k.first}};
  const std::pair<Index, Index> pl[2] = {l, {l.second, l.first}};
  const int nk = k.first == k.second ? 1 : 2;
  const int nl = l.first == l.second ? 1 : 2;
  double sum = 0.0;
  for (int u = 0; u < nk; ++u) {
    for (int w = 0; w < nl; ++w) {
      sum += fn(pk[u].first, pk[u].second, pl[w].first, pl[w].second);
    }
  }
  return sum;
}

}  // namespace

SymMatrix GgmLoss::hessian(const Vector& x) const {
  const Matrix w = checked_inverse(x);
  const Index q = dim();
  SymMatrix h(q, q);
  for (Index k = 0; k < q; ++k) {
    for (Index l = 0; l <= k; ++l) {
      const double v = position_sum(entries_[static_cast<std::size_t>(k)],
                                    entries_[static_cast<std::size_t>(l)],
                                    [&](Index a, Index b, Index c, Index d) { return w(d, a) * w(b, c); });
      h(k, l) = v;
      h(l, k) = v;
    }
  }
  return h;
}

SymMatrix GgmLoss::dh_action(const Vector& x, const Vector& v) const {
  const Matrix w = checked_inverse(x);
  const Matrix a = w * omega(v) * w;
  const Index q = dim();
  SymMatrix out(q, q);
  for (Index k = 0; k < q; ++k) {
    for (Index l = 0; l <= k; ++l) {
      const double val = -position_sum(
          entries_[static_cast<std::size_t>(k)], entries_[static_cast<std::size_t>(l)],
          [&](Index ia, Index ib, Index ic, Index id) { return a(id, ia) * w(ib, ic) + w(id, ia) * a(ib, ic); });
      out(k, l) = val;
      out(l, k) = val;
    }
  }
  return out;
}

Vector GgmLoss::initial_point() const {
  return vectorize(sigma_.diagonal().cwiseInverse().asDiagonal().toDenseMatrix());
}

double GgmLoss::negative_loglik(const Vector& x) const { return 0.5 * n_ * value(x); }

// ------------------------------------------------------------- log-concave

LogConcaveLoss::LogConcaveLoss(Vector support, Vector frequencies, double observations)
    : support_(std::move(support)), freq_(std::move(frequencies)), n_(observations) {
  if (support_.size() < 2 || support_.size() != freq_.size()) {
    fail(ErrorCode::invalid_argument, "logconcave: need at least two support points with frequencies");
  }
  for (Index i = 0; i + 1 < support_.size(); ++i) {
    if (!(support_(i + 1) > support_(i))) {
      fail(ErrorCode::invalid_argument, "logconcave: support must be strictly increasing");
    }
  }
  if ((freq_.array() < 0.0).any() || std::abs(freq_.sum() - 1.0) > 1e-12) {
    fail(ErrorCode::invalid_argument, "logconcave: frequencies must be nonnegative and sum to one");
  }
  if (!(n_ > 0)) fail(ErrorCode::invalid_argument, "logconcave: observation count must be positive");
}

LogConcaveLoss LogConcaveLoss::from_sample(std::vector<double> sample) {
  std::sort(sample.begin(), sample.end());
  std::vector<double> pts;
  std::vector<double> counts;
  for (double s : sample) {
    if (!std::isfinite(s)) fail(ErrorCode::invalid_argument, "logconcave: non-finite sample");
    if (!pts.empty() && pts.back() == s) {
      counts.back() += 1.0;
    } else {
      pts.push_back(s);
      counts.push_back(1.0);
    }
  }
  const double n = static_cast<double>(sample.size());
  Vector support = Eigen::Map<Vector>(pts.data(), static_cast<Index>(pts.size()));
  Vector freq = Eigen::Map<Vector>(counts.data(), static_cast<Index>(counts.size())) / n;
  freq /= freq.sum();
  return LogConcaveLoss(std::move(support), std::move(freq), n);
}

double LogConcaveLoss::integral(const Vector& phi) const {
  double s = 0.0;
  for (Index k = 0; k + 1 < dim(); ++k) s += gap(k) * j_kernel(0, 0, phi(k), phi(k + 1));
  return s;
}

double LogConcaveLoss::value(const Vector& phi) const { return -freq_.dot(phi) + integral(phi); }

Vector LogConcaveLoss::gradient(const Vector& phi) const {
  Vector g = -freq_;
  for (Index k = 0; k + 1 < dim(); ++k) {
    g(k) += gap(k) * j_kernel(1, 0, phi(k), phi(k + 1));
    g(k + 1) += gap(k) * j_kernel(0, 1, phi(k), phi(k + 1));
  }
  return g;
}

SymMatrix LogConcaveLoss::hessian(const Vector& phi) const {
  const Index n = dim();
  SymMatrix h = SymMatrix::Zero(n, n);
  for (Index k = 0; k + 1 < n; ++k) {
    const double r = phi(k), s = phi(k + 1), d = gap(k);
    h(k, k) += d * j_kernel(2, 0, r, s);
    h(k + 1, k + 1) += d * j_kernel(0, 2, r, s);
    h(k, k + 1) = d * j_kernel(1, 1, r, s);
    h(k + 1, k) = h(k, k + 1);
  }
  return h;
}

SymMatrix LogConcaveLoss::dh_action(const Vector& phi, const Vector& v) const {
  const Index n = dim();
  SymMatrix out = SymMatrix::Zero(n, n);
  for (Index k = 0; k + 1 < n; ++k) {
    const double r = phi(k), s = phi(k + 1), d = gap(k);
    const double j30 = j_kernel(3, 0, r, s), j21 = j_kernel(2, 1, r, s);
    const double j12 = j_kernel(1, 2, r, s), j03 = j_kernel(0, 3, r, s);
    out(k, k) += d * (v(k) * j30 + v(k + 1) * j21);
    out(k + 1, k + 1) += d * (v(k) * j12 + v(k + 1) * j03);
    out(k, k + 1) = d * (v(k) * j21 + v(k + 1) * j12);
    out(k + 1, k) = out(k, k + 1);
  }
  return out;
}

Vector LogConcaveLoss::initial_point() const {
  return Vector::Constant(dim(), -std::log(support_(dim() - 1) - support_(0)));
}

double LogConcaveLoss::negative_loglik(const Vector& phi) const {
  return n_ * (-freq_.dot(phi) + std::log(integral(phi)));
}

}  // namespace epsode
