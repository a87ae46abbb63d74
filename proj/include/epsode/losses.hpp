#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "epsode/loss.hpp"

namespace epsode {

/// f(b) = 1/2 (b - c)' A (b - c), or the least-squares form 1/2 ||y - X b||^2.
class QuadraticLoss final : public LossModel {
 public:
  // 1/2 ||b - center||^2
  static QuadraticLoss centered(Vector center);
  // 1/2 (b - center)' A (b - center); A symmetric positive semidefinite.
  static QuadraticLoss centered(SymMatrix a, Vector center);
  // 1/2 ||y - X b||^2
  static QuadraticLoss least_squares(Matrix x, Vector y);

  Index dim() const override { return a_.rows(); }
  std::string name() const override { return "quadratic"; }
  double value(const Vector& b) const override;
  Vector gradient(const Vector& b) const override;
  SymMatrix hessian(const Vector& b) const override;
  SymMatrix dh_action(const Vector& b, const Vector& v) const override;
  bool strictly_convex() const override { return strictly_convex_; }
  double sample_size() const override;
  Index observations() const override { return x_.rows(); }
  std::unique_ptr<LossModel> restrict_to(std::span<const Index> rows) const override;

 private:
  QuadraticLoss() = default;
  void finish();

  SymMatrix a_;
  Vector c_;       // linear term: f = 1/2 b'Ab - c'b + const
  Vector center_;  // centered form only
  Matrix x_;       // least-squares form only
  Vector y_;
  bool strictly_convex_ = true;
};

enum class GlmFamily { normal, logistic, poisson };

/// Negative log-likelihood of a canonical-link GLM,
/// sum_i [psi(x_i'b) - y_i x_i'b] / c(sigma).
class GlmLoss final : public LossModel {
 public:
  GlmLoss(Matrix x, Vector y, GlmFamily family, double sigma = 1.0);

  Index dim() const override { return x_.cols(); }
  std::string name() const override;
  double value(const Vector& b) const override;
  Vector gradient(const Vector& b) const override;
  SymMatrix hessian(const Vector& b) const override;
  SymMatrix dh_action(const Vector& b, const Vector& v) const override;
  double sample_size() const override { return static_cast<double>(x_.rows()); }
  Index observations() const override { return x_.rows(); }
  std::unique_ptr<LossModel> restrict_to(std::span<const Index> rows) const override;

  GlmFamily family() const { return family_; }
  const Matrix& design() const { return x_; }
  const Vector& response() const { return y_; }

 private:
  Matrix x_;
  Vector y_;
  GlmFamily family_;
  double sigma_;
  double scale_;  // c(sigma)
};

/// Mean function mu(eta) of a link with its first three derivatives.
struct Link {
  std::string name;
  std::function<double(double)> mu;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
  std::function<double(double)> d3;

  static Link identity();
  static Link log();
  static Link logit();
  static Link probit();
  static Link by_name(const std::string& name);
};

enum class VarianceFunction { constant, mu, mu_squared, binomial };

VarianceFunction variance_by_name(const std::string& name);

/// Negative quasi-likelihood -sum_i Q(mu(x_i'b), y_i) with
/// Q(mu, y) = int_y^mu (y - t) / (sigma^2 V(t)) dt (up to a y-only constant).
class QuasiLoss final : public LossModel {
 public:
  QuasiLoss(Matrix x, Vector y, Link link, VarianceFunction variance, double sigma = 1.0);

  Index dim() const override { return x_.cols(); }
  std::string name() const override { return "quasi(" + link_.name + ")"; }
  double value(const Vector& b) const override;
  Vector gradient(const Vector& b) const override;
  SymMatrix hessian(const Vector& b) const override;
  SymMatrix dh_action(const Vector& b, const Vector& v) const override;
  bool strictly_convex() const override;
  bool in_domain(const Vector& b) const override;
  double sample_size() const override { return static_cast<double>(x_.rows()); }
  Index observations() const override { return x_.rows(); }
  std::unique_ptr<LossModel> restrict_to(std::span<const Index> rows) const override;

 private:
  struct Derivs {
    double d1, d2, d3;  // derivatives of Q_i with respect to eta
  };
  Derivs eta_derivatives(double eta, double y) const;

  Matrix x_;
  Vector y_;
  Link link_;
  VarianceFunction variance_;
  double sigma2_;
};

/// Gaussian graphical model loss -log det(Omega) + tr(S Omega).
///
/// The parameter vector is the lower triangle of Omega stacked column by
/// column: (w_00, w_10, ..., w_{p-1,0}, w_11, w_21, ...). An off-diagonal
/// parameter stands for both symmetric entries.
class GgmLoss final : public LossModel {
 public:
  explicit GgmLoss(SymMatrix sigma_hat, double sample_size = 1.0);

  static Index param_count(Index nodes) { return nodes * (nodes + 1) / 2; }
  static Index param_index(Index nodes, Index i, Index j);  // requires i >= j

  Index nodes() const { return sigma_.rows(); }
  Index dim() const override { return param_count(nodes()); }
  std::string name() const override { return "ggm"; }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  SymMatrix hessian(const Vector& x) const override;
  SymMatrix dh_action(const Vector& x, const Vector& v) const override;
  bool in_domain(const Vector& x) const override;
  Vector initial_point() const override;
  double negative_loglik(const Vector& x) const override;
  double sample_size() const override { return n_; }
  bool df_is_heuristic() const override { return true; }

  Matrix omega(const Vector& x) const;
  Vector vectorize(const Matrix& omega) const;
  const SymMatrix& sigma_hat() const { return sigma_; }

 private:
  // Inverse of Omega(x); throws ErrorCode::domain_error unless positive definite.
  Matrix checked_inverse(const Vector& x, double* log_det = nullptr) const;

  SymMatrix sigma_;
  double n_;
  std::vector<std::pair<Index, Index>> entries_;  // (i, j), i >= j, per parameter
};

/// Negative log-likelihood of a univariate log-concave density that is
/// piecewise log-linear between the support points:
/// f(phi) = -sum_i p_i phi_i + sum_k delta_k J(phi_k, phi_{k+1}).
class LogConcaveLoss final : public LossModel {
 public:
  // Strictly increasing support with frequencies summing to one.
  LogConcaveLoss(Vector support, Vector frequencies, double observations);
  // Empirical support and frequencies of a raw sample.
  static LogConcaveLoss from_sample(std::vector<double> sample);

  Index dim() const override { return support_.size(); }
  std::string name() const override { return "logconcave"; }
  double value(const Vector& phi) const override;
  Vector gradient(const Vector& phi) const override;
  SymMatrix hessian(const Vector& phi) const override;
  SymMatrix dh_action(const Vector& phi, const Vector& v) const override;
  Vector initial_point() const override;
  double negative_loglik(const Vector& phi) const override;
  double sample_size() const override { return n_; }
  bool df_is_heuristic() const override { return true; }

  const Vector& support() const { return support_; }
  const Vector& frequencies() const { return freq_; }
  // Exact integral of exp(phi) for the piecewise-linear phi.
  double integral(const Vector& phi) const;

 private:
  double gap(Index k) const { return support_(k + 1) - support_(k); }

  Vector support_;
  Vector freq_;
  double n_;
};

}  // namespace epsode
