#include "lhsd/score_field.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "lhsd/rng.hpp"

namespace lhsd {

namespace {

// Weights below exp(-46) relative to the dominant kernel are dropped; they
// are invisible at double precision.
constexpr double kLogWeightFloor = -46.0;

void check_point(const Eigen::VectorXd& x, int dim, const char* what) {
  if (x.size() != dim)
    throw std::invalid_argument(std::string(what) + ": dimension mismatch");
  if (!x.allFinite())
    throw std::domain_error(std::string(what) + ": non-finite input");
}

void check_sigma(double sigma_sq) {
  if (!(sigma_sq > 0.0))
    throw std::domain_error("score field: sigma(t) must be > 0 (t too small)");
}

}  // namespace

LinearOperator ScoreField::hvp_operator(const Eigen::VectorXd& x,
                                        double t) const {
  Eigen::VectorXd x_copy = x;
  return [this, x_copy, t](const Eigen::VectorXd& v) {
    return hvp(x_copy, t, v);
  };
}

Eigen::MatrixXd dense_hessian(const ScoreField& field, const Eigen::VectorXd& x,
                              double t, int dense_limit) {
  const int dim = field.dimension();
  if (dim > dense_limit)
    throw std::length_error("dense_hessian: dimension exceeds dense limit");
  auto op = field.hvp_operator(x, t);
  Eigen::MatrixXd hess(dim, dim);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
  for (int j = 0; j < dim; ++j) {
    e[j] = 1.0;
    hess.col(j) = op(e);
    e[j] = 0.0;
  }
  return 0.5 * (hess + hess.transpose());
}

// ---------------------------------------------------------------------------
// MixtureScoreField

MixtureScoreField::MixtureScoreField(Eigen::MatrixXd reference_points,
                                     NoiseSchedule schedule)
    : refs_(std::move(reference_points)), schedule_(schedule) {
  if (refs_.rows() < 1 || refs_.cols() < 1)
    throw std::invalid_argument("MixtureScoreField: need N >= 1, D >= 1");
  if (!refs_.allFinite())
    throw std::invalid_argument("MixtureScoreField: non-finite reference point");
}

MixtureScoreField::Local MixtureScoreField::prepare(const Eigen::VectorXd& x,
                                                    double t) const {
  check_point(x, dimension(), "MixtureScoreField");
  const auto [mu, sigma_sq] = schedule_.mu_sigma_sq(t);
  check_sigma(sigma_sq);

  const Eigen::Index n = refs_.rows();
  Eigen::MatrixXd resid = (mu * refs_).rowwise() - x.transpose();
  Eigen::VectorXd log_kernel =
      resid.rowwise().squaredNorm() * (-0.5 / sigma_sq);
  const double peak = log_kernel.maxCoeff();

  Eigen::Index n_active = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (log_kernel[i] - peak >= kLogWeightFloor) ++n_active;

  Local local;
  local.sigma_sq = sigma_sq;
  local.resid.resize(n_active, refs_.cols());
  local.weights.resize(n_active);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (log_kernel[i] - peak < kLogWeightFloor) continue;
    local.resid.row(k) = resid.row(i);
    local.weights[k] = std::exp(log_kernel[i] - peak);
    ++k;
  }
  local.weights /= local.weights.sum();
  local.rbar = local.resid.transpose() * local.weights;
  local.weighted_sq_norm =
      local.weights.dot(local.resid.rowwise().squaredNorm());
  return local;
}

Eigen::VectorXd MixtureScoreField::score(const Eigen::VectorXd& x,
                                         double t) const {
  const Local local = prepare(x, t);
  return local.rbar / local.sigma_sq;
}

double MixtureScoreField::log_density(const Eigen::VectorXd& x,
                                      double t) const {
  check_point(x, dimension(), "MixtureScoreField");
  const auto [mu, sigma_sq] = schedule_.mu_sigma_sq(t);
  check_sigma(sigma_sq);
  const int dim = dimension();
  Eigen::VectorXd log_kernel =
      (((mu * refs_).rowwise() - x.transpose()).rowwise().squaredNorm() *
       (-0.5 / sigma_sq));
  const double peak = log_kernel.maxCoeff();
  const double lse = peak + std::log((log_kernel.array() - peak).exp().sum());
  return -0.5 * dim * std::log(2.0 * M_PI * sigma_sq) -
         std::log(static_cast<double>(refs_.rows())) + lse;
}

Eigen::VectorXd MixtureScoreField::hvp(const Eigen::VectorXd& x, double t,
                                       const Eigen::VectorXd& v) const {
  return hvp_operator(x, t)(v);
}

double MixtureScoreField::divergence(const Eigen::VectorXd& x, double t) const {
  const Local local = prepare(x, t);
  const double s2 = local.sigma_sq;
  return -dimension() / s2 +
         (local.weighted_sq_norm - local.rbar.squaredNorm()) / (s2 * s2);
}

LinearOperator MixtureScoreField::hvp_operator(const Eigen::VectorXd& x,
                                               double t) const {
  // Weights depend on (x, t) only; one O(N D) setup serves every probe and
  // Lanczos step at this point.
  auto local = std::make_shared<Local>(prepare(x, t));
  return [local](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    if (!v.allFinite())
      throw std::domain_error("MixtureScoreField::hvp: non-finite direction");
    const double s2 = local->sigma_sq;
    // H v = v/s2 - (sum_i w_i r_i r_i^T - rbar rbar^T) v / s2^2
    Eigen::VectorXd proj = local->resid * v;
    Eigen::VectorXd second =
        local->resid.transpose() * local->weights.cwiseProduct(proj) -
        local->rbar * local->rbar.dot(v);
    return v / s2 - second / (s2 * s2);
  };
}

// ---------------------------------------------------------------------------
// AffineGaussianScoreField

AffineGaussianScoreField::AffineGaussianScoreField(Eigen::MatrixXd basis,
                                                   Eigen::VectorXd scales,
                                                   Eigen::VectorXd center,
                                                   NoiseSchedule schedule)
    : basis_(std::move(basis)),
      scales_(std::move(scales)),
      center_(std::move(center)),
      schedule_(schedule) {
  const Eigen::Index dim = basis_.rows();
  const Eigen::Index d = basis_.cols();
  if (scales_.size() != d)
    throw std::invalid_argument("AffineGaussianScoreField: scales/basis mismatch");
  if (center_.size() != dim)
    throw std::invalid_argument("AffineGaussianScoreField: center/basis mismatch");
  if (d > 0 && scales_.minCoeff() <= 0.0)
    throw std::invalid_argument("AffineGaussianScoreField: scales must be > 0");
  if (d > 0) {
    Eigen::MatrixXd gram = basis_.transpose() * basis_;
    if ((gram - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10)
      throw std::invalid_argument(
          "AffineGaussianScoreField: basis columns not orthonormal");
  }
}

AffineGaussianScoreField AffineGaussianScoreField::random(
    int ambient_dim, int intrinsic_dim, std::uint64_t seed,
    NoiseSchedule schedule) {
  Rng rng(seed, 0x0affu);
  Eigen::MatrixXd g(ambient_dim, intrinsic_dim);
  for (int j = 0; j < intrinsic_dim; ++j)
    g.col(j) = gaussian_vector(ambient_dim, rng);
  Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g)
                          .householderQ() *
                      Eigen::MatrixXd::Identity(ambient_dim, intrinsic_dim);
  return AffineGaussianScoreField(std::move(q),
                                  Eigen::VectorXd::Ones(intrinsic_dim),
                                  Eigen::VectorXd::Zero(ambient_dim), schedule);
}

namespace {

// (mu^2 U S^2 U^T + s2 I)^{-1} y via the d-dimensional Woodbury form.
Eigen::VectorXd precision_apply(const Eigen::MatrixXd& basis,
                                const Eigen::VectorXd& scales, double mu,
                                double s2, const Eigen::VectorXd& y) {
  if (basis.cols() == 0) return y / s2;
  Eigen::ArrayXd a = (mu * mu) * scales.array().square();
  Eigen::ArrayXd coef = a / (s2 * (a + s2));
  Eigen::VectorXd proj = basis.transpose() * y;
  return y / s2 - basis * (coef * proj.array()).matrix();
}

}  // namespace

Eigen::VectorXd AffineGaussianScoreField::score(const Eigen::VectorXd& x,
                                                double t) const {
  check_point(x, dimension(), "AffineGaussianScoreField");
  const auto [mu, sigma_sq] = schedule_.mu_sigma_sq(t);
  check_sigma(sigma_sq);
  return -precision_apply(basis_, scales_, mu, sigma_sq, x - mu * center_);
}

double AffineGaussianScoreField::log_density(const Eigen::VectorXd& x,
                                             double t) const {
  check_point(x, dimension(), "AffineGaussianScoreField");
  const auto [mu, sigma_sq] = schedule_.mu_sigma_sq(t);
  check_sigma(sigma_sq);
  const int dim = dimension();
  const int d = intrinsic_dimension();
  const Eigen::VectorXd y = x - mu * center_;
  double log_det = (dim - d) * std::log(sigma_sq);
  for (int k = 0; k < d; ++k)
    log_det += std::log(mu * mu * scales_[k] * scales_[k] + sigma_sq);
  const double quad = y.dot(precision_apply(basis_, scales_, mu, sigma_sq, y));
  return -0.5 * (dim * std::log(2.0 * M_PI) + log_det + quad);
}

Eigen::VectorXd AffineGaussianScoreField::hvp(const Eigen::VectorXd& x,
                                              double t,
                                              const Eigen::VectorXd& v) const {
  check_point(x, dimension(), "AffineGaussianScoreField");
  check_point(v, dimension(), "AffineGaussianScoreField::hvp");
  const auto [mu, sigma_sq] = schedule_.mu_sigma_sq(t);
  check_sigma(sigma_sq);
  return precision_apply(basis_, scales_, mu, sigma_sq, v);
}

double AffineGaussianScoreField::divergence(const Eigen::VectorXd& x,
                                            double t) const {
  check_point(x, dimension(), "AffineGaussianScoreField");
  const auto [mu, sigma_sq] = schedule_.mu_sigma_sq(t);
  check_sigma(sigma_sq);
  double tangent = 0.0;
  for (int k = 0; k < intrinsic_dimension(); ++k)
    tangent += 1.0 / (mu * mu * scales_[k] * scales_[k] + sigma_sq);
  return -(tangent + (dimension() - intrinsic_dimension()) / sigma_sq);
}

LinearOperator AffineGaussianScoreField::hvp_operator(
    const Eigen::VectorXd& x, double t) const {
  check_point(x, dimension(), "AffineGaussianScoreField");
  const auto [mu, sigma_sq] = schedule_.mu_sigma_sq(t);
  check_sigma(sigma_sq);
  const double mu_c = mu;
  const double s2 = sigma_sq;
  return [this, mu_c, s2](const Eigen::VectorXd& v) {
    return precision_apply(basis_, scales_, mu_c, s2, v);
  };
}

Eigen::VectorXd AffineGaussianScoreField::hessian_eigenvalues(double t) const {
  const auto [mu, sigma_sq] = schedule_.mu_sigma_sq(t);
  check_sigma(sigma_sq);
  const int dim = dimension();
  const int d = intrinsic_dimension();
  Eigen::VectorXd evals(dim);
  for (int k = 0; k < d; ++k)
    evals[k] = 1.0 / (mu * mu * scales_[k] * scales_[k] + sigma_sq);
  evals.tail(dim - d).setConstant(1.0 / sigma_sq);
  return evals;
}

// ---------------------------------------------------------------------------
// PerturbedScoreField

PerturbedScoreField::PerturbedScoreField(
    std::shared_ptr<const ScoreField> inner, PerturbationMode mode,
    double epsilon, std::uint64_t seed)
    : inner_(std::move(inner)), mode_(mode), epsilon_(epsilon), seed_(seed) {
  if (!inner_) throw std::invalid_argument("PerturbedScoreField: null inner");
  if (mode_ == PerturbationMode::kDiagRademacher) {
    Rng rng(seed_, 0xd1a6u);
    diag_signs_ = rademacher_vector(inner_->dimension(), rng);
  }
}

Eigen::VectorXd PerturbedScoreField::apply_perturbation(
    const Eigen::VectorXd& v, double t) const {
  const int dim = dimension();
  if (mode_ == PerturbationMode::kDiagRademacher) {
    const double s2 = inner_->schedule().sigma_sq(t);
    check_sigma(s2);
    return (epsilon_ / s2) * diag_signs_.cwiseProduct(v);
  }
  // Implicit symmetric Gaussian: E = eps/sqrt(D) * (G + G^T)/2 with entries
  // regenerated from the counter stream row by row.
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim);
  const double scale = epsilon_ / std::sqrt(static_cast<double>(dim));
  for (int i = 0; i < dim; ++i) {
    Rng row(seed_, 0x6a05u, static_cast<std::uint64_t>(i));
    double acc = 0.0;
    for (int j = 0; j < dim; ++j) {
      const double g = row.gauss();  // g_ij
      acc += g * v[j];
      out[j] += 0.5 * scale * g * v[i];  // G^T contribution
    }
    out[i] += 0.5 * scale * acc;
  }
  return out;
}

double PerturbedScoreField::perturbation_trace(double t) const {
  const int dim = dimension();
  if (mode_ == PerturbationMode::kDiagRademacher) {
    const double s2 = inner_->schedule().sigma_sq(t);
    check_sigma(s2);
    return (epsilon_ / s2) * diag_signs_.sum();
  }
  double acc = 0.0;
  for (int i = 0; i < dim; ++i) {
    Rng row(seed_, 0x6a05u, static_cast<std::uint64_t>(i));
    double g = 0.0;
    for (int j = 0; j <= i; ++j) g = row.gauss();
    acc += g;
  }
  return acc * epsilon_ / std::sqrt(static_cast<double>(dim));
}

double PerturbedScoreField::perturbation_norm_scale(double t) const {
  if (mode_ == PerturbationMode::kDiagRademacher)
    return 1.0 / inner_->schedule().sigma_sq(t);
  return 2.0;  // semicircle edge sqrt(2) plus finite-size slack
}

Eigen::VectorXd PerturbedScoreField::score(const Eigen::VectorXd& x,
                                           double t) const {
  // e(x) = -E (x - 0); the anchor is the origin, so grad e = -E and the
  // reported Hessian is H + E.
  return inner_->score(x, t) - apply_perturbation(x, t);
}

double PerturbedScoreField::log_density(const Eigen::VectorXd& x,
                                        double t) const {
  return inner_->log_density(x, t);
}

Eigen::VectorXd PerturbedScoreField::hvp(const Eigen::VectorXd& x, double t,
                                         const Eigen::VectorXd& v) const {
  return inner_->hvp(x, t, v) + apply_perturbation(v, t);
}

double PerturbedScoreField::divergence(const Eigen::VectorXd& x,
                                       double t) const {
  return inner_->divergence(x, t) - perturbation_trace(t);
}

LinearOperator PerturbedScoreField::hvp_operator(const Eigen::VectorXd& x,
                                                 double t) const {
  auto base = inner_->hvp_operator(x, t);
  return [this, base, t](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return base(v) + apply_perturbation(v, t);
  };
}

}  // namespace lhsd
