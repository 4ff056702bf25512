#pragma once

#include <cstdint>
#include <functional>
#include <memory>

#include <Eigen/Core>

#include "lhsd/schedule.hpp"

namespace lhsd {

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Matrix-free oracle for a perturbed marginal p_t: score s = grad log p_t,
/// log-density, divergence of the score, and products with the log-density
/// Hessian H = -hess log p_t.
class ScoreField {
 public:
  virtual ~ScoreField() = default;

  virtual int dimension() const = 0;
  virtual const NoiseSchedule& schedule() const = 0;

  virtual Eigen::VectorXd score(const Eigen::VectorXd& x, double t) const = 0;
  virtual double log_density(const Eigen::VectorXd& x, double t) const = 0;
  virtual Eigen::VectorXd hvp(const Eigen::VectorXd& x, double t,
                              const Eigen::VectorXd& v) const = 0;
  /// tr(grad s) = -tr(H).
  virtual double divergence(const Eigen::VectorXd& x, double t) const = 0;

  /// HVP closure bound to a fixed (x, t). Fields with per-point state
  /// (mixture softmax weights) do their setup once here; the closure must be
  /// cheap to apply and safe to call repeatedly.
  virtual LinearOperator hvp_operator(const Eigen::VectorXd& x,
                                      double t) const;
};

/// Assembles H column-by-column via hvp on the coordinate basis, then
/// symmetrizes. Brute-force verification path; throws over dense_limit.
Eigen::MatrixXd dense_hessian(const ScoreField& field, const Eigen::VectorXd& x,
                              double t, int dense_limit = 1024);

/// Exact finite-mixture oracle: p_t(x) = (1/N) sum_i N(x; mu(t) x_i, sigma^2 I)
/// over a fixed reference set. All kernel sums run in log-space; at small
/// sigma the softmax weights collapse onto the nearest reference points.
class MixtureScoreField : public ScoreField {
 public:
  /// reference_points: one row per point (N x D).
  MixtureScoreField(Eigen::MatrixXd reference_points, NoiseSchedule schedule);

  int dimension() const override { return static_cast<int>(refs_.cols()); }
  const NoiseSchedule& schedule() const override { return schedule_; }
  int num_references() const { return static_cast<int>(refs_.rows()); }
  const Eigen::MatrixXd& reference_points() const { return refs_; }

  Eigen::VectorXd score(const Eigen::VectorXd& x, double t) const override;
  double log_density(const Eigen::VectorXd& x, double t) const override;
  Eigen::VectorXd hvp(const Eigen::VectorXd& x, double t,
                      const Eigen::VectorXd& v) const override;
  double divergence(const Eigen::VectorXd& x, double t) const override;
  LinearOperator hvp_operator(const Eigen::VectorXd& x,
                              double t) const override;

 private:
  // Softmax weights and residuals r_i = mu x_i - x at a fixed (x, t),
  // pruned to the points that carry non-negligible weight.
  struct Local {
    double sigma_sq = 0.0;
    Eigen::MatrixXd resid;   // active rows
    Eigen::VectorXd weights; // matching softmax weights, sum to 1
    Eigen::VectorXd rbar;    // weighted mean residual
    double weighted_sq_norm = 0.0;  // sum_i w_i ||r_i||^2
  };
  Local prepare(const Eigen::VectorXd& x, double t) const;

  Eigen::MatrixXd refs_;
  NoiseSchedule schedule_;
};

/// Exact Gaussian oracle supported near an affine subspace: covariance
/// mu^2 U diag(s_k^2) U^T + sigma^2 I with orthonormal tangent frame U.
/// The Hessian is constant in x with eigenvalues 1/(mu^2 s_k^2 + sigma^2)
/// on the d tangent directions and 1/sigma^2 on the D-d normal ones, so it
/// realizes the tangent-normal spectral separation in closed form.
class AffineGaussianScoreField : public ScoreField {
 public:
  AffineGaussianScoreField(Eigen::MatrixXd basis, Eigen::VectorXd scales,
                           Eigen::VectorXd center, NoiseSchedule schedule);

  /// Convenience: seeded random orthonormal frame, unit scales, zero center.
  static AffineGaussianScoreField random(int ambient_dim, int intrinsic_dim,
                                         std::uint64_t seed,
                                         NoiseSchedule schedule = {});

  int dimension() const override { return static_cast<int>(basis_.rows()); }
  int intrinsic_dimension() const { return static_cast<int>(basis_.cols()); }
  const NoiseSchedule& schedule() const override { return schedule_; }
  const Eigen::VectorXd& center() const { return center_; }
  const Eigen::MatrixXd& basis() const { return basis_; }

  Eigen::VectorXd score(const Eigen::VectorXd& x, double t) const override;
  double log_density(const Eigen::VectorXd& x, double t) const override;
  Eigen::VectorXd hvp(const Eigen::VectorXd& x, double t,
                      const Eigen::VectorXd& v) const override;
  double divergence(const Eigen::VectorXd& x, double t) const override;
  LinearOperator hvp_operator(const Eigen::VectorXd& x,
                              double t) const override;

  /// Full closed-form Hessian spectrum at time t (d tangent + D-d normal).
  Eigen::VectorXd hessian_eigenvalues(double t) const;

 private:
  Eigen::MatrixXd basis_;   // D x d, orthonormal columns
  Eigen::VectorXd scales_;  // d on-manifold std devs
  Eigen::VectorXd center_;
  NoiseSchedule schedule_;
};

enum class PerturbationMode {
  kGaussianSym,     // seeded implicit symmetric Gaussian, norm scale ~ 2
  kDiagRademacher,  // seeded diagonal +-eps/sigma^2
};

/// Wraps another field with a fixed seeded score error e: the reported score
/// becomes s + e and the Hessian H + E with E = -grad e symmetric. Realizes
/// the trace-accumulation failure mode of score approximation error
/// deterministically. The log-density is passed through unperturbed.
class PerturbedScoreField : public ScoreField {
 public:
  PerturbedScoreField(std::shared_ptr<const ScoreField> inner,
                      PerturbationMode mode, double epsilon,
                      std::uint64_t seed);

  int dimension() const override { return inner_->dimension(); }
  const NoiseSchedule& schedule() const override { return inner_->schedule(); }

  Eigen::VectorXd score(const Eigen::VectorXd& x, double t) const override;
  double log_density(const Eigen::VectorXd& x, double t) const override;
  Eigen::VectorXd hvp(const Eigen::VectorXd& x, double t,
                      const Eigen::VectorXd& v) const override;
  double divergence(const Eigen::VectorXd& x, double t) const override;
  LinearOperator hvp_operator(const Eigen::VectorXd& x,
                              double t) const override;

  /// E v, matrix-free. O(D) state; the Gaussian mode regenerates entries
  /// from the counter stream on every application.
  Eigen::VectorXd apply_perturbation(const Eigen::VectorXd& v, double t) const;
  double perturbation_trace(double t) const;
  /// Declared bound: ||E|| <= epsilon * norm_scale(t) for the chosen mode.
  double perturbation_norm_scale(double t) const;

 private:
  std::shared_ptr<const ScoreField> inner_;
  PerturbationMode mode_;
  double epsilon_;
  std::uint64_t seed_;
  Eigen::VectorXd diag_signs_;  // kDiagRademacher only
};

}  // namespace lhsd
