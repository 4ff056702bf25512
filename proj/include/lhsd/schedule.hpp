#pragma once

#include <utility>

namespace lhsd {

enum class ScheduleKind {
  kVp,            // variance preserving: mu(t)^2 + sigma(t)^2 = 1
  kIdentityMean,  // mu(t) = 1, same sigma(t)^2 as VP
};

/// VP-SDE noise schedule with a linear beta(t) on t in [0, 1].
///
/// Maps diffusion time to the transition-kernel mean scale mu(t) and noise
/// variance sigma(t)^2 in closed form. The identity-mean variant keeps the
/// same noise variance but does not shrink the mean, so an unscaled
/// Gaussian convolution and the VP kernel share one interface; everything
/// downstream consumes (mu, sigma^2) rather than t.
struct NoiseSchedule {
  double beta_min = 0.1;
  double beta_max = 20.0;
  ScheduleKind kind = ScheduleKind::kVp;

  NoiseSchedule() = default;
  NoiseSchedule(double bmin, double bmax, ScheduleKind k = ScheduleKind::kVp);

  double beta(double t) const;

  /// (mu(t), sigma(t)^2). Throws std::domain_error outside [0, 1].
  std::pair<double, double> mu_sigma_sq(double t) const;

  double mu(double t) const { return mu_sigma_sq(t).first; }
  double sigma_sq(double t) const { return mu_sigma_sq(t).second; }

  /// Inverse of sigma_sq on [0, 1]; closed-form quadratic solve.
  double time_for_sigma_sq(double target_sigma_sq) const;
};

}  // namespace lhsd
