#include "lhsd/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace lhsd {

NoiseSchedule::NoiseSchedule(double bmin, double bmax, ScheduleKind k)
    : beta_min(bmin), beta_max(bmax), kind(k) {
  if (!(bmax > bmin && bmin > 0.0))
    throw std::invalid_argument("NoiseSchedule: need beta_max > beta_min > 0");
}

namespace {
void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::domain_error("NoiseSchedule: t must lie in [0, 1]");
}
}  // namespace

double NoiseSchedule::beta(double t) const {
  check_time(t);
  return beta_min + t * (beta_max - beta_min);
}

std::pair<double, double> NoiseSchedule::mu_sigma_sq(double t) const {
  check_time(t);
  const double integral = beta_min * t + 0.5 * (beta_max - beta_min) * t * t;
  const double mu_vp = std::exp(-0.5 * integral);
  const double sigma_sq = 1.0 - mu_vp * mu_vp;
  const double mu = (kind == ScheduleKind::kIdentityMean) ? 1.0 : mu_vp;
  return {mu, sigma_sq};
}

double NoiseSchedule::time_for_sigma_sq(double target_sigma_sq) const {
  if (!(target_sigma_sq > 0.0 && target_sigma_sq < 1.0))
    throw std::domain_error("time_for_sigma_sq: target must lie in (0, 1)");
  // sigma^2 = 1 - exp(-(bmin t + db t^2 / 2)); solve the quadratic in t.
  const double rhs = -std::log(1.0 - target_sigma_sq);
  const double db = beta_max - beta_min;
  const double disc = beta_min * beta_min + 2.0 * db * rhs;
  const double t = (-beta_min + std::sqrt(disc)) / db;
  if (!(t >= 0.0 && t <= 1.0))
    throw std::domain_error("time_for_sigma_sq: target not reachable on [0, 1]");
  return t;
}

}  // namespace lhsd
