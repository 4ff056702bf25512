#pragma once

#include <cmath>
#include <stdexcept>

namespace lhsd {

/// Hill-type spectral low-pass filter f(lambda) = 1 / (1 + (|lambda|/kappa)^p).
///
/// Negative eigenvalues are folded by absolute value, never clamped: slightly
/// negative tangent eigenvalues still count as tangent components.
struct FilterParams {
  double c = 0.1;  // cutoff coefficient, kappa = c / sigma^2
  double p = 4.0;  // steepness

  FilterParams() = default;
  FilterParams(double c_, double p_) : c(c_), p(p_) {
    if (!(c > 0.0)) throw std::invalid_argument("FilterParams: c must be > 0");
    if (!(p >= 1.0)) throw std::invalid_argument("FilterParams: p must be >= 1");
  }
};

/// Noise-adaptive cutoff kappa = c / sigma^2.
inline double cutoff(const FilterParams& params, double sigma_sq) {
  if (!(sigma_sq > 0.0))
    throw std::domain_error("cutoff: sigma_sq must be > 0");
  return params.c / sigma_sq;
}

/// Filter response in (0, 1]; f(kappa) = 1/2 exactly.
inline double response(const FilterParams& params, double lambda, double kappa) {
  if (!(kappa > 0.0)) throw std::domain_error("response: kappa must be > 0");
  return 1.0 / (1.0 + std::pow(std::abs(lambda) / kappa, params.p));
}

}  // namespace lhsd
