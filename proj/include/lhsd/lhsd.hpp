#pragma once

#include <string>

#include <Eigen/Core>

#include "lhsd/filter.hpp"
#include "lhsd/score_field.hpp"
#include "lhsd/slq.hpp"

namespace lhsd {

/// One per-point LID estimate with enough provenance to reproduce it.
struct EstimateRecord {
  int point_index = 0;
  double t = 0.0;
  double estimate = 0.0;
  Eigen::VectorXd per_probe;  // empty for exact methods
  long hvp_calls = 0;
  std::string method;
  FilterParams filter;
  SlqConfig slq;
};

/// LID estimate by spectrally filtered trace of the log-density Hessian:
/// Rademacher probes, m-step Lanczos on the HVP oracle at (x, t), Gaussian
/// quadrature of the Hill filter, mean over K probes.
EstimateRecord lhsd_estimate(const ScoreField& field, const Eigen::VectorXd& x,
                             double t, const FilterParams& filter,
                             const SlqConfig& config, int point_index = 0);

/// Exact dense variant: assemble the Hessian, eigendecompose, sum f(lambda).
double lhsd_exact(const ScoreField& field, const Eigen::VectorXd& x, double t,
                  const FilterParams& filter, int dense_limit = 1024);

}  // namespace lhsd
