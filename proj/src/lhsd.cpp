#include "lhsd/lhsd.hpp"

#include <stdexcept>

namespace lhsd {

EstimateRecord lhsd_estimate(const ScoreField& field, const Eigen::VectorXd& x,
                             double t, const FilterParams& filter,
                             const SlqConfig& config, int point_index) {
  const double sigma_sq = field.schedule().sigma_sq(t);
  const double kappa = cutoff(filter, sigma_sq);
  auto op = field.hvp_operator(x, t);
  auto f = [&filter, kappa](double lambda) {
    return response(filter, lambda, kappa);
  };
  TraceEstimate trace = trace_of_function(
      op, field.dimension(), f, config,
      static_cast<std::uint64_t>(point_index));

  EstimateRecord record;
  record.point_index = point_index;
  record.t = t;
  record.estimate = trace.estimate;
  record.per_probe = std::move(trace.per_probe);
  record.hvp_calls = trace.hvp_calls;
  record.method = "lhsd";
  record.filter = filter;
  record.slq = config;
  return record;
}

double lhsd_exact(const ScoreField& field, const Eigen::VectorXd& x, double t,
                  const FilterParams& filter, int dense_limit) {
  const double sigma_sq = field.schedule().sigma_sq(t);
  const double kappa = cutoff(filter, sigma_sq);
  Eigen::MatrixXd hess = dense_hessian(field, x, t, dense_limit);
  auto [evals, evecs] = dense_sym_eigen(hess, dense_limit);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < evals.size(); ++i)
    acc += response(filter, evals[i], kappa);
  return acc;
}

}  // namespace lhsd
