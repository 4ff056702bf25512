#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "lhsd/score_field.hpp"

namespace lhsd {

enum class NbRankRule { kGap, kThreshold };

/// Normal-bundle estimator configuration. M score draws should satisfy
/// M >= D for full-rank detectability.
struct NbConfig {
  int num_scores = 0;  // 0: use 4 * D
  NbRankRule rank_rule = NbRankRule::kGap;
  double threshold_rel = 0.05;
};

/// Density-rate estimator in closed form:
/// D + sigma^2 (div s + ||s||^2). Negative outputs are returned as-is.
double flipd(const ScoreField& field, const Eigen::VectorXd& x, double t);

/// Stochastic variant: divergence replaced by a K-probe Rademacher
/// Hutchinson estimate of -tr(H) via the HVP oracle.
double flipd_hutch(const ScoreField& field, const Eigen::VectorXd& x, double t,
                   int probes = 8, std::uint64_t seed = 0,
                   std::uint64_t point_index = 0);

/// Least-squares slope of log p against log sigma over num_scales noise
/// levels geometrically spaced in [sigma(t)/2, 2 sigma(t)], added to D.
double lidl(const ScoreField& field, const Eigen::VectorXd& x, double t,
            int num_scales = 5);

/// Normal-bundle estimator: rank of the D x M matrix of scores at noisy
/// perturbations of x; returns D - rank. The gap rule picks the largest
/// consecutive singular-value ratio and falls back to the relative
/// threshold when no clear gap exists.
int nb(const ScoreField& field, const Eigen::VectorXd& x, double t,
       const NbConfig& config = {}, std::uint64_t seed = 0,
       std::uint64_t point_index = 0);

/// Local PCA over the k nearest neighbors of x in the dataset: smallest
/// rank reaching the cumulative explained-variance threshold.
int lpca(const Eigen::MatrixXd& dataset_points, const Eigen::VectorXd& x,
         int k_neighbors, double variance_threshold = 0.95);

}  // namespace lhsd
