#include "lhsd/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "lhsd/rng.hpp"

namespace lhsd {

double flipd(const ScoreField& field, const Eigen::VectorXd& x, double t) {
  const double sigma_sq = field.schedule().sigma_sq(t);
  if (!(sigma_sq > 0.0)) throw std::domain_error("flipd: sigma(t) must be > 0");
  const Eigen::VectorXd s = field.score(x, t);
  return field.dimension() +
         sigma_sq * (field.divergence(x, t) + s.squaredNorm());
}

double flipd_hutch(const ScoreField& field, const Eigen::VectorXd& x, double t,
                   int probes, std::uint64_t seed, std::uint64_t point_index) {
  const double sigma_sq = field.schedule().sigma_sq(t);
  if (!(sigma_sq > 0.0))
    throw std::domain_error("flipd_hutch: sigma(t) must be > 0");
  if (probes < 1) throw std::invalid_argument("flipd_hutch: need K >= 1");
  const int dim = field.dimension();
  auto op = field.hvp_operator(x, t);
  double trace_acc = 0.0;
  for (int k = 0; k < probes; ++k) {
    Rng rng(seed, point_index, static_cast<std::uint64_t>(k));
    Eigen::VectorXd v = rademacher_vector(dim, rng);
    trace_acc += v.dot(op(v));
  }
  const double div_estimate = -trace_acc / probes;  // div s = -tr(H)
  const Eigen::VectorXd s = field.score(x, t);
  return dim + sigma_sq * (div_estimate + s.squaredNorm());
}

double lidl(const ScoreField& field, const Eigen::VectorXd& x, double t,
            int num_scales) {
  if (num_scales < 2) throw std::invalid_argument("lidl: need L >= 2");
  const double sigma = std::sqrt(field.schedule().sigma_sq(t));
  const double sigma_max_sq = field.schedule().sigma_sq(1.0);

  std::vector<double> log_sigmas, log_densities;
  for (int i = 0; i < num_scales; ++i) {
    const double frac = static_cast<double>(i) / (num_scales - 1);
    double s = 0.5 * sigma * std::pow(4.0, frac);  // geometric in [s/2, 2s]
    s = std::min(s, 0.999 * std::sqrt(sigma_max_sq));
    const double ti = field.schedule().time_for_sigma_sq(s * s);
    log_sigmas.push_back(std::log(s));
    log_densities.push_back(field.log_density(x, ti));
  }
  const double mean_x =
      std::accumulate(log_sigmas.begin(), log_sigmas.end(), 0.0) / num_scales;
  const double mean_y =
      std::accumulate(log_densities.begin(), log_densities.end(), 0.0) /
      num_scales;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < num_scales; ++i) {
    sxx += (log_sigmas[i] - mean_x) * (log_sigmas[i] - mean_x);
    sxy += (log_sigmas[i] - mean_x) * (log_densities[i] - mean_y);
  }
  if (sxx <= 0.0) throw std::domain_error("lidl: degenerate noise grid");
  return field.dimension() + sxy / sxx;
}

int nb(const ScoreField& field, const Eigen::VectorXd& x, double t,
       const NbConfig& config, std::uint64_t seed, std::uint64_t point_index) {
  const int dim = field.dimension();
  const auto [mu, sigma_sq] = field.schedule().mu_sigma_sq(t);
  if (!(sigma_sq > 0.0)) throw std::domain_error("nb: sigma(t) must be > 0");
  const int num_scores = config.num_scores > 0 ? config.num_scores : 4 * dim;
  const double sigma = std::sqrt(sigma_sq);

  Eigen::MatrixXd scores(dim, num_scores);
  for (int k = 0; k < num_scores; ++k) {
    Rng rng(seed, point_index, static_cast<std::uint64_t>(k), 0x4e62u);
    Eigen::VectorXd noisy = mu * x + sigma * gaussian_vector(dim, rng);
    scores.col(k) = field.score(noisy, t);
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(scores);
  const Eigen::VectorXd sv = svd.singularValues();
  const int n_sv = static_cast<int>(sv.size());
  if (n_sv == 0 || sv[0] <= 0.0) return dim;

  int rank = 0;
  bool gap_found = false;
  if (config.rank_rule == NbRankRule::kGap) {
    double best_ratio = 0.0;
    for (int i = 0; i + 1 < n_sv; ++i) {
      if (sv[i + 1] <= 0.0) {
        if (sv[i] > 0.0 && !gap_found) {
          rank = i + 1;
          gap_found = true;
        }
        break;
      }
      const double ratio = sv[i] / sv[i + 1];
      if (ratio > best_ratio) {
        best_ratio = ratio;
        rank = i + 1;
      }
    }
    // No pronounced gap: the spectrum decays smoothly, fall back.
    if (!gap_found) gap_found = best_ratio >= 2.0;
  }
  if (!gap_found) {
    rank = 0;
    for (int i = 0; i < n_sv; ++i)
      if (sv[i] > config.threshold_rel * sv[0]) ++rank;
  }
  return dim - std::min(rank, dim);
}

int lpca(const Eigen::MatrixXd& dataset_points, const Eigen::VectorXd& x,
         int k_neighbors, double variance_threshold) {
  const Eigen::Index n = dataset_points.rows();
  if (k_neighbors < 2 || k_neighbors > n)
    throw std::invalid_argument("lpca: need 2 <= k <= N");

  Eigen::VectorXd dists =
      (dataset_points.rowwise() - x.transpose()).rowwise().squaredNorm();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::partial_sort(order.begin(), order.begin() + k_neighbors, order.end(),
                    [&](Eigen::Index a, Eigen::Index b) {
                      return dists[a] != dists[b] ? dists[a] < dists[b] : a < b;
                    });

  Eigen::MatrixXd nbrs(k_neighbors, dataset_points.cols());
  for (int i = 0; i < k_neighbors; ++i) nbrs.row(i) = dataset_points.row(order[i]);
  nbrs.rowwise() -= nbrs.colwise().mean();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(nbrs);
  Eigen::VectorXd var = svd.singularValues().array().square();
  const double total = var.sum();
  if (total <= 0.0) return 0;  // degenerate neighborhood
  double acc = 0.0;
  for (Eigen::Index r = 0; r < var.size(); ++r) {
    acc += var[r];
    if (acc >= variance_threshold * total) return static_cast<int>(r + 1);
  }
  return static_cast<int>(var.size());
}

}  // namespace lhsd
