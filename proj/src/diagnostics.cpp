#include "lhsd/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lhsd {

double SpectrumSummary::max_eigenvalue() const {
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
    if (weights[i] > 0.0) best = std::max(best, eigenvalues[i]);
  return best;
}

double transition_mass(const SpectrumSummary& spectrum, double kappa,
                       double delta, DeltaMode mode) {
  if (spectrum.eigenvalues.size() == 0)
    throw std::invalid_argument("transition_mass: empty spectrum");
  double lo, hi;
  if (mode == DeltaMode::kAbsolute) {
    lo = kappa - delta;
    hi = kappa + delta;
  } else {
    lo = kappa / (1.0 + delta);
    hi = kappa * (1.0 + delta);
  }
  double inside = 0.0, total = 0.0;
  for (Eigen::Index i = 0; i < spectrum.eigenvalues.size(); ++i) {
    const double w = spectrum.weights[i];
    total += w;
    const double lambda = spectrum.eigenvalues[i];
    if (lambda >= lo && lambda <= hi) inside += w;
  }
  return total > 0.0 ? inside / total : 0.0;
}

std::optional<SafeZone> safe_zone(const TransitionMassCurve& curve,
                                  const std::vector<SpectrumSummary>& spectra,
                                  const FilterParams& filter, double m_safe,
                                  double m_peak) {
  const int n = static_cast<int>(curve.t_grid.size());
  if (n < 8)
    throw std::invalid_argument("safe_zone: need at least 8 grid points");
  if (static_cast<int>(spectra.size()) != n)
    throw std::invalid_argument("safe_zone: spectra/grid size mismatch");

  // Maximal contiguous peak regions with M > m_peak.
  struct Region {
    int lo, hi;
  };
  std::vector<Region> peaks;
  for (int i = 0; i < n;) {
    if (curve.masses[i] > m_peak) {
      int j = i;
      while (j + 1 < n && curve.masses[j + 1] > m_peak) ++j;
      peaks.push_back({i, j});
      i = j + 1;
    } else {
      ++i;
    }
  }
  if (peaks.empty()) return std::nullopt;

  int lo_bound, hi_bound;  // candidate indices in [lo_bound, hi_bound]
  if (peaks.size() >= 2) {
    lo_bound = peaks[0].hi + 1;
    hi_bound = peaks[1].lo - 1;
  } else {
    lo_bound = 0;
    hi_bound = peaks[0].lo - 1;
  }
  if (lo_bound > hi_bound) return std::nullopt;

  auto admissible = [&](int i) {
    if (curve.masses[i] > m_safe) return false;
    // Overshoot guard: the cutoff must stay below the top of the spectrum.
    const double kappa = spectra[i].kappa;
    return response(filter, spectra[i].max_eigenvalue(), kappa) < 0.5;
  };

  std::optional<SafeZone> best;
  for (int i = lo_bound; i <= hi_bound;) {
    if (!admissible(i)) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 <= hi_bound && admissible(j + 1)) ++j;
    if (!best || (j - i) > (best->hi_index - best->lo_index)) {
      best = SafeZone{i, j, curve.t_grid[i], curve.t_grid[j]};
    }
    i = j + 1;
  }
  return best;
}

bool collapse_flag(const SpectrumSummary& spectrum, double gap_ratio_min) {
  if (spectrum.source != SpectrumSource::kDense)
    throw std::invalid_argument("collapse_flag: needs a dense spectrum");
  std::vector<double> vals;
  for (Eigen::Index i = 0; i < spectrum.eigenvalues.size(); ++i)
    if (spectrum.eigenvalues[i] > 1e-9) vals.push_back(spectrum.eigenvalues[i]);
  if (vals.size() < 2) return true;
  std::sort(vals.begin(), vals.end());
  double max_ratio = 1.0;
  for (std::size_t i = 1; i < vals.size(); ++i)
    max_ratio = std::max(max_ratio, vals[i] / vals[i - 1]);
  return max_ratio < gap_ratio_min;
}

SpectrumSummary dense_spectrum(const ScoreField& field,
                               const Eigen::VectorXd& x, double t,
                               const FilterParams& filter, int dense_limit) {
  SpectrumSummary summary;
  auto [evals, evecs] =
      dense_sym_eigen(dense_hessian(field, x, t, dense_limit), dense_limit);
  summary.eigenvalues = std::move(evals);
  summary.weights = Eigen::VectorXd::Ones(summary.eigenvalues.size());
  summary.source = SpectrumSource::kDense;
  summary.t = t;
  summary.kappa = cutoff(filter, field.schedule().sigma_sq(t));
  return summary;
}

SpectrumSummary pooled_dense_spectrum(const ScoreField& field,
                                      const Eigen::MatrixXd& points, double t,
                                      const FilterParams& filter,
                                      int dense_limit) {
  const int dim = field.dimension();
  const Eigen::Index n = points.rows();
  SpectrumSummary summary;
  summary.eigenvalues.resize(n * dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    SpectrumSummary one =
        dense_spectrum(field, points.row(i).transpose(), t, filter, dense_limit);
    summary.eigenvalues.segment(i * dim, dim) = one.eigenvalues;
  }
  summary.weights = Eigen::VectorXd::Ones(summary.eigenvalues.size());
  summary.source = SpectrumSource::kDense;
  summary.t = t;
  summary.kappa = cutoff(filter, field.schedule().sigma_sq(t));
  return summary;
}

SpectrumSummary ritz_spectrum(const ScoreField& field,
                              const Eigen::MatrixXd& points, double t,
                              const FilterParams& filter,
                              const SlqConfig& config) {
  const int dim = field.dimension();
  const int m = std::min(config.m, dim);
  std::vector<double> nodes, weights;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    auto op = field.hvp_operator(points.row(i).transpose(), t);
    for (int k = 0; k < config.probes; ++k) {
      Rng rng(config.seed, static_cast<std::uint64_t>(i),
              static_cast<std::uint64_t>(k));
      Eigen::VectorXd probe = rademacher_vector(dim, rng);
      QuadratureRule rule =
          tridiag_eigen(lanczos(op, probe, m, config.reorthogonalize));
      for (Eigen::Index j = 0; j < rule.nodes.size(); ++j) {
        nodes.push_back(rule.nodes[j]);
        weights.push_back(rule.weights[j] * dim);
      }
    }
  }
  SpectrumSummary summary;
  summary.eigenvalues =
      Eigen::Map<Eigen::VectorXd>(nodes.data(), static_cast<Eigen::Index>(nodes.size()));
  summary.weights = Eigen::Map<Eigen::VectorXd>(
      weights.data(), static_cast<Eigen::Index>(weights.size()));
  summary.source = SpectrumSource::kRitz;
  summary.t = t;
  summary.kappa = cutoff(filter, field.schedule().sigma_sq(t));
  return summary;
}

TransitionMassCurve transition_mass_curve(
    const std::vector<SpectrumSummary>& spectra, const Eigen::VectorXd& t_grid,
    double delta, DeltaMode mode) {
  if (static_cast<Eigen::Index>(spectra.size()) != t_grid.size())
    throw std::invalid_argument("transition_mass_curve: size mismatch");
  TransitionMassCurve curve;
  curve.t_grid = t_grid;
  curve.masses.resize(t_grid.size());
  curve.mode = mode;
  curve.delta = delta;
  for (Eigen::Index i = 0; i < t_grid.size(); ++i)
    curve.masses[i] =
        transition_mass(spectra[i], spectra[i].kappa, delta, mode);
  return curve;
}

}  // namespace lhsd
