#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "lhsd/filter.hpp"
#include "lhsd/lhsd.hpp"
#include "lhsd/score_field.hpp"
#include "lhsd/slq.hpp"

namespace lhsd {

enum class SpectrumSource { kDense, kRitz };

/// Weighted eigenvalue sample of the Hessian at one noise scale: exact
/// eigenvalues with unit weights (dense path) or pooled Ritz values with
/// weights tau^2 * D (SLQ spectral density, for D past the dense limit).
struct SpectrumSummary {
  Eigen::VectorXd eigenvalues;
  Eigen::VectorXd weights;
  SpectrumSource source = SpectrumSource::kDense;
  double t = 0.0;
  double kappa = 0.0;

  double max_eigenvalue() const;
};

enum class DeltaMode {
  kAbsolute,  // band [kappa - delta, kappa + delta], literal reading
  kRelative,  // band [kappa/(1+delta), kappa*(1+delta)], scale-invariant
};

/// Weighted fraction of the spectrum inside the band around the cutoff.
double transition_mass(const SpectrumSummary& spectrum, double kappa,
                       double delta, DeltaMode mode);

struct TransitionMassCurve {
  Eigen::VectorXd t_grid;  // ascending
  Eigen::VectorXd masses;  // unit interval
  DeltaMode mode = DeltaMode::kRelative;
  double delta = 0.2;
};

struct SafeZone {
  int lo_index = 0;
  int hi_index = 0;  // inclusive
  double t_lo = 0.0;
  double t_hi = 0.0;
};

/// Longest low-mass run of the curve sitting in the spectral valley.
///
/// With two or more collision peaks (M > m_peak) the run must lie strictly
/// between the first two; with a single peak, the run preceding it is
/// accepted (exact oracles never collide with the normal cluster, so the
/// small-t peak of the two-peak picture does not exist for them). Each t in
/// the run must also keep the cutoff below the top of the spectrum
/// (f(lambda_max) < 1/2), which rejects the overshoot regime where the
/// cutoff has drifted past every eigenvalue. Absence is a valid result.
std::optional<SafeZone> safe_zone(const TransitionMassCurve& curve,
                                  const std::vector<SpectrumSummary>& spectra,
                                  const FilterParams& filter,
                                  double m_safe = 0.005,
                                  double m_peak = 0.01);

/// True when no multiplicative gap of at least gap_ratio_min separates the
/// sorted eigenvalues (restricted to values above 1e-9): the tangent and
/// normal clusters have merged.
bool collapse_flag(const SpectrumSummary& spectrum,
                   double gap_ratio_min = 10.0);

/// Exact spectrum at one point (dense assembly + eigendecomposition).
SpectrumSummary dense_spectrum(const ScoreField& field,
                               const Eigen::VectorXd& x, double t,
                               const FilterParams& filter,
                               int dense_limit = 1024);

/// Spectrum pooled over several points, dense path.
SpectrumSummary pooled_dense_spectrum(const ScoreField& field,
                                      const Eigen::MatrixXd& points, double t,
                                      const FilterParams& filter,
                                      int dense_limit = 1024);

/// Ritz-value spectral density pooled over points and probes; per-probe
/// weights are tau_j^2 * D so each probe contributes total mass D.
SpectrumSummary ritz_spectrum(const ScoreField& field,
                              const Eigen::MatrixXd& points, double t,
                              const FilterParams& filter,
                              const SlqConfig& config);

/// Transition-mass curve over a t grid from per-t spectra.
TransitionMassCurve transition_mass_curve(
    const std::vector<SpectrumSummary>& spectra, const Eigen::VectorXd& t_grid,
    double delta = 0.2, DeltaMode mode = DeltaMode::kRelative);

}  // namespace lhsd
