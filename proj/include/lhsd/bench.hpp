#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lhsd/baselines.hpp"
#include "lhsd/datasets.hpp"
#include "lhsd/diagnostics.hpp"
#include "lhsd/lhsd.hpp"
#include "lhsd/score_field.hpp"

namespace lhsd {

/// Fully resolved experiment description. Loadable from a flat key=value
/// config file with [section] headers; CLI flags override file values.
/// Every random choice flows from the seeds recorded here.
struct ExperimentConfig {
  // dataset: either a file to read or a generator to run
  std::string dataset_path;
  std::string dataset_kind = "mixture";  // mixture | moon | funnel
  MixtureSpec mixture;
  MoonParams moon;
  FunnelParams funnel;
  bool idr = false;
  IdrParams idr_params;

  // oracle
  std::string oracle_kind = "mixture";  // mixture | affine | perturbed
  std::string reference_path;           // mixture refs from file (optional)
  int num_references = 4096;
  int affine_ambient_dim = 64;
  int affine_intrinsic_dim = 8;
  int affine_num_samples = 256;  // on-manifold eval draws for affine oracles
  std::uint64_t oracle_seed = 0;
  std::string perturb_mode = "diag-rademacher";  // or gaussian-sym
  double perturb_epsilon = 0.01;
  std::uint64_t perturb_seed = 0;
  NoiseSchedule schedule;

  // estimation
  std::vector<std::string> methods = {"lhsd"};
  double t = 0.05;
  bool t_auto = false;
  FilterParams filter;
  SlqConfig slq;
  int lidl_scales = 5;
  NbConfig nb;
  int lpca_k = 64;
  bool lenient = false;

  // diagnostics sweep
  double t_lo = 0.01;
  double t_hi = 0.3;
  int t_count = 16;
  double delta = 0.2;
  DeltaMode delta_mode = DeltaMode::kRelative;
  int sweep_points = 32;  // eval-point subsample for spectrum sweeps

  // run
  std::string out_dir = "out";
  int jobs = 0;  // 0: LHSD_JOBS env, then hardware concurrency
  std::uint64_t seed = 0;
};

/// Parses [section] / key = value lines; '#' starts a comment. Unknown keys
/// are an error so typos fail loudly.
ExperimentConfig load_config(const std::string& path);

/// Canonical key=value dump of every experiment-defining field (jobs is
/// excluded: outputs must not depend on the parallelism degree); the config
/// hash is FNV-1a over this string and is echoed as a comment line in every
/// output CSV.
std::string serialize_config(const ExperimentConfig& config);
std::uint64_t config_hash(const ExperimentConfig& config);

/// Worker pool over [0, n). jobs <= 1 runs inline. Work items are claimed
/// by atomic counter; the caller's writes must be index-disjoint. The first
/// exception is rethrown after the pool drains.
void parallel_for(int n, int jobs, const std::function<void(int)>& body);

/// Resolves the parallelism degree: config value, else LHSD_JOBS, else
/// hardware concurrency.
int resolve_jobs(const ExperimentConfig& config);

/// Dataset + matching oracle per the config. For the mixture oracle on a
/// generated mixture dataset, reference and evaluation points are disjoint
/// slices of one sampling stream so they share centroids and frames.
struct ExperimentSetup {
  LabeledDataset eval;
  std::shared_ptr<const ScoreField> field;
};
ExperimentSetup build_setup(const ExperimentConfig& config);

struct MethodRun {
  std::string method;
  Eigen::VectorXd estimates;
  Eigen::VectorXd abs_errors;
  Eigen::VectorXd seconds;  // wall clock per point (timing.csv only)
  std::vector<long> hvp_calls;
  double mae = 0.0;
  long total_hvp_calls = 0;
};

struct BenchmarkResult {
  LabeledDataset eval;
  std::vector<MethodRun> runs;
  double chosen_t = 0.0;
};

/// Runs every configured method over the evaluation set and writes, under
/// out_dir: estimates_<method>.csv, summary.csv (MAE per method), and
/// timing.csv. All value CSVs are byte-stable for a fixed (config, seed);
/// timing.csv carries wall-clock and is excluded from that contract.
/// A point failure without `lenient` drops a PARTIAL_RESULTS marker file
/// and rethrows; with `lenient` the point is recorded as nan.
BenchmarkResult run_benchmark(const ExperimentConfig& config);

struct DiagnosticsResult {
  TransitionMassCurve curve;
  std::vector<SpectrumSummary> spectra;
  std::vector<int> collapse;  // 0/1; int avoids vector<bool> bit packing
                              // under the parallel sweep
  std::optional<SafeZone> zone;
};

/// Sweeps the t grid: per-t pooled spectra, transition-mass curve, collapse
/// flags, and the detected safe zone. Writes transition_mass.csv,
/// spectrum_<i>.csv per grid point, filter_profile.csv, safe_zone.csv.
DiagnosticsResult run_diagnostics(const ExperimentConfig& config);

/// Midpoint of the detected safe zone; throws std::runtime_error when the
/// sweep finds none.
double auto_select_t(const ExperimentConfig& config, const ExperimentSetup& setup);

}  // namespace lhsd
