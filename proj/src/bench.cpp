#include "lhsd/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "lhsd/rng.hpp"

namespace lhsd {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw std::invalid_argument("config: bad boolean for " + key + ": " + value);
}

std::vector<int> parse_int_list(const std::string& value) {
  std::vector<int> out;
  std::istringstream ss(value);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stoi(cell));
  return out;
}

std::vector<std::string> parse_string_list(const std::string& value) {
  std::vector<std::string> out;
  std::istringstream ss(value);
  std::string cell;
  while (std::getline(ss, cell, ','))
    if (!cell.empty()) out.push_back(cell);
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

void apply_key(ExperimentConfig& c, const std::string& section,
               const std::string& key, const std::string& value) {
  const std::string full = section + "." + key;
  if (full == "dataset.path") c.dataset_path = value;
  else if (full == "dataset.kind") c.dataset_kind = value;
  else if (full == "dataset.idr") c.idr = parse_bool(value, full);
  else if (full == "mixture.ambient_dim") c.mixture.ambient_dim = std::stoi(value);
  else if (full == "mixture.component_dims") c.mixture.component_dims = parse_int_list(value);
  else if (full == "mixture.samples_per_component") c.mixture.samples_per_component = std::stoi(value);
  else if (full == "mixture.nonlinearity")
    c.mixture.nonlinearity = value == "sinusoidal" ? MixtureNonlinearity::kSinusoidal
                             : value == "linear"   ? MixtureNonlinearity::kLinear
                             : throw std::invalid_argument("config: bad nonlinearity " + value);
  else if (full == "mixture.omega") c.mixture.omega = std::stod(value);
  else if (full == "mixture.min_mode_distance") c.mixture.min_mode_distance = std::stod(value);
  else if (full == "mixture.seed") c.mixture.seed = std::stoull(value);
  else if (full == "moon.outer_radius") c.moon.outer_radius = std::stod(value);
  else if (full == "moon.inner_radius") c.moon.inner_radius = std::stod(value);
  else if (full == "moon.inner_shift") c.moon.inner_shift = std::stod(value);
  else if (full == "moon.scale") c.moon.scale = std::stod(value);
  else if (full == "moon.noise") c.moon.noise = std::stod(value);
  else if (full == "moon.boundary_tol") c.moon.boundary_tol = std::stod(value);
  else if (full == "moon.num_samples") c.moon.num_samples = std::stoi(value);
  else if (full == "moon.seed") c.moon.seed = std::stoull(value);
  else if (full == "funnel.r0") c.funnel.r0 = std::stod(value);
  else if (full == "funnel.t_min") c.funnel.t_min = std::stod(value);
  else if (full == "funnel.t_max") c.funnel.t_max = std::stod(value);
  else if (full == "funnel.t_shift") c.funnel.t_shift = std::stod(value);
  else if (full == "funnel.scale") c.funnel.scale = std::stod(value);
  else if (full == "funnel.noise") c.funnel.noise = std::stod(value);
  else if (full == "funnel.r_stick") c.funnel.r_stick = std::stod(value);
  else if (full == "funnel.r_skirt") c.funnel.r_skirt = std::stod(value);
  else if (full == "funnel.num_samples") c.funnel.num_samples = std::stoi(value);
  else if (full == "funnel.seed") c.funnel.seed = std::stoull(value);
  else if (full == "idr.target_dim") c.idr_params.target_dim = std::stoi(value);
  else if (full == "idr.num_features") c.idr_params.num_features = std::stoi(value);
  else if (full == "idr.clamp_unit") c.idr_params.clamp_unit = parse_bool(value, full);
  else if (full == "idr.seed") c.idr_params.seed = std::stoull(value);
  else if (full == "oracle.kind") c.oracle_kind = value;
  else if (full == "oracle.reference_path") c.reference_path = value;
  else if (full == "oracle.num_references") c.num_references = std::stoi(value);
  else if (full == "oracle.ambient_dim") c.affine_ambient_dim = std::stoi(value);
  else if (full == "oracle.intrinsic_dim") c.affine_intrinsic_dim = std::stoi(value);
  else if (full == "oracle.num_samples") c.affine_num_samples = std::stoi(value);
  else if (full == "oracle.seed") c.oracle_seed = std::stoull(value);
  else if (full == "oracle.perturb_mode") c.perturb_mode = value;
  else if (full == "oracle.epsilon") c.perturb_epsilon = std::stod(value);
  else if (full == "oracle.perturb_seed") c.perturb_seed = std::stoull(value);
  else if (full == "schedule.beta_min") c.schedule.beta_min = std::stod(value);
  else if (full == "schedule.beta_max") c.schedule.beta_max = std::stod(value);
  else if (full == "schedule.kind")
    c.schedule.kind = value == "vp"       ? ScheduleKind::kVp
                      : value == "identity" ? ScheduleKind::kIdentityMean
                      : throw std::invalid_argument("config: bad schedule " + value);
  else if (full == "estimate.methods") c.methods = parse_string_list(value);
  else if (full == "estimate.t") c.t = std::stod(value);
  else if (full == "estimate.t_auto") c.t_auto = parse_bool(value, full);
  else if (full == "estimate.filter_c") c.filter.c = std::stod(value);
  else if (full == "estimate.filter_p") c.filter.p = std::stod(value);
  else if (full == "estimate.slq_m") c.slq.m = std::stoi(value);
  else if (full == "estimate.slq_k") c.slq.probes = std::stoi(value);
  else if (full == "estimate.reorthogonalize") c.slq.reorthogonalize = parse_bool(value, full);
  else if (full == "estimate.dense_limit") c.slq.dense_limit = std::stoi(value);
  else if (full == "estimate.lidl_scales") c.lidl_scales = std::stoi(value);
  else if (full == "estimate.nb_scores") c.nb.num_scores = std::stoi(value);
  else if (full == "estimate.nb_rank_rule")
    c.nb.rank_rule = value == "gap"         ? NbRankRule::kGap
                     : value == "threshold" ? NbRankRule::kThreshold
                     : throw std::invalid_argument("config: bad rank rule " + value);
  else if (full == "estimate.nb_threshold") c.nb.threshold_rel = std::stod(value);
  else if (full == "estimate.lpca_k") c.lpca_k = std::stoi(value);
  else if (full == "estimate.lenient") c.lenient = parse_bool(value, full);
  else if (full == "diagnostics.t_lo") c.t_lo = std::stod(value);
  else if (full == "diagnostics.t_hi") c.t_hi = std::stod(value);
  else if (full == "diagnostics.t_count") c.t_count = std::stoi(value);
  else if (full == "diagnostics.delta") c.delta = std::stod(value);
  else if (full == "diagnostics.delta_mode")
    c.delta_mode = value == "relative"   ? DeltaMode::kRelative
                   : value == "absolute" ? DeltaMode::kAbsolute
                   : throw std::invalid_argument("config: bad delta mode " + value);
  else if (full == "diagnostics.sweep_points") c.sweep_points = std::stoi(value);
  else if (full == "run.out_dir") c.out_dir = value;
  else if (full == "run.jobs") c.jobs = std::stoi(value);
  else if (full == "run.seed") c.seed = std::stoull(value);
  else
    throw std::invalid_argument("config: unknown key " + full);
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  ExperimentConfig config;
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " is not key = value");
    apply_key(config, section, trim(line.substr(0, eq)),
              trim(line.substr(eq + 1)));
  }
  return config;
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "dataset.path=" << c.dataset_path << "\ndataset.kind=" << c.dataset_kind
      << "\ndataset.idr=" << c.idr
      << "\nmixture.ambient_dim=" << c.mixture.ambient_dim
      << "\nmixture.component_dims=";
  for (std::size_t i = 0; i < c.mixture.component_dims.size(); ++i)
    out << (i ? "," : "") << c.mixture.component_dims[i];
  out << "\nmixture.samples_per_component=" << c.mixture.samples_per_component
      << "\nmixture.nonlinearity="
      << (c.mixture.nonlinearity == MixtureNonlinearity::kSinusoidal ? "sinusoidal" : "linear")
      << "\nmixture.omega=" << fmt(c.mixture.omega)
      << "\nmixture.min_mode_distance=" << fmt(c.mixture.min_mode_distance)
      << "\nmixture.seed=" << c.mixture.seed
      << "\nmoon.outer_radius=" << fmt(c.moon.outer_radius)
      << "\nmoon.inner_radius=" << fmt(c.moon.inner_radius)
      << "\nmoon.inner_shift=" << fmt(c.moon.inner_shift)
      << "\nmoon.scale=" << fmt(c.moon.scale) << "\nmoon.noise=" << fmt(c.moon.noise)
      << "\nmoon.boundary_tol=" << fmt(c.moon.boundary_tol)
      << "\nmoon.num_samples=" << c.moon.num_samples << "\nmoon.seed=" << c.moon.seed
      << "\nfunnel.r0=" << fmt(c.funnel.r0) << "\nfunnel.t_min=" << fmt(c.funnel.t_min)
      << "\nfunnel.t_max=" << fmt(c.funnel.t_max)
      << "\nfunnel.t_shift=" << fmt(c.funnel.t_shift)
      << "\nfunnel.scale=" << fmt(c.funnel.scale)
      << "\nfunnel.noise=" << fmt(c.funnel.noise)
      << "\nfunnel.r_stick=" << fmt(c.funnel.r_stick)
      << "\nfunnel.r_skirt=" << fmt(c.funnel.r_skirt)
      << "\nfunnel.num_samples=" << c.funnel.num_samples
      << "\nfunnel.seed=" << c.funnel.seed
      << "\nidr.target_dim=" << c.idr_params.target_dim
      << "\nidr.num_features=" << c.idr_params.num_features
      << "\nidr.clamp_unit=" << c.idr_params.clamp_unit
      << "\nidr.seed=" << c.idr_params.seed << "\noracle.kind=" << c.oracle_kind
      << "\noracle.reference_path=" << c.reference_path
      << "\noracle.num_references=" << c.num_references
      << "\noracle.ambient_dim=" << c.affine_ambient_dim
      << "\noracle.intrinsic_dim=" << c.affine_intrinsic_dim
      << "\noracle.num_samples=" << c.affine_num_samples
      << "\noracle.seed=" << c.oracle_seed
      << "\noracle.perturb_mode=" << c.perturb_mode
      << "\noracle.epsilon=" << fmt(c.perturb_epsilon)
      << "\noracle.perturb_seed=" << c.perturb_seed
      << "\nschedule.beta_min=" << fmt(c.schedule.beta_min)
      << "\nschedule.beta_max=" << fmt(c.schedule.beta_max)
      << "\nschedule.kind="
      << (c.schedule.kind == ScheduleKind::kVp ? "vp" : "identity")
      << "\nestimate.methods=";
  for (std::size_t i = 0; i < c.methods.size(); ++i)
    out << (i ? "," : "") << c.methods[i];
  out << "\nestimate.t=" << fmt(c.t) << "\nestimate.t_auto=" << c.t_auto
      << "\nestimate.filter_c=" << fmt(c.filter.c)
      << "\nestimate.filter_p=" << fmt(c.filter.p)
      << "\nestimate.slq_m=" << c.slq.m << "\nestimate.slq_k=" << c.slq.probes
      << "\nestimate.reorthogonalize=" << c.slq.reorthogonalize
      << "\nestimate.dense_limit=" << c.slq.dense_limit
      << "\nestimate.lidl_scales=" << c.lidl_scales
      << "\nestimate.nb_scores=" << c.nb.num_scores << "\nestimate.nb_rank_rule="
      << (c.nb.rank_rule == NbRankRule::kGap ? "gap" : "threshold")
      << "\nestimate.nb_threshold=" << fmt(c.nb.threshold_rel)
      << "\nestimate.lpca_k=" << c.lpca_k << "\nestimate.lenient=" << c.lenient
      << "\ndiagnostics.t_lo=" << fmt(c.t_lo)
      << "\ndiagnostics.t_hi=" << fmt(c.t_hi)
      << "\ndiagnostics.t_count=" << c.t_count
      << "\ndiagnostics.delta=" << fmt(c.delta) << "\ndiagnostics.delta_mode="
      << (c.delta_mode == DeltaMode::kRelative ? "relative" : "absolute")
      << "\ndiagnostics.sweep_points=" << c.sweep_points
      << "\nrun.out_dir=" << c.out_dir
      // jobs is a scheduling knob, not an experiment parameter: outputs are
      // identical across parallelism degrees, so it stays out of the hash.
      << "\nrun.seed=" << c.seed << "\n";
  return out.str();
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  const std::string blob = serialize_config(config);
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : blob) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

void parallel_for(int n, int jobs, const std::function<void(int)>& body) {
  if (n <= 0) return;
  if (jobs <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error) return;
      }
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int workers = std::min(jobs, n);
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

int resolve_jobs(const ExperimentConfig& config) {
  if (config.jobs > 0) return config.jobs;
  if (const char* env = std::getenv("LHSD_JOBS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

LabeledDataset generate_eval(const ExperimentConfig& config) {
  if (!config.dataset_path.empty()) return read_dataset(config.dataset_path);
  if (config.dataset_kind == "mixture") return generate_mixture(config.mixture);
  if (config.dataset_kind == "moon") return generate_moon(config.moon);
  if (config.dataset_kind == "funnel") return generate_funnel(config.funnel);
  throw std::invalid_argument("config: unknown dataset kind " +
                              config.dataset_kind);
}

// Reference and eval sets for a generated mixture share one sampling stream
// (so centroids and frames match) and use disjoint slices of it.
void split_mixture(const ExperimentConfig& config, LabeledDataset& eval,
                   Eigen::MatrixXd& refs) {
  MixtureSpec spec = config.mixture;
  const int num_components = static_cast<int>(spec.component_dims.size());
  const int eval_spc = spec.samples_per_component;
  const int ref_base = config.num_references / num_components;
  const int ref_rem = config.num_references % num_components;
  int max_ref_spc = ref_base + (ref_rem > 0 ? 1 : 0);
  spec.samples_per_component = eval_spc + max_ref_spc;
  LabeledDataset all = generate_mixture(spec);

  eval.points.resize(num_components * eval_spc, spec.ambient_dim);
  eval.gt_lid.resize(num_components * eval_spc);
  eval.component_id.resize(num_components * eval_spc);
  eval.centroids = all.centroids;
  eval.generator = all.generator;
  eval.seed = all.seed;
  refs.resize(config.num_references, spec.ambient_dim);

  int eval_row = 0, ref_row = 0;
  for (int k = 0; k < num_components; ++k) {
    const int block = k * spec.samples_per_component;
    const int ref_spc = ref_base + (k < ref_rem ? 1 : 0);
    for (int s = 0; s < eval_spc; ++s, ++eval_row) {
      eval.points.row(eval_row) = all.points.row(block + s);
      eval.gt_lid[eval_row] = all.gt_lid[block + s];
      eval.component_id[eval_row] = all.component_id[block + s];
    }
    for (int s = 0; s < ref_spc; ++s, ++ref_row)
      refs.row(ref_row) = all.points.row(block + eval_spc + s);
  }
}

std::shared_ptr<const AffineGaussianScoreField> make_affine(
    const ExperimentConfig& config) {
  return std::make_shared<AffineGaussianScoreField>(
      AffineGaussianScoreField::random(config.affine_ambient_dim,
                                       config.affine_intrinsic_dim,
                                       config.oracle_seed, config.schedule));
}

LabeledDataset affine_eval(const ExperimentConfig& config,
                           const AffineGaussianScoreField& field) {
  LabeledDataset eval;
  const int n = config.affine_num_samples;
  const int dim = field.dimension();
  const int d = field.intrinsic_dimension();
  eval.points.resize(n, dim);
  eval.gt_lid.setConstant(n, static_cast<double>(d));
  eval.component_id.setZero(n);
  eval.generator = "affine";
  eval.seed = config.oracle_seed;
  Rng rng(config.oracle_seed, 0xAF1u);
  for (int i = 0; i < n; ++i)
    eval.points.row(i) =
        (field.center() + field.basis() * gaussian_vector(d, rng)).transpose();
  return eval;
}

}  // namespace

ExperimentSetup build_setup(const ExperimentConfig& config) {
  ExperimentSetup setup;
  if (config.oracle_kind == "affine" || config.oracle_kind == "perturbed") {
    auto affine = make_affine(config);
    setup.eval = !config.dataset_path.empty() ? read_dataset(config.dataset_path)
                                              : affine_eval(config, *affine);
    if (config.oracle_kind == "perturbed") {
      PerturbationMode mode;
      if (config.perturb_mode == "gaussian-sym")
        mode = PerturbationMode::kGaussianSym;
      else if (config.perturb_mode == "diag-rademacher")
        mode = PerturbationMode::kDiagRademacher;
      else
        throw std::invalid_argument("config: unknown perturb mode " +
                                    config.perturb_mode);
      setup.field = std::make_shared<PerturbedScoreField>(
          affine, mode, config.perturb_epsilon, config.perturb_seed);
    } else {
      setup.field = affine;
    }
    return setup;
  }
  if (config.oracle_kind != "mixture")
    throw std::invalid_argument("config: unknown oracle kind " +
                                config.oracle_kind);

  Eigen::MatrixXd refs;
  if (!config.reference_path.empty()) {
    setup.eval = generate_eval(config);
    refs = read_dataset(config.reference_path).points;
  } else if (config.dataset_path.empty() && config.dataset_kind == "mixture") {
    split_mixture(config, setup.eval, refs);
  } else if (config.dataset_path.empty()) {
    // Moon/Funnel manifolds are parameter-determined, so an independently
    // seeded draw samples the same manifold.
    setup.eval = generate_eval(config);
    if (config.dataset_kind == "moon") {
      MoonParams p = config.moon;
      p.num_samples = config.num_references;
      p.seed = config.moon.seed + 1;
      refs = generate_moon(p).points;
    } else {
      FunnelParams p = config.funnel;
      p.num_samples = config.num_references;
      p.seed = config.funnel.seed + 1;
      refs = generate_funnel(p).points;
    }
  } else {
    setup.eval = generate_eval(config);
    refs = setup.eval.points;  // file-backed dataset doubles as reference set
  }

  if (config.idr) {
    LabeledDataset ref_set;
    ref_set.points = refs;
    ref_set.gt_lid.setZero(refs.rows());
    ref_set.component_id.setZero(refs.rows());
    setup.eval = idr_embed(setup.eval, config.idr_params);
    refs = idr_embed(ref_set, config.idr_params).points;
  }
  setup.field =
      std::make_shared<MixtureScoreField>(std::move(refs), config.schedule);
  return setup;
}

namespace {

struct PointResult {
  double estimate = 0.0;
  long hvp_calls = 0;
  double seconds = 0.0;
};

PointResult run_point(const std::string& method, const ExperimentConfig& config,
                      const ScoreField& field, const Eigen::MatrixXd& cloud,
                      const Eigen::VectorXd& x, double t, int point) {
  PointResult result;
  const auto start = std::chrono::steady_clock::now();
  if (method == "lhsd") {
    SlqConfig slq = config.slq;
    slq.seed = config.seed;
    EstimateRecord record =
        lhsd_estimate(field, x, t, config.filter, slq, point);
    result.estimate = record.estimate;
    result.hvp_calls = record.hvp_calls;
  } else if (method == "lhsd-exact") {
    result.estimate = lhsd_exact(field, x, t, config.filter, config.slq.dense_limit);
  } else if (method == "flipd") {
    result.estimate = flipd(field, x, t);
  } else if (method == "flipd-hutch") {
    result.estimate = flipd_hutch(field, x, t, config.slq.probes, config.seed,
                                  static_cast<std::uint64_t>(point));
    result.hvp_calls = config.slq.probes;
  } else if (method == "lidl") {
    result.estimate = lidl(field, x, t, config.lidl_scales);
  } else if (method == "nb") {
    result.estimate = nb(field, x, t, config.nb, config.seed,
                         static_cast<std::uint64_t>(point));
  } else if (method == "lpca") {
    result.estimate = lpca(cloud, x, config.lpca_k);
  } else {
    throw std::invalid_argument("unknown method " + method);
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

void write_header(std::ofstream& out, const ExperimentConfig& config) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(config_hash(config)));
  out << "# config_hash=" << buf << "\n";
}

std::ofstream open_csv(const std::filesystem::path& path,
                       const ExperimentConfig& config,
                       const std::string& columns) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot open output file " + path.string());
  write_header(out, config);
  out << columns << "\n";
  return out;
}

}  // namespace

double auto_select_t(const ExperimentConfig& config,
                     const ExperimentSetup& setup) {
  ExperimentConfig sweep = config;
  sweep.out_dir.clear();  // in-memory sweep only
  DiagnosticsResult diag = run_diagnostics(sweep);
  if (!diag.zone)
    throw std::runtime_error("t-auto: no safe zone detected on the t grid");
  const int mid = (diag.zone->lo_index + diag.zone->hi_index) / 2;
  return diag.curve.t_grid[mid];
}

BenchmarkResult run_benchmark(const ExperimentConfig& config) {
  namespace fs = std::filesystem;
  ExperimentSetup setup = build_setup(config);
  BenchmarkResult result;
  result.eval = setup.eval;
  result.chosen_t = config.t_auto ? auto_select_t(config, setup) : config.t;

  const Eigen::MatrixXd* cloud = &setup.eval.points;
  if (const auto* mix =
          dynamic_cast<const MixtureScoreField*>(setup.field.get()))
    cloud = &mix->reference_points();

  const int n = setup.eval.size();
  const int jobs = resolve_jobs(config);
  const bool write_files = !config.out_dir.empty();
  if (write_files) fs::create_directories(config.out_dir);

  for (const std::string& method : config.methods) {
    MethodRun run;
    run.method = method;
    run.estimates.resize(n);
    run.abs_errors.resize(n);
    run.seconds.resize(n);
    run.hvp_calls.assign(n, 0);

    try {
      parallel_for(n, jobs, [&](int i) {
        PointResult pr;
        if (config.lenient) {
          try {
            pr = run_point(method, config, *setup.field, *cloud,
                           setup.eval.points.row(i).transpose(),
                           result.chosen_t, i);
          } catch (const std::exception&) {
            pr.estimate = std::numeric_limits<double>::quiet_NaN();
          }
        } else {
          pr = run_point(method, config, *setup.field, *cloud,
                         setup.eval.points.row(i).transpose(), result.chosen_t,
                         i);
        }
        run.estimates[i] = pr.estimate;
        run.abs_errors[i] = std::abs(pr.estimate - setup.eval.gt_lid[i]);
        run.seconds[i] = pr.seconds;
        run.hvp_calls[i] = pr.hvp_calls;
      });
    } catch (...) {
      if (write_files) {
        std::ofstream marker(fs::path(config.out_dir) / "PARTIAL_RESULTS");
        marker << "aborted during method " << method << "\n";
      }
      throw;
    }

    run.mae = run.abs_errors.mean();
    for (long calls : run.hvp_calls) run.total_hvp_calls += calls;

    if (write_files) {
      auto out = open_csv(fs::path(config.out_dir) / ("estimates_" + method + ".csv"),
                          config, "point_index,t,estimate,gt_lid,abs_error,hvp_calls");
      for (int i = 0; i < n; ++i)
        out << i << ',' << fmt(result.chosen_t) << ',' << fmt(run.estimates[i])
            << ',' << fmt(setup.eval.gt_lid[i]) << ',' << fmt(run.abs_errors[i])
            << ',' << run.hvp_calls[i] << "\n";
    }
    result.runs.push_back(std::move(run));
  }

  if (write_files) {
    std::string columns = "dataset";
    for (const auto& run : result.runs) columns += "," + run.method;
    auto summary =
        open_csv(fs::path(config.out_dir) / "summary.csv", config, columns);
    summary << (setup.eval.generator.empty() ? "dataset" : setup.eval.generator);
    for (const auto& run : result.runs) summary << ',' << fmt(run.mae);
    summary << "\n";

    // Wall-clock is inherently nondeterministic, so it lives in its own
    // file; everything else is byte-stable for a fixed config and seed.
    auto timing = open_csv(fs::path(config.out_dir) / "timing.csv", config,
                           "method,point_index,seconds");
    for (const auto& run : result.runs)
      for (int i = 0; i < n; ++i)
        timing << run.method << ',' << i << ',' << fmt(run.seconds[i]) << "\n";
  }
  return result;
}

DiagnosticsResult run_diagnostics(const ExperimentConfig& config) {
  namespace fs = std::filesystem;
  if (config.t_count < 8)
    throw std::invalid_argument("diagnostics: need at least 8 grid points");
  ExperimentSetup setup = build_setup(config);
  const int dim = setup.field->dimension();

  const int sweep_n = std::min(config.sweep_points, setup.eval.size());
  Eigen::MatrixXd points = setup.eval.points.topRows(sweep_n);

  Eigen::VectorXd t_grid(config.t_count);
  for (int i = 0; i < config.t_count; ++i)
    t_grid[i] = config.t_lo + (config.t_hi - config.t_lo) * i /
                                  (config.t_count - 1);

  DiagnosticsResult result;
  result.spectra.resize(config.t_count);
  result.collapse.assign(config.t_count, 0);
  const int jobs = resolve_jobs(config);
  SlqConfig slq = config.slq;
  slq.seed = config.seed;
  parallel_for(config.t_count, jobs, [&](int i) {
    if (dim <= config.slq.dense_limit) {
      result.spectra[i] = pooled_dense_spectrum(*setup.field, points, t_grid[i],
                                                config.filter,
                                                config.slq.dense_limit);
      result.collapse[i] = collapse_flag(result.spectra[i]);
    } else {
      result.spectra[i] =
          ritz_spectrum(*setup.field, points, t_grid[i], config.filter, slq);
    }
  });
  result.curve = transition_mass_curve(result.spectra, t_grid, config.delta,
                                       config.delta_mode);
  result.zone = safe_zone(result.curve, result.spectra, config.filter);

  if (!config.out_dir.empty()) {
    fs::create_directories(config.out_dir);
    auto mass = open_csv(fs::path(config.out_dir) / "transition_mass.csv",
                         config, "t,mass,kappa,collapse");
    for (int i = 0; i < config.t_count; ++i)
      mass << fmt(t_grid[i]) << ',' << fmt(result.curve.masses[i]) << ','
           << fmt(result.spectra[i].kappa) << ',' << result.collapse[i] << "\n";

    for (int i = 0; i < config.t_count; ++i) {
      auto spec = open_csv(
          fs::path(config.out_dir) / ("spectrum_" + std::to_string(i) + ".csv"),
          config, "eigenvalue,weight");
      const auto& s = result.spectra[i];
      for (Eigen::Index j = 0; j < s.eigenvalues.size(); ++j)
        spec << fmt(s.eigenvalues[j]) << ',' << fmt(s.weights[j]) << "\n";
    }

    // Filter response on a shared log-lambda grid, one block per t, for
    // overlaying the filter profile on the spectra.
    auto profile = open_csv(fs::path(config.out_dir) / "filter_profile.csv",
                            config, "t,kappa,lambda,response");
    double lambda_max = 0.0;
    for (const auto& s : result.spectra)
      lambda_max = std::max(lambda_max, std::abs(s.max_eigenvalue()));
    const double lo = std::max(lambda_max * 1e-8, 1e-12);
    const double hi = std::max(lambda_max * 10.0, lo * 10.0);
    constexpr int kProfileSamples = 64;
    for (int i = 0; i < config.t_count; ++i)
      for (int j = 0; j < kProfileSamples; ++j) {
        const double lam =
            lo * std::pow(hi / lo, static_cast<double>(j) / (kProfileSamples - 1));
        profile << fmt(t_grid[i]) << ',' << fmt(result.spectra[i].kappa) << ','
                << fmt(lam) << ','
                << fmt(response(config.filter, lam, result.spectra[i].kappa))
                << "\n";
      }

    auto zone = open_csv(fs::path(config.out_dir) / "safe_zone.csv", config,
                         "t_lo,t_hi,lo_index,hi_index");
    if (result.zone)
      zone << fmt(result.zone->t_lo) << ',' << fmt(result.zone->t_hi) << ','
           << result.zone->lo_index << ',' << result.zone->hi_index << "\n";
    else
      zone << "NONE,NONE,-1,-1\n";
  }
  return result;
}

}  // namespace lhsd
