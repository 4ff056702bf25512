#include "lhsd/datasets.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "lhsd/rng.hpp"

namespace lhsd {

namespace {

Eigen::MatrixXd random_orthonormal(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd g(rows, cols);
  for (int j = 0; j < cols; ++j) g.col(j) = gaussian_vector(rows, rng);
  return Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ() *
         Eigen::MatrixXd::Identity(rows, cols);
}

// h <- h + (0.5/omega) sin(omega h), elementwise; derivative stays in
// [0.5, 1.5], so each iteration is a diffeomorphism for any omega.
void sinusoidal_warp(Eigen::VectorXd& h, double omega, int iterations = 5) {
  for (int it = 0; it < iterations; ++it)
    h += (0.5 / omega) * (omega * h.array()).sin().matrix();
}

}  // namespace

LabeledDataset generate_mixture(const MixtureSpec& spec) {
  const int dim = spec.ambient_dim;
  const int num_components = static_cast<int>(spec.component_dims.size());
  if (num_components < 1 || spec.samples_per_component < 1)
    throw std::invalid_argument("generate_mixture: empty spec");
  for (int d : spec.component_dims)
    if (d < 1 || d > dim)
      throw std::invalid_argument("generate_mixture: component dim out of range");

  Rng rng(spec.seed, 0x301Eu);

  // Centroids by rejection sampling until pairwise separation holds.
  Eigen::MatrixXd centroids(num_components, dim);
  const double box = std::max(spec.min_mode_distance, 1.0);
  constexpr int kRetryCap = 10000;
  for (int k = 0; k < num_components; ++k) {
    int attempts = 0;
    while (true) {
      if (++attempts > kRetryCap)
        throw std::runtime_error("generate_mixture: centroid placement failed");
      Eigen::VectorXd c(dim);
      for (int j = 0; j < dim; ++j) c[j] = box * (2.0 * rng.uniform() - 1.0);
      bool ok = true;
      for (int prev = 0; prev < k; ++prev)
        if ((centroids.row(prev).transpose() - c).norm() <
            spec.min_mode_distance) {
          ok = false;
          break;
        }
      if (ok) {
        centroids.row(k) = c;
        break;
      }
    }
  }

  const int total = num_components * spec.samples_per_component;
  LabeledDataset dataset;
  dataset.points.resize(total, dim);
  dataset.gt_lid.resize(total);
  dataset.component_id.resize(total);
  dataset.centroids = centroids;
  dataset.generator = "mixture";
  dataset.seed = spec.seed;

  int row = 0;
  for (int k = 0; k < num_components; ++k) {
    const int d = spec.component_dims[k];
    Eigen::MatrixXd frame = random_orthonormal(dim, d, rng);
    for (int s = 0; s < spec.samples_per_component; ++s) {
      Eigen::VectorXd z(d);
      for (int j = 0; j < d; ++j) z[j] = 2.0 * rng.uniform() - 1.0;
      Eigen::VectorXd x = frame * z;
      if (spec.nonlinearity == MixtureNonlinearity::kSinusoidal)
        sinusoidal_warp(x, spec.omega);
      dataset.points.row(row) = (x + centroids.row(k).transpose()).transpose();
      dataset.gt_lid[row] = d;
      dataset.component_id[row] = k;
      ++row;
    }
  }
  return dataset;
}

LabeledDataset generate_moon(const MoonParams& params) {
  const double r = params.outer_radius;
  const double ri = params.inner_radius;
  const double shift = params.inner_shift;
  if (!(r > 0.0) || !(ri > 0.0) || ri + shift >= 2.0 * r)
    throw std::invalid_argument("generate_moon: degenerate crescent");

  Rng rng(params.seed, 0x300Du);
  LabeledDataset dataset;
  dataset.points.resize(params.num_samples, 3);
  dataset.gt_lid.resize(params.num_samples);
  dataset.component_id.setZero(params.num_samples);
  dataset.generator = "moon";
  dataset.seed = params.seed;

  const double eps = params.boundary_tol * r;
  constexpr int kRejectCap = 100000;
  for (int i = 0; i < params.num_samples; ++i) {
    double x1 = 0.0, x2 = 0.0;
    int attempts = 0;
    while (true) {
      if (++attempts > kRejectCap)
        throw std::runtime_error("generate_moon: crescent appears empty");
      x1 = r * (2.0 * rng.uniform() - 1.0);
      x2 = r * (2.0 * rng.uniform() - 1.0);
      const bool inside_outer = x1 * x1 + x2 * x2 < r * r;
      const bool outside_inner =
          x1 * x1 + (x2 + shift) * (x2 + shift) > ri * ri;
      if (inside_outer && outside_inner) break;
    }
    const double phi = std::atan2(x2, x1);
    const double tau = r * (0.001 + 0.1 * (1.0 - std::sin(phi)));
    const double x3 = tau * (2.0 * rng.uniform() - 1.0);

    // Boundary proximity: walls are the two circles in the (x1, x2) plane,
    // caps the +-tau(phi) faces in x3.
    const double outer_margin = r - std::sqrt(x1 * x1 + x2 * x2);
    const double inner_margin =
        std::sqrt(x1 * x1 + (x2 + shift) * (x2 + shift)) - ri;
    const bool near_wall = outer_margin < eps || inner_margin < eps;
    const bool near_cap = (tau - std::abs(x3)) < eps || tau < eps;
    double label = 3.0;
    if (near_wall && near_cap)
      label = 1.0;
    else if (near_wall || near_cap)
      label = 2.0;

    Eigen::Vector3d p(x1, x2, x3);
    p = params.scale * p + params.center;
    if (params.noise > 0.0)
      for (int j = 0; j < 3; ++j) p[j] += params.noise * rng.gauss();
    dataset.points.row(i) = p.transpose();
    dataset.gt_lid[i] = label;
  }
  return dataset;
}

LabeledDataset generate_funnel(const FunnelParams& params) {
  if (!(params.t_min < params.t_max))
    throw std::invalid_argument("generate_funnel: need t_min < t_max");
  if (!(params.r_stick < params.r_skirt))
    throw std::invalid_argument("generate_funnel: need r_stick < r_skirt");

  Rng rng(params.seed, 0xF0A0u);
  LabeledDataset dataset;
  dataset.points.resize(params.num_samples, 3);
  dataset.gt_lid.resize(params.num_samples);
  dataset.component_id.setZero(params.num_samples);
  dataset.generator = "funnel";
  dataset.seed = params.seed;

  for (int i = 0; i < params.num_samples; ++i) {
    const double t =
        params.t_min + (params.t_max - params.t_min) * rng.uniform();
    const double theta = 2.0 * M_PI * rng.uniform();
    const double radius = params.r0 * std::exp(-t);

    Eigen::Vector3d p(t - params.t_shift, radius * std::sin(theta),
                      radius * std::cos(theta));
    p = params.scale * p + params.center;
    if (params.noise > 0.0)
      for (int j = 0; j < 3; ++j) p[j] += params.noise * rng.gauss();
    dataset.points.row(i) = p.transpose();

    double label;
    if (radius <= params.r_stick) {
      label = 1.0;
    } else if (radius >= params.r_skirt) {
      label = 3.0;
    } else {
      const double u =
          (radius - params.r_stick) / (params.r_skirt - params.r_stick);
      const double blend = u * u * (3.0 - 2.0 * u);  // cubic Hermite
      label = 1.0 + 2.0 * blend;
    }
    dataset.gt_lid[i] = label;
  }
  return dataset;
}

LabeledDataset idr_embed(const LabeledDataset& base, const IdrParams& params) {
  const int d = base.dimension();
  const int num_features = params.num_features;
  const int feature_len = 2 * num_features + 2;
  if (params.target_dim < feature_len)
    throw std::invalid_argument("idr_embed: target_dim < 2K' + 2");

  Rng rng(params.seed, 0x1D2u);
  Eigen::MatrixXd w(num_features, d);
  for (int i = 0; i < num_features; ++i)
    w.row(i) = gaussian_vector(d, rng).transpose();
  Eigen::VectorXd b(num_features);
  for (int i = 0; i < num_features; ++i) b[i] = 2.0 * M_PI * rng.uniform();
  Eigen::MatrixXd image_basis =
      random_orthonormal(params.target_dim, feature_len, rng);
  Eigen::VectorXd offset = 0.5 * gaussian_vector(params.target_dim, rng);

  LabeledDataset out;
  out.points.resize(base.size(), params.target_dim);
  out.gt_lid = base.gt_lid;
  out.component_id = base.component_id;
  out.generator = base.generator + "+idr";
  out.seed = params.seed;

  for (int i = 0; i < base.size(); ++i) {
    const Eigen::VectorXd x = base.points.row(i).transpose();
    Eigen::VectorXd phase = w * x + b;
    Eigen::VectorXd features(feature_len);
    features.head(num_features) = phase.array().sin();
    features.segment(num_features, num_features) = phase.array().cos();
    features[feature_len - 2] = 1.0;
    features[feature_len - 1] = x.squaredNorm();
    Eigen::VectorXd img = offset + image_basis * features;
    if (params.clamp_unit)
      img = img.cwiseMax(0.0).cwiseMin(1.0);
    out.points.row(i) = img.transpose();
  }
  return out;
}

double mae(const Eigen::VectorXd& estimates, const Eigen::VectorXd& gt) {
  if (estimates.size() != gt.size() || estimates.size() == 0)
    throw std::invalid_argument("mae: size mismatch or empty input");
  return (estimates - gt).cwiseAbs().mean();
}

void write_dataset(const std::string& path, const LabeledDataset& dataset) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_dataset: cannot open " + path);
  out << "#D=" << dataset.dimension() << "\n#N=" << dataset.size()
      << "\n#generator=" << dataset.generator << "\n#seed=" << dataset.seed
      << "\n";
  char buf[40];
  for (int i = 0; i < dataset.size(); ++i) {
    for (int j = 0; j < dataset.dimension(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", dataset.points(i, j));
      out << buf << ',';
    }
    std::snprintf(buf, sizeof(buf), "%.17g", dataset.gt_lid[i]);
    out << buf << ',' << dataset.component_id[i] << '\n';
  }
}

LabeledDataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_dataset: cannot open " + path);
  int dim = -1, n = -1;
  LabeledDataset dataset;
  std::string line;
  // Header
  while (in.peek() == '#' && std::getline(in, line)) {
    std::istringstream ls(line.substr(1));
    std::string kv;
    while (ls >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = kv.substr(0, eq);
      const std::string value = kv.substr(eq + 1);
      if (key == "D") dim = std::stoi(value);
      else if (key == "N") n = std::stoi(value);
      else if (key == "generator") dataset.generator = value;
      else if (key == "seed") dataset.seed = std::stoull(value);
    }
  }
  if (dim < 1 || n < 1)
    throw std::runtime_error("read_dataset: missing #D/#N header in " + path);

  dataset.points.resize(n, dim);
  dataset.gt_lid.resize(n);
  dataset.component_id.resize(n);
  for (int i = 0; i < n; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error("read_dataset: truncated file " + path);
    std::istringstream ls(line);
    std::string cell;
    for (int j = 0; j < dim; ++j) {
      if (!std::getline(ls, cell, ','))
        throw std::runtime_error("read_dataset: short row in " + path);
      dataset.points(i, j) = std::stod(cell);
    }
    if (!std::getline(ls, cell, ','))
      throw std::runtime_error("read_dataset: missing gt_lid in " + path);
    dataset.gt_lid[i] = std::stod(cell);
    if (!std::getline(ls, cell, ','))
      throw std::runtime_error("read_dataset: missing component in " + path);
    dataset.component_id[i] = std::stoi(cell);
  }
  return dataset;
}

}  // namespace lhsd
