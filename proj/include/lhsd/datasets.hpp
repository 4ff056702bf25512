#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace lhsd {

/// Ambient points with per-point ground-truth LID and originating component.
struct LabeledDataset {
  Eigen::MatrixXd points;      // N x D
  Eigen::VectorXd gt_lid;      // integer-valued where applicable
  Eigen::VectorXi component_id;
  Eigen::MatrixXd centroids;   // mixture generator only: K x D mode centers
  std::string generator;
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(points.rows()); }
  int dimension() const { return static_cast<int>(points.cols()); }
};

enum class MixtureNonlinearity { kLinear, kSinusoidal };

/// Mixture of disjoint sub-manifolds: per component, uniform latent cube
/// mapped through a random orthonormal frame (optionally followed by a
/// sinusoidal diffeomorphism) and translated to a well-separated centroid.
struct MixtureSpec {
  int ambient_dim = 64;
  std::vector<int> component_dims = {4, 8, 16};
  int samples_per_component = 400;
  MixtureNonlinearity nonlinearity = MixtureNonlinearity::kLinear;
  double omega = 1.0;              // sinusoidal frequency
  double min_mode_distance = 20.0; // pairwise centroid separation
  std::uint64_t seed = 0;
};

LabeledDataset generate_mixture(const MixtureSpec& spec);

/// 3D crescent with angle-dependent thickness; labels 3 (interior),
/// 2 (near exactly one boundary type), 1 (wall/cap intersection).
struct MoonParams {
  double outer_radius = 1.0;
  double inner_radius = 0.9;
  double inner_shift = 0.25;  // inner circle shifted along -x2
  double scale = 1.0;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double noise = 0.0;
  double boundary_tol = 0.05;  // relative to outer_radius
  int num_samples = 1000;
  std::uint64_t seed = 0;
};

LabeledDataset generate_moon(const MoonParams& params);

/// Surface of revolution with exponentially decaying radius; labels blend
/// from 1 (stick) to 3 (skirt) via cubic Hermite interpolation in r(t).
struct FunnelParams {
  double r0 = 1.0;
  double t_min = 0.0;
  double t_max = 6.0;
  double t_shift = 3.0;
  double scale = 1.0;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double noise = 0.01;
  double r_stick = 0.05;
  double r_skirt = 0.5;
  int num_samples = 1000;
  std::uint64_t seed = 0;
};

LabeledDataset generate_funnel(const FunnelParams& params);

/// Smooth high-dimensional embedding through random Fourier features and a
/// seeded random orthonormal image basis; gt_lid carries over unchanged
/// since the map is an immersion.
struct IdrParams {
  int target_dim = 784;
  int num_features = 128;  // K'; feature length is 2K' + 2
  bool clamp_unit = false; // clamp output to [0,1] (breaks smoothness)
  std::uint64_t seed = 0;
};

LabeledDataset idr_embed(const LabeledDataset& base, const IdrParams& params);

/// Mean absolute error between estimates and ground truth.
double mae(const Eigen::VectorXd& estimates, const Eigen::VectorXd& gt);

/// Self-describing columnar text format:
///   #D=<int> #N=<int> #generator=<name> #seed=<int>
/// then one row per point: D comma-separated coordinates, gt_lid, component.
void write_dataset(const std::string& path, const LabeledDataset& dataset);
LabeledDataset read_dataset(const std::string& path);

}  // namespace lhsd
