#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace lhsd {

/// Counter-based deterministic random stream.
///
/// Every random draw in the library flows from one root seed through a
/// keyed hash, so an estimate keyed by (seed, point, probe) produces the
/// same bits whether points are processed serially or in parallel.
/// Gaussian variates use Box-Muller on the raw 64-bit stream; nothing
/// depends on implementation-defined <random> distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t key1 = 0,
               std::uint64_t key2 = 0, std::uint64_t key3 = 0);

  std::uint64_t next_u64();

  /// Uniform in [0, 1).
  double uniform();

  /// Uniform in (0, 1]; never exactly zero, safe under log().
  double uniform_open();

  /// Standard normal via Box-Muller.
  double gauss();

  /// -1 or +1, equiprobable.
  double rademacher();

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Vector with entries in {-1, +1}; squared norm is exactly dim.
Eigen::VectorXd rademacher_vector(int dim, Rng& rng);

Eigen::VectorXd gaussian_vector(int dim, Rng& rng);

}  // namespace lhsd
