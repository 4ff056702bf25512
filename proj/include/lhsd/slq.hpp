#pragma once

#include <cstdint>
#include <functional>
#include <utility>

#include <Eigen/Core>

#include "lhsd/rng.hpp"
#include "lhsd/score_field.hpp"

namespace lhsd {

struct SlqConfig {
  int m = 5;                    // Lanczos steps
  int probes = 8;               // Hutchinson probes K
  std::uint64_t seed = 0;
  bool reorthogonalize = true;  // full reorthogonalization against all basis vectors
  int dense_limit = 1024;       // cap for dense fallback paths
};

/// Tridiagonal factor T_m from an m-step Lanczos run. Breakdown (a tiny
/// off-diagonal) truncates the factor early; steps() reports the realized
/// size and hvp_calls the number of oracle applications spent.
struct TridiagonalFactor {
  Eigen::VectorXd alphas;
  Eigen::VectorXd betas;  // size steps() - 1, all >= 0
  double probe_norm_sq = 0.0;
  bool breakdown = false;
  int hvp_calls = 0;

  int steps() const { return static_cast<int>(alphas.size()); }
};

/// Gaussian quadrature rule for the spectral measure of one probe: Ritz
/// values as nodes, squared first-row eigenvector components as weights.
struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;  // nonnegative, sum to 1
};

/// Lanczos tridiagonalization of a symmetric operator started at v0.
/// Issues exactly min(m, realized steps) oracle applications. The caller
/// guarantees symmetry of the operator; NaN output from the oracle raises
/// std::runtime_error.
TridiagonalFactor lanczos(const LinearOperator& op, const Eigen::VectorXd& v0,
                          int m, bool reorthogonalize = true);

/// Full eigensystem of the symmetric tridiagonal factor.
QuadratureRule tridiag_eigen(const TridiagonalFactor& factor);

/// probe_norm_sq * sum_j weight_j f(node_j).
double quadrature(const QuadratureRule& rule,
                  const std::function<double(double)>& f,
                  double probe_norm_sq);

struct TraceEstimate {
  double estimate = 0.0;        // mean over probes
  Eigen::VectorXd per_probe;    // K per-probe quadrature values
  long hvp_calls = 0;           // m*K absent breakdown
};

/// Stochastic Lanczos Quadrature estimate of tr(f(H)) with Rademacher
/// probes. The RNG stream is keyed by (seed, point_index, probe), so
/// parallel and serial runs agree bit for bit.
TraceEstimate trace_of_function(const LinearOperator& op, int dim,
                                const std::function<double(double)>& f,
                                const SlqConfig& config,
                                std::uint64_t point_index = 0);

/// Dense symmetric eigendecomposition (eigenvalues ascending, eigenvectors
/// as columns). Rejects asymmetry beyond 1e-8 and sizes above dense_limit.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> dense_sym_eigen(
    const Eigen::MatrixXd& a, int dense_limit = 1024);

}  // namespace lhsd
