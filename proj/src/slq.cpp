#include "lhsd/slq.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace lhsd {

TridiagonalFactor lanczos(const LinearOperator& op, const Eigen::VectorXd& v0,
                          int m, bool reorthogonalize) {
  const Eigen::Index dim = v0.size();
  const double v0_norm = v0.norm();
  if (v0_norm == 0.0)
    throw std::invalid_argument("lanczos: starting vector is zero");
  if (m < 1 || m > dim)
    throw std::invalid_argument("lanczos: need 1 <= m <= D");

  TridiagonalFactor factor;
  factor.probe_norm_sq = v0_norm * v0_norm;
  factor.alphas.resize(m);
  factor.betas.resize(m > 1 ? m - 1 : 0);

  Eigen::MatrixXd basis(dim, m);
  basis.col(0) = v0 / v0_norm;
  double breakdown_scale = 1.0;
  int steps = 0;

  for (int j = 0; j < m; ++j) {
    Eigen::VectorXd w = op(basis.col(j));
    ++factor.hvp_calls;
    if (!w.allFinite())
      throw std::runtime_error("lanczos: oracle returned non-finite values at step " +
                               std::to_string(j + 1));
    if (j == 0) breakdown_scale = std::max(w.norm(), 1.0);

    const double alpha = basis.col(j).dot(w);
    factor.alphas[j] = alpha;
    w -= alpha * basis.col(j);
    if (j > 0) w -= factor.betas[j - 1] * basis.col(j - 1);
    if (reorthogonalize) {
      auto q = basis.leftCols(j + 1);
      w -= q * (q.transpose() * w);
    }
    steps = j + 1;
    if (j == m - 1) break;

    const double beta = w.norm();
    if (beta < 1e-12 * breakdown_scale) {
      factor.breakdown = true;
      break;
    }
    factor.betas[j] = beta;
    basis.col(j + 1) = w / beta;
  }

  factor.alphas.conservativeResize(steps);
  factor.betas.conservativeResize(steps > 1 ? steps - 1 : 0);
  return factor;
}

QuadratureRule tridiag_eigen(const TridiagonalFactor& factor) {
  int m = factor.steps();
  if (m < 1) throw std::invalid_argument("tridiag_eigen: empty factor");
  // A negligible off-diagonal decouples the trailing block from e1: its nodes
  // carry only O((beta/scale)^2) weight, yet can stall the QL iteration.
  // Truncate there; at the sqrt(eps) threshold the dropped weight is O(eps).
  for (int i = 0; i + 1 < m; ++i) {
    const double scale = std::max(
        {std::abs(factor.alphas[i]), std::abs(factor.alphas[i + 1]), 1.0});
    if (factor.betas[i] <= 1e-8 * scale) {
      m = i + 1;
      break;
    }
  }
  QuadratureRule rule;
  if (m == 1) {
    rule.nodes = factor.alphas.head(1);
    rule.weights = Eigen::VectorXd::Ones(1);
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(factor.alphas.head(m), factor.betas.head(m - 1),
                                Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("tridiag_eigen: eigensolver did not converge");
  rule.nodes = solver.eigenvalues();
  rule.weights = solver.eigenvectors().row(0).array().square();
  return rule;
}

double quadrature(const QuadratureRule& rule,
                  const std::function<double(double)>& f,
                  double probe_norm_sq) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < rule.nodes.size(); ++j)
    acc += rule.weights[j] * f(rule.nodes[j]);
  return probe_norm_sq * acc;
}

TraceEstimate trace_of_function(const LinearOperator& op, int dim,
                                const std::function<double(double)>& f,
                                const SlqConfig& config,
                                std::uint64_t point_index) {
  if (config.probes < 1)
    throw std::invalid_argument("trace_of_function: need K >= 1");
  const int m = std::min(config.m, dim);

  TraceEstimate result;
  result.per_probe.resize(config.probes);
  for (int k = 0; k < config.probes; ++k) {
    Rng rng(config.seed, point_index, static_cast<std::uint64_t>(k));
    Eigen::VectorXd probe = rademacher_vector(dim, rng);
    TridiagonalFactor factor =
        lanczos(op, probe, m, config.reorthogonalize);
    result.hvp_calls += factor.hvp_calls;
    result.per_probe[k] =
        quadrature(tridiag_eigen(factor), f, factor.probe_norm_sq);
  }
  result.estimate = result.per_probe.mean();
  return result;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> dense_sym_eigen(
    const Eigen::MatrixXd& a, int dense_limit) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("dense_sym_eigen: matrix not square");
  if (a.rows() > dense_limit)
    throw std::length_error("dense_sym_eigen: dimension exceeds dense limit");
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-8)
    throw std::invalid_argument("dense_sym_eigen: matrix not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("dense_sym_eigen: eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

}  // namespace lhsd
