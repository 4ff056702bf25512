#pragma once

#include <Eigen/Dense>

#include "lhsd/rng.hpp"
#include "lhsd/score_field.hpp"

namespace lhsd::testing {

/// Random dense symmetric matrix with entries of order O(1).
inline Eigen::MatrixXd random_symmetric(int dim, std::uint64_t seed) {
  Rng rng(seed, 0x5e1fu);
  Eigen::MatrixXd g(dim, dim);
  for (int i = 0; i < dim; ++i) g.row(i) = gaussian_vector(dim, rng).transpose();
  return 0.5 * (g + g.transpose());
}

/// Random orthogonal matrix (Q factor of a Gaussian draw).
inline Eigen::MatrixXd random_orthogonal(int dim, std::uint64_t seed) {
  Rng rng(seed, 0x0a70u);
  Eigen::MatrixXd g(dim, dim);
  for (int j = 0; j < dim; ++j) g.col(j) = gaussian_vector(dim, rng);
  return Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
}

inline LinearOperator dense_operator(const Eigen::MatrixXd& a) {
  return [a](const Eigen::VectorXd& v) -> Eigen::VectorXd { return a * v; };
}

/// Random mixture reference set with O(1) spread.
inline Eigen::MatrixXd random_refs(int n, int dim, std::uint64_t seed) {
  Rng rng(seed, 0x4ef5u);
  Eigen::MatrixXd refs(n, dim);
  for (int i = 0; i < n; ++i) refs.row(i) = gaussian_vector(dim, rng).transpose();
  return refs;
}

/// Operator norm by power iteration on the symmetrized difference of two
/// HVP closures.
inline double operator_norm(const LinearOperator& op, int dim, int iters = 200,
                            std::uint64_t seed = 7) {
  Rng rng(seed, 0x9049u);
  Eigen::VectorXd v = gaussian_vector(dim, rng).normalized();
  double norm = 0.0;
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd w = op(v);
    norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
  }
  return norm;
}

}  // namespace lhsd::testing
