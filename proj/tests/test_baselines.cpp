#include <cmath>

#include <doctest.h>

#include "helpers.hpp"
#include "lhsd/baselines.hpp"
#include "lhsd/lhsd.hpp"

using namespace lhsd;
using testing::random_orthogonal;
using testing::random_refs;

namespace {

const NoiseSchedule kVpSched{};

}  // namespace

TEST_CASE("flipd on a point mass returns zero at the mode") {
  const int dim = 7;
  const double t = 0.2;
  MixtureScoreField field(Eigen::MatrixXd::Zero(1, dim), kVpSched);
  CHECK(flipd(field, Eigen::VectorXd::Zero(dim), t) ==
        doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("flipd approaches d on the affine manifold as sigma shrinks") {
  const int dim = 16, d = 4;
  auto field = AffineGaussianScoreField::random(dim, d, 5, kVpSched);
  const double s2 = 1e-4;
  const double t = kVpSched.time_for_sigma_sq(s2);
  // At the center: D + sigma^2 div s = d + O(sigma^2 sum 1/s_k^2).
  const double estimate = flipd(field, Eigen::VectorXd::Zero(dim), t);
  CHECK(std::abs(estimate - d) < 10.0 * s2 * d);
}

TEST_CASE("flipd agrees with the dense-Hessian evaluation") {
  const int dim = 32;
  const double t = 0.18;
  MixtureScoreField field(random_refs(48, dim, 15), kVpSched);
  Eigen::VectorXd x = 0.4 * random_refs(1, dim, 16).row(0).transpose();
  const double s2 = kVpSched.sigma_sq(t);
  const Eigen::VectorXd s = field.score(x, t);
  const double reference =
      dim + s2 * (-dense_hessian(field, x, t).trace() + s.squaredNorm());
  CHECK(flipd(field, x, t) == doctest::Approx(reference).epsilon(1e-8));
}

TEST_CASE("flipd_hutch is exact on diagonal Hessians") {
  const int dim = 11;
  const double t = 0.25;
  MixtureScoreField field(Eigen::MatrixXd::Zero(1, dim), kVpSched);
  Eigen::VectorXd x = Eigen::VectorXd::Constant(dim, 0.3);
  CHECK(flipd_hutch(field, x, t, 3) ==
        doctest::Approx(flipd(field, x, t)).epsilon(1e-10));
}

TEST_CASE("flipd_hutch converges to flipd in probes") {
  const int dim = 16;
  const double t = 0.2;
  MixtureScoreField field(random_refs(32, dim, 25), kVpSched);
  Eigen::VectorXd x = 0.3 * random_refs(1, dim, 26).row(0).transpose();
  const double s2 = kVpSched.sigma_sq(t);

  // Probe variance of the divergence estimate from the Rademacher formula.
  Eigen::MatrixXd h = dense_hessian(field, x, t);
  const double var_div =
      2.0 * h.squaredNorm() - 2.0 * h.diagonal().squaredNorm();
  const int probes = 4096;
  const double se = s2 * std::sqrt(var_div / probes);
  CHECK(std::abs(flipd_hutch(field, x, t, probes) - flipd(field, x, t)) <
        3.0 * se + 1e-9);
}

TEST_CASE("flipd_hutch replays bit-for-bit under a fixed key") {
  const int dim = 16;
  const double t = 0.2;
  MixtureScoreField field(random_refs(32, dim, 35), kVpSched);
  Eigen::VectorXd x = 0.3 * random_refs(1, dim, 36).row(0).transpose();
  CHECK(flipd_hutch(field, x, t, 8, 9, 2) == flipd_hutch(field, x, t, 8, 9, 2));
  CHECK(flipd_hutch(field, x, t, 8, 9, 2) != flipd_hutch(field, x, t, 8, 9, 3));
}

TEST_CASE("lidl landmark geometries") {
  SUBCASE("point mass estimates zero at the mode") {
    const int dim = 9;
    MixtureScoreField field(Eigen::MatrixXd::Zero(1, dim), kVpSched);
    const double estimate = lidl(field, Eigen::VectorXd::Zero(dim),
                                 kVpSched.time_for_sigma_sq(1e-2));
    CHECK(std::abs(estimate) < 1e-6);
  }
  SUBCASE("full-dimensional Gaussian estimates D") {
    const int dim = 6;
    auto field = AffineGaussianScoreField::random(dim, dim, 4, kVpSched);
    const double estimate = lidl(field, Eigen::VectorXd::Constant(dim, 0.1),
                                 kVpSched.time_for_sigma_sq(1e-4));
    CHECK(std::abs(estimate - dim) < 0.05);
  }
  SUBCASE("affine d = 4 in D = 16") {
    auto field = AffineGaussianScoreField::random(16, 4, 11, kVpSched);
    const double estimate = lidl(field, Eigen::VectorXd::Zero(16),
                                 kVpSched.time_for_sigma_sq(1e-4));
    CHECK(std::abs(estimate - 4.0) < 0.5);
  }
  SUBCASE("degenerate scale count is rejected") {
    MixtureScoreField field(Eigen::MatrixXd::Zero(1, 3), kVpSched);
    CHECK_THROWS_AS(lidl(field, Eigen::VectorXd::Zero(3), 0.2, 1),
                    std::invalid_argument);
  }
}

TEST_CASE("normal-bundle estimator on the affine family") {
  SUBCASE("codimension rank is recovered") {
    auto field = AffineGaussianScoreField::random(16, 4, 21, kVpSched);
    NbConfig config;
    config.num_scores = 64;
    const int estimate = nb(field, Eigen::VectorXd::Zero(16),
                            kVpSched.time_for_sigma_sq(1e-3), config);
    CHECK(estimate == 4);
  }
  SUBCASE("full-support isotropic Gaussian estimates zero") {
    const int dim = 10;
    auto field = AffineGaussianScoreField::random(dim, dim, 22, kVpSched);
    NbConfig config;
    config.num_scores = 64;
    const int estimate = nb(field, Eigen::VectorXd::Zero(dim),
                            kVpSched.time_for_sigma_sq(1e-3), config);
    CHECK(estimate == 0);
  }
  SUBCASE("deterministic given the seed") {
    MixtureScoreField field(random_refs(24, 8, 23), kVpSched);
    Eigen::VectorXd x = 0.3 * random_refs(1, 8, 24).row(0).transpose();
    NbConfig config;
    const int a = nb(field, x, 0.2, config, 77, 3);
    const int b = nb(field, x, 0.2, config, 77, 3);
    CHECK(a == b);
  }
}

TEST_CASE("local PCA") {
  SUBCASE("planar cloud in R^10") {
    const int n = 200, dim = 10;
    Rng rng(9, 0x19cau);
    Eigen::MatrixXd basis = random_orthogonal(dim, 31).leftCols(2);
    Eigen::MatrixXd cloud(n, dim);
    for (int i = 0; i < n; ++i)
      cloud.row(i) = (basis * gaussian_vector(2, rng)).transpose();
    CHECK(lpca(cloud, cloud.row(0).transpose(), 50) == 2);
  }
  SUBCASE("degenerate neighborhood returns zero") {
    Eigen::MatrixXd cloud = Eigen::MatrixXd::Ones(12, 5);
    CHECK(lpca(cloud, Eigen::VectorXd::Ones(5), 6) == 0);
  }
  SUBCASE("invariant under global rotation") {
    const int n = 120, dim = 8;
    Eigen::MatrixXd cloud = random_refs(n, dim, 41);
    Eigen::MatrixXd q = random_orthogonal(dim, 42);
    Eigen::VectorXd x = cloud.row(5).transpose();
    CHECK(lpca(cloud, x, 30) == lpca(cloud * q.transpose(), q * x, 30));
  }
  SUBCASE("parameter validation") {
    Eigen::MatrixXd cloud = Eigen::MatrixXd::Zero(10, 3);
    CHECK_THROWS_AS(lpca(cloud, Eigen::VectorXd::Zero(3), 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(lpca(cloud, Eigen::VectorXd::Zero(3), 11),
                    std::invalid_argument);
  }
}

TEST_CASE("cross-method agreement on the affine family in the safe zone") {
  const int dim = 24, d = 3, n_cloud = 600;
  auto field = AffineGaussianScoreField::random(dim, d, 51, kVpSched);
  const double t = kVpSched.time_for_sigma_sq(1e-3);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);

  CHECK(std::abs(flipd(field, x, t) - d) < 1.0);
  CHECK(std::abs(lidl(field, x, t) - d) < 1.0);
  NbConfig config;
  config.num_scores = 4 * dim;
  CHECK(std::abs(nb(field, x, t, config) - d) <= 1);
  CHECK(std::abs(lhsd_exact(field, x, t, FilterParams{}) - d) < 1.0);

  Rng rng(10, 0xc10du);
  Eigen::MatrixXd cloud(n_cloud, dim);
  for (int i = 0; i < n_cloud; ++i)
    cloud.row(i) = (field.basis() * gaussian_vector(d, rng)).transpose();
  CHECK(std::abs(lpca(cloud, x, 60) - d) <= 1);
}
