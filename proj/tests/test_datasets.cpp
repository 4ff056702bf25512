#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <vector>

#include <doctest.h>
#include <Eigen/Dense>

#include "lhsd/datasets.hpp"

using namespace lhsd;

TEST_CASE("mixture generator landmark properties") {
  MixtureSpec spec;
  spec.ambient_dim = 16;
  spec.component_dims = {2, 5};
  spec.samples_per_component = 60;
  spec.seed = 3;
  LabeledDataset data = generate_mixture(spec);

  CHECK(data.size() == 120);
  CHECK(data.dimension() == 16);
  CHECK(data.generator == "mixture");

  SUBCASE("ground truth and component labels follow the block layout") {
    for (int i = 0; i < 60; ++i) {
      CHECK(data.gt_lid[i] == 2.0);
      CHECK(data.component_id[i] == 0);
      CHECK(data.gt_lid[60 + i] == 5.0);
      CHECK(data.component_id[60 + i] == 1);
    }
  }
  SUBCASE("centroids respect the separation floor") {
    REQUIRE(data.centroids.rows() == 2);
    CHECK((data.centroids.row(0) - data.centroids.row(1)).norm() >=
          spec.min_mode_distance);
  }
  SUBCASE("each linear component block has exact rank d") {
    for (int k = 0; k < 2; ++k) {
      const int d = spec.component_dims[k];
      Eigen::MatrixXd block =
          data.points.middleRows(60 * k, 60).rowwise() - data.centroids.row(k);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(block);
      CHECK(svd.singularValues()[d - 1] > 1e-6);
      CHECK(svd.singularValues()[d] < 1e-10);
    }
  }
  SUBCASE("points stay within the latent cube image") {
    for (int i = 0; i < 60; ++i) {
      const double dist =
          (data.points.row(i) - data.centroids.row(0)).norm();
      CHECK(dist <= std::sqrt(2.0) + 1e-12);
    }
  }
  SUBCASE("generation is bitwise deterministic in the seed") {
    LabeledDataset again = generate_mixture(spec);
    CHECK((again.points - data.points).cwiseAbs().maxCoeff() == 0.0);
    MixtureSpec other = spec;
    other.seed = 4;
    CHECK((generate_mixture(other).points - data.points)
              .cwiseAbs()
              .maxCoeff() > 0.0);
  }
}

TEST_CASE("sinusoidal mixture stays bounded and keeps its labels") {
  MixtureSpec spec;
  spec.ambient_dim = 8;
  spec.component_dims = {3};
  spec.samples_per_component = 80;
  spec.nonlinearity = MixtureNonlinearity::kSinusoidal;
  spec.omega = 2.0;
  spec.seed = 5;
  LabeledDataset data = generate_mixture(spec);

  MixtureSpec linear = spec;
  linear.nonlinearity = MixtureNonlinearity::kLinear;
  LabeledDataset flat = generate_mixture(linear);

  CHECK((data.points - flat.points).cwiseAbs().maxCoeff() > 1e-3);
  CHECK((data.gt_lid - flat.gt_lid).cwiseAbs().maxCoeff() == 0.0);
  // Each warp iteration moves a coordinate by at most 0.5/omega; after the
  // five iterations the image of the unit cube stays inside this box.
  const double bound = 1.0 + 5.0 * 0.5 / spec.omega + 1e-12;
  for (int i = 0; i < data.size(); ++i)
    CHECK((data.points.row(i) - data.centroids.row(0))
              .cwiseAbs()
              .maxCoeff() <= bound);
}

TEST_CASE("mixture spec validation") {
  MixtureSpec spec;
  spec.component_dims = {};
  CHECK_THROWS_AS(generate_mixture(spec), std::invalid_argument);
  spec.component_dims = {4};
  spec.ambient_dim = 3;
  CHECK_THROWS_AS(generate_mixture(spec), std::invalid_argument);
}

TEST_CASE("moon generator geometry and labels") {
  MoonParams params;
  params.num_samples = 800;
  params.seed = 11;
  LabeledDataset data = generate_moon(params);
  REQUIRE(data.size() == 800);
  REQUIRE(data.dimension() == 3);

  const double r = params.outer_radius, ri = params.inner_radius;
  std::set<double> labels;
  for (int i = 0; i < data.size(); ++i) {
    const double x1 = data.points(i, 0), x2 = data.points(i, 1),
                 x3 = data.points(i, 2);
    // Noise-free samples lie inside the crescent slab.
    CHECK(x1 * x1 + x2 * x2 < r * r);
    CHECK(x1 * x1 + (x2 + params.inner_shift) * (x2 + params.inner_shift) >
          ri * ri);
    const double phi = std::atan2(x2, x1);
    const double tau = r * (0.001 + 0.1 * (1.0 - std::sin(phi)));
    CHECK(std::abs(x3) <= tau + 1e-12);
    labels.insert(data.gt_lid[i]);
  }
  for (double label : labels)
    CHECK((label == 1.0 || label == 2.0 || label == 3.0));
  CHECK(labels.count(2.0) == 1);
  CHECK(labels.count(3.0) == 1);
}

TEST_CASE("moon scale and center act affinely on the samples") {
  MoonParams base;
  base.num_samples = 50;
  base.seed = 13;
  MoonParams moved = base;
  moved.scale = 2.0;
  moved.center = Eigen::Vector3d(1.0, -2.0, 3.0);
  LabeledDataset a = generate_moon(base);
  LabeledDataset b = generate_moon(moved);
  for (int i = 0; i < a.size(); ++i) {
    Eigen::Vector3d expected =
        2.0 * a.points.row(i).transpose() + moved.center;
    CHECK((b.points.row(i).transpose() - expected).norm() < 1e-12);
    CHECK(b.gt_lid[i] == a.gt_lid[i]);
  }
}

TEST_CASE("moon rejects a degenerate crescent") {
  MoonParams params;
  params.inner_radius = 1.9;
  params.inner_shift = 0.2;
  CHECK_THROWS_AS(generate_moon(params), std::invalid_argument);
}

TEST_CASE("funnel generator geometry and label blend") {
  FunnelParams params;
  params.noise = 0.0;
  params.num_samples = 600;
  params.seed = 17;
  LabeledDataset data = generate_funnel(params);

  for (int i = 0; i < data.size(); ++i) {
    const double t = data.points(i, 0) + params.t_shift;
    const double radius = params.r0 * std::exp(-t);
    const double measured = std::hypot(data.points(i, 1), data.points(i, 2));
    CHECK(measured == doctest::Approx(radius).epsilon(1e-12));

    const double label = data.gt_lid[i];
    CHECK(label >= 1.0);
    CHECK(label <= 3.0);
    if (radius <= params.r_stick) CHECK(label == 1.0);
    if (radius >= params.r_skirt) CHECK(label == 3.0);
  }

  SUBCASE("label is the cubic blend of the radius") {
    for (int i = 0; i < data.size(); ++i) {
      const double radius = std::hypot(data.points(i, 1), data.points(i, 2));
      if (radius <= params.r_stick || radius >= params.r_skirt) continue;
      const double u =
          (radius - params.r_stick) / (params.r_skirt - params.r_stick);
      CHECK(data.gt_lid[i] ==
            doctest::Approx(1.0 + 2.0 * u * u * (3.0 - 2.0 * u))
                .epsilon(1e-12));
    }
  }
  SUBCASE("label is monotone in the radius") {
    std::vector<int> order(data.size());
    for (int i = 0; i < data.size(); ++i) order[i] = i;
    auto radius_of = [&](int i) {
      return std::hypot(data.points(i, 1), data.points(i, 2));
    };
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return radius_of(a) < radius_of(b); });
    for (size_t i = 1; i < order.size(); ++i)
      CHECK(data.gt_lid[order[i]] >= data.gt_lid[order[i - 1]] - 1e-12);
  }
}

TEST_CASE("funnel parameter validation") {
  FunnelParams params;
  params.t_min = 2.0;
  params.t_max = 1.0;
  CHECK_THROWS_AS(generate_funnel(params), std::invalid_argument);
  params = FunnelParams{};
  params.r_stick = 0.5;
  params.r_skirt = 0.05;
  CHECK_THROWS_AS(generate_funnel(params), std::invalid_argument);
}

TEST_CASE("high-dimensional embedding is a deterministic immersion") {
  MixtureSpec spec;
  spec.ambient_dim = 4;
  spec.component_dims = {2};
  spec.samples_per_component = 16;
  spec.seed = 19;
  LabeledDataset base = generate_mixture(spec);

  IdrParams idr;
  idr.target_dim = 40;
  idr.num_features = 12;  // feature length 26
  idr.seed = 23;
  LabeledDataset embedded = idr_embed(base, idr);

  CHECK(embedded.dimension() == 40);
  CHECK(embedded.size() == base.size());
  CHECK((embedded.gt_lid - base.gt_lid).cwiseAbs().maxCoeff() == 0.0);
  CHECK((embedded.component_id - base.component_id).cwiseAbs().maxCoeff() ==
        0);
  CHECK(embedded.generator == "mixture+idr");

  SUBCASE("deterministic in the embedding seed") {
    LabeledDataset again = idr_embed(base, idr);
    CHECK((again.points - embedded.points).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("finite-difference Jacobian has full base rank") {
    // Pack x and central-difference stencil points into one dataset so they
    // all pass through the identical seeded map.
    const int d = base.dimension();
    const double h = 1e-5;
    Eigen::VectorXd x = base.points.row(0).transpose();
    LabeledDataset stencil;
    stencil.points.resize(2 * d, d);
    stencil.gt_lid.setZero(2 * d);
    stencil.component_id.setZero(2 * d);
    for (int j = 0; j < d; ++j) {
      stencil.points.row(2 * j) = x.transpose();
      stencil.points(2 * j, j) += h;
      stencil.points.row(2 * j + 1) = x.transpose();
      stencil.points(2 * j + 1, j) -= h;
    }
    LabeledDataset image = idr_embed(stencil, idr);
    Eigen::MatrixXd jac(idr.target_dim, d);
    for (int j = 0; j < d; ++j)
      jac.col(j) = (image.points.row(2 * j) - image.points.row(2 * j + 1))
                       .transpose() /
                   (2.0 * h);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
    CHECK(svd.singularValues()[d - 1] > 1e-3 * svd.singularValues()[0]);
  }
  SUBCASE("unit clamp keeps outputs in range") {
    IdrParams clamped = idr;
    clamped.clamp_unit = true;
    LabeledDataset image = idr_embed(base, clamped);
    CHECK(image.points.minCoeff() >= 0.0);
    CHECK(image.points.maxCoeff() <= 1.0);
  }
  SUBCASE("target dimension must fit the feature block") {
    IdrParams tiny = idr;
    tiny.target_dim = 10;
    CHECK_THROWS_AS(idr_embed(base, tiny), std::invalid_argument);
  }
}

TEST_CASE("mean absolute error") {
  Eigen::VectorXd a(3), b(3);
  a << 1.0, 2.0, 3.0;
  b << 1.0, 2.0, 3.0;
  CHECK(mae(a, b) == 0.0);
  b << 2.0, 2.0, 3.5;
  CHECK(mae(a, b) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(mae(a, Eigen::VectorXd::Zero(2)), std::invalid_argument);
  CHECK_THROWS_AS(mae(Eigen::VectorXd(), Eigen::VectorXd()),
                  std::invalid_argument);
}

TEST_CASE("dataset files round-trip bitwise") {
  MoonParams params;
  params.num_samples = 40;
  params.noise = 0.02;
  params.seed = 29;
  LabeledDataset data = generate_moon(params);

  const std::string path = "roundtrip_moon.tmp.csv";
  write_dataset(path, data);
  LabeledDataset loaded = read_dataset(path);
  std::remove(path.c_str());

  CHECK(loaded.generator == data.generator);
  CHECK(loaded.seed == data.seed);
  CHECK((loaded.points - data.points).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.gt_lid - data.gt_lid).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.component_id - data.component_id).cwiseAbs().maxCoeff() == 0);

  CHECK_THROWS_AS(read_dataset("no_such_file.csv"), std::runtime_error);
}
