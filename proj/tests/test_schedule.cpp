#include <cmath>
#include <stdexcept>

#include <doctest.h>

#include "lhsd/schedule.hpp"

using lhsd::NoiseSchedule;
using lhsd::ScheduleKind;

TEST_CASE("beta is linear between its endpoints") {
  NoiseSchedule sched;
  CHECK(sched.beta(0.0) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(sched.beta(1.0) == doctest::Approx(20.0).epsilon(1e-14));
  CHECK(sched.beta(0.5) == doctest::Approx(10.05).epsilon(1e-14));
}

TEST_CASE("beta rejects times outside [0, 1]") {
  NoiseSchedule sched;
  CHECK_THROWS_AS(sched.beta(-0.01), std::domain_error);
  CHECK_THROWS_AS(sched.beta(1.01), std::domain_error);
  CHECK_THROWS_AS(sched.mu_sigma_sq(2.0), std::domain_error);
}

TEST_CASE("schedule construction validates rates") {
  CHECK_THROWS_AS(NoiseSchedule(1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(NoiseSchedule(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("kernel moments at the boundary times") {
  NoiseSchedule sched;
  auto [mu0, s0] = sched.mu_sigma_sq(0.0);
  CHECK(mu0 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s0 == doctest::Approx(0.0).epsilon(1e-14));
  auto [mu1, s1] = sched.mu_sigma_sq(1.0);
  CHECK(mu1 == doctest::Approx(std::exp(-5.025)).epsilon(1e-13));
  CHECK(s1 == doctest::Approx(1.0 - std::exp(-10.05)).epsilon(1e-13));
}

TEST_CASE("variance-preserving identity holds on a grid") {
  NoiseSchedule sched;
  for (int i = 0; i <= 100; ++i) {
    const double t = i / 100.0;
    auto [mu, s2] = sched.mu_sigma_sq(t);
    CHECK(mu * mu + s2 == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("mu decreases and sigma^2 increases strictly on (0, 1]") {
  NoiseSchedule sched;
  double prev_mu = 1.0, prev_s2 = 0.0;
  for (int i = 1; i <= 100; ++i) {
    const double t = i / 100.0;
    auto [mu, s2] = sched.mu_sigma_sq(t);
    CHECK(mu < prev_mu);
    CHECK(s2 > prev_s2);
    prev_mu = mu;
    prev_s2 = s2;
  }
}

TEST_CASE("identity-mean mode keeps mu = 1 with the VP variance") {
  NoiseSchedule vp;
  NoiseSchedule flat(0.1, 20.0, ScheduleKind::kIdentityMean);
  for (double t : {0.05, 0.3, 0.9}) {
    CHECK(flat.mu(t) == 1.0);
    CHECK(flat.sigma_sq(t) == doctest::Approx(vp.sigma_sq(t)).epsilon(1e-15));
  }
}

// d(sigma^2)/dt = beta(t) (1 - sigma^2) is the VP variance evolution; the
// closed form must agree with a brute-force RK4 integration.
TEST_CASE("closed-form variance matches the integrated variance ODE") {
  NoiseSchedule sched;
  const int steps = 4000;
  const double h = 1.0 / steps;
  double s2 = 0.0;
  auto rhs = [&](double t, double y) { return sched.beta(t) * (1.0 - y); };
  for (int i = 0; i < steps; ++i) {
    const double t = i * h;
    const double k1 = rhs(t, s2);
    const double k2 = rhs(t + 0.5 * h, s2 + 0.5 * h * k1);
    const double k3 = rhs(t + 0.5 * h, s2 + 0.5 * h * k2);
    const double k4 = rhs(t + h, s2 + h * k3);
    s2 += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (i % 400 == 0 || i == steps - 1) {
      const double t_next = (i + 1) * h;
      CHECK(std::abs(s2 - sched.sigma_sq(t_next)) < 1e-8);
    }
  }
}

TEST_CASE("time_for_sigma_sq inverts sigma_sq") {
  NoiseSchedule sched;
  for (double t : {0.01, 0.1, 0.33, 0.7, 0.99}) {
    const double s2 = sched.sigma_sq(t);
    CHECK(sched.time_for_sigma_sq(s2) == doctest::Approx(t).epsilon(1e-12));
  }
  CHECK_THROWS_AS(sched.time_for_sigma_sq(0.0), std::domain_error);
  CHECK_THROWS_AS(sched.time_for_sigma_sq(1.0), std::domain_error);
  // sigma^2(1) < 1, so targets above it are unreachable on [0, 1].
  CHECK_THROWS_AS(sched.time_for_sigma_sq(0.9999999), std::domain_error);
}
