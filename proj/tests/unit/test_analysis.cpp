#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bqd/analysis.h"
#include "bqd/error.h"
#include "oracles.h"

using namespace bqd;

namespace {

Eigen::VectorXd time_grid(double t_end, int samples) {
  return Eigen::VectorXd::LinSpaced(samples, 0.0, t_end);
}

} // namespace

TEST_CASE("damped trajectory: initial value and zero-damping reduction") {
  const DampedDrive drive{20.0, 1.2, 0.7};
  CHECK(damped_trajectory({0.1, 0.4, 0.0}, drive, 0.0) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(damped_trajectory({0.1, 0.4, 0.0}, drive, 0.0, true) == doctest::Approx(0.7).epsilon(1e-15));

  // lambda = 0, phase = 0, x0 = 0: (u0/w) sin(w t) + F0 sin(wd t) / (w^2 - wd^2)^2 as printed.
  const double w = 0.35, wd = 1.2, a = 20.0;
  const DampedDrive d0{a, wd, 0.0};
  for (double t : {0.3, 5.0, 17.2}) {
    const double expected = a * wd / w * std::sin(w * t) + a * w * w * std::sin(wd * t) / std::pow(w * w - wd * wd, 2);
    CHECK(damped_trajectory({0.0, w, 0.0}, d0, t) == doctest::Approx(expected).epsilon(1e-13));
    const double textbook = a * wd / w * std::sin(w * t) + a * w * w * std::sin(wd * t) / std::abs(w * w - wd * wd);
    CHECK(damped_trajectory({0.0, w, 0.0}, d0, t, true) == doctest::Approx(textbook).epsilon(1e-13));
  }
}

TEST_CASE("damped trajectory matches numerical integration of the equation of motion") {
  const DampedParams params{0.08, 0.32, 0.4};
  const DampedDrive drive{20.0, 0.9, 1.5};
  for (bool textbook : {false, true})
    for (double t : {0.5, 7.0, 23.0, 40.0}) {
      const double numeric = oracle::damped_ode(params.lambda, params.omega_eff, params.phase, drive.amplitude,
                                                drive.omega_d, drive.x0, t, textbook);
      CHECK(std::abs(damped_trajectory(params, drive, t, textbook) - numeric) < 1e-6);
    }
}

TEST_CASE("damped trajectory domain") {
  CHECK_THROWS_AS(damped_trajectory({1.0, 0.5, 0.0}, {}, 1.0), DomainError);
  CHECK_THROWS_AS(damped_trajectory({0.6, 0.3, 0.0}, {}, 1.0), DomainError);
}

TEST_CASE("noiseless fit recovers the parameters and is a fixed point") {
  const DampedParams truth{0.07, 0.33, 0.25};
  const DampedDrive drive{20.0, 1.15, 0.0};
  const Eigen::VectorXd t = time_grid(100.0, 1001);
  const Eigen::VectorXd x = damped_trajectory(truth, drive, t);

  const FitResult f = fit_damped(t, x, drive);
  CHECK(std::abs(f.params.lambda - truth.lambda) < 1e-6);
  CHECK(std::abs(f.params.omega_eff - truth.omega_eff) < 1e-6);
  CHECK(std::abs(f.params.phase - truth.phase) < 1e-6);
  CHECK(f.residual_norm < 1e-10);
  CHECK_FALSE(f.rank_deficient);

  FitOptions start;
  start.initial = truth;
  const FitResult fixed = fit_damped(t, x, drive, start);
  CHECK(fixed.residual_norm < 1e-10);

  // Deterministic given the initial guess.
  const FitResult again = fit_damped(t, x, drive);
  CHECK(again.params.lambda == f.params.lambda);
  CHECK(again.params.omega_eff == f.params.omega_eff);
}

TEST_CASE("fit skips the first drive period by default") {
  const DampedParams truth{0.05, 0.3, 0.0};
  const DampedDrive drive{20.0, 1.5, 0.0};
  const Eigen::VectorXd t = time_grid(60.0, 601);
  const FitResult f = fit_damped(t, damped_trajectory(truth, drive, t), drive);
  const double period = 2.0 * std::numbers::pi / 1.5;
  CHECK(f.samples == static_cast<std::size_t>((t.array() >= period).count()));
}

TEST_CASE("fit recovers the damping rate under 1% noise") {
  const DampedParams truth{0.06, 0.32, 0.2};
  const DampedDrive drive{20.0, 1.0, 0.0};
  const Eigen::VectorXd t = time_grid(100.0, 1001);
  const Eigen::VectorXd clean = damped_trajectory(truth, drive, t);
  const double sigma = 0.01 * clean.cwiseAbs().maxCoeff();
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> noise(0.0, sigma);
  int within = 0;
  for (int r = 0; r < 100; ++r) {
    Eigen::VectorXd x = clean;
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += noise(rng);
    const FitResult f = fit_damped(t, x, drive);
    if (std::abs(f.params.lambda - truth.lambda) < 0.05 * truth.lambda) ++within;
  }
  CHECK(within == 100);
}

TEST_CASE("near-resonant drive is flagged as rank deficient") {
  const DampedParams truth{0.05, 0.3, 0.0};
  const DampedDrive drive{20.0, 0.3, 0.0};
  const Eigen::VectorXd t = time_grid(100.0, 1001);
  const FitResult f = fit_damped(t, damped_trajectory(truth, drive, t), drive);
  CHECK(f.rank_deficient);
}

TEST_CASE("fit errors") {
  const DampedDrive drive{20.0, 1.0, 0.0};
  const Eigen::VectorXd t = time_grid(100.0, 1001);
  const Eigen::VectorXd x = damped_trajectory({0.06, 0.32, 0.2}, drive, t);
  FitOptions capped;
  capped.max_iterations = 1;
  CHECK_THROWS_AS(fit_damped(t, x, drive, capped), ConvergenceError);
  CHECK_THROWS_AS(fit_damped(t.head(3), x.head(3), drive), DomainError);
  CHECK_THROWS_AS(fit_damped(t, x.head(10), drive), DomainError);
}

TEST_CASE("convergence delta") {
  const Eigen::VectorXd a = Eigen::VectorXd::LinSpaced(20, 0.0, 1.0);
  const ConvergenceDelta same = convergence_delta(a, a);
  CHECK(same.max == 0.0);
  CHECK((same.values.array() == 0.0).all());
  CHECK_FALSE(same.valid[0]);
  CHECK(same.valid[1]);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd b = a;
    const auto k = static_cast<Eigen::Index>(1 + trial % 19);
    b(k) += u(rng) + 1e-3;
    const ConvergenceDelta d = convergence_delta(a, b);
    CHECK((d.values.array() >= 0.0).all());
    CHECK(d.max > 0.0);
    CHECK(d.max == doctest::Approx(std::abs(b(k) - a(k)) / a(k)));
  }
  // Differences hidden behind the mask do not count.
  Eigen::VectorXd c = a;
  c(0) = 5.0;
  CHECK(convergence_delta(a, c).max == 0.0);
  CHECK_THROWS_AS(convergence_delta(a, a.head(3)), DomainError);
}

TEST_CASE("Thomas-Fermi radius") {
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(4001, -20.0, 20.0);
  const double sigma = 2.0;
  const Eigen::VectorXd gauss = (-0.5 * (x.array() / sigma).square()).exp().matrix();
  CHECK(tf_radius(gauss, x) == doctest::Approx(sigma * std::sqrt(2.0 * std::log(100.0))).epsilon(1e-5));

  // Inverted parabola: radius R at any threshold scaled by sqrt(1 - threshold).
  const double r = 9.0;
  const Eigen::VectorXd tf = (1.0 - (x.array() / r).square()).max(0.0).matrix();
  CHECK(tf_radius(tf, x, 1e-2) == doctest::Approx(r * std::sqrt(1.0 - 1e-2)).epsilon(1e-5));

  double previous = 1e9;
  for (double th : {1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.3, 0.5, 0.9}) {
    const double rad = tf_radius(gauss, x, th);
    CHECK(rad <= previous);
    previous = rad;
  }
  CHECK_THROWS_AS(tf_radius(gauss, x, 0.0), DomainError);
  CHECK_THROWS_AS(tf_radius(Eigen::VectorXd::Zero(x.size()), x), DomainError);
}

TEST_CASE("time average") {
  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(101, 0.0, 10.0);
  CHECK(time_average(t, Eigen::VectorXd::Constant(101, 3.0)) == doctest::Approx(3.0));
  CHECK(time_average(t, t) == doctest::Approx(5.0));
}
