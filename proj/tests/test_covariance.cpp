#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

#include "mra/covariance.hpp"

using namespace mra;

TEST_CASE("exponential covariance values") {
  const auto c = CovarianceModel::exponential(0.95, 0.05);
  const Point a{0.3, 0.0};
  CHECK(cov(c, a, a) == 0.95);
  // 0.95 * exp(-1)
  CHECK(cov(c, a, {0.35, 0.0}) == doctest::Approx(0.3494854691128702).epsilon(1e-12));
  CHECK(cov(c, {0.1, 0.2}, {0.4, 0.6}) == cov(c, {0.4, 0.6}, {0.1, 0.2}));
}

TEST_CASE("matern nu = 0.5 reproduces the exponential") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  const auto e = CovarianceModel::exponential(1.3, 0.2);
  CovarianceModel m{CovarianceFamily::matern, 1.3, 0.2, 0.5};
  CovarianceModel general{CovarianceFamily::matern, 1.3, 0.2, 0.5 + 1e-15};
  for (int k = 0; k < 20; ++k) {
    const double h = u(rng);
    CHECK(std::abs(e.correlation(h) - m.correlation(h)) <= 1e-12);
    CHECK(std::abs(e.correlation(h) - general.correlation(h)) <= 1e-12);
  }
}

TEST_CASE("matern closed forms agree with the Bessel path") {
  for (double nu : {1.5, 2.5}) {
    const auto closed = CovarianceModel::matern(1.0, 0.3, nu);
    CovarianceModel bessel = closed;
    bessel.nu = nu * (1.0 + 1e-13);
    for (double h : {0.01, 0.1, 0.3, 0.9, 2.0}) {
      CHECK(closed.correlation(h) == doctest::Approx(bessel.correlation(h)).epsilon(1e-9));
    }
  }
}

TEST_CASE("covariance validation") {
  CHECK_THROWS_AS(CovarianceModel::exponential(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(CovarianceModel::exponential(1.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(CovarianceModel::matern(1.0, 1.0, 0.0), std::invalid_argument);
  CHECK(parse_covariance_family("matern") == CovarianceFamily::matern);
  CHECK_THROWS_AS(parse_covariance_family("gauss"), std::invalid_argument);
}

TEST_CASE("bounded by the variance with equality only at zero lag") {
  const auto c = CovarianceModel::exponential(2.0, 0.1);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const Point a{u(rng), u(rng)};
    const Point b{u(rng), u(rng)};
    CHECK(cov(c, a, b) < 2.0);
    CHECK(cov(c, a, b) > 0.0);
  }
}

TEST_CASE("effective range") {
  const auto c = CovarianceModel::exponential(0.95, 0.05);
  CHECK(c.effective_range() == doctest::Approx(0.05 * std::log(20.0)));
  CHECK(c.effective_range() == doctest::Approx(0.15).epsilon(0.01));
  const auto m = CovarianceModel::matern(1.0, 0.1, 1.5);
  CHECK(m.correlation(m.effective_range()) == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("kanter function") {
  CHECK(kanter(0.0) == 1.0);
  CHECK(kanter(1.0) == 0.0);
  CHECK(kanter(2.0) == 0.0);
  CHECK(kanter(0.5) == doctest::Approx(2.0 / (std::numbers::pi * std::numbers::pi)).epsilon(1e-14));
  CHECK_THROWS_AS(kanter(-0.1), std::invalid_argument);
  // Continuity at both ends of the guarded series and at 1.
  CHECK(kanter(1e-6) == doctest::Approx(kanter(1.0000001e-6)).epsilon(1e-12));
  CHECK(kanter(1.0 - 1e-9) < 1e-12);
  for (double x = 0.0; x < 1.0; x += 0.01) {
    CHECK(kanter(x) >= 0.0);
    CHECK(kanter(x) <= 1.0);
    CHECK(kanter(x + 0.01) <= kanter(x) + 1e-15);
  }
}

TEST_CASE("kanter taper matrix is positive semidefinite") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int dim : {1, 2}) {
    std::vector<Point> p(50);
    for (auto& s : p) s = {u(rng), dim == 2 ? u(rng) : 0.0};
    Eigen::MatrixXd T(50, 50);
    for (int i = 0; i < 50; ++i) {
      for (int j = 0; j < 50; ++j) T(i, j) = kanter(distance(p[i], p[j]) / 0.4);
    }
    CHECK((T - T.transpose()).norm() == 0.0);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    CHECK(es.eigenvalues().minCoeff() >= -1e-9);
  }
}

TEST_CASE("taper ranges") {
  const TaperSpec s1{0.3, 2, 1};
  CHECK(s1.range(0) == 0.3);
  CHECK(s1.range(1) == doctest::Approx(0.15));
  const TaperSpec s2{0.3, 4, 2};
  CHECK(s2.range(1) == doctest::Approx(0.15));
  for (int m = 0; m < 6; ++m) CHECK(s2.range(m + 1) < s2.range(m));
  CHECK_THROWS_AS(Modulator::taper({0.0, 2, 1}), std::invalid_argument);
}

TEST_CASE("block modulator") {
  const auto mod = Modulator::block(build_partition_tree(Domain::unit(1), 2, 3));
  CHECK(modulate(mod, 0, {0.01, 0.0}, {0.99, 0.0}) == 1.0);
  CHECK(modulate(mod, 1, {0.2, 0.0}, {0.7, 0.0}) == 0.0);
  CHECK(modulate(mod, 1, {0.2, 0.0}, {0.4, 0.0}) == 1.0);
  CHECK(modulate(mod, 2, {0.2, 0.0}, {0.4, 0.0}) == 0.0);
  const auto rg = std::get<RegionGrid>(support_radius(mod, 2));
  CHECK(rg.nx * rg.ny == 4);
  CHECK(rg.width == 0.25);
}

TEST_CASE("taper modulator") {
  const auto mod = Modulator::taper({0.3, 2, 1});
  CHECK(modulate(mod, 1, {0.25, 0.0}, {0.4, 0.0}) == 0.0);
  CHECK(modulate(mod, 1, {0.2, 0.0}, {0.35, 0.0}) >= 0.0);
  CHECK(modulate(mod, 1, {0.2, 0.0}, {0.2, 0.0}) == 1.0);
  CHECK(std::get<double>(support_radius(mod, 0)) == 0.3);
  const auto mod2 = Modulator::taper({0.3, 4, 2});
  CHECK(std::get<double>(support_radius(mod2, 1)) == doctest::Approx(0.15));
}

TEST_CASE("modulator nesting and unit diagonal") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto block = Modulator::block(build_partition_tree(Domain::unit(2), 2, 4));
  const auto taper = Modulator::taper({0.5, 2, 2});
  for (int k = 0; k < 300; ++k) {
    const Point a{u(rng), u(rng)};
    const Point b{u(rng), u(rng)};
    for (int m = 0; m < 4; ++m) {
      CHECK(block(m, a, a) == 1.0);
      CHECK(taper(m, a, a) == 1.0);
      CHECK(block(m, a, b) == block(m, b, a));
      CHECK(taper(m, a, b) == taper(m, b, a));
      if (block(m + 1, a, b) == 1.0) CHECK(block(m, a, b) == 1.0);
      if (taper(m + 1, a, b) > 0.0) CHECK(taper(m, a, b) > 0.0);
    }
  }
}
