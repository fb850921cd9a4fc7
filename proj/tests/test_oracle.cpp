#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "mra_support.hpp"

using namespace mra;
using mra::test::random_points;

namespace {

const CovarianceModel kModel = CovarianceModel::exponential(0.95, 0.05);
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

}  // namespace

TEST_CASE("dense GP log-likelihood") {
  SUBCASE("single observation") {
    const auto model = CovarianceModel::exponential(0.75, 0.1);
    Observations obs{{{0.3, 0.0}}, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 0.25)};
    CHECK(oracle::dense_gp_loglik(model, obs) == doctest::Approx(-0.5 * kLog2Pi).epsilon(1e-14));
  }
  SUBCASE("two observations, closed-form 2x2 inverse") {
    const Point a{0.1, 0.0}, b{0.4, 0.0};
    const double s = 0.95 + 0.05;
    const double c = 0.95 * std::exp(-0.3 / 0.05);
    const double det = s * s - c * c;
    const double z1 = 0.3, z2 = -1.1;
    const double quad = (s * z1 * z1 - 2.0 * c * z1 * z2 + s * z2 * z2) / det;
    Observations obs{{a, b}, Eigen::Vector2d(z1, z2), Eigen::Vector2d::Constant(0.05)};
    CHECK(oracle::dense_gp_loglik(kModel, obs) ==
          doctest::Approx(-0.5 * (2.0 * kLog2Pi + std::log(det) + quad)).epsilon(1e-13));
  }
}

TEST_CASE("dense kriging") {
  const auto S = random_points(30, 2, 4);
  const auto model = CovarianceModel::exponential(1.0, 0.3);
  Observations obs{S, oracle::sample_gp(model, S, Eigen::VectorXd::Zero(30), 5), Eigen::VectorXd::Zero(30)};
  const auto k = oracle::dense_gp_krige(model, obs, S);
  CHECK((k.mean - obs.values).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(k.cov.diagonal().cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("dense kriging: taper M-RA approaches it as M grows") {
  const auto model = CovarianceModel::exponential(0.95, 0.2);
  const auto S = random_points(200, 2, 21);
  const auto SP = random_points(40, 2, 22);
  const Eigen::VectorXd noise = Eigen::VectorXd::Constant(200, 0.05);
  const Observations obs{S, oracle::sample_gp(model, S, noise, 23), noise};
  const auto exact = oracle::dense_gp_krige(model, obs, SP);
  const double kBaseline[] = {1.08348, 0.55172, 0.354103};
  double previous = INFINITY;
  for (int M = 1; M <= 3; ++M) {
    const auto knots = build_regular_knots(Domain::unit(2), 4, 4, M, KnotLayout::lattice);
    const auto prior = build_prior(model, knots, Modulator::taper({1.2, 4, 2}), S);
    const auto pred = predict(prior, assemble_posterior(prior, obs), SP);
    const double err = (pred.mean - exact.mean).cwiseAbs().maxCoeff();
    MESSAGE("M = " << M << " max mean difference " << err);
    CHECK(err < previous);
    CHECK(err == doctest::Approx(kBaseline[M - 1]).epsilon(1e-5));
    previous = err;
  }
}

TEST_CASE("exact orthogonal decomposition") {
  for (int dim : {1, 2}) {
    for (int M = 0; M <= 3; ++M) {
      const auto knots = build_regular_knots(Domain::unit(dim), 2, dim == 1 ? 2 : 4, M, KnotLayout::lattice);
      const auto S = random_points(200, dim, 50 + M);
      const auto model = CovarianceModel::exponential(0.95, 0.2);
      const auto dec = oracle::exact_decomposition(model, knots, S);
      const auto C = oracle::covariance_matrix(model, S, S);
      CHECK((dec.reconstruction() - C).cwiseAbs().maxCoeff() <= 1e-10);
      if (M == 0) {
        // Single predictive-process term plus its remainder.
        const auto Cq = oracle::covariance_matrix(model, S, knots.levels[0]);
        CHECK((dec.a[0] - Cq).cwiseAbs().maxCoeff() == 0.0);
      }
    }
  }
  // The first remainder vanishes between level-0 knots and anything else.
  const auto knots = build_regular_knots(Domain::unit(1), 3, 2, 1, KnotLayout::lattice);
  std::vector<Point> S = knots.levels[0];
  const auto extra = random_points(20, 1, 8);
  S.insert(S.end(), extra.begin(), extra.end());
  KnotHierarchy coarse = knots;
  coarse.levels.resize(1);
  const auto dec = oracle::exact_decomposition(kModel, coarse, S);
  CHECK(dec.remainder.topRows(3).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("dense M-RA") {
  SUBCASE("block M = 1: level-1 remainder vanishes across regions") {
    const auto knots = build_regular_knots(Domain::unit(1), 2, 2, 1, KnotLayout::lattice);
    const auto S = random_points(40, 1, 3);
    const auto tree = build_partition_tree(Domain::unit(1), 2, 1);
    const auto mod = Modulator::block(tree);
    const auto d = oracle::dense_mra(kModel, knots, mod, S);
    const Eigen::MatrixXd v1 = d.B[1] * d.Lambda[1].inverse() * d.B[1].transpose();
    for (int i = 0; i < 40; ++i) {
      for (int j = 0; j < 40; ++j) {
        if (mod(1, S[i], S[j]) == 0.0) CHECK(v1(i, j) == 0.0);
      }
    }
  }
  SUBCASE("exact variance at knots") {
    const auto knots = build_regular_knots(Domain::unit(2), 2, 4, 2, KnotLayout::lattice);
    std::vector<Point> Q;
    for (const auto& l : knots.levels) Q.insert(Q.end(), l.begin(), l.end());
    for (bool block : {true, false}) {
      const auto d = oracle::dense_mra(kModel, knots, test::make_modulator(block, 2, 4, 2, 0.5), Q);
      CHECK((d.C.diagonal().array() - kModel.sigma2).abs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("GP simulation") {
  const auto S = random_points(50, 1, 2);
  const Eigen::VectorXd noise = Eigen::VectorXd::Constant(50, 0.05);
  SUBCASE("determinism") {
    const auto a = oracle::sample_gp(kModel, S, noise, 42);
    const auto b = oracle::sample_gp(kModel, S, noise, 42);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a - oracle::sample_gp(kModel, S, noise, 43)).cwiseAbs().maxCoeff() > 0.0);
    CHECK((a - oracle::sample_gp(kModel, S, noise, 42, 1)).cwiseAbs().maxCoeff() > 0.0);
  }
  SUBCASE("marginal variance") {
    const int reps = 200;
    double sum = 0.0, sum2 = 0.0;
    for (int r = 0; r < reps; ++r) {
      const double v = oracle::sample_gp(kModel, S, noise, 7, r)[10];
      sum += v;
      sum2 += v * v;
    }
    const double var = (sum2 - sum * sum / reps) / (reps - 1);
    const double target = 0.95 + 0.05;
    const double se = target * std::sqrt(2.0 / (reps - 1));
    CHECK(std::abs(var - target) <= 3.0 * se);
  }
  SUBCASE("repeated locations without noise share a value") {
    std::vector<Point> T{{0.2, 0.0}, {0.7, 0.0}, {0.2, 0.0}};
    const auto z = oracle::sample_gp(kModel, T, Eigen::VectorXd::Zero(3), 1);
    CHECK(z[0] == z[2]);
    CHECK(z[0] != z[1]);
  }
}
