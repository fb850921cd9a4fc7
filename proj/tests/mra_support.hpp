#pragma once

#include <random>
#include <vector>

#include "mra/mra.hpp"
#include "mra/oracle.hpp"

namespace mra::test {

inline std::vector<Point> random_points(int n, int dim, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point> p(static_cast<std::size_t>(n));
  for (auto& s : p) s = {u(rng), dim == 2 ? u(rng) : 0.0};
  return p;
}

inline Modulator make_modulator(bool block, int dim, int J, int M, double d0) {
  if (block) return Modulator::block(build_partition_tree(Domain::unit(dim), J, M));
  return Modulator::taper({d0, J, dim});
}

/// Largest entrywise difference relative to the largest dense entry.
inline double rel_err(const Eigen::MatrixXd& sparse, const Eigen::MatrixXd& dense) {
  if (dense.size() == 0) return 0.0;
  return (sparse - dense).cwiseAbs().maxCoeff() / std::max(1e-300, dense.cwiseAbs().maxCoeff());
}

inline double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1e-300, b.cwiseAbs().maxCoeff());
}

}  // namespace mra::test
