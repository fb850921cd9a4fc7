#pragma once

#include <Eigen/Dense>

#include <random>
#include <vector>

#include "mra/sparse.hpp"

namespace mra::test {

inline SparseMatrix from_dense(const Eigen::MatrixXd& D, double drop = 0.0) {
  std::vector<Triplet> t;
  for (int j = 0; j < D.cols(); ++j) {
    for (int i = 0; i < D.rows(); ++i) {
      if (std::abs(D(i, j)) > drop) t.push_back({i, j, D(i, j)});
    }
  }
  return SparseMatrix::from_triplets(static_cast<int>(D.rows()), static_cast<int>(D.cols()),
                                     std::move(t));
}

/// Random sparse SPD matrix: random symmetric pattern with density p,
/// diagonally dominant values.
inline Eigen::MatrixXd random_spd(int n, double p, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution keep(p);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = j + 1; i < n; ++i) {
      if (keep(rng)) A(i, j) = A(j, i) = u(rng);
    }
  }
  for (int i = 0; i < n; ++i) A(i, i) = A.row(i).cwiseAbs().sum() + 0.5 + std::abs(u(rng));
  return A;
}

inline double max_rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace mra::test
