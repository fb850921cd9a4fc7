#pragma once

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mra/covariance.hpp"
#include "mra/geometry.hpp"
#include "mra/sparse.hpp"

namespace mra {

/// How Lambda_k^{-1} enters the prior recursion. `selected` only computes
/// the entries of Lambda_k^{-1} between knots closer than 2 d_k + 2 d_{k+1}
/// and is valid for the taper modulator only.
enum class InverseMode { full, selected };

InverseMode parse_inverse_mode(const std::string& name);
std::string to_string(InverseMode mode);
InverseMode default_inverse_mode(const Modulator& mod);

/// Row-compressed sparse matrix; column indices sorted within each row.
struct RowSparse {
  int rows = 0;
  int cols = 0;
  std::vector<int> rowptr{0};
  std::vector<int> colind;
  std::vector<double> values;

  std::size_t nnz() const { return colind.size(); }
  double coeff(int i, int j) const;
  SparseMatrix to_csc() const;
};

struct Observations {
  std::vector<Point> locations;
  Eigen::VectorXd values;
  /// Diagonal of V_eps.
  Eigen::VectorXd noise;

  std::size_t size() const { return locations.size(); }
  /// Throws unless sizes agree, n >= 1, values are finite and noise >= 0.
  void validate() const;
  bool noiseless() const;
};

/// Everything the prior recursion produces that prediction and covariance
/// evaluation need later: knot-knot blocks W^l_{m,l} (m > l), factors of
/// Lambda_k and the (full or selected) inverses used in each stage.
struct RecursionWorkspace {
  std::vector<std::vector<Point>> knots;
  /// knot_rows[m][l] = W^l_{m,l} for l < m, rows are level-m knots.
  std::vector<std::vector<RowSparse>> knot_rows;
  std::vector<SPDFactor> lambda_factor;
  /// Entries of Lambda_k^{-1} used by stage k (empty for k = M).
  std::vector<SparseMatrix> lambda_inverse;
  /// Coarsest level at which a location appears as a knot.
  std::map<std::pair<double, double>, int> anchor;
};

struct PriorFactors {
  CovarianceModel model;
  Modulator modulator;
  KnotHierarchy knots;
  InverseMode mode = InverseMode::full;
  std::vector<Point> locations;

  /// B_m = W^m_{S,m} (n x r_m) and Lambda_m = W^m_{m,m}.
  std::vector<SparseMatrix> B;
  std::vector<SparseMatrix> Lambda;
  /// Row-compressed copy of the stacked basis matrix.
  RowSparse basis_rows;
  /// offsets[m] is the first stacked index of level m; offsets.back() = r.
  std::vector<int> offsets;
  double logdet_lambda = 0.0;
  /// Knots that repeat a coarser knot, as (level, index).
  std::vector<std::pair<int, std::size_t>> duplicates;

  std::shared_ptr<const RecursionWorkspace> workspace;

  int levels() const { return static_cast<int>(B.size()); }
  int n() const { return static_cast<int>(locations.size()); }
  int r() const { return offsets.back(); }

  SparseMatrix stacked_basis() const;
  SparseMatrix stacked_precision() const;
  /// (level, region) of every stacked index for block-hierarchical ordering.
  std::vector<BlockKey> block_keys() const;
};

/// Runs the prior recursion and evaluates the basis at S.
///
/// Knots that repeat a coarser knot get an identically zero basis column
/// and a unit placeholder on the diagonal of Lambda so the weight stays
/// proper; locations that coincide with a level-j knot get exact zeros at
/// every level above j.
PriorFactors build_prior(const CovarianceModel& model, const KnotHierarchy& knots,
                         const Modulator& mod, std::span<const Point> S,
                         InverseMode mode);
PriorFactors build_prior(const CovarianceModel& model, const KnotHierarchy& knots,
                         const Modulator& mod, std::span<const Point> S);

/// Stacked basis b(x)' for arbitrary locations (rows) via the prediction
/// recursion.
RowSparse basis(const PriorFactors& prior, std::span<const Point> points);

struct PosteriorState {
  SparseMatrix precision;  // Lambda tilde
  SPDFactor factor;
  Eigen::VectorXd z_tilde;
  Eigen::VectorXd nu_tilde;
  double logdet_lambda = 0.0;
  double logdet_posterior = 0.0;
  double logdet_noise = 0.0;
  double data_quadratic = 0.0;
  /// Set on the noiseless path: nu_tilde = B^{-1} y exactly and the
  /// posterior of the weights is degenerate.
  bool noiseless = false;
  double noiseless_loglik = 0.0;
};

PosteriorState assemble_posterior(const PriorFactors& prior, const Observations& obs);

/// log L(theta), not -2 log L.
double loglikelihood(const PriorFactors& prior, const PosteriorState& post,
                     const Observations& obs);

/// Requires S = Q with the locations in stacked knot order (level 0 first)
/// and unique knots.
double loglikelihood_noiseless(const PriorFactors& prior, const Eigen::VectorXd& y);
PosteriorState assemble_noiseless(const PriorFactors& prior, const Eigen::VectorXd& y);

struct PredictionResult {
  std::vector<Point> locations;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  /// Covariance of combos * y(S^P); empty when no combinations were given.
  Eigen::MatrixXd combo_cov;
};

/// `combos` (k x n_P) is optional; pass an empty matrix for none.
PredictionResult predict(const PriorFactors& prior, const PosteriorState& post,
                         std::span<const Point> SP,
                         const Eigen::MatrixXd& combos = Eigen::MatrixXd());

/// C_M(s1, s2) = sum_m b_m(s1)' Lambda_m^{-1} b_m(s2).
double mra_cov(const PriorFactors& prior, const Point& s1, const Point& s2);
Eigen::MatrixXd mra_cov(const PriorFactors& prior, std::span<const Point> points);

}  // namespace mra
