#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mra {

/// Compressed sparse column structure with sorted, unique row indices.
struct SparsePattern {
  int rows = 0;
  int cols = 0;
  std::vector<int> colptr{0};
  std::vector<int> rowind;

  static SparsePattern from_entries(int rows, int cols,
                                    std::vector<std::pair<int, int>> entries);
  static SparsePattern identity(int n);

  std::size_t nnz() const { return rowind.size(); }
  /// Position of (i, j) in rowind, or -1.
  std::ptrdiff_t find(int i, int j) const;
  bool contains(int i, int j) const { return find(i, j) >= 0; }
  bool is_square() const { return rows == cols; }
  void validate() const;

  friend bool operator==(const SparsePattern&, const SparsePattern&) = default;
};

struct Triplet {
  int row;
  int col;
  double value;
};

struct SparseMatrix {
  SparsePattern pattern;
  std::vector<double> values;

  /// Duplicate (row, col) entries are summed.
  static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> triplets);

  /// Entries aligned with an existing pattern; values default to zero.
  static SparseMatrix on_pattern(SparsePattern pattern);

  int rows() const { return pattern.rows; }
  int cols() const { return pattern.cols; }
  std::size_t nnz() const { return pattern.nnz(); }

  double coeff(int i, int j) const;
  double& ref(int i, int j);

  /// (A + A') / 2 over the union pattern.
  SparseMatrix symmetrized() const;
  /// Number of stored entries with row >= col.
  std::size_t nnz_lower() const;

  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd to_dense() const;
};

enum class OrderingHint { amd_like, block_hierarchical, natural };

/// Grouping key for block-hierarchical ordering: resolution level and the
/// region the index belongs to at that level.
struct BlockKey {
  int level = 0;
  long region = 0;
};

/// Fill-reducing permutation (new position -> original index).
///
/// amd_like runs minimum degree on the explicit elimination graph with ties
/// broken by index. block_hierarchical orders finest level first, coarsest
/// last, with each region's indices contiguous; it needs one key per index.
std::vector<int> ordering(const SparsePattern& pattern, OrderingHint hint,
                          std::span<const BlockKey> keys = {});

class NotPositiveDefinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PatternNotCovered : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct JitterPolicy {
  bool retry = true;
  /// Diagonal shift relative to the largest diagonal entry.
  double relative = 1e-10;
};

/// Sparse Cholesky factor P A P' = L L' of a symmetric positive-definite
/// matrix. L is stored column-wise with the diagonal entry first and rows in
/// increasing order; its pattern is the symbolic fill of A's stored pattern
/// (explicit zeros included).
class SPDFactor {
 public:
  int size() const { return n_; }
  double logdet() const { return logdet_; }
  /// Diagonal shift that was applied on retry, zero otherwise.
  double jitter() const { return jitter_; }
  bool jittered() const { return jitter_ > 0.0; }

  const std::vector<int>& perm() const { return perm_; }
  const std::vector<int>& inverse_perm() const { return pinv_; }
  const std::vector<int>& etree() const { return parent_; }
  const std::vector<int>& colptr() const { return Lp_; }
  const std::vector<int>& rowind() const { return Li_; }
  const std::vector<double>& values() const { return Lx_; }
  std::size_t nnz() const { return Li_.size(); }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

  /// b' A^{-1} b for a sparse b (original indexing), using a forward solve
  /// restricted to the elimination-tree reach of b's nonzeros.
  double inverse_quadratic(std::span<const int> index,
                           std::span<const double> value) const;

 private:
  friend SPDFactor factorize(const SparseMatrix&, std::span<const int>,
                             JitterPolicy);
  int n_ = 0;
  std::vector<int> perm_;
  std::vector<int> pinv_;
  std::vector<int> parent_;
  std::vector<int> Lp_;
  std::vector<int> Li_;
  std::vector<double> Lx_;
  double logdet_ = 0.0;
  double jitter_ = 0.0;
};

/// Up-looking simplicial Cholesky. On a non-positive pivot retries once with
/// the diagonal shifted per the policy; throws NotPositiveDefinite otherwise.
/// An empty permutation means natural order.
SPDFactor factorize(const SparseMatrix& A, std::span<const int> perm = {},
                    JitterPolicy policy = {});

Eigen::VectorXd solve(const SPDFactor& factor, const Eigen::VectorXd& rhs);
Eigen::MatrixXd solve(const SPDFactor& factor, const Eigen::MatrixXd& rhs);

/// Entries of A^{-1} at the positions of `pattern` (original indexing),
/// computed by the Takahashi recurrence on the factor's filled pattern.
/// Throws PatternNotCovered if a requested entry lies outside the fill of
/// L + L'.
SparseMatrix selected_inverse(const SPDFactor& factor, const SparsePattern& pattern);

/// Matrix Market coordinate export with 17 significant digits.
void write_matrix_market(std::ostream& os, const SparseMatrix& A);

}  // namespace mra
