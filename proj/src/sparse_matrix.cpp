#include <algorithm>
#include <iomanip>
#include <ostream>
#include <string>

#include "mra/sparse.hpp"

namespace mra {

SparsePattern SparsePattern::from_entries(int rows, int cols,
                                          std::vector<std::pair<int, int>> entries) {
  for (const auto& [i, j] : entries) {
    if (i < 0 || i >= rows || j < 0 || j >= cols) {
      throw std::out_of_range("sparse entry (" + std::to_string(i) + ", " +
                              std::to_string(j) + ") out of bounds");
    }
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second < b.second : a.first < b.first;
  });
  entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
  SparsePattern p;
  p.rows = rows;
  p.cols = cols;
  p.colptr.assign(static_cast<std::size_t>(cols) + 1, 0);
  p.rowind.reserve(entries.size());
  for (const auto& [i, j] : entries) {
    ++p.colptr[j + 1];
    p.rowind.push_back(i);
  }
  for (int j = 0; j < cols; ++j) p.colptr[j + 1] += p.colptr[j];
  return p;
}

SparsePattern SparsePattern::identity(int n) {
  SparsePattern p;
  p.rows = p.cols = n;
  p.colptr.resize(static_cast<std::size_t>(n) + 1);
  p.rowind.resize(static_cast<std::size_t>(n));
  for (int j = 0; j <= n; ++j) p.colptr[j] = j;
  for (int j = 0; j < n; ++j) p.rowind[j] = j;
  return p;
}

std::ptrdiff_t SparsePattern::find(int i, int j) const {
  if (j < 0 || j >= cols) return -1;
  const auto first = rowind.begin() + colptr[j];
  const auto last = rowind.begin() + colptr[j + 1];
  const auto it = std::lower_bound(first, last, i);
  if (it == last || *it != i) return -1;
  return it - rowind.begin();
}

void SparsePattern::validate() const {
  if (rows < 0 || cols < 0 || colptr.size() != static_cast<std::size_t>(cols) + 1 ||
      colptr.front() != 0 || static_cast<std::size_t>(colptr.back()) != rowind.size()) {
    throw std::invalid_argument("malformed sparse pattern");
  }
  for (int j = 0; j < cols; ++j) {
    for (int p = colptr[j]; p < colptr[j + 1]; ++p) {
      if (rowind[p] < 0 || rowind[p] >= rows) {
        throw std::invalid_argument("sparse pattern row index out of bounds");
      }
      if (p > colptr[j] && rowind[p] <= rowind[p - 1]) {
        throw std::invalid_argument("sparse pattern rows not strictly increasing");
      }
    }
  }
}

SparseMatrix SparseMatrix::from_triplets(int rows, int cols,
                                         std::vector<Triplet> triplets) {
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.col != b.col ? a.col < b.col : a.row < b.row;
  });
  SparseMatrix A;
  A.pattern.rows = rows;
  A.pattern.cols = cols;
  A.pattern.colptr.assign(static_cast<std::size_t>(cols) + 1, 0);
  for (std::size_t t = 0; t < triplets.size(); ++t) {
    const auto& e = triplets[t];
    if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols) {
      throw std::out_of_range("triplet out of bounds");
    }
    if (!A.pattern.rowind.empty() && t > 0 && triplets[t - 1].row == e.row &&
        triplets[t - 1].col == e.col) {
      A.values.back() += e.value;
      continue;
    }
    A.pattern.rowind.push_back(e.row);
    A.values.push_back(e.value);
    ++A.pattern.colptr[e.col + 1];
  }
  for (int j = 0; j < cols; ++j) A.pattern.colptr[j + 1] += A.pattern.colptr[j];
  return A;
}

SparseMatrix SparseMatrix::on_pattern(SparsePattern pattern) {
  SparseMatrix A;
  A.values.assign(pattern.nnz(), 0.0);
  A.pattern = std::move(pattern);
  return A;
}

double SparseMatrix::coeff(int i, int j) const {
  const auto p = pattern.find(i, j);
  return p < 0 ? 0.0 : values[static_cast<std::size_t>(p)];
}

double& SparseMatrix::ref(int i, int j) {
  const auto p = pattern.find(i, j);
  if (p < 0) throw std::out_of_range("entry not in sparse pattern");
  return values[static_cast<std::size_t>(p)];
}

SparseMatrix SparseMatrix::symmetrized() const {
  if (!pattern.is_square()) throw std::invalid_argument("symmetrize needs a square matrix");
  std::vector<Triplet> t;
  t.reserve(2 * nnz());
  for (int j = 0; j < cols(); ++j) {
    for (int p = pattern.colptr[j]; p < pattern.colptr[j + 1]; ++p) {
      const int i = pattern.rowind[p];
      t.push_back({i, j, 0.5 * values[p]});
      t.push_back({j, i, 0.5 * values[p]});
    }
  }
  return from_triplets(rows(), cols(), std::move(t));
}

std::size_t SparseMatrix::nnz_lower() const {
  std::size_t count = 0;
  for (int j = 0; j < cols(); ++j) {
    for (int p = pattern.colptr[j]; p < pattern.colptr[j + 1]; ++p) {
      if (pattern.rowind[p] >= j) ++count;
    }
  }
  return count;
}

Eigen::VectorXd SparseMatrix::multiply(const Eigen::VectorXd& x) const {
  if (x.size() != cols()) throw std::invalid_argument("dimension mismatch in multiply");
  Eigen::VectorXd y = Eigen::VectorXd::Zero(rows());
  for (int j = 0; j < cols(); ++j) {
    for (int p = pattern.colptr[j]; p < pattern.colptr[j + 1]; ++p) {
      y[pattern.rowind[p]] += values[p] * x[j];
    }
  }
  return y;
}

Eigen::MatrixXd SparseMatrix::to_dense() const {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(rows(), cols());
  for (int j = 0; j < cols(); ++j) {
    for (int p = pattern.colptr[j]; p < pattern.colptr[j + 1]; ++p) {
      D(pattern.rowind[p], j) = values[p];
    }
  }
  return D;
}

void write_matrix_market(std::ostream& os, const SparseMatrix& A) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << A.rows() << ' ' << A.cols() << ' ' << A.nnz() << '\n';
  const auto old = os.precision(17);
  for (int j = 0; j < A.cols(); ++j) {
    for (int p = A.pattern.colptr[j]; p < A.pattern.colptr[j + 1]; ++p) {
      os << A.pattern.rowind[p] + 1 << ' ' << j + 1 << ' ' << A.values[p] << '\n';
    }
  }
  os.precision(old);
}

}  // namespace mra
