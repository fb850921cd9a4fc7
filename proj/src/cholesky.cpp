#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mra/sparse.hpp"

namespace mra {

namespace {

// Upper triangle of P A P' in CSC form (column k holds rows i <= k).
struct UpperCSC {
  int n = 0;
  std::vector<int> p;
  std::vector<int> i;
  std::vector<double> x;
};

UpperCSC permuted_upper(const SparseMatrix& A, const std::vector<int>& pinv) {
  const int n = A.cols();
  UpperCSC C;
  C.n = n;
  C.p.assign(static_cast<std::size_t>(n) + 1, 0);
  for (int j = 0; j < n; ++j) {
    for (int q = A.pattern.colptr[j]; q < A.pattern.colptr[j + 1]; ++q) {
      const int i = A.pattern.rowind[q];
      if (i > j) continue;
      ++C.p[std::max(pinv[i], pinv[j]) + 1];
    }
  }
  std::partial_sum(C.p.begin(), C.p.end(), C.p.begin());
  C.i.resize(static_cast<std::size_t>(C.p[n]));
  C.x.resize(static_cast<std::size_t>(C.p[n]));
  std::vector<int> next(C.p.begin(), C.p.end() - 1);
  for (int j = 0; j < n; ++j) {
    for (int q = A.pattern.colptr[j]; q < A.pattern.colptr[j + 1]; ++q) {
      const int i = A.pattern.rowind[q];
      if (i > j) continue;
      const int a = pinv[i];
      const int b = pinv[j];
      const int slot = next[std::max(a, b)]++;
      C.i[slot] = std::min(a, b);
      C.x[slot] = A.values[q];
    }
  }
  return C;
}

std::vector<int> elimination_tree(const UpperCSC& C) {
  std::vector<int> parent(static_cast<std::size_t>(C.n), -1);
  std::vector<int> ancestor(static_cast<std::size_t>(C.n), -1);
  for (int k = 0; k < C.n; ++k) {
    for (int q = C.p[k]; q < C.p[k + 1]; ++q) {
      for (int i = C.i[q]; i != -1 && i < k;) {
        const int inext = ancestor[i];
        ancestor[i] = k;
        if (inext == -1) parent[i] = k;
        i = inext;
      }
    }
  }
  return parent;
}

// Nonzero pattern of row k of L (excluding the diagonal) in topological
// order, written to stack[top..n). `mark` must be all-false on entry and is
// restored on exit.
int row_reach(const UpperCSC& C, int k, const std::vector<int>& parent,
              std::vector<int>& stack, std::vector<char>& mark) {
  const int n = C.n;
  int top = n;
  mark[k] = 1;
  for (int q = C.p[k]; q < C.p[k + 1]; ++q) {
    int i = C.i[q];
    if (i > k) continue;
    int len = 0;
    for (; !mark[i]; i = parent[i]) {
      stack[len++] = i;
      mark[i] = 1;
    }
    while (len > 0) stack[--top] = stack[--len];
  }
  for (int q = top; q < n; ++q) mark[stack[q]] = 0;
  mark[k] = 0;
  return top;
}

}  // namespace

SPDFactor factorize(const SparseMatrix& A, std::span<const int> perm,
                    JitterPolicy policy) {
  if (!A.pattern.is_square()) {
    throw std::invalid_argument("factorize needs a square matrix");
  }
  const int n = A.cols();
  SPDFactor F;
  F.n_ = n;
  if (perm.empty()) {
    F.perm_.resize(static_cast<std::size_t>(n));
    std::iota(F.perm_.begin(), F.perm_.end(), 0);
  } else {
    if (perm.size() != static_cast<std::size_t>(n)) {
      throw std::invalid_argument("permutation length does not match matrix size");
    }
    F.perm_.assign(perm.begin(), perm.end());
  }
  F.pinv_.assign(static_cast<std::size_t>(n), -1);
  for (int k = 0; k < n; ++k) {
    const int old = F.perm_[k];
    if (old < 0 || old >= n || F.pinv_[old] != -1) {
      throw std::invalid_argument("invalid permutation");
    }
    F.pinv_[old] = k;
  }

  const UpperCSC C = permuted_upper(A, F.pinv_);
  F.parent_ = elimination_tree(C);

  // Symbolic: column counts from the row patterns.
  std::vector<int> stack(static_cast<std::size_t>(n));
  std::vector<char> mark(static_cast<std::size_t>(n), 0);
  std::vector<int> counts(static_cast<std::size_t>(n), 1);
  for (int k = 0; k < n; ++k) {
    const int top = row_reach(C, k, F.parent_, stack, mark);
    for (int q = top; q < n; ++q) ++counts[stack[q]];
  }
  F.Lp_.assign(static_cast<std::size_t>(n) + 1, 0);
  std::partial_sum(counts.begin(), counts.end(), F.Lp_.begin() + 1);
  F.Li_.resize(static_cast<std::size_t>(F.Lp_[n]));
  F.Lx_.resize(static_cast<std::size_t>(F.Lp_[n]));

  double max_diag = 0.0;
  for (int k = 0; k < n; ++k) {
    for (int q = C.p[k]; q < C.p[k + 1]; ++q) {
      if (C.i[q] == k) max_diag = std::max(max_diag, std::abs(C.x[q]));
    }
  }

  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  std::vector<int> next(static_cast<std::size_t>(n));
  auto numeric = [&](double shift) -> int {
    std::copy(F.Lp_.begin(), F.Lp_.end() - 1, next.begin());
    std::fill(x.begin(), x.end(), 0.0);
    for (int k = 0; k < n; ++k) {
      int top = row_reach(C, k, F.parent_, stack, mark);
      for (int q = C.p[k]; q < C.p[k + 1]; ++q) x[C.i[q]] = C.x[q];
      double d = x[k] + shift;
      x[k] = 0.0;
      for (; top < n; ++top) {
        const int i = stack[top];
        const double lki = x[i] / F.Lx_[F.Lp_[i]];
        x[i] = 0.0;
        for (int q = F.Lp_[i] + 1; q < next[i]; ++q) x[F.Li_[q]] -= F.Lx_[q] * lki;
        d -= lki * lki;
        const int slot = next[i]++;
        F.Li_[slot] = k;
        F.Lx_[slot] = lki;
      }
      if (!(d > 0.0) || !std::isfinite(d)) {
        // Leave the workspace clean for a retry.
        for (int j = 0; j < n; ++j) x[j] = 0.0;
        return k;
      }
      const int slot = next[k]++;
      F.Li_[slot] = k;
      F.Lx_[slot] = std::sqrt(d);
    }
    return -1;
  };

  int failed = numeric(0.0);
  if (failed >= 0 && policy.retry) {
    F.jitter_ = policy.relative * (max_diag > 0.0 ? max_diag : 1.0);
    failed = numeric(F.jitter_);
  }
  if (failed >= 0) {
    throw NotPositiveDefinite("matrix is not positive definite (pivot " +
                              std::to_string(failed) + " of " + std::to_string(n) +
                              (policy.retry ? ", after jitter retry)" : ")"));
  }

  double logdet = 0.0;
  for (int k = 0; k < n; ++k) logdet += std::log(F.Lx_[F.Lp_[k]]);
  F.logdet_ = 2.0 * logdet;
  return F;
}

Eigen::VectorXd SPDFactor::solve(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != n_) throw std::invalid_argument("dimension mismatch in solve");
  Eigen::VectorXd y(n_);
  for (int k = 0; k < n_; ++k) y[k] = rhs[perm_[k]];
  for (int j = 0; j < n_; ++j) {
    y[j] /= Lx_[Lp_[j]];
    for (int q = Lp_[j] + 1; q < Lp_[j + 1]; ++q) y[Li_[q]] -= Lx_[q] * y[j];
  }
  for (int j = n_ - 1; j >= 0; --j) {
    for (int q = Lp_[j] + 1; q < Lp_[j + 1]; ++q) y[j] -= Lx_[q] * y[Li_[q]];
    y[j] /= Lx_[Lp_[j]];
  }
  Eigen::VectorXd out(n_);
  for (int k = 0; k < n_; ++k) out[perm_[k]] = y[k];
  return out;
}

Eigen::MatrixXd SPDFactor::solve(const Eigen::MatrixXd& rhs) const {
  if (rhs.rows() != n_) throw std::invalid_argument("dimension mismatch in solve");
  Eigen::MatrixXd out(rhs.rows(), rhs.cols());
  for (Eigen::Index c = 0; c < rhs.cols(); ++c) {
    out.col(c) = solve(Eigen::VectorXd(rhs.col(c)));
  }
  return out;
}

double SPDFactor::inverse_quadratic(std::span<const int> index,
                                    std::span<const double> value) const {
  if (index.size() != value.size()) {
    throw std::invalid_argument("index/value length mismatch");
  }
  // Nonzeros of L^{-1} P b lie on the elimination-tree paths from b's
  // nonzeros to the root; ascending order is a valid solve order.
  std::vector<int> reach;
  thread_local std::vector<char> seen;
  thread_local std::vector<double> dense;
  if (seen.size() < static_cast<std::size_t>(n_)) {
    seen.assign(static_cast<std::size_t>(n_), 0);
    dense.assign(static_cast<std::size_t>(n_), 0.0);
  }
  for (std::size_t t = 0; t < index.size(); ++t) {
    if (index[t] < 0 || index[t] >= n_) {
      throw std::out_of_range("index out of range in inverse_quadratic");
    }
    for (int i = pinv_[index[t]]; i != -1 && !seen[i]; i = parent_[i]) {
      seen[i] = 1;
      reach.push_back(i);
    }
    dense[pinv_[index[t]]] += value[t];
  }
  std::sort(reach.begin(), reach.end());
  double sum = 0.0;
  for (const int j : reach) {
    const double yj = dense[j] / Lx_[Lp_[j]];
    for (int q = Lp_[j] + 1; q < Lp_[j + 1]; ++q) dense[Li_[q]] -= Lx_[q] * yj;
    sum += yj * yj;
  }
  for (const int j : reach) {
    dense[j] = 0.0;
    seen[j] = 0;
  }
  return sum;
}

Eigen::VectorXd solve(const SPDFactor& factor, const Eigen::VectorXd& rhs) {
  return factor.solve(rhs);
}

Eigen::MatrixXd solve(const SPDFactor& factor, const Eigen::MatrixXd& rhs) {
  return factor.solve(rhs);
}

}  // namespace mra
