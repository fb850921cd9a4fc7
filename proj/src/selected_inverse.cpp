#include <algorithm>
#include <string>

#include "mra/sparse.hpp"

namespace mra {

namespace {

// Position of row i in column j of L, or -1.
std::ptrdiff_t locate(const std::vector<int>& Lp, const std::vector<int>& Li, int i, int j) {
  const auto first = Li.begin() + Lp[j];
  const auto last = Li.begin() + Lp[j + 1];
  const auto it = std::lower_bound(first, last, i);
  if (it == last || *it != i) return -1;
  return it - Li.begin();
}

}  // namespace

SparseMatrix selected_inverse(const SPDFactor& factor, const SparsePattern& pattern) {
  const int n = factor.size();
  if (pattern.rows != n || pattern.cols != n) {
    throw std::invalid_argument("selected inverse pattern has the wrong size");
  }
  const auto& Lp = factor.colptr();
  const auto& Li = factor.rowind();
  const auto& Lx = factor.values();
  const auto& pinv = factor.inverse_perm();

  // Z holds the lower triangle of (P A P')^{-1} on the pattern of L.
  std::vector<double> Z(Lx.size(), 0.0);
  auto z = [&](int i, int k) -> double {
    const int r = std::max(i, k);
    const int c = std::min(i, k);
    return Z[static_cast<std::size_t>(locate(Lp, Li, r, c))];
  };

  for (int j = n - 1; j >= 0; --j) {
    const int d = Lp[j];
    const double ljj = Lx[d];
    for (int p = Lp[j + 1] - 1; p > d; --p) {
      const int i = Li[p];
      double s = 0.0;
      for (int q = d + 1; q < Lp[j + 1]; ++q) s += Lx[q] * z(i, Li[q]);
      Z[p] = -s / ljj;
    }
    double s = 0.0;
    for (int q = d + 1; q < Lp[j + 1]; ++q) s += Lx[q] * Z[q];
    Z[d] = 1.0 / (ljj * ljj) - s / ljj;
  }

  SparseMatrix out = SparseMatrix::on_pattern(pattern);
  for (int j = 0; j < n; ++j) {
    for (int p = pattern.colptr[j]; p < pattern.colptr[j + 1]; ++p) {
      const int i = pattern.rowind[p];
      const int a = pinv[i];
      const int b = pinv[j];
      const auto pos = locate(Lp, Li, std::max(a, b), std::min(a, b));
      if (pos < 0) {
        throw PatternNotCovered("entry (" + std::to_string(i) + ", " + std::to_string(j) +
                                ") is outside the filled factor pattern");
      }
      out.values[p] = Z[static_cast<std::size_t>(pos)];
    }
  }
  return out;
}

}  // namespace mra
