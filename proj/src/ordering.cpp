#include <algorithm>
#include <numeric>
#include <set>

#include "mra/sparse.hpp"

namespace mra {

namespace {

std::vector<int> minimum_degree(const SparsePattern& pattern) {
  const int n = pattern.cols;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    for (int p = pattern.colptr[j]; p < pattern.colptr[j + 1]; ++p) {
      const int i = pattern.rowind[p];
      if (i == j) continue;
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
  }
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }

  std::set<std::pair<std::size_t, int>> queue;
  for (int i = 0; i < n; ++i) queue.emplace(adj[i].size(), i);

  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(n));
  std::vector<int> merged;
  while (!queue.empty()) {
    const int p = queue.begin()->second;
    queue.erase(queue.begin());
    order.push_back(p);
    const std::vector<int> clique = std::move(adj[p]);
    adj[p].clear();
    // Eliminating p turns its neighbourhood into a clique.
    for (const int u : clique) {
      auto& au = adj[u];
      queue.erase({au.size(), u});
      merged.clear();
      std::set_union(au.begin(), au.end(), clique.begin(), clique.end(),
                     std::back_inserter(merged));
      merged.erase(std::remove_if(merged.begin(), merged.end(),
                                  [&](int v) { return v == u || v == p; }),
                   merged.end());
      au.swap(merged);
      queue.emplace(au.size(), u);
    }
  }
  return order;
}

}  // namespace

std::vector<int> ordering(const SparsePattern& pattern, OrderingHint hint,
                          std::span<const BlockKey> keys) {
  if (!pattern.is_square()) throw std::invalid_argument("ordering needs a square pattern");
  const int n = pattern.cols;
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  switch (hint) {
    case OrderingHint::natural:
      return perm;
    case OrderingHint::amd_like:
      return minimum_degree(pattern);
    case OrderingHint::block_hierarchical:
      if (keys.size() != static_cast<std::size_t>(n)) {
        throw std::invalid_argument("block-hierarchical ordering needs one key per index");
      }
      std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
        if (keys[a].level != keys[b].level) return keys[a].level > keys[b].level;
        return keys[a].region < keys[b].region;
      });
      return perm;
  }
  return perm;
}

}  // namespace mra
