#include "mra/mra.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <climits>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

namespace mra {

InverseMode parse_inverse_mode(const std::string& name) {
  if (name == "full") return InverseMode::full;
  if (name == "selected") return InverseMode::selected;
  throw std::invalid_argument("unknown inverse mode '" + name + "'");
}

std::string to_string(InverseMode mode) {
  return mode == InverseMode::full ? "full" : "selected";
}

InverseMode default_inverse_mode(const Modulator& mod) {
  return mod.is_block() ? InverseMode::full : InverseMode::selected;
}

double RowSparse::coeff(int i, int j) const {
  const auto first = colind.begin() + rowptr[i];
  const auto last = colind.begin() + rowptr[i + 1];
  const auto it = std::lower_bound(first, last, j);
  return (it == last || *it != j) ? 0.0 : values[it - colind.begin()];
}

SparseMatrix RowSparse::to_csc() const {
  std::vector<Triplet> t;
  t.reserve(nnz());
  for (int i = 0; i < rows; ++i) {
    for (int p = rowptr[i]; p < rowptr[i + 1]; ++p) t.push_back({i, colind[p], values[p]});
  }
  return SparseMatrix::from_triplets(rows, cols, std::move(t));
}

void Observations::validate() const {
  if (locations.empty()) throw std::invalid_argument("observations are empty");
  const auto n = static_cast<Eigen::Index>(locations.size());
  if (values.size() != n || noise.size() != n) {
    throw std::invalid_argument("observation locations, values and noise differ in length");
  }
  if (!values.allFinite()) throw std::invalid_argument("observation values must be finite");
  if (!noise.allFinite() || (noise.array() < 0.0).any()) {
    throw std::invalid_argument("noise variances must be finite and non-negative");
  }
}

bool Observations::noiseless() const { return (noise.array() == 0.0).all(); }

namespace {

constexpr double kPlaceholder = 1.0;

using Key = std::pair<double, double>;
Key key_of(const Point& p) { return {p.x, p.y}; }

// Candidate knots of one level for a query location: region co-members for
// the block modulator, 3^d neighbouring grid cells of width d_l for the taper.
class LevelIndex {
 public:
  LevelIndex(const Modulator& mod, const Domain& dom, const std::vector<Point>& knots,
             int level, double radius)
      : mod_(&mod), dom_(dom), level_(level) {
    if (mod.is_block()) {
      for (int j = 0; j < static_cast<int>(knots.size()); ++j) {
        buckets_[mod.tree().region_index(knots[j], level)].push_back(j);
      }
      return;
    }
    cell_ = std::min(radius, std::max(dom.extent(0), dom.dim == 2 ? dom.extent(1) : 0.0));
    for (int j = 0; j < static_cast<int>(knots.size()); ++j) {
      const auto [cx, cy] = cell(knots[j]);
      buckets_[pack(cx, cy)].push_back(j);
    }
  }

  template <class F>
  void for_each(const Point& x, F&& f) const {
    if (mod_->is_block()) {
      const auto it = buckets_.find(mod_->tree().region_index(x, level_));
      if (it != buckets_.end()) {
        for (int j : it->second) f(j);
      }
      return;
    }
    const auto [cx, cy] = cell(x);
    const long ylo = dom_.dim == 2 ? cy - 1 : 0;
    const long yhi = dom_.dim == 2 ? cy + 1 : 0;
    for (long iy = ylo; iy <= yhi; ++iy) {
      for (long ix = cx - 1; ix <= cx + 1; ++ix) {
        const auto it = buckets_.find(pack(ix, iy));
        if (it == buckets_.end()) continue;
        for (int j : it->second) f(j);
      }
    }
  }

 private:
  static long long pack(long cx, long cy) {
    return (static_cast<long long>(cx) << 32) ^ static_cast<long long>(cy & 0xffffffffL);
  }

  std::pair<long, long> cell(const Point& p) const {
    auto along = [&](double v, int axis) {
      const long n = std::max(1L, static_cast<long>(std::ceil(dom_.extent(axis) / cell_)));
      const long c = static_cast<long>(std::floor((v - dom_.lower[axis]) / cell_));
      return std::clamp(c, 0L, n - 1);
    };
    return {along(p.x, 0), dom_.dim == 2 ? along(p.y, 1) : 0L};
  }

  const Modulator* mod_;
  Domain dom_;
  int level_;
  double cell_ = 1.0;
  std::unordered_map<long long, std::vector<int>> buckets_;
};

double support_of(const Modulator& mod, int m) {
  return mod.is_block() ? 0.0 : mod.taper_spec().range(m);
}

struct Context {
  const CovarianceModel& model;
  const Modulator& mod;
  const Domain& domain;
  const RecursionWorkspace& ws;
  std::vector<LevelIndex> index;
  /// Non-duplicate knots per level.
  std::vector<std::vector<char>> active;

  int levels() const { return static_cast<int>(ws.knots.size()); }

  int anchor_of(const Point& p) const {
    const auto it = ws.anchor.find(key_of(p));
    return it == ws.anchor.end() ? INT_MAX : it->second;
  }

  // W^0_{X,l} = C_0(X, Q_l) T_0(X, Q_l) on the pattern where T_l != 0,
  // minus exact zeros implied by repeated locations.
  RowSparse initial(std::span<const Point> X, int l) const {
    const auto& Q = ws.knots[l];
    RowSparse R;
    R.rows = static_cast<int>(X.size());
    R.cols = static_cast<int>(Q.size());
    R.rowptr.reserve(X.size() + 1);
    std::vector<int> cand;
    for (const auto& x : X) {
      if (anchor_of(x) >= l) {
        cand.clear();
        index[l].for_each(x, [&](int j) { cand.push_back(j); });
        std::sort(cand.begin(), cand.end());
        for (int j : cand) {
          if (!active[l][j]) continue;
          if (mod(l, x, Q[j]) == 0.0) continue;
          R.colind.push_back(j);
          R.values.push_back(model(x, Q[j]) * mod(0, x, Q[j]));
        }
      }
      R.rowptr.push_back(static_cast<int>(R.colind.size()));
    }
    return R;
  }

  // One stage of the recursion for the rows X:
  // W_{X,l} <- (W_{X,l} - W_{X,k} S_k W_{l,k}') o T_{k+1}(X, Q_l), l = k+1..top.
  // `W[l]` holds W_{X,l}; rows of W_{l,k} are taken from K[l][k].
  void stage(int k, std::span<const Point> X, std::vector<RowSparse>& W, int top,
             const std::vector<std::vector<RowSparse>>& K,
             std::vector<double>& work, std::vector<char>& mark,
             std::vector<int>& touched) const {
    const SparseMatrix& S = ws.lambda_inverse[k];
    const RowSparse& U = W[k];
    for (int i = 0; i < U.rows; ++i) {
      touched.clear();
      for (int p = U.rowptr[i]; p < U.rowptr[i + 1]; ++p) {
        const int a = U.colind[p];
        const double ua = U.values[p];
        for (int q = S.pattern.colptr[a]; q < S.pattern.colptr[a + 1]; ++q) {
          const int b = S.pattern.rowind[q];
          if (!mark[b]) {
            mark[b] = 1;
            touched.push_back(b);
          }
          work[b] += ua * S.values[q];
        }
      }
      for (int l = k + 1; l <= top; ++l) {
        RowSparse& T = W[l];
        const RowSparse& V = K[l][k];
        const auto& Q = ws.knots[l];
        for (int p = T.rowptr[i]; p < T.rowptr[i + 1]; ++p) {
          const int j = T.colind[p];
          double dot = 0.0;
          for (int t = V.rowptr[j]; t < V.rowptr[j + 1]; ++t) dot += work[V.colind[t]] * V.values[t];
          T.values[p] = (T.values[p] - dot) * mod(k + 1, X[i], Q[j]);
        }
      }
      for (int b : touched) {
        work[b] = 0.0;
        mark[b] = 0;
      }
    }
  }

  std::vector<RowSparse> rows_for(std::span<const Point> X) const {
    const int L = levels();
    std::vector<RowSparse> W;
    W.reserve(L);
    for (int l = 0; l < L; ++l) W.push_back(initial(X, l));
    std::size_t widest = 0;
    for (const auto& q : ws.knots) widest = std::max(widest, q.size());
    std::vector<double> work(widest, 0.0);
    std::vector<char> mark(widest, 0);
    std::vector<int> touched;
    for (int k = 0; k + 1 < L; ++k) stage(k, X, W, L - 1, ws.knot_rows, work, mark, touched);
    return W;
  }
};

RowSparse hstack(const std::vector<RowSparse>& blocks, const std::vector<int>& offsets) {
  RowSparse R;
  R.rows = blocks.empty() ? 0 : blocks[0].rows;
  R.cols = offsets.back();
  R.rowptr.reserve(static_cast<std::size_t>(R.rows) + 1);
  for (int i = 0; i < R.rows; ++i) {
    for (std::size_t m = 0; m < blocks.size(); ++m) {
      const auto& b = blocks[m];
      for (int p = b.rowptr[i]; p < b.rowptr[i + 1]; ++p) {
        R.colind.push_back(offsets[m] + b.colind[p]);
        R.values.push_back(b.values[p]);
      }
    }
    R.rowptr.push_back(static_cast<int>(R.colind.size()));
  }
  return R;
}

Context make_context(const PriorFactors& prior) {
  const auto& ws = *prior.workspace;
  Context ctx{prior.model, prior.modulator, prior.knots.domain, ws, {}, {}};
  const int L = static_cast<int>(ws.knots.size());
  for (int l = 0; l < L; ++l) {
    ctx.index.emplace_back(prior.modulator, prior.knots.domain, ws.knots[l], l,
                           support_of(prior.modulator, l));
    std::vector<char> act(ws.knots[l].size(), 1);
    for (std::size_t j = 0; j < act.size(); ++j) {
      act[j] = ctx.anchor_of(ws.knots[l][j]) == l;
    }
    ctx.active.push_back(std::move(act));
  }
  return ctx;
}

void check_inside(const Domain& dom, std::span<const Point> X, const char* what) {
  for (const auto& x : X) {
    if (!dom.contains(x)) {
      throw GeometryError(std::string(what) + " location (" + std::to_string(x.x) + ", " +
                          std::to_string(x.y) + ") lies outside the domain");
    }
  }
}

}  // namespace

SparseMatrix PriorFactors::stacked_basis() const { return basis_rows.to_csc(); }

SparseMatrix PriorFactors::stacked_precision() const {
  std::vector<Triplet> t;
  for (int m = 0; m < levels(); ++m) {
    const auto& A = Lambda[m];
    for (int j = 0; j < A.cols(); ++j) {
      for (int p = A.pattern.colptr[j]; p < A.pattern.colptr[j + 1]; ++p) {
        t.push_back({offsets[m] + A.pattern.rowind[p], offsets[m] + j, A.values[p]});
      }
    }
  }
  return SparseMatrix::from_triplets(r(), r(), std::move(t));
}

std::vector<BlockKey> PriorFactors::block_keys() const {
  std::vector<BlockKey> keys;
  keys.reserve(static_cast<std::size_t>(r()));
  for (int m = 0; m < levels(); ++m) {
    for (const auto& q : knots.levels[m]) {
      keys.push_back({m, modulator.is_block() ? modulator.tree().region_index(q, m) : 0L});
    }
  }
  return keys;
}

PriorFactors build_prior(const CovarianceModel& model, const KnotHierarchy& knots,
                         const Modulator& mod, std::span<const Point> S) {
  return build_prior(model, knots, mod, S, default_inverse_mode(mod));
}

PriorFactors build_prior(const CovarianceModel& model, const KnotHierarchy& knots,
                         const Modulator& mod, std::span<const Point> S,
                         InverseMode mode) {
  model.validate();
  knots.validate();
  if (S.empty()) throw std::invalid_argument("build_prior needs at least one location");
  if (mode == InverseMode::selected && mod.is_block()) {
    throw std::invalid_argument("selected inverse mode requires the taper modulator");
  }
  check_inside(knots.domain, S, "data");

  const int L = knots.depth() + 1;
  auto ws = std::make_shared<RecursionWorkspace>();
  ws->knots = knots.levels;
  for (int m = 0; m < L; ++m) {
    for (const auto& q : knots.levels[m]) ws->anchor.emplace(key_of(q), m);
  }

  PriorFactors prior;
  prior.model = model;
  prior.modulator = mod;
  prior.knots = knots;
  prior.mode = mode;
  prior.locations.assign(S.begin(), S.end());
  prior.duplicates = knots.duplicates();
  prior.offsets.assign(1, 0);
  for (int m = 0; m < L; ++m) {
    prior.offsets.push_back(prior.offsets.back() + static_cast<int>(knots.count(m)));
  }
  prior.workspace = ws;

  Context ctx = make_context(prior);

  // Knot-knot blocks: W[m][l] for l <= m.
  std::vector<std::vector<RowSparse>> W(L);
  for (int m = 0; m < L; ++m) {
    for (int l = 0; l <= m; ++l) W[m].push_back(ctx.initial(knots.levels[m], l));
  }

  std::size_t widest = 0;
  for (const auto& q : knots.levels) widest = std::max(widest, q.size());
  std::vector<double> work(widest, 0.0);
  std::vector<char> mark(widest, 0);
  std::vector<int> touched;

  ws->knot_rows.resize(L);
  for (int k = 0; k < L; ++k) {
    const auto& Q = knots.levels[k];
    const int rk = static_cast<int>(Q.size());

    // Lambda_k = W^k_{k,k}, symmetrized, with placeholders for repeats.
    std::vector<Triplet> t;
    const RowSparse& D = W[k][k];
    for (int i = 0; i < rk; ++i) {
      if (!ctx.active[k][i]) t.push_back({i, i, kPlaceholder});
      for (int p = D.rowptr[i]; p < D.rowptr[i + 1]; ++p) {
        const int j = D.colind[p];
        const double v = 0.5 * (D.values[p] + D.coeff(j, i));
        t.push_back({i, j, v});
      }
    }
    SparseMatrix lambda = SparseMatrix::from_triplets(rk, rk, t);

    SparseMatrix factored = lambda;
    SparsePattern wanted = lambda.pattern;
    if (mode == InverseMode::selected && k + 1 < L) {
      // Entries of Lambda_k^{-1} between knots closer than 2 d_k + 2 d_{k+1}.
      const double g = 2.0 * mod.taper_spec().range(k) + 2.0 * mod.taper_spec().range(k + 1);
      const LevelIndex near(mod, knots.domain, Q, k, g);
      std::vector<std::pair<int, int>> entries;
      for (int i = 0; i < rk; ++i) {
        entries.emplace_back(i, i);
        if (!ctx.active[k][i]) continue;
        near.for_each(Q[i], [&](int j) {
          if (ctx.active[k][j] && distance(Q[i], Q[j]) < g) entries.emplace_back(i, j);
        });
      }
      wanted = SparsePattern::from_entries(rk, rk, std::move(entries));
      std::vector<Triplet> padded = t;
      for (int j = 0; j < rk; ++j) {
        for (int p = wanted.colptr[j]; p < wanted.colptr[j + 1]; ++p) {
          padded.push_back({wanted.rowind[p], j, 0.0});
        }
      }
      factored = SparseMatrix::from_triplets(rk, rk, std::move(padded));
    }
    const auto perm = ordering(factored.pattern, OrderingHint::amd_like);
    SPDFactor F = factorize(factored, perm);
    prior.logdet_lambda += F.logdet();

    if (k + 1 < L) {
      if (mode == InverseMode::full && !mod.is_block()) {
        const Eigen::MatrixXd Z = F.solve(Eigen::MatrixXd(Eigen::MatrixXd::Identity(rk, rk)));
        std::vector<Triplet> zt;
        zt.reserve(static_cast<std::size_t>(rk) * rk);
        for (int j = 0; j < rk; ++j) {
          for (int i = 0; i < rk; ++i) zt.push_back({i, j, 0.5 * (Z(i, j) + Z(j, i))});
        }
        ws->lambda_inverse.push_back(SparseMatrix::from_triplets(rk, rk, std::move(zt)));
      } else {
        // Block: Lambda_k is block diagonal, so its inverse lives on its own
        // pattern and the selected inverse is the full inverse.
        ws->lambda_inverse.push_back(selected_inverse(F, wanted));
      }
    }
    ws->lambda_factor.push_back(std::move(F));
    prior.Lambda.push_back(std::move(lambda));

    if (k + 1 < L) {
      for (int m = k + 1; m < L; ++m) {
        ctx.stage(k, knots.levels[m], W[m], m, W, work, mark, touched);
      }
    }
  }
  for (int m = 0; m < L; ++m) {
    ws->knot_rows[m].assign(W[m].begin(), W[m].begin() + m);
  }

  const auto rows = ctx.rows_for(S);
  for (const auto& b : rows) prior.B.push_back(b.to_csc());
  prior.basis_rows = hstack(rows, prior.offsets);
  return prior;
}

RowSparse basis(const PriorFactors& prior, std::span<const Point> points) {
  check_inside(prior.knots.domain, points, "prediction");
  const Context ctx = make_context(prior);
  return hstack(ctx.rows_for(points), prior.offsets);
}

namespace {

// Lambda + B' diag(w) B, upper triangle computed column by column, then
// mirrored so the result is exactly symmetric.
SparseMatrix posterior_precision(const PriorFactors& prior, const Eigen::VectorXd& w) {
  const int r = prior.r();
  const RowSparse& B = prior.basis_rows;
  const SparseMatrix Bc = B.to_csc();
  std::vector<int> Up{0}, Ui;
  std::vector<double> Ux;
  std::vector<double> x(static_cast<std::size_t>(r), 0.0);
  std::vector<char> mark(static_cast<std::size_t>(r), 0);
  std::vector<int> rows;
  int m = 0;
  for (int j = 0; j < r; ++j) {
    while (prior.offsets[m + 1] <= j) ++m;
    rows.clear();
    auto add = [&](int i, double v) {
      if (!mark[i]) {
        mark[i] = 1;
        rows.push_back(i);
      }
      x[i] += v;
    };
    const auto& L = prior.Lambda[m];
    const int off = prior.offsets[m];
    for (int p = L.pattern.colptr[j - off]; p < L.pattern.colptr[j - off + 1]; ++p) {
      if (L.pattern.rowind[p] + off <= j) add(L.pattern.rowind[p] + off, L.values[p]);
    }
    for (int p = Bc.pattern.colptr[j]; p < Bc.pattern.colptr[j + 1]; ++p) {
      const int k = Bc.pattern.rowind[p];
      const double v = Bc.values[p] * w[k];
      for (int q = B.rowptr[k]; q < B.rowptr[k + 1] && B.colind[q] <= j; ++q) {
        add(B.colind[q], B.values[q] * v);
      }
    }
    std::sort(rows.begin(), rows.end());
    for (const int i : rows) {
      Ui.push_back(i);
      Ux.push_back(x[i]);
      x[i] = 0.0;
      mark[i] = 0;
    }
    Up.push_back(static_cast<int>(Ui.size()));
  }

  SparseMatrix A;
  A.pattern.rows = r;
  A.pattern.cols = r;
  A.pattern.colptr.assign(static_cast<std::size_t>(r) + 1, 0);
  for (int j = 0; j < r; ++j) {
    for (int p = Up[j]; p < Up[j + 1]; ++p) {
      ++A.pattern.colptr[j + 1];
      if (Ui[p] != j) ++A.pattern.colptr[Ui[p] + 1];
    }
  }
  for (int j = 0; j < r; ++j) A.pattern.colptr[j + 1] += A.pattern.colptr[j];
  A.pattern.rowind.resize(static_cast<std::size_t>(A.pattern.colptr[r]));
  A.values.resize(A.pattern.rowind.size());
  std::vector<int> next(A.pattern.colptr.begin(), A.pattern.colptr.end() - 1);
  for (int j = 0; j < r; ++j) {
    for (int p = Up[j]; p < Up[j + 1]; ++p) {
      const int slot = next[j]++;
      A.pattern.rowind[slot] = Ui[p];
      A.values[slot] = Ux[p];
    }
  }
  for (int j = 0; j < r; ++j) {
    for (int p = Up[j]; p < Up[j + 1]; ++p) {
      if (Ui[p] == j) continue;
      const int slot = next[Ui[p]]++;
      A.pattern.rowind[slot] = j;
      A.values[slot] = Ux[p];
    }
  }
  return A;
}

}  // namespace

PosteriorState assemble_posterior(const PriorFactors& prior, const Observations& obs) {
  obs.validate();
  const int n = prior.n();
  if (static_cast<int>(obs.size()) != n) {
    throw std::invalid_argument("observations do not match the prior's locations");
  }
  for (int i = 0; i < n; ++i) {
    if (!(obs.locations[i] == prior.locations[i])) {
      throw std::invalid_argument("observations do not match the prior's locations");
    }
  }
  if ((obs.noise.array() <= 0.0).any()) {
    throw std::invalid_argument(
        "zero noise variance: use the noiseless likelihood path with S = Q");
  }

  const int r = prior.r();
  const RowSparse& B = prior.basis_rows;
  PosteriorState post;
  post.z_tilde = Eigen::VectorXd::Zero(r);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = 1.0 / obs.noise[i];
    for (int a = B.rowptr[i]; a < B.rowptr[i + 1]; ++a) {
      post.z_tilde[B.colind[a]] += B.values[a] * w[i] * obs.values[i];
    }
    post.logdet_noise += std::log(obs.noise[i]);
    post.data_quadratic += obs.values[i] * obs.values[i] * w[i];
  }
  post.precision = posterior_precision(prior, w);

  std::vector<int> perm;
  if (prior.modulator.is_block()) {
    const auto keys = prior.block_keys();
    perm = ordering(post.precision.pattern, OrderingHint::block_hierarchical, keys);
  } else {
    perm = ordering(post.precision.pattern, OrderingHint::amd_like);
  }
  post.factor = factorize(post.precision, perm);
  post.nu_tilde = post.factor.solve(post.z_tilde);
  post.logdet_lambda = prior.logdet_lambda;
  post.logdet_posterior = post.factor.logdet();
  return post;
}

double loglikelihood(const PriorFactors& prior, const PosteriorState& post,
                     const Observations& obs) {
  if (post.noiseless) return post.noiseless_loglik;
  (void)prior;
  const double n = static_cast<double>(obs.size());
  const double m2ll = -post.logdet_lambda + post.logdet_posterior + post.logdet_noise +
                      post.data_quadratic - post.z_tilde.dot(post.nu_tilde);
  return -0.5 * (m2ll + n * std::log(2.0 * std::numbers::pi));
}

PosteriorState assemble_noiseless(const PriorFactors& prior, const Eigen::VectorXd& y) {
  const int n = prior.n();
  if (n != prior.r()) {
    throw std::invalid_argument("noiseless likelihood requires S = Q (n must equal r)");
  }
  for (int m = 0, i = 0; m < prior.levels(); ++m) {
    for (const auto& q : prior.knots.levels[m]) {
      if (!(prior.locations[i++] == q)) {
        throw std::invalid_argument(
            "noiseless likelihood requires the locations to be the knots in stacked order");
      }
    }
  }
  if (!prior.duplicates.empty()) {
    throw std::invalid_argument("noiseless likelihood requires unique knots");
  }
  if (y.size() != n || !y.allFinite()) {
    throw std::invalid_argument("noiseless data vector has the wrong size or is not finite");
  }

  const RowSparse& B = prior.basis_rows;
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(B.nnz());
  for (int i = 0; i < n; ++i) {
    for (int p = B.rowptr[i]; p < B.rowptr[i + 1]; ++p) t.emplace_back(i, B.colind[p], B.values[p]);
  }
  Eigen::SparseMatrix<double> Bm(n, n);
  Bm.setFromTriplets(t.begin(), t.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(Bm);
  if (lu.info() != Eigen::Success) {
    throw std::runtime_error("basis matrix is singular on the noiseless path");
  }
  PosteriorState post;
  post.noiseless = true;
  post.nu_tilde = lu.solve(y);
  post.logdet_lambda = prior.logdet_lambda;
  const Eigen::VectorXd Ly = prior.stacked_precision().multiply(post.nu_tilde);
  const double quad = post.nu_tilde.dot(Ly);
  const double log_abs_det_B = lu.logAbsDeterminant();
  post.noiseless_loglik = -0.5 * (n * std::log(2.0 * std::numbers::pi) + 2.0 * log_abs_det_B -
                                  prior.logdet_lambda + quad);
  return post;
}

double loglikelihood_noiseless(const PriorFactors& prior, const Eigen::VectorXd& y) {
  return assemble_noiseless(prior, y).noiseless_loglik;
}

PredictionResult predict(const PriorFactors& prior, const PosteriorState& post,
                         std::span<const Point> SP, const Eigen::MatrixXd& combos) {
  const int np = static_cast<int>(SP.size());
  if (combos.size() > 0) {
    if (combos.cols() != np) {
      throw std::invalid_argument("combination matrix must have one column per prediction location");
    }
    if (combos.rows() > 10L * prior.r()) {
      throw std::invalid_argument("too many linear combinations requested");
    }
  }
  const RowSparse BP = basis(prior, SP);
  PredictionResult out;
  out.locations.assign(SP.begin(), SP.end());
  out.mean = Eigen::VectorXd::Zero(np);
  out.sd = Eigen::VectorXd::Zero(np);
  for (int i = 0; i < np; ++i) {
    double mu = 0.0;
    for (int p = BP.rowptr[i]; p < BP.rowptr[i + 1]; ++p) mu += BP.values[p] * post.nu_tilde[BP.colind[p]];
    out.mean[i] = mu;
    if (!post.noiseless && BP.rowptr[i + 1] > BP.rowptr[i]) {
      const std::span<const int> idx(BP.colind.data() + BP.rowptr[i],
                                     static_cast<std::size_t>(BP.rowptr[i + 1] - BP.rowptr[i]));
      const std::span<const double> val(BP.values.data() + BP.rowptr[i], idx.size());
      out.sd[i] = std::sqrt(std::max(0.0, post.factor.inverse_quadratic(idx, val)));
    }
  }
  if (combos.size() > 0) {
    if (post.noiseless) {
      out.combo_cov = Eigen::MatrixXd::Zero(combos.rows(), combos.rows());
    } else {
      Eigen::MatrixXd G = Eigen::MatrixXd::Zero(prior.r(), combos.rows());
      for (int i = 0; i < np; ++i) {
        for (int p = BP.rowptr[i]; p < BP.rowptr[i + 1]; ++p) {
          G.row(BP.colind[p]) += BP.values[p] * combos.col(i).transpose();
        }
      }
      out.combo_cov = G.transpose() * post.factor.solve(G);
    }
  }
  return out;
}

Eigen::MatrixXd mra_cov(const PriorFactors& prior, std::span<const Point> points) {
  const RowSparse BP = basis(prior, points);
  const int np = static_cast<int>(points.size());
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(np, np);
  const auto& ws = *prior.workspace;
  for (int m = 0; m < prior.levels(); ++m) {
    const int lo = prior.offsets[m];
    const int rm = prior.offsets[m + 1] - lo;
    Eigen::MatrixXd Bm = Eigen::MatrixXd::Zero(rm, np);
    for (int i = 0; i < np; ++i) {
      for (int p = BP.rowptr[i]; p < BP.rowptr[i + 1]; ++p) {
        const int c = BP.colind[p];
        if (c >= lo && c < lo + rm) Bm(c - lo, i) = BP.values[p];
      }
    }
    C += Bm.transpose() * ws.lambda_factor[m].solve(Bm);
  }
  return C;
}

double mra_cov(const PriorFactors& prior, const Point& s1, const Point& s2) {
  const Point pts[2] = {s1, s2};
  return mra_cov(prior, std::span<const Point>(pts, 2))(0, 1);
}

}  // namespace mra
