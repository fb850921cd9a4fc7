#include "mra/oracle.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace mra::oracle {

namespace {

constexpr std::size_t kDenseLimit = 5000;

Eigen::LLT<Eigen::MatrixXd> spd_factor(const Eigen::MatrixXd& A, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() == Eigen::Success) return llt;
  Eigen::MatrixXd J = A;
  J.diagonal().array() += 1e-10 * A.diagonal().cwiseAbs().maxCoeff();
  llt.compute(J);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite(std::string(what) + " is not positive definite");
  }
  return llt;
}

double logdet(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Standard normal keyed by (seed, replicate, index, stream).
double keyed_normal(std::uint64_t seed, std::uint64_t rep, std::uint64_t i, std::uint64_t stream) {
  const std::uint64_t h =
      splitmix(splitmix(splitmix(splitmix(seed) ^ rep) ^ i) ^ stream);
  const std::uint64_t h2 = splitmix(h);
  const double u1 = (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = static_cast<double>(h2 >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<Point> joint(const KnotHierarchy& knots, std::span<const Point> S) {
  std::vector<Point> X;
  for (const auto& q : knots.levels) X.insert(X.end(), q.begin(), q.end());
  X.insert(X.end(), S.begin(), S.end());
  return X;
}

}  // namespace

double gaussian_logdensity(const Eigen::MatrixXd& Sigma, const Eigen::VectorXd& z) {
  const auto llt = spd_factor(Sigma, "covariance matrix");
  const Eigen::VectorXd w = llt.matrixL().solve(z);
  return -0.5 * (static_cast<double>(z.size()) * std::log(2.0 * std::numbers::pi) + logdet(llt) +
                 w.squaredNorm());
}

Eigen::MatrixXd covariance_matrix(const CovarianceModel& model, std::span<const Point> a,
                                  std::span<const Point> b) {
  Eigen::MatrixXd C(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) C(i, j) = model(a[i], b[j]);
  }
  return C;
}

double dense_gp_loglik(const CovarianceModel& model, const Observations& obs) {
  obs.validate();
  if (obs.size() > kDenseLimit) throw std::invalid_argument("dense oracle limited to n <= 5000");
  Eigen::MatrixXd Sigma = covariance_matrix(model, obs.locations, obs.locations);
  Sigma.diagonal() += obs.noise;
  return gaussian_logdensity(Sigma, obs.values);
}

Kriging dense_gp_krige(const CovarianceModel& model, const Observations& obs,
                       std::span<const Point> SP) {
  obs.validate();
  if (obs.size() > kDenseLimit) throw std::invalid_argument("dense oracle limited to n <= 5000");
  Eigen::MatrixXd Czz = covariance_matrix(model, obs.locations, obs.locations);
  Czz.diagonal() += obs.noise;
  const Eigen::MatrixXd Cpz = covariance_matrix(model, SP, obs.locations);
  const Eigen::MatrixXd Cpp = covariance_matrix(model, SP, SP);
  // Noiseless data make Czz singular when locations repeat; a pivoted LDLT
  // handles that, and is exact otherwise.
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(Czz);
  Kriging k;
  k.mean = Cpz * ldlt.solve(obs.values);
  k.cov = Cpp - Cpz * ldlt.solve(Eigen::MatrixXd(Cpz.transpose()));
  return k;
}

Eigen::MatrixXd ExactDecomposition::reconstruction() const {
  Eigen::MatrixXd C = remainder;
  for (std::size_t m = 0; m < a.size(); ++m) {
    C += a[m] * spd_factor(omega[m], "Omega").solve(Eigen::MatrixXd(a[m].transpose()));
  }
  return C;
}

ExactDecomposition exact_decomposition(const CovarianceModel& model, const KnotHierarchy& knots,
                                       std::span<const Point> S) {
  if (S.size() > 2000 || knots.total() > 2000) {
    throw std::invalid_argument("exact decomposition limited to n, r <= 2000");
  }
  const auto X = joint(knots, S);
  Eigen::MatrixXd w = covariance_matrix(model, X, X);
  const int n = static_cast<int>(S.size());
  const int sbeg = static_cast<int>(knots.total());
  ExactDecomposition out;
  int off = 0;
  for (const auto& Q : knots.levels) {
    const int rm = static_cast<int>(Q.size());
    const Eigen::MatrixXd omega = w.block(off, off, rm, rm);
    const Eigen::LLT<Eigen::MatrixXd> llt(omega);
    if (llt.info() != Eigen::Success) {
      throw NotPositiveDefinite("Omega is singular (repeated knots?)");
    }
    const Eigen::MatrixXd a = w.middleCols(off, rm);
    out.a.push_back(a.middleRows(sbeg, n));
    out.omega.push_back(omega);
    w -= a * llt.solve(Eigen::MatrixXd(a.transpose()));
    off += rm;
  }
  out.remainder = w.block(sbeg, sbeg, n, n);
  return out;
}

Eigen::MatrixXd DenseMRA::stacked_B() const {
  Eigen::Index cols = 0;
  for (const auto& b : B) cols += b.cols();
  Eigen::MatrixXd out(B.empty() ? 0 : B[0].rows(), cols);
  Eigen::Index c = 0;
  for (const auto& b : B) {
    out.middleCols(c, b.cols()) = b;
    c += b.cols();
  }
  return out;
}

Eigen::MatrixXd DenseMRA::stacked_Lambda() const {
  Eigen::Index r = 0;
  for (const auto& l : Lambda) r += l.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(r, r);
  Eigen::Index c = 0;
  for (const auto& l : Lambda) {
    out.block(c, c, l.rows(), l.cols()) = l;
    c += l.rows();
  }
  return out;
}

DenseMRA dense_mra(const CovarianceModel& model, const KnotHierarchy& knots, const Modulator& mod,
                   std::span<const Point> S) {
  if (S.size() > 2000 || knots.total() > 2000) {
    throw std::invalid_argument("dense M-RA limited to n, r <= 2000");
  }
  const auto X = joint(knots, S);
  const int N = static_cast<int>(X.size());
  auto modulation = [&](int m) {
    Eigen::MatrixXd T(N, N);
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) T(i, j) = mod(m, X[i], X[j]);
    }
    return T;
  };
  Eigen::MatrixXd v = covariance_matrix(model, X, X).cwiseProduct(modulation(0));
  const int n = static_cast<int>(S.size());
  const int sbeg = static_cast<int>(knots.total());
  DenseMRA out;
  out.C = Eigen::MatrixXd::Zero(n, n);
  int off = 0;
  const int L = static_cast<int>(knots.levels.size());
  for (int m = 0; m < L; ++m) {
    const int rm = static_cast<int>(knots.levels[m].size());
    const Eigen::MatrixXd lambda = v.block(off, off, rm, rm);
    const auto llt = spd_factor(lambda, "Lambda");
    const Eigen::MatrixXd b = v.middleCols(off, rm);
    out.Lambda.push_back(lambda);
    out.B.push_back(b.middleRows(sbeg, n));
    const Eigen::MatrixXd bS = b.middleRows(sbeg, n);
    out.C += bS * llt.solve(Eigen::MatrixXd(bS.transpose()));
    if (m + 1 < L) {
      v = (v - b * llt.solve(Eigen::MatrixXd(b.transpose()))).cwiseProduct(modulation(m + 1));
    }
    off += rm;
  }
  return out;
}

DensePosterior dense_posterior(const Eigen::MatrixXd& B, const Eigen::MatrixXd& Lambda,
                               const Eigen::VectorXd& noise, const Eigen::VectorXd& z) {
  const Eigen::VectorXd winv = noise.cwiseInverse();
  DensePosterior p;
  p.precision = Lambda + B.transpose() * winv.asDiagonal() * B;
  p.nu = spd_factor(p.precision, "posterior precision")
             .solve(Eigen::VectorXd(B.transpose() * winv.asDiagonal() * z));
  // Marginal likelihood straight from N(0, B Lambda^{-1} B' + V).
  Eigen::MatrixXd Sigma = B * spd_factor(Lambda, "Lambda").solve(Eigen::MatrixXd(B.transpose()));
  Sigma.diagonal() += noise;
  p.loglik = gaussian_logdensity(Sigma, z);
  return p;
}

Eigen::VectorXd sample_gp(const CovarianceModel& model, std::span<const Point> S,
                          const Eigen::VectorXd& noise, std::uint64_t seed,
                          std::uint64_t replicate) {
  if (S.empty()) throw std::invalid_argument("sample_gp needs at least one location");
  if (S.size() > kDenseLimit) throw std::invalid_argument("sample_gp limited to n <= 5000");
  if (noise.size() != static_cast<Eigen::Index>(S.size()) || (noise.array() < 0.0).any()) {
    throw std::invalid_argument("noise variances must be non-negative, one per location");
  }
  std::map<std::pair<double, double>, int> unique_index;
  std::vector<Point> U;
  std::vector<int> slot(S.size());
  for (std::size_t i = 0; i < S.size(); ++i) {
    auto [it, inserted] = unique_index.emplace(std::make_pair(S[i].x, S[i].y), static_cast<int>(U.size()));
    if (inserted) U.push_back(S[i]);
    slot[i] = it->second;
  }
  const auto llt = spd_factor(covariance_matrix(model, U, U), "covariance matrix");
  Eigen::VectorXd xi(U.size());
  for (std::size_t i = 0; i < U.size(); ++i) xi[i] = keyed_normal(seed, replicate, i, 0);
  const Eigen::VectorXd y = llt.matrixL() * xi;
  Eigen::VectorXd z(S.size());
  for (std::size_t i = 0; i < S.size(); ++i) {
    z[i] = y[slot[i]] + std::sqrt(noise[i]) * keyed_normal(seed, replicate, i, 1);
  }
  return z;
}

}  // namespace mra::oracle
