#include "mra/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mra {

CovarianceFamily parse_covariance_family(const std::string& name) {
  if (name == "exponential") return CovarianceFamily::exponential;
  if (name == "matern") return CovarianceFamily::matern;
  throw std::invalid_argument("unknown covariance family '" + name + "'");
}

std::string to_string(CovarianceFamily family) {
  return family == CovarianceFamily::exponential ? "exponential" : "matern";
}

CovarianceModel CovarianceModel::exponential(double sigma2, double kappa) {
  CovarianceModel m{CovarianceFamily::exponential, sigma2, kappa, 0.5};
  m.validate();
  return m;
}

CovarianceModel CovarianceModel::matern(double sigma2, double kappa, double nu) {
  CovarianceModel m{CovarianceFamily::matern, sigma2, kappa, nu};
  m.validate();
  return m;
}

void CovarianceModel::validate() const {
  if (!(sigma2 > 0.0) || !(kappa > 0.0) || !std::isfinite(sigma2) ||
      !std::isfinite(kappa)) {
    throw std::invalid_argument("covariance requires sigma2 > 0 and kappa > 0");
  }
  if (family == CovarianceFamily::matern && !(nu > 0.0 && std::isfinite(nu))) {
    throw std::invalid_argument("matern covariance requires nu > 0");
  }
}

double CovarianceModel::correlation(double h) const {
  const double x = h / kappa;
  if (family == CovarianceFamily::exponential || nu == 0.5) return std::exp(-x);
  if (nu == 1.5) return (1.0 + x) * std::exp(-x);
  if (nu == 2.5) return (1.0 + x + x * x / 3.0) * std::exp(-x);
  if (x == 0.0) return 1.0;
  if (x > 700.0) return 0.0;
  return std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(x, nu) *
         std::cyl_bessel_k(nu, x);
}

double CovarianceModel::operator()(const Point& s1, const Point& s2) const {
  return sigma2 * correlation(distance(s1, s2));
}

double CovarianceModel::effective_range() const {
  if (family == CovarianceFamily::exponential || nu == 0.5) {
    return kappa * std::log(20.0);
  }
  // Correlation is decreasing in h; bracket then bisect.
  double lo = 0.0;
  double hi = kappa;
  while (correlation(hi) > 0.05) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (correlation(mid) > 0.05 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double cov(const CovarianceModel& model, const Point& s1, const Point& s2) {
  return model(s1, s2);
}

double kanter(double x) {
  if (x < 0.0 || std::isnan(x)) {
    throw std::invalid_argument("kanter requires a non-negative argument");
  }
  constexpr double pi = std::numbers::pi;
  if (x >= 1.0) return 0.0;
  // Removable singularity at 0: T(x) = 1 - (2 pi^2 / 3) x^2 + O(x^3).
  if (x < 1e-6) return 1.0 - (2.0 * pi * pi / 3.0) * x * x;
  const double t = 2.0 * pi * x;
  // Cancellation just below x = 1 can produce tiny negative values.
  return std::max(0.0, (1.0 - x) * std::sin(t) / t + (1.0 - std::cos(t)) / (2.0 * pi * pi * x));
}

void TaperSpec::validate() const {
  if (!(d0 > 0.0) || !std::isfinite(d0)) {
    throw std::invalid_argument("taper range d0 must be positive");
  }
  if (J < 2) throw std::invalid_argument("taper factor J must be at least 2");
  if (dim != 1 && dim != 2) throw std::invalid_argument("taper dim must be 1 or 2");
}

double TaperSpec::range(int m) const {
  return d0 / std::pow(static_cast<double>(J), static_cast<double>(m) / dim);
}

Modulator Modulator::block(PartitionTree tree) {
  Modulator mod;
  mod.kind_ = Kind::block;
  mod.spec_ = std::move(tree);
  return mod;
}

Modulator Modulator::taper(TaperSpec spec) {
  spec.validate();
  Modulator mod;
  mod.kind_ = Kind::taper;
  mod.spec_ = spec;
  return mod;
}

double Modulator::operator()(int m, const Point& s1, const Point& s2) const {
  if (kind_ == Kind::block) {
    if (m == 0) return 1.0;
    const auto& t = tree();
    return t.region_index(s1, m) == t.region_index(s2, m) ? 1.0 : 0.0;
  }
  return kanter(distance(s1, s2) / taper_spec().range(m));
}

double modulate(const Modulator& mod, int m, const Point& s1, const Point& s2) {
  return mod(m, s1, s2);
}

Support support_radius(const Modulator& mod, int m) {
  if (mod.kind() == Modulator::Kind::taper) return mod.taper_spec().range(m);
  const auto& tree = mod.tree();
  const auto g = tree.grid(m);
  RegionGrid rg;
  rg.nx = g[0];
  rg.ny = g[1];
  rg.width = tree.domain().extent(0) / static_cast<double>(g[0]);
  rg.height = tree.domain().dim == 2
                  ? tree.domain().extent(1) / static_cast<double>(g[1])
                  : 0.0;
  return rg;
}

}  // namespace mra
