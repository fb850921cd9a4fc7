#pragma once

#include <string>
#include <variant>

#include "mra/geometry.hpp"

namespace mra {

enum class CovarianceFamily { exponential, matern };

CovarianceFamily parse_covariance_family(const std::string& name);
std::string to_string(CovarianceFamily family);

/// Stationary isotropic covariance C_0(s1, s2) = sigma2 * rho(|s1 - s2| / kappa).
///
/// The Matern correlation is 2^(1-nu)/Gamma(nu) * x^nu * K_nu(x) with
/// x = h / kappa, so nu = 0.5 reproduces exp(-h / kappa). nu in
/// {0.5, 1.5, 2.5} use closed forms; other values go through the modified
/// Bessel function of the second kind.
struct CovarianceModel {
  CovarianceFamily family = CovarianceFamily::exponential;
  double sigma2 = 1.0;
  double kappa = 1.0;
  double nu = 0.5;

  static CovarianceModel exponential(double sigma2, double kappa);
  static CovarianceModel matern(double sigma2, double kappa, double nu);

  void validate() const;
  double correlation(double h) const;
  double operator()(const Point& s1, const Point& s2) const;

  /// Distance at which the correlation falls to 0.05.
  double effective_range() const;
};

double cov(const CovarianceModel& model, const Point& s1, const Point& s2);

/// Kanter's compactly supported correlation function on [0, 1).
double kanter(double x);

/// Taper ranges d_m = d0 / J^(m/d).
struct TaperSpec {
  double d0 = 1.0;
  int J = 2;
  int dim = 1;

  void validate() const;
  double range(int m) const;
};

/// Modulating functions T_0, ..., T_M of either M-RA variant.
class Modulator {
 public:
  enum class Kind { block, taper };

  static Modulator block(PartitionTree tree);
  static Modulator taper(TaperSpec spec);

  Kind kind() const { return kind_; }
  bool is_block() const { return kind_ == Kind::block; }
  const PartitionTree& tree() const { return std::get<PartitionTree>(spec_); }
  const TaperSpec& taper_spec() const { return std::get<TaperSpec>(spec_); }

  /// T_m(s1, s2) in [0, 1]. Block returns exactly 0 or 1.
  double operator()(int m, const Point& s1, const Point& s2) const;

 private:
  Kind kind_ = Kind::block;
  std::variant<PartitionTree, TaperSpec> spec_;
};

double modulate(const Modulator& mod, int m, const Point& s1, const Point& s2);

/// Region layout of a block modulator at one level.
struct RegionGrid {
  long nx = 1;
  long ny = 1;
  double width = 0.0;
  double height = 0.0;
};

/// Taper: the support radius d_m. Block: the level-m region grid.
using Support = std::variant<double, RegionGrid>;

Support support_radius(const Modulator& mod, int m);

}  // namespace mra
