#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <ostream>
#include <vector>

#include "mra/covariance.hpp"
#include "mra/geometry.hpp"
#include "mra/mra.hpp"

namespace mra {

/// theta = (sigma2, kappa, tau2) plus the Matern smoothness, which is only
/// optimized when `fit_nu` is set.
struct ParameterVector {
  double sigma2 = 1.0;
  double kappa = 1.0;
  double tau2 = 0.0;
  double nu = 0.5;
  CovarianceFamily family = CovarianceFamily::exponential;
  bool fit_nu = false;

  void validate() const;
  CovarianceModel model() const;
};

struct FitOptions {
  int max_evaluations = 500;
  /// Simplex iterations; 0 returns the initial point unchanged.
  int max_iterations = 10000;
  /// Stop when the simplex size in log-parameter space drops below this.
  double tolerance = 1e-6;
  /// Initial simplex step in log units.
  double initial_step = 0.5;
  std::optional<InverseMode> inverse_mode;
};

struct TraceEntry {
  int iteration = 0;
  int evaluations = 0;
  ParameterVector theta;
  double loglik = 0.0;
};

struct FitResult {
  ParameterVector theta;
  double loglik = 0.0;
  std::vector<TraceEntry> trace;
  int evaluations = 0;
  bool converged = false;
  /// Stopped by max_evaluations or max_iterations before convergence.
  bool budget_exhausted = false;
};

/// M-RA log-likelihood of the data at theta with noise variance tau2 on every
/// observation. tau2 = 0 uses the noiseless path, which requires S = Q.
double mra_loglik(const Observations& obs, const KnotHierarchy& knots, const Modulator& mod,
                  const ParameterVector& theta, std::optional<InverseMode> mode = std::nullopt);

/// Nelder-Mead over log(sigma2), log(kappa), log(tau2) [, log(nu)]. With
/// tau2 = 0 at init the nugget stays fixed at zero. Throws if the
/// likelihood cannot be evaluated at init.
FitResult fit_ml(const Observations& obs, const KnotHierarchy& knots, const Modulator& mod,
                 const ParameterVector& init, const FitOptions& opts = {});

void write_trace_csv(std::ostream& out, const std::vector<TraceEntry>& trace);

struct LogScore {
  double total = 0.0;
  double per_observation = 0.0;
};

LogScore log_score(double loglik, std::size_t n);

/// Compares an approximation with a reference at one shared theta.
struct LogScoreGap {
  double approx = 0.0;
  double exact = 0.0;
  std::size_t n = 0;

  double gap() const { return exact - approx; }
  double gap_per_n() const { return gap() / static_cast<double>(n); }
  /// |gap| <= c * n.
  bool close(double c = 0.003) const;
};

LogScoreGap log_score_gap(double approx_loglik, double exact_loglik, std::size_t n);

double crps_gaussian(double mu, double sd, double y);
double rmspe(const Eigen::VectorXd& pred, const Eigen::VectorXd& y);

struct ScoreReport {
  double log_score = 0.0;
  double rmspe = 0.0;
  double crps_mean = 0.0;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

ScoreReport score_predictions(const Eigen::VectorXd& mean, const Eigen::VectorXd& sd,
                              const Eigen::VectorXd& y, double log_score = 0.0);

}  // namespace mra
