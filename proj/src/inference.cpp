#include "mra/inference.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace mra {

namespace {

constexpr double kLogBound = 30.0;
constexpr double kPenalty = 1e100;

struct Objective {
  const Observations* obs;
  const KnotHierarchy* knots;
  const Modulator* mod;
  ParameterVector base;
  std::optional<InverseMode> mode;
  bool fit_tau2;
  int evaluations = 0;

  ParameterVector unpack(const gsl_vector* x) const {
    ParameterVector t = base;
    t.sigma2 = std::exp(gsl_vector_get(x, 0));
    t.kappa = std::exp(gsl_vector_get(x, 1));
    std::size_t k = 2;
    if (fit_tau2) t.tau2 = std::exp(gsl_vector_get(x, k++));
    if (base.fit_nu) t.nu = std::exp(gsl_vector_get(x, k++));
    return t;
  }
};

double negative_loglik(const gsl_vector* x, void* params) {
  auto* obj = static_cast<Objective*>(params);
  ++obj->evaluations;
  for (std::size_t i = 0; i < x->size; ++i) {
    if (!(std::abs(gsl_vector_get(x, i)) <= kLogBound)) return kPenalty;
  }
  try {
    const double ll = mra_loglik(*obj->obs, *obj->knots, *obj->mod, obj->unpack(x), obj->mode);
    return std::isfinite(ll) ? -ll : kPenalty;
  } catch (const std::exception&) {
    return kPenalty;
  }
}

struct GslErrorsOff {
  gsl_error_handler_t* previous = gsl_set_error_handler_off();
  ~GslErrorsOff() { gsl_set_error_handler(previous); }
};

}  // namespace

void ParameterVector::validate() const {
  if (!(sigma2 > 0.0) || !(kappa > 0.0) || !(tau2 >= 0.0) || !(nu > 0.0) ||
      !std::isfinite(sigma2) || !std::isfinite(kappa) || !std::isfinite(tau2)) {
    throw std::invalid_argument("parameters need sigma2 > 0, kappa > 0, tau2 >= 0, nu > 0");
  }
  if (fit_nu && family != CovarianceFamily::matern) {
    throw std::invalid_argument("nu can only be fitted for the Matern family");
  }
}

CovarianceModel ParameterVector::model() const {
  return family == CovarianceFamily::exponential ? CovarianceModel::exponential(sigma2, kappa)
                                                 : CovarianceModel::matern(sigma2, kappa, nu);
}

double mra_loglik(const Observations& obs, const KnotHierarchy& knots, const Modulator& mod,
                  const ParameterVector& theta, std::optional<InverseMode> mode) {
  theta.validate();
  const auto model = theta.model();
  const auto prior = mode ? build_prior(model, knots, mod, obs.locations, *mode)
                          : build_prior(model, knots, mod, obs.locations);
  if (theta.tau2 == 0.0) return loglikelihood_noiseless(prior, obs.values);
  Observations o{obs.locations, obs.values,
                 Eigen::VectorXd::Constant(static_cast<Eigen::Index>(obs.size()), theta.tau2)};
  const auto post = assemble_posterior(prior, o);
  return loglikelihood(prior, post, o);
}

FitResult fit_ml(const Observations& obs, const KnotHierarchy& knots, const Modulator& mod,
                 const ParameterVector& init, const FitOptions& opts) {
  init.validate();
  obs.validate();
  if (opts.max_evaluations < 1) throw std::invalid_argument("max_evaluations must be >= 1");

  FitResult result;
  result.theta = init;
  result.loglik = mra_loglik(obs, knots, mod, init, opts.inverse_mode);
  result.evaluations = 1;
  result.trace.push_back({0, 1, init, result.loglik});
  if (opts.max_iterations == 0) {
    result.budget_exhausted = true;
    return result;
  }

  Objective obj{&obs, &knots, &mod, init, opts.inverse_mode, init.tau2 > 0.0};
  const std::size_t dim = 2 + (obj.fit_tau2 ? 1 : 0) + (init.fit_nu ? 1 : 0);

  GslErrorsOff guard;
  gsl_vector* x = gsl_vector_alloc(dim);
  gsl_vector* step = gsl_vector_alloc(dim);
  gsl_vector_set(x, 0, std::log(init.sigma2));
  gsl_vector_set(x, 1, std::log(init.kappa));
  std::size_t k = 2;
  if (obj.fit_tau2) gsl_vector_set(x, k++, std::log(init.tau2));
  if (init.fit_nu) gsl_vector_set(x, k++, std::log(init.nu));
  gsl_vector_set_all(step, opts.initial_step);

  gsl_multimin_function f{&negative_loglik, dim, &obj};
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim);
  obj.evaluations = 0;
  gsl_multimin_fminimizer_set(s, &f, x, step);

  int iteration = 0;
  int status = GSL_CONTINUE;
  while (status == GSL_CONTINUE && iteration < opts.max_iterations &&
         obj.evaluations < opts.max_evaluations) {
    ++iteration;
    if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
    status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), opts.tolerance);
    const double ll = -gsl_multimin_fminimizer_minimum(s);
    if (ll > result.loglik) {
      result.loglik = ll;
      result.theta = obj.unpack(gsl_multimin_fminimizer_x(s));
    }
    result.trace.push_back({iteration, obj.evaluations + 1, result.theta, result.loglik});
  }
  result.converged = status == GSL_SUCCESS;
  result.budget_exhausted = !result.converged;
  result.evaluations = obj.evaluations + 1;

  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(step);
  gsl_vector_free(x);
  return result;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceEntry>& trace) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << "iteration,evaluations,sigma2,kappa,tau2,nu,logL\n" << std::setprecision(17);
  for (const auto& t : trace) {
    out << t.iteration << ',' << t.evaluations << ',' << t.theta.sigma2 << ',' << t.theta.kappa
        << ',' << t.theta.tau2 << ',' << t.theta.nu << ',' << t.loglik << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

LogScore log_score(double loglik, std::size_t n) {
  if (n == 0) throw std::invalid_argument("log score needs n >= 1");
  return {loglik, loglik / static_cast<double>(n)};
}

bool LogScoreGap::close(double c) const {
  return std::abs(gap()) <= c * static_cast<double>(n);
}

LogScoreGap log_score_gap(double approx_loglik, double exact_loglik, std::size_t n) {
  if (n == 0) throw std::invalid_argument("log score needs n >= 1");
  return {approx_loglik, exact_loglik, n};
}

double crps_gaussian(double mu, double sd, double y) {
  if (!(sd >= 0.0)) throw std::invalid_argument("crps needs sd >= 0");
  if (sd == 0.0) return std::abs(y - mu);
  const double z = (y - mu) / sd;
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  return sd * (z * (2.0 * cdf - 1.0) + 2.0 * pdf - 1.0 / std::sqrt(std::numbers::pi));
}

double rmspe(const Eigen::VectorXd& pred, const Eigen::VectorXd& y) {
  if (pred.size() != y.size() || y.size() == 0) {
    throw std::invalid_argument("rmspe needs two nonempty vectors of equal length");
  }
  return std::sqrt((pred - y).squaredNorm() / static_cast<double>(y.size()));
}

ScoreReport score_predictions(const Eigen::VectorXd& mean, const Eigen::VectorXd& sd,
                              const Eigen::VectorXd& y, double log_score) {
  if (sd.size() != y.size()) throw std::invalid_argument("sd and data lengths differ");
  ScoreReport r;
  r.log_score = log_score;
  r.rmspe = rmspe(mean, y);
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) total += crps_gaussian(mean[i], sd[i], y[i]);
  r.crps_mean = total / static_cast<double>(y.size());
  r.mean = mean;
  r.sd = sd;
  return r;
}

}  // namespace mra
