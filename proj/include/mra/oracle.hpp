#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

#include "mra/covariance.hpp"
#include "mra/geometry.hpp"
#include "mra/mra.hpp"

// Deliberately naive O(n^3) dense reference implementations.
namespace mra::oracle {

/// Log-density of N(0, Sigma) at z.
double gaussian_logdensity(const Eigen::MatrixXd& Sigma, const Eigen::VectorXd& z);

Eigen::MatrixXd covariance_matrix(const CovarianceModel& model, std::span<const Point> a,
                                  std::span<const Point> b);

double dense_gp_loglik(const CovarianceModel& model, const Observations& obs);

struct Kriging {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Conditional distribution of y_0(SP) given z = y_0(S) + eps.
Kriging dense_gp_krige(const CovarianceModel& model, const Observations& obs,
                       std::span<const Point> SP);

/// Orthogonal decomposition y_0 = tau_0 + ... + tau_M + delta_{M+1}, with
/// every level of the hierarchy contributing one predictive-process term.
struct ExactDecomposition {
  std::vector<Eigen::MatrixXd> a;      // a_m(S)', n x r_m
  std::vector<Eigen::MatrixXd> omega;  // Omega_m
  Eigen::MatrixXd remainder;           // w_{M+1}(S, S)

  /// sum_m a_m Omega_m^{-1} a_m' + remainder.
  Eigen::MatrixXd reconstruction() const;
};

ExactDecomposition exact_decomposition(const CovarianceModel& model, const KnotHierarchy& knots,
                                       std::span<const Point> S);

/// Literal evaluation of the M-RA recursion on the joint set Q u S.
struct DenseMRA {
  std::vector<Eigen::MatrixXd> B;       // b_m(S)', n x r_m
  std::vector<Eigen::MatrixXd> Lambda;  // Lambda_m
  Eigen::MatrixXd C;                    // C_M(S, S) = B Lambda^{-1} B'

  Eigen::MatrixXd stacked_B() const;
  Eigen::MatrixXd stacked_Lambda() const;
};

DenseMRA dense_mra(const CovarianceModel& model, const KnotHierarchy& knots, const Modulator& mod,
                   std::span<const Point> S);

/// Conjugate posterior of the basis weights from dense B and Lambda.
struct DensePosterior {
  Eigen::MatrixXd precision;
  Eigen::VectorXd nu;
  double loglik = 0.0;
};

DensePosterior dense_posterior(const Eigen::MatrixXd& B, const Eigen::MatrixXd& Lambda,
                               const Eigen::VectorXd& noise, const Eigen::VectorXd& z);

/// Draw from N(0, C_0(S,S)) plus independent noise. Normals are generated
/// from a counter-based hash of (seed, replicate, index), so each replicate
/// is reproducible on its own. Repeated locations share one latent value.
Eigen::VectorXd sample_gp(const CovarianceModel& model, std::span<const Point> S,
                          const Eigen::VectorXd& noise, std::uint64_t seed,
                          std::uint64_t replicate = 0);

}  // namespace mra::oracle
