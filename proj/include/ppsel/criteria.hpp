#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "ppsel/covariates.hpp"
#include "ppsel/likelihood.hpp"
#include "ppsel/second_order.hpp"

namespace ppsel {

// T2 = int_{W^2} z(u) z(v)^T rho(u) rho(v) (g(u - v) - 1) du dv at the fitted
// intensity. The integrand's smooth part z * rho is aggregated per
// quadrature cell with the Berman-Turner weights; the Thomas kernel g - 1 is
// integrated exactly over each pair of cells (it factorises into 1-D
// Gaussian integrals), truncated where it falls below 1e-6 of its peak.
// Zero for the Poisson pcf.
Eigen::MatrixXd t2_matrix(const FitResult& fit, const NodeDesign& design,
                          const PcfModel& pcf);
Eigen::MatrixXd t2_matrix(const FitResult& fit, const ModelSpec& model,
                          const CovariateSet& cov, const PcfModel& pcf);

// p_l + trace(S^-1 T2), via a Cholesky solve. Throws SingularSensitivity.
double p_star(const FitResult& fit, const Eigen::MatrixXd& t2);

struct CriteriaReport {
  ModelSpec model;
  double loglik = 0.0;
  std::size_t p_l = 0;
  double p_star = 0.0;
  double aic = 0.0;     // -2l + 2 p_l
  double bic_n = 0.0;   // -2l + p_l log N
  double bic_w = 0.0;   // -2l + p_l log |W|
  double bic_nm = 0.0;  // -2l + p_l log(N + m)
  double cic = 0.0;     // -2l + 2 p*
  double cbic = 0.0;    // -2l + p* log N
  struct Penalties {
    double n = 0.0;
    double w = 0.0;
    double nm = 0.0;
  } pi_values;  // the penalty arguments pi of -2l + p log(pi)
};

// -2 loglik + p log(pi).
inline double bic_pi(double loglik, double p, double pi) {
  return -2.0 * loglik + p * std::log(pi);
}

CriteriaReport criteria(const FitResult& fit, double p_star,
                        std::size_t n_points, double area, std::size_t m);

struct EvidenceOptions {
  std::size_t m = 0;  // dummy points; 0 means max(4, 4 N)
  double half_width_sds = 10.0;
  double max_log_error = 1e-6;
};

// log of int exp(l(b0)) N(b0; 0, prior_sd^2) db0 for the intercept-only
// model, by adaptive Gauss-Kronrod over the posterior mode +/- 10 posterior
// sds. Throws QuadratureFailure if the error bound on the log exceeds 1e-6.
double evidence_1d(const PointPattern& p, const CovariateSet& cov,
                   double prior_sd, const EvidenceOptions& options = {});

}  // namespace ppsel
