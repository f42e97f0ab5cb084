#pragma once

#include <cstdint>
#include <vector>

#include "ppsel/covariates.hpp"
#include "ppsel/geometry.hpp"

namespace ppsel {

// rho(u) = omega * exp(beta_1 z_1(u) + ... + beta_p z_p(u)).
// omega plays the part of theta * exp(beta_0).
class IntensitySpec {
 public:
  IntensitySpec(double omega, std::vector<double> beta, CovariateSet covariates);

  double omega() const { return omega_; }
  const std::vector<double>& beta() const { return beta_; }
  const CovariateSet& covariates() const { return covariates_; }

  IntensitySpec with_omega(double omega) const;

  // Indices j (0-based) with beta_j != 0.
  std::vector<std::size_t> informative_set() const;

  // Lattice values of beta . z; bilinear interpolation of this field equals
  // beta . z(u) at every u.
  const CovariateField& linear_predictor() const { return eta_; }

 private:
  double omega_;
  std::vector<double> beta_;
  CovariateSet covariates_;
  CovariateField eta_;
};

struct ThomasParams {
  double kappa;  // parent intensity, points per unit area
  double gamma;  // offspring dispersal standard deviation, length units

  ThomasParams(double kappa, double gamma);
};

double intensity_at(const IntensitySpec& spec, Point u);

// Integral of exp(beta . z) over the covariate window, by 4x4 Gauss-Legendre
// per lattice cell.
double integrated_exp(const IntensitySpec& spec);

// omega' with  integral_W omega' exp(beta . z(u)) du = target_mu.
double calibrate_omega(const IntensitySpec& spec, double target_mu);

// Inhomogeneous Poisson process on `window` by thinning a dominating
// homogeneous process at 1.05 x the largest lattice intensity. Throws
// BoundViolation if an evaluated intensity exceeds that bound.
PointPattern sim_poisson(const IntensitySpec& spec, const Window& window,
                         std::uint64_t seed);

// Inhomogeneous Thomas process: stationary Poisson(kappa) parents on the
// window grown by 4*gamma, each carrying a Poisson cluster with intensity
// rho(u) k(u - c; gamma) / kappa, k the N(0, gamma^2 I) density. The union is
// restricted to `window`; its intensity is rho.
PointPattern sim_thomas(const IntensitySpec& spec, const ThomasParams& tp,
                        const Window& window, std::uint64_t seed);

}  // namespace ppsel
