#pragma once

// Independent reference computations used by `ppsel check` and the test
// suites. Nothing here shares code paths with the quantities it verifies
// beyond the public API being checked.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ppsel/simulate.hpp"

namespace ppsel::oracle {

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Largest componentwise relative error of the analytic score against central
// differences of loglik, and of the sensitivity against central differences
// of the score, over random (pattern, model, beta) triples. Relative errors
// use max(|analytic|, 1) as the scale.
struct DerivativeErrors {
  double score_rel = 0.0;
  double hessian_rel = 0.0;
  std::size_t triples = 0;
};
DerivativeErrors derivative_check(std::uint64_t seed, std::size_t triples = 50,
                                  double h = 1e-5);

struct CountMoments {
  double mu = 0.0;
  double mean = 0.0;
  double var = 0.0;  // sample variance
  std::size_t replicates = 0;

  double se() const;  // sample sd / sqrt(replicates)
};
CountMoments poisson_counts(const IntensitySpec& spec, const Window& w,
                            std::size_t replicates, std::uint64_t seed);
CountMoments thomas_counts(const IntensitySpec& spec, const ThomasParams& tp,
                           const Window& w, std::size_t replicates,
                           std::uint64_t seed);

// Per mu: means over replicates of
//   evidence_1d - (loglik(beta0_hat) - log(N) / 2)  and  log(N) / 2
// for homogeneous Poisson patterns on w.
struct EvidenceRow {
  double mu = 0.0;
  double residual = 0.0;
  double half_log_n = 0.0;
};
std::vector<EvidenceRow> evidence_structure(const Window& w,
                                            const std::vector<double>& mus,
                                            std::size_t replicates,
                                            double prior_sd, std::uint64_t seed);

// rho^2 / kappa * J_x * J_y for constant intensity rho, where
// J = int_0^L int_0^L phi_sigma(x - y) dx dy, sigma = sqrt(2) gamma, each
// 1-D integral by a fine trapezoid rule in the lag.
double t2_covariogram(const Window& w, double rho, const ThomasParams& tp);

// Direct double sum of rho^2 (g(u - v) - 1) over an nx x ny outer grid of
// cells, each pair of cells integrated on a sub x sub midpoint sub-grid.
// Cell pairs farther apart than the kernel cutoff are skipped.
double t2_brute_force(const Window& w, double rho, const ThomasParams& tp,
                      std::size_t nx = 40, std::size_t ny = 20,
                      std::size_t sub = 8);

struct T2Comparison {
  double quadrature = 0.0;
  double covariogram = 0.0;
  double brute_force = 0.0;
  double rho_hat = 0.0;
};
// Fits the intercept-only model to a homogeneous Poisson pattern on w and
// compares t2_matrix under the given Thomas pcf with both oracles at the
// fitted intensity.
T2Comparison t2_intercept_check(const Window& w, double mu,
                                const ThomasParams& tp, std::uint64_t seed);

// Suites: "gradient", "campbell", "evidence", "t2", or "all".
std::vector<Check> run_suite(std::string_view suite, std::uint64_t seed = 1);

void print_checks(std::ostream& out, const std::vector<Check>& checks);

}  // namespace ppsel::oracle
