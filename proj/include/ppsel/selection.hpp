#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ppsel/criteria.hpp"
#include "ppsel/likelihood.hpp"
#include "ppsel/second_order.hpp"
#include "ppsel/simulate.hpp"

namespace ppsel {

// All 2^p covariate subsets, each with an intercept, in bitmask order.
// Throws TooManyCovariates for p > 20 and InvalidArgument for p = 0.
std::vector<ModelSpec> enumerate_models(std::size_t p);

enum class Criterion { aic, bic_n, bic_w, bic_nm, cic, cbic };

inline constexpr std::array<Criterion, 6> kAllCriteria = {
    Criterion::aic, Criterion::bic_n, Criterion::bic_w,
    Criterion::bic_nm, Criterion::cic, Criterion::cbic};

std::string_view criterion_name(Criterion c);
// Throws InvalidArgument for an unknown name.
Criterion parse_criterion(std::string_view name);
double criterion_value(const CriteriaReport& r, Criterion c);

struct SelectOptions {
  // thomas: estimate (kappa, gamma) and p* per model; poisson: p* = p_l.
  PcfKind pcf_fitting = PcfKind::poisson;
  std::size_t m = 0;  // dummy points; 0 means 4 N(W)
  double r_max = 20.0;
  // Estimate (kappa, gamma) once from the full model's fitted intensity.
  bool estimate_once = false;
  std::size_t r_grid_size = 512;
};

struct ModelOutcome {
  ModelSpec model;
  bool ok = false;
  std::string failure;  // reason when !ok
  std::optional<FitResult> fit;
  std::optional<ThomasParams> thomas;
  CriteriaReport report;
};

struct SelectionResult {
  std::vector<ModelOutcome> models;
  std::map<Criterion, std::size_t> chosen;  // index into models
  std::vector<std::size_t> informative_set;  // filled by callers that know it
  // Largest loglik(sub) - loglik(super) over successful nested pairs. With a
  // shared quadrature this is at most rounding noise.
  double nesting_gap = 0.0;

  const ModelOutcome& chosen_outcome(Criterion c) const {
    return models.at(chosen.at(c));
  }
};

// Index of the model minimising the criterion among successful models; ties go
// to the smaller p_l, then the lexicographically smaller subset.
std::size_t choose(const std::vector<ModelOutcome>& models, Criterion c);

// Fits every candidate model on one shared quadrature, scores it, and picks
// the minimiser of each criterion. Models that fail to fit or estimate are
// kept in the table with ok = false and never chosen.
SelectionResult select(const PointPattern& p, const CovariateSet& cov,
                       const SelectOptions& options);

struct EvalMetrics {
  double tpr = 0.0;
  double fpr = 0.0;
  double kl = 0.0;
  double ise = 0.0;
};

// Fractions of informative / non-informative covariates included. With an
// empty class the corresponding rate is 0 for fpr and 1 for tpr.
std::pair<double, double> selection_rates(const ModelSpec& chosen,
                                          const std::vector<std::size_t>& informative,
                                          std::size_t p);

// True intensity and covariates tabulated on a fine lattice of the window
// (default 801 x 401 nodes) for trapezoid-rule KL and ISE.
class MetricGrid {
 public:
  explicit MetricGrid(const IntensitySpec& truth, std::size_t nx = 801,
                      std::size_t ny = 401);

  // KL = int rho*(log rho* - 1) - rho_hat(log rho_hat - 1),
  // ISE = int (rho* - rho_hat)^2, rho_hat = exp(beta_hat . z_l).
  EvalMetrics evaluate(const ModelSpec& chosen, const FitResult& fitted) const;

 private:
  std::vector<std::size_t> informative_;
  std::size_t p_;
  Eigen::MatrixXd z_;         // nodes x (p + 1), intercept first
  Eigen::VectorXd weights_;   // trapezoid weights
  Eigen::VectorXd rho_true_;
  double true_term_;          // int rho*(log rho* - 1)
};

EvalMetrics eval_metrics(const ModelSpec& chosen, const IntensitySpec& truth,
                         const FitResult& fitted, const CovariateSet& cov);

// Long format: replicate,model_id,criterion,value,chosen.
void write_selection_long_header(std::ostream& out);
void write_selection_long(std::ostream& out, const SelectionResult& result,
                          std::size_t replicate,
                          const std::vector<Criterion>& criteria);

}  // namespace ppsel
