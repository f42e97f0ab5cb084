#include "ppsel/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <tuple>

#include "ppsel/error.hpp"
#include "text_io.hpp"

namespace ppsel {

std::vector<ModelSpec> enumerate_models(std::size_t p) {
  if (p == 0) throw InvalidArgument("need at least one covariate");
  if (p > 20) {
    throw TooManyCovariates(std::to_string(p) + " covariates give 2^" +
                            std::to_string(p) + " models; the limit is 20");
  }
  std::vector<ModelSpec> out;
  out.reserve(std::size_t{1} << p);
  for (std::uint32_t mask = 0; mask < (1u << p); ++mask) {
    out.push_back(ModelSpec::from_mask(mask));
  }
  return out;
}

std::string_view criterion_name(Criterion c) {
  switch (c) {
    case Criterion::aic: return "aic";
    case Criterion::bic_n: return "bic_n";
    case Criterion::bic_w: return "bic_w";
    case Criterion::bic_nm: return "bic_nm";
    case Criterion::cic: return "cic";
    case Criterion::cbic: return "cbic";
  }
  return "?";
}

Criterion parse_criterion(std::string_view name) {
  for (auto c : kAllCriteria) {
    if (criterion_name(c) == name) return c;
  }
  throw InvalidArgument("unknown criterion `" + std::string(name) + "`");
}

double criterion_value(const CriteriaReport& r, Criterion c) {
  switch (c) {
    case Criterion::aic: return r.aic;
    case Criterion::bic_n: return r.bic_n;
    case Criterion::bic_w: return r.bic_w;
    case Criterion::bic_nm: return r.bic_nm;
    case Criterion::cic: return r.cic;
    case Criterion::cbic: return r.cbic;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::size_t choose(const std::vector<ModelOutcome>& models, Criterion c) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto& cand = models[i];
    if (!cand.ok) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& cur = models[*best];
    const double vc = criterion_value(cand.report, c);
    const double vb = criterion_value(cur.report, c);
    if (vc < vb ||
        (vc == vb && (cand.model.p_l() < cur.model.p_l() ||
                      (cand.model.p_l() == cur.model.p_l() &&
                       cand.model.subset() < cur.model.subset())))) {
      best = i;
    }
  }
  if (!best) throw Error("no candidate model could be fitted");
  return *best;
}

namespace {

std::vector<double> fitted_at_data(const NodeDesign& design, const FitResult& fit) {
  const auto n = design.scheme().n_data();
  const auto& full = design.full();
  std::vector<double> lambda(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    double eta = fit.beta_hat(0);
    Eigen::Index k = 1;
    for (auto j : fit.model.subset()) {
      eta += fit.beta_hat(k++) * full(ii, static_cast<Eigen::Index>(j) + 1);
    }
    lambda[i] = std::exp(eta);
  }
  return lambda;
}

ThomasParams estimate_thomas(const PointPattern& p, const NodeDesign& design,
                             const FitResult& fit, const std::vector<double>& r_grid,
                             double r_max) {
  const auto lambda = fitted_at_data(design, fit);
  return min_contrast(k_inhom(p, lambda, r_grid), r_max);
}

}  // namespace

SelectionResult select(const PointPattern& p, const CovariateSet& cov,
                       const SelectOptions& options) {
  if (p.empty()) throw EmptyPattern("cannot select a model for an empty pattern");
  const std::size_t n = p.size();
  const std::size_t m = options.m ? options.m : std::max<std::size_t>(4, 4 * n);
  const NodeDesign design(std::make_shared<const QuadratureScheme>(build_quadrature(p, m)),
                          cov);
  const double w_area = area(p.window());
  const bool thomas = options.pcf_fitting == PcfKind::thomas;
  const auto r_grid = default_r_grid(options.r_max, options.r_grid_size);

  SelectionResult result;
  const auto candidates = enumerate_models(cov.size());

  std::optional<ThomasParams> shared;
  std::string shared_failure;
  if (thomas && options.estimate_once) {
    try {
      const auto full = fit(design, candidates.back());
      shared = estimate_thomas(p, design, full, r_grid, options.r_max);
    } catch (const Error& e) {
      shared_failure = e.what();
    }
  }

  for (const auto& model : candidates) {
    ModelOutcome out;
    out.model = model;
    try {
      auto f = fit(design, model);
      if (!f.converged) throw Error("Newton iterations did not converge");
      double ps = static_cast<double>(model.p_l());
      if (thomas) {
        if (options.estimate_once && !shared) throw Error(shared_failure);
        const auto tp = shared ? *shared
                               : estimate_thomas(p, design, f, r_grid, options.r_max);
        ps = p_star(f, t2_matrix(f, design, PcfModel::thomas(tp)));
        out.thomas = tp;
      }
      out.report = criteria(f, ps, n, w_area, design.scheme().n_dummy());
      out.fit = std::move(f);
      out.ok = true;
    } catch (const Error& e) {
      out.failure = e.what();
    }
    result.models.push_back(std::move(out));
  }
  double gap = -std::numeric_limits<double>::infinity();
  for (const auto& small : result.models) {
    if (!small.ok) continue;
    const auto ms = small.model.mask();
    for (const auto& big : result.models) {
      if (!big.ok || &big == &small || (big.model.mask() & ms) != ms) continue;
      gap = std::max(gap, small.report.loglik - big.report.loglik);
    }
  }
  result.nesting_gap = std::isfinite(gap) ? gap : 0.0;
  for (auto c : kAllCriteria) result.chosen[c] = choose(result.models, c);
  return result;
}

std::pair<double, double> selection_rates(const ModelSpec& chosen,
                                          const std::vector<std::size_t>& informative,
                                          std::size_t p) {
  std::size_t hit = 0;
  std::size_t false_hit = 0;
  for (std::size_t j = 0; j < p; ++j) {
    const bool inf = std::find(informative.begin(), informative.end(), j) != informative.end();
    if (chosen.contains(j)) (inf ? hit : false_hit) += 1;
  }
  const std::size_t n_inf = informative.size();
  const std::size_t n_non = p - n_inf;
  const double tpr = n_inf ? static_cast<double>(hit) / static_cast<double>(n_inf) : 1.0;
  const double fpr = n_non ? static_cast<double>(false_hit) / static_cast<double>(n_non) : 0.0;
  return {tpr, fpr};
}

MetricGrid::MetricGrid(const IntensitySpec& truth, std::size_t nx, std::size_t ny)
    : informative_(truth.informative_set()), p_(truth.covariates().size()) {
  if (nx < 2 || ny < 2) throw InvalidArgument("metric grid must be at least 2x2");
  const auto& cov = truth.covariates();
  const Window& w = cov.window();
  const auto n = static_cast<Eigen::Index>(nx * ny);
  z_.resize(n, static_cast<Eigen::Index>(p_) + 1);
  weights_.resize(n);
  rho_true_.resize(n);
  const double hx = w.width() / static_cast<double>(nx - 1);
  const double hy = w.height() / static_cast<double>(ny - 1);
  std::vector<double> zu(p_);
  long double true_term = 0.0L;
  for (std::size_t iy = 0; iy < ny; ++iy) {
    const double wy = (iy == 0 || iy + 1 == ny) ? 0.5 * hy : hy;
    const double y = iy + 1 == ny ? w.y_max() : w.y_min() + static_cast<double>(iy) * hy;
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double wx = (ix == 0 || ix + 1 == nx) ? 0.5 * hx : hx;
      const double x = ix + 1 == nx ? w.x_max() : w.x_min() + static_cast<double>(ix) * hx;
      const auto k = static_cast<Eigen::Index>(iy * nx + ix);
      cov.eval_all({x, y}, zu);
      z_(k, 0) = 1.0;
      // Same accumulation order as the fitted predictor, so an exact fit
      // reproduces the true intensity bit for bit.
      double eta = std::log(truth.omega());
      for (std::size_t j = 0; j < p_; ++j) {
        z_(k, static_cast<Eigen::Index>(j) + 1) = zu[j];
        eta += truth.beta()[j] * zu[j];
      }
      weights_(k) = wx * wy;
      const double rho = std::exp(eta);
      rho_true_(k) = rho;
      true_term += weights_(k) * rho * (eta - 1.0);
    }
  }
  true_term_ = static_cast<double>(true_term);
}

EvalMetrics MetricGrid::evaluate(const ModelSpec& chosen, const FitResult& fitted) const {
  if (!(chosen == fitted.model)) {
    throw InvalidArgument("fitted result does not belong to the chosen model");
  }
  EvalMetrics out;
  std::tie(out.tpr, out.fpr) = selection_rates(chosen, informative_, p_);
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(z_.rows(), fitted.beta_hat(0));
  Eigen::Index k = 1;
  for (auto j : chosen.subset()) {
    eta += fitted.beta_hat(k++) * z_.col(static_cast<Eigen::Index>(j) + 1);
  }
  long double fit_term = 0.0L;
  long double ise = 0.0L;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double rho = std::exp(eta(i));
    fit_term += weights_(i) * rho * (eta(i) - 1.0);
    const double d = rho_true_(i) - rho;
    ise += weights_(i) * d * d;
  }
  out.kl = true_term_ - static_cast<double>(fit_term);
  out.ise = static_cast<double>(ise);
  return out;
}

EvalMetrics eval_metrics(const ModelSpec& chosen, const IntensitySpec& truth,
                         const FitResult& fitted, const CovariateSet& cov) {
  if (!(cov.window() == truth.covariates().window()) || cov.size() != truth.covariates().size()) {
    throw DimensionMismatch("fitted covariates do not match the true intensity's");
  }
  return MetricGrid(truth).evaluate(chosen, fitted);
}

void write_selection_long_header(std::ostream& out) {
  out << "replicate,model_id,criterion,value,chosen\n";
}

void write_selection_long(std::ostream& out, const SelectionResult& result,
                          std::size_t replicate, const std::vector<Criterion>& criteria) {
  for (auto c : criteria) {
    const auto chosen = result.chosen.at(c);
    for (std::size_t i = 0; i < result.models.size(); ++i) {
      const auto& mo = result.models[i];
      out << replicate << ',' << mo.model.mask() << ',' << criterion_name(c) << ',';
      if (mo.ok) out << detail::format_double(criterion_value(mo.report, c));
      else out << "nan";
      out << ',' << (i == chosen ? 1 : 0) << '\n';
    }
  }
}

}  // namespace ppsel
