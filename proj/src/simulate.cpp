#include "ppsel/simulate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "ppsel/error.hpp"
#include "ppsel/rng.hpp"

namespace ppsel {

namespace {

constexpr double kBoundSafety = 1.05;
constexpr double kParentBufferSds = 4.0;

CovariateField make_linear_predictor(const std::vector<double>& beta,
                                     const CovariateSet& cov) {
  std::vector<double> eta(cov.nx() * cov.ny(), 0.0);
  for (std::size_t j = 0; j < cov.size(); ++j) {
    const auto& values = cov[j].values();
    for (std::size_t k = 0; k < eta.size(); ++k) eta[k] += beta[j] * values[k];
  }
  return CovariateField("eta", cov.window(), cov.nx(), cov.ny(), std::move(eta));
}

double max_node_intensity(const IntensitySpec& spec) {
  const auto& eta = spec.linear_predictor().values();
  return spec.omega() * std::exp(*std::max_element(eta.begin(), eta.end()));
}

// Same value as intensity_at, one interpolation instead of p.
double predictor_intensity(const IntensitySpec& spec, Point u) {
  return spec.omega() * std::exp(spec.linear_predictor().eval(u));
}

void check_bound(double rho, double bound) {
  if (rho > bound) {
    std::ostringstream msg;
    msg << "intensity " << rho << " exceeds thinning bound " << bound;
    throw BoundViolation(msg.str());
  }
}

}  // namespace

IntensitySpec::IntensitySpec(double omega, std::vector<double> beta,
                             CovariateSet covariates)
    : omega_(omega),
      beta_(std::move(beta)),
      covariates_(std::move(covariates)),
      eta_(make_linear_predictor(beta_.size() == covariates_.size()
                                     ? beta_
                                     : std::vector<double>(covariates_.size()),
                                 covariates_)) {
  if (beta_.size() != covariates_.size()) {
    throw DimensionMismatch("beta has " + std::to_string(beta_.size()) +
                            " entries for " + std::to_string(covariates_.size()) +
                            " covariates");
  }
  if (!(omega_ > 0.0) || !std::isfinite(omega_)) {
    throw InvalidArgument("omega must be positive and finite");
  }
}

IntensitySpec IntensitySpec::with_omega(double omega) const {
  return IntensitySpec(omega, beta_, covariates_);
}

std::vector<std::size_t> IntensitySpec::informative_set() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < beta_.size(); ++j) {
    if (beta_[j] != 0.0) out.push_back(j);
  }
  return out;
}

ThomasParams::ThomasParams(double kappa_, double gamma_)
    : kappa(kappa_), gamma(gamma_) {
  if (!(kappa > 0.0) || !(gamma > 0.0) || !std::isfinite(kappa) ||
      !std::isfinite(gamma)) {
    throw InvalidArgument("Thomas parameters must be positive and finite");
  }
}

double intensity_at(const IntensitySpec& spec, Point u) {
  const auto& cov = spec.covariates();
  if (!cov.window().contains(u)) {
    throw OutOfWindow("intensity evaluated outside the covariate window");
  }
  const auto c = locate(cov.window(), cov.nx(), cov.ny(), u);
  double eta = 0.0;
  for (std::size_t j = 0; j < cov.size(); ++j) {
    eta += spec.beta()[j] * interpolate(cov[j], c);
  }
  return spec.omega() * std::exp(eta);
}

double integrated_exp(const IntensitySpec& spec) {
  // Gauss-Legendre nodes/weights on [0,1].
  constexpr std::array<double, 4> x = {0.06943184420297371, 0.33000947820757187,
                                       0.66999052179242813, 0.93056815579702629};
  constexpr std::array<double, 4> w = {0.17392742256872693, 0.32607257743127307,
                                       0.32607257743127307, 0.17392742256872693};
  const auto& eta = spec.linear_predictor();
  const std::size_t nx = eta.nx();
  const std::size_t ny = eta.ny();
  const double cell_area = area(eta.window()) / static_cast<double>((nx - 1) * (ny - 1));
  long double total = 0.0L;
  for (std::size_t iy = 0; iy + 1 < ny; ++iy) {
    for (std::size_t ix = 0; ix + 1 < nx; ++ix) {
      const double v00 = eta.node(ix, iy);
      const double v10 = eta.node(ix + 1, iy);
      const double v01 = eta.node(ix, iy + 1);
      const double v11 = eta.node(ix + 1, iy + 1);
      double cell = 0.0;
      for (std::size_t a = 0; a < 4; ++a) {
        const double lo = v00 + x[a] * (v10 - v00);
        const double hi = v01 + x[a] * (v11 - v01);
        for (std::size_t b = 0; b < 4; ++b) {
          cell += w[a] * w[b] * std::exp(lo + x[b] * (hi - lo));
        }
      }
      total += cell;
    }
  }
  return static_cast<double>(total) * cell_area;
}

double calibrate_omega(const IntensitySpec& spec, double target_mu) {
  if (!(target_mu > 0.0)) throw InvalidArgument("target_mu must be positive");
  return target_mu / integrated_exp(spec);
}

PointPattern sim_poisson(const IntensitySpec& spec, const Window& window,
                         std::uint64_t seed) {
  auto rng = make_rng(seed);
  const double bound = kBoundSafety * max_node_intensity(spec);
  std::poisson_distribution<long long> count_dist(bound * area(window));
  std::uniform_real_distribution<double> ux(window.x_min(), window.x_max());
  std::uniform_real_distribution<double> uy(window.y_min(), window.y_max());
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const long long n = count_dist(rng);
  std::vector<Point> points;
  for (long long i = 0; i < n; ++i) {
    const Point u{ux(rng), uy(rng)};
    const double retain = unif(rng);
    const double rho = predictor_intensity(spec, u);
    check_bound(rho, bound);
    if (retain * bound < rho) points.push_back(u);
  }
  return PointPattern(std::move(points), window);
}

PointPattern sim_thomas(const IntensitySpec& spec, const ThomasParams& tp,
                        const Window& window, std::uint64_t seed) {
  auto rng = make_rng(seed);
  const double bound = kBoundSafety * max_node_intensity(spec);
  const Window parents_window = window.expanded(kParentBufferSds * tp.gamma);

  std::poisson_distribution<long long> parent_count(tp.kappa * area(parents_window));
  std::uniform_real_distribution<double> px(parents_window.x_min(),
                                            parents_window.x_max());
  std::uniform_real_distribution<double> py(parents_window.y_min(),
                                            parents_window.y_max());
  // Dominating cluster: Poisson(bound / kappa) offspring with N(c, gamma^2 I)
  // displacements, thinned to rho(u) / bound.
  std::poisson_distribution<long long> offspring_count(bound / tp.kappa);
  std::normal_distribution<double> displacement(0.0, tp.gamma);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<Point> points;
  const long long n_parents = parent_count(rng);
  for (long long c = 0; c < n_parents; ++c) {
    const Point parent{px(rng), py(rng)};
    const long long n_off = offspring_count(rng);
    for (long long k = 0; k < n_off; ++k) {
      const double dx = displacement(rng);
      const double dy = displacement(rng);
      const double retain = unif(rng);
      const Point u{parent.x + dx, parent.y + dy};
      if (!window.contains(u)) continue;
      const double rho = predictor_intensity(spec, u);
      check_bound(rho, bound);
      if (retain * bound < rho) points.push_back(u);
    }
  }
  return PointPattern(std::move(points), window);
}

}  // namespace ppsel
