#include "ppsel/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ppsel/error.hpp"

namespace ppsel {

namespace {

// Antiderivative of Phi(t / sigma): t Phi(t / sigma) + sigma^2 phi_sigma(t).
double gauss_cdf_antiderivative(double t, double sigma) {
  const double z = t / sigma;
  return t * 0.5 * std::erfc(-z / std::numbers::sqrt2) +
         sigma * std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

// Mean of phi_sigma(x - y) over x in [0, h], y in [d h, (d + 1) h].
double cell_pair_kernel(std::size_t d, double h, double sigma) {
  const auto g = [sigma](double t) { return gauss_cdf_antiderivative(t, sigma); };
  double integral;
  if (d == 0) {
    // G(h) - 2 G(0) + G(-h) with G(h) = G(-h) + h.
    integral = 2.0 * g(-h) + h - 2.0 * g(0.0);
  } else {
    const double dd = static_cast<double>(d);
    integral = g((1.0 - dd) * h) - 2.0 * g(-dd * h) + g(-(dd + 1.0) * h);
  }
  return std::max(0.0, integral) / (h * h);
}

std::vector<double> axis_kernel(std::size_t n_cells, double h, double sigma,
                                double r_cut) {
  const auto reach = static_cast<std::size_t>(std::floor(r_cut / h)) + 1;
  const std::size_t n = std::min(n_cells, reach + 1);
  std::vector<double> k(n);
  for (std::size_t d = 0; d < n; ++d) k[d] = cell_pair_kernel(d, h, sigma);
  return k;
}

}  // namespace

Eigen::MatrixXd t2_matrix(const FitResult& fit, const NodeDesign& design,
                          const PcfModel& pcf) {
  const auto p_l = static_cast<Eigen::Index>(fit.model.p_l());
  Eigen::MatrixXd t2 = Eigen::MatrixXd::Zero(p_l, p_l);
  if (pcf.kind == PcfKind::poisson) return t2;

  const auto& scheme = design.scheme();
  const Eigen::MatrixXd x = design.model_matrix(fit.model);
  const Eigen::VectorXd w_rho =
      design.weights().array() * (x * fit.beta_hat).array().exp();

  const std::size_t nx = scheme.nx();
  const std::size_t ny = scheme.ny();
  // Row c of f is the quadrature integral of z * rho over cell c.
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nx * ny), p_l);
  const auto& nodes = scheme.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    f.row(static_cast<Eigen::Index>(nodes[i].cell)) += w_rho(ii) * x.row(ii);
  }

  // g - 1 = N(0, 2 gamma^2 I) density / kappa.
  const double gamma = pcf.params.gamma;
  const double sigma = std::numbers::sqrt2 * gamma;
  const double r_cut = 2.0 * gamma * std::sqrt(std::log(1e6));
  const auto kx = axis_kernel(nx, scheme.cell_width(), sigma, r_cut);
  const auto ky = axis_kernel(ny, scheme.cell_height(), sigma, r_cut);

  auto at = [nx](std::size_t ix, std::size_t iy) {
    return static_cast<Eigen::Index>(iy * nx + ix);
  };
  Eigen::MatrixXd tmp = Eigen::MatrixXd::Zero(f.rows(), p_l);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      auto row = tmp.row(at(ix, iy));
      row += kx[0] * f.row(at(ix, iy));
      for (std::size_t d = 1; d < kx.size(); ++d) {
        if (ix >= d) row += kx[d] * f.row(at(ix - d, iy));
        if (ix + d < nx) row += kx[d] * f.row(at(ix + d, iy));
      }
    }
  }
  Eigen::MatrixXd conv = Eigen::MatrixXd::Zero(f.rows(), p_l);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      auto row = conv.row(at(ix, iy));
      row += ky[0] * tmp.row(at(ix, iy));
      for (std::size_t d = 1; d < ky.size(); ++d) {
        if (iy >= d) row += ky[d] * tmp.row(at(ix, iy - d));
        if (iy + d < ny) row += ky[d] * tmp.row(at(ix, iy + d));
      }
    }
  }
  t2 = f.transpose() * conv / pcf.params.kappa;
  return 0.5 * (t2 + t2.transpose());
}

Eigen::MatrixXd t2_matrix(const FitResult& fit, const ModelSpec& model,
                          const CovariateSet& cov, const PcfModel& pcf) {
  if (!(model == fit.model)) {
    throw InvalidArgument("fit belongs to model " + fit.model.label() +
                          ", not " + model.label());
  }
  if (!fit.scheme) throw InvalidArgument("fit carries no quadrature scheme");
  return t2_matrix(fit, NodeDesign(fit.scheme, cov), pcf);
}

double p_star(const FitResult& fit, const Eigen::MatrixXd& t2) {
  const auto& s = fit.sensitivity;
  if (s.rows() != t2.rows() || s.cols() != t2.cols()) {
    throw DimensionMismatch("T2 and sensitivity shapes differ");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s, Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > 1e-10 * eig.eigenvalues().maxCoeff())) {
    throw SingularSensitivity("cannot solve against the sensitivity matrix");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(s);
  return static_cast<double>(fit.model.p_l()) + llt.solve(t2).trace();
}

CriteriaReport criteria(const FitResult& fit, double p_star, std::size_t n_points,
                        double area, std::size_t m) {
  if (n_points < 1) throw InvalidArgument("criteria need at least one point");
  CriteriaReport r;
  r.model = fit.model;
  r.loglik = fit.loglik;
  r.p_l = fit.model.p_l();
  r.p_star = p_star;
  r.pi_values.n = static_cast<double>(n_points);
  r.pi_values.w = area;
  r.pi_values.nm = static_cast<double>(n_points + m);

  const double p = static_cast<double>(r.p_l);
  const double log_n = std::log(r.pi_values.n);
  r.aic = -2.0 * r.loglik + 2.0 * p;
  r.bic_n = -2.0 * r.loglik + p * log_n;
  r.bic_w = -2.0 * r.loglik + p * std::log(r.pi_values.w);
  r.bic_nm = -2.0 * r.loglik + p * std::log(r.pi_values.nm);
  r.cic = -2.0 * r.loglik + 2.0 * p_star;
  r.cbic = -2.0 * r.loglik + p_star * log_n;
  return r;
}

double evidence_1d(const PointPattern& p, const CovariateSet& cov,
                   double prior_sd, const EvidenceOptions& options) {
  if (p.empty()) throw EmptyPattern("evidence needs at least one point");
  if (!(prior_sd > 0.0)) throw InvalidArgument("prior_sd must be positive");
  const std::size_t m = options.m ? options.m : std::max<std::size_t>(4, 4 * p.size());
  const NodeDesign design(std::make_shared<const QuadratureScheme>(build_quadrature(p, m)),
                          cov);
  const ModelSpec intercept;
  const double n = static_cast<double>(p.size());
  const double total_weight = design.weights().sum();
  const double var = prior_sd * prior_sd;

  auto log_prior = [&](double b) {
    return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * b * b / var;
  };
  auto log_post = [&](double b) {
    return loglik(design, intercept, Eigen::VectorXd::Constant(1, b)) + log_prior(b);
  };

  // Posterior mode by Newton on the concave log posterior.
  double mode = std::log(n / total_weight);
  for (int it = 0; it < 200; ++it) {
    const double e = total_weight * std::exp(mode);
    const double grad = n - e - mode / var;
    const double curv = e + 1.0 / var;
    double step = grad / curv;
    // Keep the exponential in range while far from the mode.
    step = std::clamp(step, -1.0, 1.0);
    mode += step;
    if (std::abs(step) < 1e-14 * std::max(1.0, std::abs(mode))) break;
  }
  const double post_sd = 1.0 / std::sqrt(total_weight * std::exp(mode) + 1.0 / var);
  const double peak = log_post(mode);
  // log posterior minus its peak, in the offset d = b - mode; for the
  // intercept-only model l(b) = N b - |W| e^b, so no large terms cancel.
  const double e_mode = total_weight * std::exp(mode);
  auto rel_log_post = [&](double d) {
    return n * d - e_mode * std::expm1(d) - d * (2.0 * mode + d) / (2.0 * var);
  };

  double error = 0.0;
  const double half = options.half_width_sds * post_sd;
  const double integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      [&](double d) { return std::exp(rel_log_post(d)); }, -half, half, 15, 1e-12, &error);
  if (!(integral > 0.0) || !std::isfinite(integral) ||
      error / integral > options.max_log_error) {
    throw QuadratureFailure("evidence quadrature did not reach the error bound");
  }
  return peak + std::log(integral);
}

}  // namespace ppsel
