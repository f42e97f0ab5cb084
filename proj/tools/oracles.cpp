#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "ppsel/criteria.hpp"
#include "ppsel/likelihood.hpp"
#include "ppsel/rng.hpp"

namespace ppsel::oracle {

namespace {

double rel_err(double approx, double exact) {
  return std::abs(approx - exact) / std::max(std::abs(exact), 1.0);
}

CountMoments moments(std::vector<double> counts, double mu) {
  CountMoments m;
  m.mu = mu;
  m.replicates = counts.size();
  long double s = 0.0L;
  for (double c : counts) s += c;
  m.mean = static_cast<double>(s / counts.size());
  long double ss = 0.0L;
  for (double c : counts) ss += (c - m.mean) * (c - m.mean);
  m.var = counts.size() > 1 ? static_cast<double>(ss / (counts.size() - 1)) : 0.0;
  return m;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

IntensitySpec flat_spec(const Window& w, double mu) {
  auto cov = synth_covariates(1, 1, w, 11, 11);
  return IntensitySpec(mu / area(w), {0.0}, std::move(cov));
}

}  // namespace

double CountMoments::se() const {
  return std::sqrt(var / static_cast<double>(replicates));
}

DerivativeErrors derivative_check(std::uint64_t seed, std::size_t triples, double h) {
  DerivativeErrors out;
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  for (std::size_t t = 0; t < triples; ++t) {
    const double width = std::exp(std::log(0.5) + unif(rng) * std::log(2000.0));
    const Window w(0.0, width, 0.0, width * (0.3 + 0.7 * unif(rng)));
    const std::size_t p = 1 + static_cast<std::size_t>(unif(rng) * 5.0);
    auto cov = synth_covariates(rng(), p, w, 41, 21);
    std::vector<double> beta(p);
    for (auto& b : beta) b = 0.5 * normal(rng);
    const IntensitySpec spec(1.0, beta, cov);
    const double mu = 30.0 + 170.0 * unif(rng);
    const auto truth = spec.with_omega(calibrate_omega(spec, mu));
    auto pattern = sim_poisson(truth, w, rng());
    while (pattern.size() < 2) pattern = sim_poisson(truth, w, rng());

    const auto mask = static_cast<std::uint32_t>(unif(rng) * static_cast<double>(1u << p));
    const auto model = ModelSpec::from_mask(mask);
    const NodeDesign design(
        std::make_shared<const QuadratureScheme>(build_quadrature(pattern, 4 * pattern.size())),
        cov);
    const auto k = static_cast<Eigen::Index>(model.p_l());
    Eigen::VectorXd b(k);
    b(0) = std::log(static_cast<double>(pattern.size()) / area(w)) + 0.3 * normal(rng);
    for (Eigen::Index j = 1; j < k; ++j) b(j) = 0.5 * normal(rng);

    const Eigen::VectorXd s = score(design, model, b);
    const Eigen::MatrixXd sens = sensitivity(design, model, b);
    for (Eigen::Index j = 0; j < k; ++j) {
      Eigen::VectorXd up = b, dn = b;
      up(j) += h;
      dn(j) -= h;
      const double fd = (loglik(design, model, up) - loglik(design, model, dn)) / (2.0 * h);
      out.score_rel = std::max(out.score_rel, rel_err(fd, s(j)));
      const Eigen::VectorXd dscore =
          -(score(design, model, up) - score(design, model, dn)) / (2.0 * h);
      for (Eigen::Index i = 0; i < k; ++i) {
        out.hessian_rel = std::max(out.hessian_rel, rel_err(dscore(i), sens(i, j)));
      }
    }
    ++out.triples;
  }
  return out;
}

CountMoments poisson_counts(const IntensitySpec& spec, const Window& w,
                            std::size_t replicates, std::uint64_t seed) {
  std::vector<double> counts;
  counts.reserve(replicates);
  for (std::size_t r = 0; r < replicates; ++r) {
    counts.push_back(static_cast<double>(sim_poisson(spec, w, derive_seed(seed, r)).size()));
  }
  return moments(std::move(counts), spec.omega() * integrated_exp(spec));
}

CountMoments thomas_counts(const IntensitySpec& spec, const ThomasParams& tp,
                           const Window& w, std::size_t replicates,
                           std::uint64_t seed) {
  std::vector<double> counts;
  counts.reserve(replicates);
  for (std::size_t r = 0; r < replicates; ++r) {
    counts.push_back(
        static_cast<double>(sim_thomas(spec, tp, w, derive_seed(seed, r)).size()));
  }
  return moments(std::move(counts), spec.omega() * integrated_exp(spec));
}

std::vector<EvidenceRow> evidence_structure(const Window& w,
                                            const std::vector<double>& mus,
                                            std::size_t replicates,
                                            double prior_sd, std::uint64_t seed) {
  std::vector<EvidenceRow> rows;
  for (std::size_t k = 0; k < mus.size(); ++k) {
    const auto spec = flat_spec(w, mus[k]);
    EvidenceRow row{mus[k], 0.0, 0.0};
    std::size_t used = 0;
    for (std::size_t r = 0; used < replicates; ++r) {
      const auto pattern = sim_poisson(spec, w, derive_seed(seed + k, r));
      if (pattern.empty()) continue;
      const std::size_t m = std::max<std::size_t>(4, 4 * pattern.size());
      const auto fitted = fit(pattern, ModelSpec{}, spec.covariates(), m);
      const double ev = evidence_1d(pattern, spec.covariates(), prior_sd, {m});
      const double half_log_n = 0.5 * std::log(static_cast<double>(pattern.size()));
      row.residual += ev - (fitted.loglik - half_log_n);
      row.half_log_n += half_log_n;
      ++used;
    }
    row.residual /= static_cast<double>(used);
    row.half_log_n /= static_cast<double>(used);
    rows.push_back(row);
  }
  return rows;
}

double t2_covariogram(const Window& w, double rho, const ThomasParams& tp) {
  const double sigma = std::numbers::sqrt2 * tp.gamma;
  auto j = [sigma](double len) {
    // 2 int_0^L (L - t) phi(t) dt
    const double upper = std::min(len, 40.0 * sigma);
    const std::size_t n = 400000;
    const double dt = upper / static_cast<double>(n);
    long double s = 0.0L;
    for (std::size_t i = 0; i <= n; ++i) {
      const double t = dt * static_cast<double>(i);
      const double f = (len - t) * std::exp(-0.5 * t * t / (sigma * sigma)) /
                       (std::sqrt(2.0 * std::numbers::pi) * sigma);
      s += (i == 0 || i == n) ? 0.5L * f : f;
    }
    return 2.0 * static_cast<double>(s) * dt;
  };
  return rho * rho / tp.kappa * j(w.width()) * j(w.height());
}

double t2_brute_force(const Window& w, double rho, const ThomasParams& tp,
                      std::size_t nx, std::size_t ny, std::size_t sub) {
  const double dx = w.width() / static_cast<double>(nx);
  const double dy = w.height() / static_cast<double>(ny);
  const double sub_area = dx * dy / static_cast<double>(sub * sub);
  const double reach = 12.0 * tp.gamma;
  const auto gm1 = [&tp](double d2) {
    const double g2 = tp.gamma * tp.gamma;
    return std::exp(-d2 / (4.0 * g2)) / (4.0 * std::numbers::pi * g2 * tp.kappa);
  };
  // The pair sum depends on the two cells only through their offset, and each
  // offset (di, dj) occurs (nx - |di|)(ny - |dj|) times.
  const auto max_di = static_cast<long>(std::min<double>(nx - 1, std::ceil(reach / dx) + 1));
  const auto max_dj = static_cast<long>(std::min<double>(ny - 1, std::ceil(reach / dy) + 1));
  long double total = 0.0L;
  for (long di = -max_di; di <= max_di; ++di) {
    for (long dj = -max_dj; dj <= max_dj; ++dj) {
      long double pair = 0.0L;
      for (std::size_t a = 0; a < sub * sub; ++a) {
        const double ux = (static_cast<double>(a % sub) + 0.5) / static_cast<double>(sub) * dx;
        const double uy = (static_cast<double>(a / sub) + 0.5) / static_cast<double>(sub) * dy;
        for (std::size_t b = 0; b < sub * sub; ++b) {
          const double vx = static_cast<double>(di) * dx +
                            (static_cast<double>(b % sub) + 0.5) / static_cast<double>(sub) * dx;
          const double vy = static_cast<double>(dj) * dy +
                            (static_cast<double>(b / sub) + 0.5) / static_cast<double>(sub) * dy;
          pair += gm1((ux - vx) * (ux - vx) + (uy - vy) * (uy - vy));
        }
      }
      const double count = static_cast<double>(nx - static_cast<std::size_t>(std::labs(di))) *
                           static_cast<double>(ny - static_cast<std::size_t>(std::labs(dj)));
      total += count * pair;
    }
  }
  return rho * rho * static_cast<double>(total) * sub_area * sub_area;
}

T2Comparison t2_intercept_check(const Window& w, double mu, const ThomasParams& tp,
                                std::uint64_t seed) {
  const auto spec = flat_spec(w, mu);
  const auto pattern = sim_poisson(spec, w, seed);
  const ModelSpec intercept;
  const auto fitted = fit(pattern, intercept, spec.covariates(), 4 * pattern.size());
  T2Comparison c;
  c.rho_hat = std::exp(fitted.beta_hat(0));
  c.quadrature =
      t2_matrix(fitted, intercept, spec.covariates(), PcfModel::thomas(tp))(0, 0);
  c.covariogram = t2_covariogram(w, c.rho_hat, tp);
  c.brute_force = t2_brute_force(w, c.rho_hat, tp);
  return c;
}

std::vector<Check> run_suite(std::string_view suite, std::uint64_t seed) {
  const bool all = suite == "all";
  bool known = all;
  std::vector<Check> checks;

  if (all || suite == "gradient") {
    known = true;
    const auto d = derivative_check(seed, 50);
    checks.push_back({"score vs finite differences", d.score_rel < 1e-6,
                      "max rel err " + fmt(d.score_rel) + " over " +
                          std::to_string(d.triples) + " triples"});
    checks.push_back({"sensitivity vs finite differences", d.hessian_rel < 1e-6,
                      "max rel err " + fmt(d.hessian_rel)});
  }

  if (all || suite == "campbell") {
    known = true;
    const Window big(0.0, 1000.0, 0.0, 500.0);
    const auto cov = synth_covariates(1, 6, big);
    const IntensitySpec unit(1.0, {0.5, -0.25, 0.0, 0.0, 0.0, 0.0}, cov);
    for (double mu : {50.0, 200.0, 800.0}) {
      const auto spec = unit.with_omega(calibrate_omega(unit, mu));
      const auto m = poisson_counts(spec, big, 500, seed);
      const double tol = 3.0 * std::sqrt(mu / 500.0);
      checks.push_back({"poisson mean count, mu=" + fmt(mu), std::abs(m.mean - mu) < tol,
                        "mean " + fmt(m.mean) + ", tolerance " + fmt(tol)});
    }
    const Window small(0.0, 500.0, 0.0, 250.0);
    const IntensitySpec tunit(1.0, {2.0, -1.0, 0.0, 0.0, 0.0, 0.0},
                              synth_covariates(1, 6, small));
    const auto tspec = tunit.with_omega(calibrate_omega(tunit, 400.0));
    const auto t = thomas_counts(tspec, ThomasParams(4e-4, 5.0), small, 500, seed);
    checks.push_back({"thomas mean count, mu=400", std::abs(t.mean - 400.0) < 3.0 * t.se(),
                      "mean " + fmt(t.mean) + ", 3 se " + fmt(3.0 * t.se())});
    checks.push_back({"thomas overdispersion", t.var > 400.0,
                      "variance " + fmt(t.var)});
  }

  if (all || suite == "evidence") {
    known = true;
    const auto rows =
        evidence_structure(Window(0.0, 1.0, 0.0, 0.5), {50.0, 200.0, 800.0}, 20, 10.0, seed);
    double rmin = rows[0].residual, rmax = rmin, hmin = rows[0].half_log_n, hmax = hmin;
    for (const auto& r : rows) {
      rmin = std::min(rmin, r.residual);
      rmax = std::max(rmax, r.residual);
      hmin = std::min(hmin, r.half_log_n);
      hmax = std::max(hmax, r.half_log_n);
    }
    checks.push_back({"evidence residual bounded", rmax - rmin < 1.5,
                      "spread " + fmt(rmax - rmin)});
    checks.push_back({"half log N grows", hmax - hmin > 1.3, "spread " + fmt(hmax - hmin)});
  }

  if (all || suite == "t2") {
    known = true;
    const auto c = t2_intercept_check(Window(0.0, 500.0, 0.0, 250.0), 400.0,
                                      ThomasParams(4e-4, 5.0), seed);
    const double e1 = std::abs(c.quadrature - c.covariogram) / c.covariogram;
    const double e2 = std::abs(c.quadrature - c.brute_force) / c.brute_force;
    checks.push_back({"T2 vs covariogram", e1 < 0.02, "rel err " + fmt(e1)});
    checks.push_back({"T2 vs brute-force double sum", e2 < 0.02, "rel err " + fmt(e2)});
  }

  if (!known) {
    checks.push_back({"suite " + std::string(suite), false, "unknown suite"});
  }
  return checks;
}

void print_checks(std::ostream& out, const std::vector<Check>& checks) {
  for (const auto& c : checks) {
    out << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.detail << '\n';
  }
}

}  // namespace ppsel::oracle
