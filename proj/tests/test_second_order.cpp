#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "ppsel/criteria.hpp"
#include "ppsel/error.hpp"
#include "ppsel/likelihood.hpp"
#include "ppsel/rng.hpp"
#include "ppsel/second_order.hpp"

using namespace ppsel;

namespace {

const Window kSmall(0, 500, 0, 250);
const Window kBig(0, 1000, 0, 500);
const ThomasParams kStudy(4e-4, 5.0);

KEstimate exact_k(const ThomasParams& tp, double r_max) {
  KEstimate k;
  k.r = default_r_grid(r_max);
  for (double r : k.r) k.k.push_back(k_theoretical(tp, r));
  return k;
}

IntensitySpec flat_spec(const Window& w, double mu) {
  return IntensitySpec(mu / area(w), {0.0}, synth_covariates(1, 1, w, 11, 11));
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST(Pcf, Poisson) {
  for (double r : {0.0, 0.1, 5.0, 1e6}) EXPECT_EQ(pcf(PcfModel::poisson(), r), 1.0);
}

TEST(Pcf, ThomasAtZeroMatchesKernelSelfConvolution) {
  // (k * k)(0) = int k(w)^2 dw for the N(0, gamma^2 I) density, by radial
  // quadrature.
  const double g = 5.0;
  auto k2 = [g](double r) {
    const double k = std::exp(-r * r / (2 * g * g)) / (2 * std::numbers::pi * g * g);
    return 2 * std::numbers::pi * r * k * k;
  };
  const double conv0 =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(k2, 0.0, 20 * g, 15, 1e-14);
  const double expected = 1.0 + conv0 / 4e-4;
  EXPECT_NEAR(pcf(PcfModel::thomas(kStudy), 0.0), expected, 1e-9);
  EXPECT_NEAR(pcf(PcfModel::thomas(kStudy), 0.0), 8.957747, 1e-6);
}

TEST(Pcf, ThomasTailAndMonotonicity) {
  const auto m = PcfModel::thomas(kStudy);
  EXPECT_NEAR(pcf(m, 10.01 * 5.0), 1.0, 1e-12);
  double prev = pcf(m, 0.0);
  for (double r = 0.25; r < 40.0; r += 0.25) {
    const double g = pcf(m, r);
    EXPECT_GT(g, 1.0);
    EXPECT_LT(g, prev);
    prev = g;
  }
  for (double r : {0.0, 3.0, 9.0}) {
    EXPECT_GT(pcf(m, r), pcf(PcfModel::thomas(ThomasParams(8e-4, 5.0)), r));
  }
}

TEST(KTheoretical, Examples) {
  EXPECT_EQ(k_theoretical(kStudy, 0.0), 0.0);
  EXPECT_NEAR(k_theoretical(kStudy, 500.0), std::numbers::pi * 250000.0 + 1.0 / 4e-4, 1e-6);
  EXPECT_NEAR(k_theoretical(kStudy, 10.0),
              std::numbers::pi * 100 + (1 - std::exp(-1.0)) / 4e-4, 1e-9);
}

TEST(KTheoretical, RadialIntegralOfPcf) {
  for (const auto& tp : {kStudy, ThomasParams(4e-4, 15.0), ThomasParams(0.02, 1.3)}) {
    const auto m = PcfModel::thomas(tp);
    auto f = [&m](double r) { return 2 * std::numbers::pi * r * pcf(m, r); };
    double prev = -1.0;
    for (double frac : {0.1, 0.5, 1.0, 2.0, 4.0, 10.0}) {
      const double r = frac * tp.gamma;
      const double num =
          boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, r, 15, 1e-14);
      const double k = k_theoretical(tp, r);
      EXPECT_NEAR(num, k, 1e-8 * k);
      EXPECT_GT(k, prev);
      prev = k;
    }
  }
}

TEST(KInhom, TwoPoints) {
  const Window w(0, 12, 0, 12);
  const PointPattern p({{2, 3}, {5, 7}}, w);  // distance 5
  const std::vector<double> lambda{0.5, 2.0};
  const std::vector<double> r{0.0, 4.9, 4.999, 5.0, 5.0001};
  const auto k = k_inhom(p, lambda, r);
  EXPECT_EQ(k.k[0], 0.0);
  EXPECT_EQ(k.k[1], 0.0);
  EXPECT_EQ(k.k[2], 0.0);
  const double jump = 2.0 / (0.5 * 2.0 * translate_overlap_area(w, 3, 4));
  EXPECT_NEAR(k.k[3], jump, 1e-14);
  EXPECT_NEAR(k.k[4], jump, 1e-14);
}

TEST(KInhom, Errors) {
  const Window w(0, 10, 0, 10);
  const std::vector<double> r{0.0, 1.0};
  EXPECT_THROW(k_inhom(PointPattern({{1, 1}}, w), std::vector<double>{1.0}, r), EmptyPattern);
  const PointPattern p({{1, 1}, {2, 2}}, w);
  EXPECT_THROW(k_inhom(p, std::vector<double>{1.0, 1.0}, std::vector<double>{0.0, 6.0}),
               InvalidArgument);
  EXPECT_THROW(k_inhom(p, std::vector<double>{1.0}, r), DimensionMismatch);
}

TEST(KInhom, RelabelingInvariantAndMonotone) {
  const auto spec = flat_spec(kSmall, 400.0);
  const auto p = sim_thomas(spec, kStudy, kSmall, 3);
  auto pts = p.points();
  std::vector<double> lambda;
  for (const auto& u : pts) lambda.push_back(0.002 + 1e-5 * u.x);
  const auto r = default_r_grid(20.0);
  const auto a = k_inhom(p, lambda, r);

  std::mt19937_64 rng(1);
  std::vector<std::size_t> perm(pts.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Point> q;
  std::vector<double> lq;
  for (auto i : perm) {
    q.push_back(pts[i]);
    lq.push_back(lambda[i]);
  }
  const auto b = k_inhom(PointPattern(q, kSmall), lq, r);
  EXPECT_EQ(a.k[0], 0.0);
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_NEAR(a.k[i], b.k[i], 1e-12 * std::max(1.0, a.k[i]));
    if (i) EXPECT_GE(a.k[i], a.k[i - 1]);
  }

  const auto c = k_inhom(p, [](Point u) { return 0.002 + 1e-5 * u.x; }, r);
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_EQ(a.k[i], c.k[i]);
}

TEST(KInhom, PoissonMeanIsPiRSquared) {
  const auto spec = flat_spec(kSmall, 800.0);
  const std::vector<double> r{0.0, 5.0, 10.0, 20.0};
  const std::size_t reps = 200;
  std::vector<std::vector<double>> vals(r.size());
  for (std::size_t i = 0; i < reps; ++i) {
    const auto p = sim_poisson(spec, kSmall, derive_seed(41, i));
    const auto k = k_inhom(p, std::vector<double>(p.size(), spec.omega()), r);
    for (std::size_t j = 1; j < r.size(); ++j) vals[j].push_back(k.k[j]);
  }
  for (std::size_t j = 1; j < r.size(); ++j) {
    double m = 0.0, s = 0.0;
    for (double v : vals[j]) m += v;
    m /= reps;
    for (double v : vals[j]) s += (v - m) * (v - m);
    const double se = std::sqrt(s / (reps - 1) / reps);
    EXPECT_NEAR(m, std::numbers::pi * r[j] * r[j], 3.0 * se) << "r = " << r[j];
  }
}

TEST(MinContrast, RecoversExactModel) {
  for (const auto& [tp, r_max] : {std::pair{kStudy, 20.0}, std::pair{ThomasParams(4e-4, 15.0), 50.0},
                                  std::pair{ThomasParams(2e-3, 3.0), 20.0}}) {
    const auto est = min_contrast(exact_k(tp, r_max), r_max);
    EXPECT_NEAR(est.kappa, tp.kappa, 1e-4 * tp.kappa);
    EXPECT_NEAR(est.gamma, tp.gamma, 1e-4 * tp.gamma);
    EXPECT_LT(contrast(exact_k(tp, r_max), r_max, est), 1e-12);
  }
}

TEST(MinContrast, ContrastIsZeroAtTruthAndPositiveElsewhere) {
  const auto k = exact_k(kStudy, 20.0);
  EXPECT_EQ(contrast(k, 20.0, kStudy), 0.0);
  EXPECT_GT(contrast(k, 20.0, ThomasParams(5e-4, 5.0)), 0.0);
  EXPECT_GT(contrast(k, 20.0, ThomasParams(4e-4, 6.0)), 0.0);
}

TEST(MinContrast, SimulatedGammaMedianWithin30Percent) {
  const IntensitySpec unit(1.0, {2.0, -1.0, 0, 0, 0, 0}, synth_covariates(1, 6, kBig));
  const auto spec = unit.with_omega(calibrate_omega(unit, 1600.0));
  const auto r = default_r_grid(20.0);
  std::vector<double> gammas;
  for (std::size_t i = 0; i < 200; ++i) {
    const auto p = sim_thomas(spec, kStudy, kBig, derive_seed(43, i));
    std::vector<double> lambda;
    for (const auto& u : p.points()) lambda.push_back(intensity_at(spec, u));
    gammas.push_back(min_contrast(k_inhom(p, lambda, r), 20.0).gamma);
  }
  EXPECT_NEAR(median(gammas), 5.0, 1.5);
}

TEST(MinContrast, PoissonDataGiveSmallCorrection) {
  // Without clustering the fitted g - 1 carries little mass, so T2 adds
  // little to the intercept-only model's degrees of freedom.
  const auto spec = flat_spec(kSmall, 400.0);
  const auto r = default_r_grid(20.0);
  std::vector<double> extra, clustered;
  for (std::size_t i = 0; i < 50; ++i) {
    const auto p = sim_poisson(spec, kSmall, derive_seed(47, i));
    const auto f = fit(p, ModelSpec(), spec.covariates(), 4 * p.size());
    const auto tp =
        min_contrast(k_inhom(p, std::vector<double>(p.size(), std::exp(f.beta_hat(0))), r), 20.0);
    const auto t2 = t2_matrix(f, ModelSpec(), spec.covariates(), PcfModel::thomas(tp));
    extra.push_back(p_star(f, t2) - 1.0);
    // The same pattern's quantity under the study's true clustering.
    clustered.push_back(
        p_star(f, t2_matrix(f, ModelSpec(), spec.covariates(), PcfModel::thomas(kStudy))) - 1.0);
  }
  EXPECT_LT(std::abs(median(extra)), 0.1 * median(clustered));
}

TEST(KCsv, Header) {
  std::ostringstream out;
  write_k_csv(out, exact_k(kStudy, 20.0));
  const auto s = out.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "r,k_hat");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 513);
}

TEST(RGrid, Default) {
  const auto r = default_r_grid(20.0);
  ASSERT_EQ(r.size(), 512u);
  EXPECT_EQ(r.front(), 0.0);
  EXPECT_EQ(r.back(), 20.0);
}
