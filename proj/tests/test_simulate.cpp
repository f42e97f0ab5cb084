#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ppsel/error.hpp"
#include "ppsel/rng.hpp"
#include "ppsel/second_order.hpp"
#include "ppsel/simulate.hpp"

using namespace ppsel;

namespace {

const Window kBig(0, 1000, 0, 500);
const Window kSmall(0, 500, 0, 250);

CovariateSet constant_covariate(double c, const Window& w) {
  return CovariateSet({CovariateField("c", w, 2, 2, {c, c, c, c})});
}

// Integral of exp(beta . z) by midpoint rule on every lattice cell split
// sub x sub, using only the public covariate evaluation.
double midpoint_integral(const IntensitySpec& spec, std::size_t sub) {
  const auto& cov = spec.covariates();
  const Window& w = cov.window();
  const std::size_t nx = (cov.nx() - 1) * sub, ny = (cov.ny() - 1) * sub;
  const double hx = w.width() / static_cast<double>(nx);
  const double hy = w.height() / static_cast<double>(ny);
  std::vector<double> z(cov.size());
  long double s = 0.0L;
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      cov.eval_all({w.x_min() + (ix + 0.5) * hx, w.y_min() + (iy + 0.5) * hy}, z);
      double eta = 0.0;
      for (std::size_t j = 0; j < z.size(); ++j) eta += spec.beta()[j] * z[j];
      s += std::exp(eta);
    }
  }
  return static_cast<double>(s) * hx * hy;
}

}  // namespace

TEST(IntensityAt, Examples) {
  const auto cov = synth_covariates(1, 2, kBig, 21, 11);
  EXPECT_DOUBLE_EQ(intensity_at(IntensitySpec(0.3, {0.0, 0.0}, cov), {10, 20}), 0.3);

  // z_1 = 0 at a point where the first field crosses zero.
  const IntensitySpec spec(2.0, {0.5, 0.0}, cov);
  const auto& f = cov[0];
  std::size_t ix = 0;
  while (ix + 1 < f.nx() && (f.node(ix, 0) > 0) == (f.node(ix + 1, 0) > 0)) ++ix;
  ASSERT_LT(ix + 1, f.nx());
  const double h = 1000.0 / static_cast<double>(f.nx() - 1);
  const double t = f.node(ix, 0) / (f.node(ix, 0) - f.node(ix + 1, 0));
  const Point u{(static_cast<double>(ix) + t) * h, 0.0};
  EXPECT_NEAR(cov[0].eval(u), 0.0, 1e-12);
  EXPECT_NEAR(intensity_at(spec, u), 2.0, 1e-11);

  const IntensitySpec ln2(1.0, {1.0}, constant_covariate(std::log(2.0), kBig));
  EXPECT_NEAR(intensity_at(ln2, {500, 250}), 2.0, 1e-15);
  EXPECT_THROW(intensity_at(ln2, {1001, 0}), OutOfWindow);
}

TEST(IntensitySpec, Validation) {
  const auto cov = synth_covariates(1, 2, kBig, 21, 11);
  EXPECT_THROW(IntensitySpec(1.0, {1.0}, cov), DimensionMismatch);
  EXPECT_THROW(IntensitySpec(0.0, {1.0, 0.0}, cov), InvalidArgument);
  EXPECT_EQ(IntensitySpec(1.0, {0.0, -1.0}, cov).informative_set(),
            (std::vector<std::size_t>{1}));
  EXPECT_THROW(ThomasParams(0.0, 1.0), InvalidArgument);
  EXPECT_THROW(ThomasParams(1.0, -1.0), InvalidArgument);
}

TEST(CalibrateOmega, FlatIntensity) {
  const IntensitySpec spec(1.0, std::vector<double>(6, 0.0), synth_covariates(1, 6, kBig));
  EXPECT_NEAR(calibrate_omega(spec, 800.0), 0.0016, 1e-15);
}

TEST(CalibrateOmega, LinearInTarget) {
  const IntensitySpec spec(1.0, {0.5, -0.25, 0, 0, 0, 0}, synth_covariates(1, 6, kBig));
  EXPECT_NEAR(calibrate_omega(spec, 400.0), 2.0 * calibrate_omega(spec, 200.0), 1e-18);
}

TEST(CalibrateOmega, MatchesFineMidpointIntegral) {
  const IntensitySpec unit(1.0, {0.5, -0.25, 0, 0, 0, 0}, synth_covariates(1, 6, kBig));
  const double omega = calibrate_omega(unit, 200.0);
  const double achieved = omega * midpoint_integral(unit, 16);
  EXPECT_NEAR(achieved, 200.0, 1e-4);
}

TEST(SimPoisson, Deterministic) {
  const IntensitySpec unit(1.0, {0.5, -0.25}, synth_covariates(1, 2, kSmall));
  const auto spec = unit.with_omega(calibrate_omega(unit, 300.0));
  const auto a = sim_poisson(spec, kSmall, 42);
  const auto b = sim_poisson(spec, kSmall, 42);
  EXPECT_EQ(a.points(), b.points());
  EXPECT_NE(a.points(), sim_poisson(spec, kSmall, 43).points());
  EXPECT_EQ(a.window(), kSmall);
}

TEST(SimPoisson, VanishingIntensity) {
  const IntensitySpec unit(1.0, {0.0}, constant_covariate(0.0, kSmall));
  const auto spec = unit.with_omega(calibrate_omega(unit, 0.001));
  double total = 0.0;
  for (std::uint64_t s = 0; s < 1000; ++s) total += sim_poisson(spec, kSmall, s).size();
  EXPECT_LT(total / 1000.0, 0.01);
}

TEST(SimPoisson, MeanAndVarianceOfCount) {
  const double mu = 200.0;
  const std::size_t r = 500;
  const IntensitySpec unit(1.0, std::vector<double>(6, 0.0), synth_covariates(1, 6, kBig));
  const auto m = oracle::poisson_counts(unit.with_omega(calibrate_omega(unit, mu)), kBig, r, 17);
  EXPECT_NEAR(m.mean, mu, 3.0 * std::sqrt(mu / r));
  // sd of the sample variance of Poisson(mu) counts is about sqrt((2 mu^2 + mu) / r)
  EXPECT_NEAR(m.var, mu, 3.0 * std::sqrt((2.0 * mu * mu + mu) / r));
}

TEST(SimPoisson, CampbellWithCovariates) {
  const IntensitySpec unit(1.0, {0.5, -0.25, 0, 0, 0, 0}, synth_covariates(1, 6, kBig));
  const auto m = oracle::poisson_counts(unit.with_omega(calibrate_omega(unit, 800.0)), kBig,
                                        500, 19);
  EXPECT_NEAR(m.mean, 800.0, 3.0 * std::sqrt(800.0 / 500.0));
}

TEST(SimThomas, Deterministic) {
  const IntensitySpec unit(1.0, {2.0, -1.0}, synth_covariates(1, 2, kSmall));
  const auto spec = unit.with_omega(calibrate_omega(unit, 400.0));
  const ThomasParams tp(4e-4, 5.0);
  EXPECT_EQ(sim_thomas(spec, tp, kSmall, 7).points(), sim_thomas(spec, tp, kSmall, 7).points());
}

TEST(SimThomas, ExpectedParentCount) {
  EXPECT_DOUBLE_EQ(4e-4 * area(kSmall), 50.0);
}

TEST(SimThomas, MeanCountAndOverdispersion) {
  const IntensitySpec unit(1.0, {0.5, -0.25}, synth_covariates(1, 2, kSmall));
  const auto spec = unit.with_omega(calibrate_omega(unit, 400.0));
  const auto m = oracle::thomas_counts(spec, ThomasParams(4e-4, 5.0), kSmall, 500, 23);
  EXPECT_NEAR(m.mean, 400.0, 3.0 * m.se());
  // Overdispersed well beyond the 3-sigma band of a Poisson sample variance.
  EXPECT_GT(m.var, 400.0 + 3.0 * std::sqrt((2.0 * 400.0 * 400.0 + 400.0) / 500.0));
}

TEST(SimThomas, DenseParentsLookPoisson) {
  // kappa 10^4 times the study value: clusters overlap and g - 1 vanishes.
  const IntensitySpec unit(1.0, {0.0}, constant_covariate(0.0, kSmall));
  const auto spec = unit.with_omega(calibrate_omega(unit, 800.0));
  const ThomasParams tp(4.0, 5.0);
  const std::vector<double> r{0.0, 2.5, 5.0};
  const std::size_t reps = 60;
  std::vector<double> k;
  for (std::size_t i = 0; i < reps; ++i) {
    const auto p = sim_thomas(spec, tp, kSmall, derive_seed(5, i));
    const std::vector<double> lambda(p.size(), spec.omega());
    k.push_back(k_inhom(p, lambda, r).k[2]);
  }
  double mean = 0.0, sq = 0.0;
  for (double v : k) mean += v;
  mean /= reps;
  for (double v : k) sq += (v - mean) * (v - mean);
  const double se = std::sqrt(sq / (reps - 1) / reps);
  EXPECT_NEAR(mean, std::numbers::pi * 25.0, 3.0 * se);
}
