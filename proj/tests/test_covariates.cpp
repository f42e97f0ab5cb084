#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "ppsel/covariates.hpp"
#include "ppsel/error.hpp"

using namespace ppsel;

namespace {

CovariateField grid(std::size_t nx, std::size_t ny, std::vector<double> v,
                    Window w = Window(0, 1, 0, 1)) {
  return CovariateField("z", w, nx, ny, std::move(v));
}

}  // namespace

TEST(CovariateField, ConstantGrid) {
  const auto f = grid(3, 2, std::vector<double>(6, 2.5));
  EXPECT_DOUBLE_EQ(f.eval({0.3, 0.7}), 2.5);
  EXPECT_DOUBLE_EQ(f.eval({1.0, 1.0}), 2.5);
}

TEST(CovariateField, ExactAtNodes) {
  const Window w(0, 4, 0, 2);
  std::vector<double> v(5 * 3);
  std::iota(v.begin(), v.end(), 1.0);
  for (auto& x : v) x = std::sin(x);
  const auto f = grid(5, 3, v, w);
  for (std::size_t iy = 0; iy < 3; ++iy) {
    for (std::size_t ix = 0; ix < 5; ++ix) {
      EXPECT_EQ(f.eval({static_cast<double>(ix), static_cast<double>(iy)}), f.node(ix, iy));
    }
  }
}

TEST(CovariateField, BilinearMidpoint) {
  const auto f = grid(2, 2, {0, 1, 0, 1});
  EXPECT_DOUBLE_EQ(f.eval({0.5, 0.5}), 0.5);
  EXPECT_DOUBLE_EQ(f.eval({0.25, 0.9}), 0.25);
}

TEST(CovariateField, OutsideThrows) {
  const auto f = grid(2, 2, {0, 1, 0, 1});
  EXPECT_THROW(f.eval({1.01, 0.5}), OutOfWindow);
  EXPECT_THROW(f.eval({0.5, -0.01}), OutOfWindow);
}

TEST(CovariateField, InvalidShapes) {
  EXPECT_THROW(grid(1, 3, {1, 2, 3}), DimensionError);
  EXPECT_THROW(grid(2, 2, {1, 2, 3}), DimensionError);
  EXPECT_THROW(grid(2, 2, {1, 2, 3, NAN}), InvalidArgument);
}

TEST(CovariateField, ContinuousAcrossCellEdges) {
  const auto cov = synth_covariates(4, 1, Window(0, 10, 0, 5), 21, 11);
  const auto& f = cov[0];
  for (std::size_t iy = 0; iy + 1 < f.ny(); ++iy) {
    for (std::size_t ix = 1; ix + 1 < f.nx(); ++ix) {
      for (double t : {0.0, 0.3, 0.77}) {
        const double left = interpolate(f, {ix - 1, iy, 1.0, t});
        const double right = interpolate(f, {ix, iy, 0.0, t});
        EXPECT_NEAR(left, right, 1e-12);
      }
    }
  }
}

TEST(Standardize, TwoValues) {
  const CovariateSet s({grid(2, 2, {1, 3, 1, 3})});
  const auto t = standardize(s);
  EXPECT_TRUE(t.standardized());
  EXPECT_EQ(t[0].values(), (std::vector<double>{-1, 1, -1, 1}));
}

TEST(Standardize, Idempotent) {
  const auto s = synth_covariates(9, 3, Window(0, 2, 0, 1), 31, 17);
  const auto t = standardize(s);
  for (std::size_t j = 0; j < s.size(); ++j) {
    for (std::size_t i = 0; i < s[j].values().size(); ++i) {
      EXPECT_NEAR(t[j].values()[i], s[j].values()[i], 1e-12);
    }
  }
}

TEST(Standardize, ConstantFieldThrows) {
  const CovariateSet s({grid(2, 2, {1, 3, 1, 3}), grid(2, 2, {4, 4, 4, 4})});
  EXPECT_THROW(standardize(s), DegenerateCovariate);
}

TEST(Standardize, NodeEvaluationReproducesGridMoments) {
  const auto s = synth_covariates(2, 2, Window(0, 1000, 0, 500));
  for (const auto& f : s.fields()) {
    double sum = 0.0, sq = 0.0;
    const double hx = 1000.0 / static_cast<double>(f.nx() - 1);
    const double hy = 500.0 / static_cast<double>(f.ny() - 1);
    for (std::size_t iy = 0; iy < f.ny(); ++iy) {
      for (std::size_t ix = 0; ix < f.nx(); ++ix) {
        const double v = f.eval({std::min(1000.0, ix * hx), std::min(500.0, iy * hy)});
        sum += v;
        sq += v * v;
      }
    }
    const double n = static_cast<double>(f.nx() * f.ny());
    EXPECT_NEAR(sum / n, 0.0, 1e-6);
    EXPECT_NEAR(std::sqrt(sq / n - (sum / n) * (sum / n)), 1.0, 1e-6);
  }
}

TEST(Synth, DeterministicAndStandardized) {
  const Window w(0, 1000, 0, 500);
  const auto a = synth_covariates(1, 6, w);
  const auto b = synth_covariates(1, 6, w);
  ASSERT_EQ(a.size(), 6u);
  EXPECT_TRUE(a.standardized());
  for (std::size_t j = 0; j < 6; ++j) {
    EXPECT_EQ(a[j].values(), b[j].values());
    EXPECT_EQ(a[j].nx(), 201u);
    EXPECT_EQ(a[j].ny(), 101u);
    EXPECT_NEAR(a[j].grid_mean(), 0.0, 1e-10);
    EXPECT_NEAR(a[j].grid_sd(), 1.0, 1e-10);
  }
  const auto c = synth_covariates(2, 6, w);
  EXPECT_NE(a[0].values(), c[0].values());
}

TEST(Synth, PairwiseCorrelationBelowBound) {
  const auto s = synth_covariates(1, 6, Window(0, 1000, 0, 500));
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = i + 1; j < 6; ++j) {
      EXPECT_LT(std::abs(grid_correlation(s[i], s[j])), 0.9) << i << "," << j;
    }
  }
}

TEST(Synth, RescalingKeepsRelativeValues) {
  const Window a(0, 1, 0, 0.5), b(0, 1000, 0, 500);
  const auto sa = synth_covariates(7, 3, a);
  const auto sb = synth_covariates(7, 3, b);
  const auto sr = sa.rescaled(b);
  for (std::size_t j = 0; j < 3; ++j) {
    for (const Point s : {Point{0.1, 0.2}, Point{0.5, 0.5}, Point{0.93, 0.71}}) {
      const double va = sa[j].eval(a.from_unit(s));
      EXPECT_NEAR(va, sb[j].eval(b.from_unit(s)), 1e-12);
      EXPECT_NEAR(va, sr[j].eval(b.from_unit(s)), 1e-12);
    }
  }
}

TEST(CovariateSet, MismatchedFieldsThrow) {
  EXPECT_THROW(CovariateSet({grid(2, 2, {1, 2, 3, 4}), grid(3, 2, {1, 2, 3, 4, 5, 6})}),
               DimensionMismatch);
  EXPECT_THROW(CovariateSet(std::vector<CovariateField>{}), InvalidArgument);
}

TEST(LoadGrid, Examples) {
  const Window w(0, 1, 0, 1);
  std::istringstream ok("0,1\n0,1\n");
  const auto f = parse_grid(ok, w);
  EXPECT_EQ(f.nx(), 2u);
  EXPECT_EQ(f.ny(), 2u);
  EXPECT_DOUBLE_EQ(f.eval({0.5, 0.5}), 0.5);

  std::istringstream ragged("0,1\n0,1,2\n");
  EXPECT_THROW(parse_grid(ragged, w), ParseError);
  std::istringstream row("0,1,2,3,4\n");
  EXPECT_THROW(parse_grid(row, w), DimensionError);
  std::istringstream junk("0,1\n0,x\n");
  EXPECT_THROW(parse_grid(junk, w), ParseError);
}

TEST(LoadGrid, RowsRunAlongY) {
  const auto path = std::filesystem::temp_directory_path() / "ppsel_grid_test.csv";
  {
    std::ofstream out(path);
    out << "0,0,0\n1,1,1\n";
  }
  const auto f = load_grid(path, Window(0, 2, 0, 1), "elev");
  std::filesystem::remove(path);
  EXPECT_EQ(f.name(), "elev");
  EXPECT_EQ(f.nx(), 3u);
  EXPECT_EQ(f.ny(), 2u);
  EXPECT_DOUBLE_EQ(f.eval({1.3, 0.25}), 0.25);
  EXPECT_THROW(load_grid("/nonexistent/grid.csv", Window(0, 1, 0, 1)), ParseError);
}
