#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "ppsel/geometry.hpp"
#include "ppsel/simulate.hpp"

namespace ppsel {

enum class PcfKind { poisson, thomas };

struct PcfModel {
  PcfKind kind = PcfKind::poisson;
  ThomasParams params{1.0, 1.0};  // ignored for poisson

  static PcfModel poisson() { return {}; }
  static PcfModel thomas(const ThomasParams& tp) { return {PcfKind::thomas, tp}; }
};

// Thomas: g(r) = 1 + exp(-r^2 / (4 gamma^2)) / (4 pi gamma^2 kappa), the
// offspring kernel convolved with itself over the parent intensity. Exactly 1
// for r > 10 gamma.
double pcf(const PcfModel& model, double r);

// K(r) = pi r^2 + (1 - exp(-r^2 / (4 gamma^2))) / kappa.
double k_theoretical(const ThomasParams& tp, double r);

struct KEstimate {
  std::vector<double> r;
  std::vector<double> k;
};

// n equispaced radii from 0 to r_max inclusive.
std::vector<double> default_r_grid(double r_max, std::size_t n = 512);

// Inhomogeneous K with translation edge correction:
//   K(r) = sum_{u != v, |u-v| <= r} 1 / (lambda(u) lambda(v) |W ∩ W_{u-v}|).
// `lambda` holds the fitted intensity at each point of p, in order. The grid
// must be increasing with r_grid.back() <= min(width, height) / 2.
// Throws EmptyPattern for fewer than two points.
KEstimate k_inhom(const PointPattern& p, std::span<const double> lambda,
                  std::span<const double> r_grid);
KEstimate k_inhom(const PointPattern& p,
                  const std::function<double(Point)>& intensity_hat,
                  std::span<const double> r_grid);

struct ContrastOptions {
  double exponent = 0.25;
  std::size_t max_evaluations = 4000;
};

// (kappa, gamma) minimising the trapezoid-rule integral over
// [r_grid[1], r_max] of (K_hat^c - K_thomas^c)^2, by Nelder-Mead in
// (log kappa, log gamma) from four starts. Throws OptimFailure when no start
// yields a finite contrast.
ThomasParams min_contrast(const KEstimate& kest, double r_max,
                          const ContrastOptions& options = {});

// Contrast value used by min_contrast, exposed for diagnostics and tests.
double contrast(const KEstimate& kest, double r_max, const ThomasParams& tp,
                double exponent = 0.25);

void write_k_csv(std::ostream& out, const KEstimate& kest);

}  // namespace ppsel
