#include "ppsel/second_order.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>

#include "ppsel/error.hpp"
#include "text_io.hpp"

namespace ppsel {

double pcf(const PcfModel& model, double r) {
  if (model.kind == PcfKind::poisson) return 1.0;
  // Beyond 10 gamma the Gaussian term is below exp(-25) of its peak.
  if (r > 10.0 * model.params.gamma) return 1.0;
  const double g2 = model.params.gamma * model.params.gamma;
  return 1.0 + std::exp(-r * r / (4.0 * g2)) /
                   (4.0 * std::numbers::pi * g2 * model.params.kappa);
}

double k_theoretical(const ThomasParams& tp, double r) {
  return std::numbers::pi * r * r -
         std::expm1(-r * r / (4.0 * tp.gamma * tp.gamma)) / tp.kappa;
}

std::vector<double> default_r_grid(double r_max, std::size_t n) {
  if (n < 2 || !(r_max > 0.0)) throw InvalidArgument("bad r grid");
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = r_max * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return r;
}

KEstimate k_inhom(const PointPattern& p, std::span<const double> lambda,
                  std::span<const double> r_grid) {
  if (p.size() < 2) throw EmptyPattern("K estimation needs at least 2 points");
  if (lambda.size() != p.size()) {
    throw DimensionMismatch("one intensity value per point is required");
  }
  if (r_grid.empty() || !std::is_sorted(r_grid.begin(), r_grid.end())) {
    throw InvalidArgument("r grid must be non-empty and increasing");
  }
  const Window& w = p.window();
  const double r_max = r_grid.back();
  if (r_max > 0.5 * std::min(w.width(), w.height())) {
    throw InvalidArgument("r_max exceeds half the shorter window side");
  }
  for (double l : lambda) {
    if (!(l > 0.0) || !std::isfinite(l)) {
      throw InvalidArgument("intensity must be strictly positive at every point");
    }
  }

  // Sweep in x order so pairs further than r_max apart in x are skipped.
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  const auto& pts = p.points();
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pts[a].x < pts[b].x || (pts[a].x == pts[b].x && a < b);
  });

  std::vector<long double> bins(r_grid.size(), 0.0L);
  const double r_max2 = r_max * r_max;
  for (std::size_t a = 0; a < order.size(); ++a) {
    const auto i = order[a];
    for (std::size_t b = a + 1; b < order.size(); ++b) {
      const auto j = order[b];
      const double dx = pts[j].x - pts[i].x;
      if (dx > r_max) break;
      const double dy = pts[j].y - pts[i].y;
      const double d2 = dx * dx + dy * dy;
      if (d2 > r_max2) continue;
      const double d = std::sqrt(d2);
      const auto k = static_cast<std::size_t>(
          std::lower_bound(r_grid.begin(), r_grid.end(), d) - r_grid.begin());
      const double edge = translate_overlap_area(w, dx, dy);
      bins[k] += 2.0L / (static_cast<long double>(lambda[i]) * lambda[j] * edge);
    }
  }

  KEstimate out;
  out.r.assign(r_grid.begin(), r_grid.end());
  out.k.resize(r_grid.size());
  long double acc = 0.0L;
  for (std::size_t k = 0; k < bins.size(); ++k) {
    acc += bins[k];
    out.k[k] = static_cast<double>(acc);
  }
  return out;
}

KEstimate k_inhom(const PointPattern& p,
                  const std::function<double(Point)>& intensity_hat,
                  std::span<const double> r_grid) {
  std::vector<double> lambda;
  lambda.reserve(p.size());
  for (const auto& u : p.points()) lambda.push_back(intensity_hat(u));
  return k_inhom(p, lambda, r_grid);
}

namespace {

struct ContrastData {
  std::vector<double> r;
  std::vector<double> target;  // K_hat(r)^c
  std::vector<double> trap;    // trapezoid weights
  double exponent;

  double operator()(double kappa, double gamma) const {
    const double g4 = 4.0 * gamma * gamma;
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double k = std::numbers::pi * r[i] * r[i] -
                       std::expm1(-r[i] * r[i] / g4) / kappa;
      const double d = target[i] - std::pow(k, exponent);
      s += trap[i] * d * d;
    }
    return s;
  }
};

ContrastData make_contrast(const KEstimate& kest, double r_max, double exponent) {
  if (kest.r.size() < 3 || kest.r.size() != kest.k.size()) {
    throw InvalidArgument("K estimate needs at least 3 radii");
  }
  if (r_max <= kest.r[1] || r_max > kest.r.back() * (1.0 + 1e-12)) {
    throw InvalidArgument("r_max must lie within the K estimate's radii");
  }
  ContrastData c;
  c.exponent = exponent;
  for (std::size_t i = 1; i < kest.r.size() && kest.r[i] <= r_max * (1.0 + 1e-12); ++i) {
    c.r.push_back(kest.r[i]);
    c.target.push_back(std::pow(std::max(0.0, kest.k[i]), exponent));
  }
  if (c.r.size() < 2) throw InvalidArgument("fewer than 2 radii in [r_min, r_max]");
  c.trap.assign(c.r.size(), 0.0);
  for (std::size_t i = 0; i + 1 < c.r.size(); ++i) {
    const double h = 0.5 * (c.r[i + 1] - c.r[i]);
    c.trap[i] += h;
    c.trap[i + 1] += h;
  }
  return c;
}

using Vec2 = std::array<double, 2>;

struct NelderMeadResult {
  Vec2 x;
  double f;
};

template <class F>
NelderMeadResult nelder_mead(const F& f, Vec2 x0, double step,
                             std::size_t max_evals) {
  std::array<Vec2, 3> s{x0, x0, x0};
  s[1][0] += step;
  s[2][1] += step;
  std::array<double, 3> fs{f(s[0]), f(s[1]), f(s[2])};
  std::size_t evals = 3;

  auto order = [&] {
    std::array<std::size_t, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return fs[a] < fs[b]; });
    const auto s0 = s;
    const auto f0 = fs;
    for (std::size_t k = 0; k < 3; ++k) {
      s[k] = s0[idx[k]];
      fs[k] = f0[idx[k]];
    }
  };

  while (evals < max_evals) {
    order();
    const double size = std::max({std::abs(s[1][0] - s[0][0]), std::abs(s[1][1] - s[0][1]),
                                  std::abs(s[2][0] - s[0][0]), std::abs(s[2][1] - s[0][1])});
    if (size < 1e-11) break;
    if (std::isfinite(fs[2]) && fs[2] - fs[0] <= 1e-15 * std::abs(fs[0]) &&
        size < 1e-6) {
      break;
    }

    const Vec2 centroid{0.5 * (s[0][0] + s[1][0]), 0.5 * (s[0][1] + s[1][1])};
    auto along = [&](double t) {
      return Vec2{centroid[0] + t * (s[2][0] - centroid[0]),
                  centroid[1] + t * (s[2][1] - centroid[1])};
    };
    const Vec2 xr = along(-1.0);
    const double fr = f(xr);
    ++evals;
    if (fr < fs[0]) {
      const Vec2 xe = along(-2.0);
      const double fe = f(xe);
      ++evals;
      if (fe < fr) {
        s[2] = xe;
        fs[2] = fe;
      } else {
        s[2] = xr;
        fs[2] = fr;
      }
    } else if (fr < fs[1]) {
      s[2] = xr;
      fs[2] = fr;
    } else {
      const bool outside = fr < fs[2];
      const Vec2 xc = along(outside ? -0.5 : 0.5);
      const double fc = f(xc);
      ++evals;
      if (fc < (outside ? fr : fs[2])) {
        s[2] = xc;
        fs[2] = fc;
      } else {
        for (std::size_t k = 1; k < 3; ++k) {
          s[k] = {s[0][0] + 0.5 * (s[k][0] - s[0][0]), s[0][1] + 0.5 * (s[k][1] - s[0][1])};
          fs[k] = f(s[k]);
          ++evals;
        }
      }
    }
  }
  order();
  return {s[0], fs[0]};
}

}  // namespace

double contrast(const KEstimate& kest, double r_max, const ThomasParams& tp,
                double exponent) {
  return make_contrast(kest, r_max, exponent)(tp.kappa, tp.gamma);
}

ThomasParams min_contrast(const KEstimate& kest, double r_max,
                          const ContrastOptions& options) {
  const auto data = make_contrast(kest, r_max, options.exponent);

  // Reference scales: clustering excess at r_max gives 1/kappa.
  const double k_at_rmax = kest.k[data.r.size()];
  const double excess = k_at_rmax - std::numbers::pi * r_max * r_max;
  const double kappa0 = excess > 0.0 ? 1.0 / excess
                                     : 1.0 / (std::numbers::pi * r_max * r_max);
  const double gamma0 = 0.25 * r_max;
  const double log_kappa_lo = std::log(kappa0) - 25.0;
  const double log_kappa_hi = std::log(kappa0) + 25.0;
  const double log_gamma_lo = std::log(1e-3 * r_max);
  // Scales beyond r_max are not identified by K on [0, r_max].
  const double log_gamma_hi = std::log(r_max);

  auto objective = [&](const Vec2& x) {
    if (x[0] < log_kappa_lo || x[0] > log_kappa_hi || x[1] < log_gamma_lo ||
        x[1] > log_gamma_hi) {
      return std::numeric_limits<double>::infinity();
    }
    const double v = data(std::exp(x[0]), std::exp(x[1]));
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  constexpr double kDecade = 2.302585092994046;  // ln 10
  NelderMeadResult best{{0.0, 0.0}, std::numeric_limits<double>::infinity()};
  double best_start = std::numeric_limits<double>::infinity();
  const std::size_t budget = options.max_evaluations / 4;
  for (double dk : {-kDecade, kDecade}) {
    for (double dg : {-kDecade, kDecade}) {
      const Vec2 x0{std::log(kappa0) + dk, std::log(gamma0) + dg};
      const double f0 = objective(x0);
      best_start = std::min(best_start, f0);
      if (!std::isfinite(f0)) continue;
      auto res = nelder_mead(objective, x0, 0.5, budget / 2);
      // A restart from the reported minimum guards against a collapsed simplex.
      res = nelder_mead(objective, res.x, 0.1, budget / 2);
      if (res.f < best.f) best = res;
    }
  }
  if (!std::isfinite(best.f) || best.f > best_start) {
    throw OptimFailure("minimum contrast found no finite improvement");
  }
  return ThomasParams(std::exp(best.x[0]), std::exp(best.x[1]));
}

void write_k_csv(std::ostream& out, const KEstimate& kest) {
  out << "r,k_hat\n";
  for (std::size_t i = 0; i < kest.r.size(); ++i) {
    out << detail::format_double(kest.r[i]) << ','
        << detail::format_double(kest.k[i]) << '\n';
  }
}

}  // namespace ppsel
