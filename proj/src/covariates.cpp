#include "ppsel/covariates.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "ppsel/error.hpp"
#include "ppsel/rng.hpp"
#include "text_io.hpp"

namespace ppsel {

CovariateField::CovariateField(std::string name, Window window, std::size_t nx,
                               std::size_t ny, std::vector<double> values)
    : name_(std::move(name)),
      window_(window),
      nx_(nx),
      ny_(ny),
      values_(std::move(values)) {
  if (nx_ < 2 || ny_ < 2) {
    throw DimensionError("covariate grid must be at least 2x2, got " +
                         std::to_string(nx_) + "x" + std::to_string(ny_));
  }
  if (values_.size() != nx_ * ny_) {
    throw DimensionError("covariate grid holds " +
                         std::to_string(values_.size()) + " values, expected " +
                         std::to_string(nx_ * ny_));
  }
  if (!std::all_of(values_.begin(), values_.end(),
                   [](double v) { return std::isfinite(v); })) {
    throw InvalidArgument("covariate `" + name_ + "` has non-finite values");
  }
}

CellLocation locate(const Window& window, std::size_t nx, std::size_t ny,
                    Point u) {
  const double sx = (u.x - window.x_min()) / window.width() *
                    static_cast<double>(nx - 1);
  const double sy = (u.y - window.y_min()) / window.height() *
                    static_cast<double>(ny - 1);
  CellLocation c;
  c.ix = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(sx))), nx - 2);
  c.iy = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(sy))), ny - 2);
  c.fx = sx - static_cast<double>(c.ix);
  c.fy = sy - static_cast<double>(c.iy);
  return c;
}

double interpolate(const CovariateField& f, const CellLocation& c) {
  const double v00 = f.node(c.ix, c.iy);
  const double v10 = f.node(c.ix + 1, c.iy);
  const double v01 = f.node(c.ix, c.iy + 1);
  const double v11 = f.node(c.ix + 1, c.iy + 1);
  const double lower = (1.0 - c.fx) * v00 + c.fx * v10;
  const double upper = (1.0 - c.fx) * v01 + c.fx * v11;
  return (1.0 - c.fy) * lower + c.fy * upper;
}

double CovariateField::eval(Point u) const {
  if (!window_.contains(u)) {
    throw OutOfWindow("covariate `" + name_ + "` evaluated outside its window");
  }
  return interpolate(*this, locate(window_, nx_, ny_, u));
}

CovariateField CovariateField::rescaled(const Window& w) const {
  return CovariateField(name_, w, nx_, ny_, values_);
}

double CovariateField::grid_mean() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0) /
         static_cast<double>(values_.size());
}

double CovariateField::grid_sd() const {
  const double mean = grid_mean();
  double ss = 0.0;
  for (double v : values_) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values_.size()));
}

CovariateSet::CovariateSet(std::vector<CovariateField> fields, bool standardized)
    : fields_(std::move(fields)), standardized_(standardized) {
  if (fields_.empty()) throw InvalidArgument("covariate set is empty");
  const auto& first = fields_.front();
  for (const auto& f : fields_) {
    if (!(f.window() == first.window()) || f.nx() != first.nx() ||
        f.ny() != first.ny()) {
      throw DimensionMismatch("covariate `" + f.name() +
                              "` does not share the window and lattice of `" +
                              first.name() + "`");
    }
  }
}

void CovariateSet::eval_all(Point u, std::span<double> out) const {
  if (out.size() != fields_.size()) {
    throw DimensionMismatch("output span has wrong length");
  }
  if (!window().contains(u)) {
    throw OutOfWindow("covariates evaluated outside their window");
  }
  const auto c = locate(window(), nx(), ny(), u);
  for (std::size_t j = 0; j < fields_.size(); ++j) {
    out[j] = interpolate(fields_[j], c);
  }
}

CovariateSet CovariateSet::rescaled(const Window& w) const {
  std::vector<CovariateField> out;
  out.reserve(fields_.size());
  for (const auto& f : fields_) out.push_back(f.rescaled(w));
  return CovariateSet(std::move(out), standardized_);
}

CovariateSet standardize(const CovariateSet& s) {
  std::vector<CovariateField> out;
  out.reserve(s.size());
  for (const auto& f : s.fields()) {
    const double mean = f.grid_mean();
    const double sd = f.grid_sd();
    // Relative threshold: a field that is constant up to rounding.
    double scale = 0.0;
    for (double v : f.values()) scale = std::max(scale, std::abs(v));
    if (!(sd > 1e-12 * std::max(scale, 1e-300))) {
      throw DegenerateCovariate("covariate `" + f.name() + "` is constant");
    }
    std::vector<double> values(f.values().size());
    std::transform(f.values().begin(), f.values().end(), values.begin(),
                   [&](double v) { return (v - mean) / sd; });
    out.emplace_back(f.name(), f.window(), f.nx(), f.ny(), std::move(values));
  }
  return CovariateSet(std::move(out), true);
}

double grid_correlation(const CovariateField& a, const CovariateField& b) {
  const double ma = a.grid_mean();
  const double mb = b.grid_mean();
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    const double da = a.values()[i] - ma;
    const double db = b.values()[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  return sab / std::sqrt(saa * sbb);
}

namespace {

std::vector<double> synth_surface(std::uint64_t seed, std::size_t nx,
                                  std::size_t ny) {
  auto rng = make_rng(seed);
  std::uniform_int_distribution<int> freq_x(0, 3);
  std::uniform_int_distribution<int> freq_y(0, 2);
  std::uniform_real_distribution<double> amp(0.5, 1.5);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> slope(-1.0, 1.0);

  struct Term {
    int kx, ky;
    double a, phi;
  };
  constexpr int kTerms = 4;
  std::vector<Term> terms;
  while (terms.size() < kTerms) {
    const int kx = freq_x(rng);
    const int ky = freq_y(rng);
    const double a = amp(rng);
    const double phi = phase(rng);
    if (kx == 0 && ky == 0) continue;
    terms.push_back({kx, ky, a, phi});
  }
  const double cx = slope(rng);
  const double cy = slope(rng);

  std::vector<double> values(nx * ny);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    const double t = static_cast<double>(iy) / static_cast<double>(ny - 1);
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double s = static_cast<double>(ix) / static_cast<double>(nx - 1);
      double v = cx * s + cy * t;
      for (const auto& term : terms) {
        v += term.a * std::cos(2.0 * std::numbers::pi * (term.kx * s + term.ky * t) +
                               term.phi);
      }
      values[iy * nx + ix] = v;
    }
  }
  return values;
}

}  // namespace

CovariateSet synth_covariates(std::uint64_t seed, std::size_t p,
                              const Window& window, std::size_t nx,
                              std::size_t ny) {
  if (p == 0) throw InvalidArgument("synth_covariates needs p >= 1");
  constexpr double kMaxAbsCorrelation = 0.9;
  constexpr std::uint64_t kMaxAttempts = 1000;

  std::vector<CovariateField> fields;
  for (std::size_t j = 0; j < p; ++j) {
    bool accepted = false;
    for (std::uint64_t attempt = 0; attempt < kMaxAttempts && !accepted; ++attempt) {
      const auto stream = derive_seed(seed, j * kMaxAttempts + attempt);
      CovariateField raw("z" + std::to_string(j + 1), window, nx, ny,
                         synth_surface(stream, nx, ny));
      if (raw.grid_sd() <= 0.0) continue;
      accepted = std::all_of(fields.begin(), fields.end(), [&](const auto& f) {
        return std::abs(grid_correlation(f, raw)) < kMaxAbsCorrelation;
      });
      if (accepted) fields.push_back(std::move(raw));
    }
    if (!accepted) {
      throw InvalidArgument("could not generate mutually distinct covariates");
    }
  }
  return standardize(CovariateSet(std::move(fields)));
}

CovariateField parse_grid(std::istream& in, const Window& window,
                          std::string name) {
  std::vector<double> values;
  std::size_t ncols = 0;
  std::size_t nrows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto row = detail::split_csv_reals(line, line_no);
    if (nrows == 0) {
      ncols = row.size();
    } else if (row.size() != ncols) {
      throw ParseError("line " + std::to_string(line_no) + ": row has " +
                       std::to_string(row.size()) + " columns, expected " +
                       std::to_string(ncols));
    }
    values.insert(values.end(), row.begin(), row.end());
    ++nrows;
  }
  if (nrows < 2 || ncols < 2) {
    throw DimensionError("covariate matrix must be at least 2x2, got " +
                         std::to_string(nrows) + "x" + std::to_string(ncols));
  }
  return CovariateField(std::move(name), window, ncols, nrows, std::move(values));
}

CovariateField load_grid(const std::filesystem::path& path,
                         const Window& window, std::string name) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  if (name.empty()) name = path.stem().string();
  return parse_grid(in, window, std::move(name));
}

}  // namespace ppsel
