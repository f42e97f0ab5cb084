#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ppsel/geometry.hpp"

namespace ppsel {

// A real-valued covariate sampled on an nx x ny lattice whose corner nodes
// coincide with the window corners. Node (ix, iy) sits at
// (x_min + ix*dx, y_min + iy*dy); values are stored row by row in y.
class CovariateField {
 public:
  CovariateField(std::string name, Window window, std::size_t nx,
                 std::size_t ny, std::vector<double> values);

  const std::string& name() const { return name_; }
  const Window& window() const { return window_; }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  const std::vector<double>& values() const { return values_; }
  double node(std::size_t ix, std::size_t iy) const {
    return values_[iy * nx_ + ix];
  }

  // Bilinear interpolation; throws OutOfWindow outside the window.
  double eval(Point u) const;

  // Same grid values on a different window.
  CovariateField rescaled(const Window& w) const;

  double grid_mean() const;
  // Population (divide-by-n) standard deviation of the node values.
  double grid_sd() const;

 private:
  std::string name_;
  Window window_;
  std::size_t nx_, ny_;
  std::vector<double> values_;
};

// Location of a point inside the lattice: lower-left node and the bilinear
// weights along each axis. Shared by every field on the same lattice.
struct CellLocation {
  std::size_t ix = 0;
  std::size_t iy = 0;
  double fx = 0.0;
  double fy = 0.0;
};

CellLocation locate(const Window& window, std::size_t nx, std::size_t ny,
                    Point u);

double interpolate(const CovariateField& f, const CellLocation& c);

// Covariates z_1..z_p sharing one window and lattice.
class CovariateSet {
 public:
  CovariateSet(std::vector<CovariateField> fields, bool standardized = false);

  std::size_t size() const { return fields_.size(); }
  const CovariateField& operator[](std::size_t j) const { return fields_[j]; }
  const std::vector<CovariateField>& fields() const { return fields_; }
  const Window& window() const { return fields_.front().window(); }
  std::size_t nx() const { return fields_.front().nx(); }
  std::size_t ny() const { return fields_.front().ny(); }
  bool standardized() const { return standardized_; }

  // Writes z_1(u)..z_p(u) into out (size p). Throws OutOfWindow.
  void eval_all(Point u, std::span<double> out) const;

  CovariateSet rescaled(const Window& w) const;

 private:
  std::vector<CovariateField> fields_;
  bool standardized_;
};

// Centers and scales every field by its grid mean and population sd.
// Throws DegenerateCovariate for a constant field.
CovariateSet standardize(const CovariateSet& s);

// p smooth synthetic fields (random low-order Fourier terms plus a linear
// trend), standardized, deterministic in `seed`. Fields are defined in
// relative window coordinates, so the same seed gives the same grids for any
// window. Pairwise grid correlations are kept below 0.9 in magnitude.
CovariateSet synth_covariates(std::uint64_t seed, std::size_t p,
                              const Window& window, std::size_t nx = 201,
                              std::size_t ny = 101);

// Reads a comma-separated matrix of reals. Row r holds the nodes at
// y = y_min + r*dy, column c the nodes at x = x_min + c*dx.
// Throws ParseError (bad number, ragged rows) or DimensionError (< 2x2).
CovariateField load_grid(const std::filesystem::path& path,
                         const Window& window, std::string name = {});
CovariateField parse_grid(std::istream& in, const Window& window,
                          std::string name = {});

// Pearson correlation of two fields' node values.
double grid_correlation(const CovariateField& a, const CovariateField& b);

}  // namespace ppsel
