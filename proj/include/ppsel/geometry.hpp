#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace ppsel {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

// Closed axis-aligned rectangle [x_min, x_max] x [y_min, y_max].
class Window {
 public:
  Window(double x_min, double x_max, double y_min, double y_max);

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double y_min() const { return y_min_; }
  double y_max() const { return y_max_; }
  double width() const { return x_max_ - x_min_; }
  double height() const { return y_max_ - y_min_; }

  // Boundary points count as inside.
  bool contains(Point u) const {
    return u.x >= x_min_ && u.x <= x_max_ && u.y >= y_min_ && u.y <= y_max_;
  }

  // Grows the rectangle by `margin` on every side.
  Window expanded(double margin) const;

  // Maps u to relative coordinates in [0,1]^2 and back.
  Point to_unit(Point u) const;
  Point from_unit(Point s) const;

  friend bool operator==(const Window&, const Window&) = default;

 private:
  double x_min_, x_max_, y_min_, y_max_;
};

double area(const Window& w);

// A finite point configuration observed in a window. Immutable.
class PointPattern {
 public:
  // Throws OutOfWindow if any point lies outside `window`.
  PointPattern(std::vector<Point> points, Window window);

  const std::vector<Point>& points() const { return points_; }
  const Window& window() const { return window_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

 private:
  std::vector<Point> points_;
  Window window_;
};

// Number of points of p inside w (closed).
std::size_t count_in(const PointPattern& p, const Window& w);

// |w ∩ (w + (dx, dy))|, the translation edge-correction factor.
double translate_overlap_area(const Window& w, double dx, double dy);

// CSV with header `x,y`. Values are written with round-trip precision.
void write_pattern_csv(std::ostream& out, const PointPattern& p);
PointPattern read_pattern_csv(std::istream& in, const Window& window);

}  // namespace ppsel
