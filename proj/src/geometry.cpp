#include "ppsel/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "ppsel/error.hpp"
#include "text_io.hpp"

namespace ppsel {

Window::Window(double x_min, double x_max, double y_min, double y_max)
    : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max) {
  if (!(std::isfinite(x_min) && std::isfinite(x_max) && std::isfinite(y_min) &&
        std::isfinite(y_max)) ||
      !(x_min < x_max) || !(y_min < y_max)) {
    std::ostringstream msg;
    msg << "window must satisfy x_min < x_max and y_min < y_max, got [" << x_min
        << "," << x_max << "]x[" << y_min << "," << y_max << "]";
    throw InvalidArgument(msg.str());
  }
}

Window Window::expanded(double margin) const {
  return Window(x_min_ - margin, x_max_ + margin, y_min_ - margin,
                y_max_ + margin);
}

Point Window::to_unit(Point u) const {
  return {(u.x - x_min_) / width(), (u.y - y_min_) / height()};
}

Point Window::from_unit(Point s) const {
  return {x_min_ + s.x * width(), y_min_ + s.y * height()};
}

double area(const Window& w) { return w.width() * w.height(); }

PointPattern::PointPattern(std::vector<Point> points, Window window)
    : points_(std::move(points)), window_(window) {
  for (const auto& u : points_) {
    if (!window_.contains(u)) {
      std::ostringstream msg;
      msg << "point (" << u.x << "," << u.y << ") lies outside the window";
      throw OutOfWindow(msg.str());
    }
  }
}

std::size_t count_in(const PointPattern& p, const Window& w) {
  return static_cast<std::size_t>(
      std::count_if(p.points().begin(), p.points().end(),
                    [&w](const Point& u) { return w.contains(u); }));
}

double translate_overlap_area(const Window& w, double dx, double dy) {
  return std::max(0.0, w.width() - std::abs(dx)) *
         std::max(0.0, w.height() - std::abs(dy));
}

void write_pattern_csv(std::ostream& out, const PointPattern& p) {
  out << "x,y\n";
  for (const auto& u : p.points()) {
    out << detail::format_double(u.x) << ',' << detail::format_double(u.y)
        << '\n';
  }
}

PointPattern read_pattern_csv(std::istream& in, const Window& window) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty pattern file");
  if (detail::trim(line) != "x,y") {
    throw ParseError("pattern CSV must start with header `x,y`");
  }
  std::vector<Point> points;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_reals(line, line_no);
    if (cells.size() != 2) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected 2 columns");
    }
    points.push_back({cells[0], cells[1]});
  }
  return PointPattern(std::move(points), window);
}

}  // namespace ppsel
