#ifndef EGBP_GEOMETRY_HPP
#define EGBP_GEOMETRY_HPP

#include <array>
#include <cmath>
#include <stdexcept>

namespace egbp {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Point a, Point b) = default;
};

inline constexpr double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline constexpr double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }

/// Axis-aligned rectangle (x0, y0) - (x1, y1).
struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 1.0;
  double y1 = 1.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
};

/// Signed area of the triangle (a, b, c); positive for counter-clockwise order.
inline double signed_area(Point a, Point b, Point c) { return 0.5 * cross(b - a, c - a); }

/// Gradients of the three barycentric coordinates of a non-degenerate triangle.
inline std::array<Point, 3> barycentric_gradients(const std::array<Point, 3>& p) {
  const double two_area = cross(p[1] - p[0], p[2] - p[0]);
  std::array<Point, 3> g;
  for (int a = 0; a < 3; ++a) {
    const Point& q = p[(a + 1) % 3];
    const Point& r = p[(a + 2) % 3];
    // Rotate the opposite edge by -90 degrees and scale by 1 / (2|T|).
    g[a] = {(q.y - r.y) / two_area, (r.x - q.x) / two_area};
  }
  return g;
}

/// Barycentric coordinates of x with respect to the triangle p.
inline std::array<double, 3> barycentric(const std::array<Point, 3>& p, Point x) {
  const double two_area = cross(p[1] - p[0], p[2] - p[0]);
  std::array<double, 3> lambda;
  for (int a = 0; a < 3; ++a) {
    const Point& q = p[(a + 1) % 3];
    const Point& r = p[(a + 2) % 3];
    lambda[a] = cross(q - x, r - x) / two_area;
  }
  return lambda;
}

}  // namespace egbp

#endif  // EGBP_GEOMETRY_HPP
