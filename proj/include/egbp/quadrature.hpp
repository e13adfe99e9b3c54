#ifndef EGBP_QUADRATURE_HPP
#define EGBP_QUADRATURE_HPP

#include <array>
#include <cmath>

namespace egbp::quadrature {

struct TrianglePoint {
  std::array<double, 3> barycentric;
  double weight;  // fraction of the triangle area; weights sum to one
};

/// Six-point symmetric rule, exact for polynomials of degree four.
inline constexpr std::array<TrianglePoint, 6> dunavant4 = {{
    {{0.445948490915964886, 0.445948490915964886, 0.108103018168070227}, 0.223381589678011466},
    {{0.445948490915964886, 0.108103018168070227, 0.445948490915964886}, 0.223381589678011466},
    {{0.108103018168070227, 0.445948490915964886, 0.445948490915964886}, 0.223381589678011466},
    {{0.091576213509770743, 0.091576213509770743, 0.816847572980458513}, 0.109951743655321867},
    {{0.091576213509770743, 0.816847572980458513, 0.091576213509770743}, 0.109951743655321867},
    {{0.816847572980458513, 0.091576213509770743, 0.091576213509770743}, 0.109951743655321867},
}};

struct LinePoint {
  double t;       // position on [0, 1]
  double weight;  // fraction of the segment length
};

/// Two-point Gauss rule on [0, 1], exact for cubics.
inline const std::array<LinePoint, 2> gauss2 = {{
    {0.5 - 0.5 / std::sqrt(3.0), 0.5},
    {0.5 + 0.5 / std::sqrt(3.0), 0.5},
}};

}  // namespace egbp::quadrature

#endif  // EGBP_QUADRATURE_HPP
