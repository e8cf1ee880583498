#pragma once

// Hand-built polygons shared by the unit and acceptance suites.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "veingrow/geometry.hpp"

namespace veingrow::testing {

inline Polygon square4() { return Polygon({{0, 0}, {4, 0}, {4, 4}, {0, 4}}); }

inline Polygon diamond4() { return Polygon({{2, 0}, {4, 2}, {2, 4}, {0, 2}}); }

/// U opening downward in image coordinates: arms x in [0,3] and [7,10] for
/// y in [3,10], joined by the base y in [0,3].
inline Polygon u_shape() {
  return Polygon({{0, 0}, {10, 0}, {10, 10}, {7, 10}, {7, 3}, {3, 3}, {3, 10}, {0, 10}});
}

/// Annular sector ("C") of radii 8..10 centered at (15,15), open toward +x
/// over +-30 degrees. Its area centroid falls in the hole.
inline Polygon crescent() {
  std::vector<Point2> v;
  const int arc = 64;
  const double a0 = kPi / 6, a1 = kTwoPi - kPi / 6;
  for (int i = 0; i <= arc; ++i) {
    const double a = a0 + (a1 - a0) * i / arc;
    v.push_back({15 + 10 * std::cos(a), 15 + 10 * std::sin(a)});
  }
  for (int i = arc; i >= 0; --i) {
    const double a = a0 + (a1 - a0) * i / arc;
    v.push_back({15 + 8 * std::cos(a), 15 + 8 * std::sin(a)});
  }
  return Polygon::validated(std::move(v));
}

/// 0.2 px wide L hugging the top and left of a 4x4 grid: no pixel center is
/// inside and its centroid is outside.
inline Polygon thin_l() {
  return Polygon({{0.1, 0.1}, {3.9, 0.1}, {3.9, 0.3}, {0.3, 0.3}, {0.3, 3.9}, {0.1, 3.9}});
}

/// Side-100 square at the origin with a 30x30 notch in the middle of the top.
inline Polygon notched_square() {
  return Polygon({{0, 0}, {35, 0}, {35, 30}, {65, 30}, {65, 0}, {100, 0}, {100, 100}, {0, 100}});
}

inline Polygon regular(Point2 c, double r, int n, double phase = 0.0) {
  std::vector<Point2> v;
  for (int i = 0; i < n; ++i) v.push_back(c + r * unit_vector(phase + kTwoPi * i / n));
  return Polygon::validated(std::move(v));
}

inline Polygon translated(const Polygon& p, Point2 d) {
  std::vector<Point2> v(p.vertices().begin(), p.vertices().end());
  for (auto& q : v) q = q + d;
  return Polygon(std::move(v));
}

/// Twenty named hand-built shapes of mixed convexity and size, all with
/// nonnegative coordinates.
inline std::vector<std::pair<std::string, Polygon>> shape_fixtures() {
  std::vector<std::pair<std::string, Polygon>> out;
  out.emplace_back("square4", square4());
  out.emplace_back("diamond4", diamond4());
  out.emplace_back("u_shape", u_shape());
  out.emplace_back("crescent", crescent());
  out.emplace_back("notched_square", notched_square());
  out.emplace_back("rect_wide", Polygon({{1, 2}, {31, 2}, {31, 9}, {1, 9}}));
  out.emplace_back("rect_tall", Polygon({{3, 1}, {8, 1}, {8, 41}, {3, 41}}));
  out.emplace_back("triangle", Polygon({{0, 0}, {20, 0}, {5, 15}}));
  out.emplace_back("obtuse_triangle", Polygon({{0, 10}, {40, 0}, {30, 12}}));
  out.emplace_back("hexagon", regular({20, 20}, 15, 6));
  out.emplace_back("pentagon_tilted", regular({25, 25}, 18, 5, 0.3));
  out.emplace_back("octagon", regular({12, 12}, 10, 8, kPi / 8));
  out.emplace_back("circle64", regular({30, 30}, 25, 64));
  out.emplace_back("star5", Polygon({{25, 2},  {30.9, 16.9}, {46.9, 17.9}, {34.5, 27.6}, {38.5, 43.1},
                                     {25, 34.5}, {11.5, 43.1}, {15.5, 27.6}, {3.1, 17.9}, {19.1, 16.9}}));
  out.emplace_back("l_shape", Polygon({{0, 0}, {8, 0}, {8, 24}, {24, 24}, {24, 32}, {0, 32}}));
  out.emplace_back("t_shape", Polygon({{0, 0}, {30, 0}, {30, 8}, {19, 8}, {19, 30}, {11, 30}, {11, 8}, {0, 8}}));
  out.emplace_back("arrow", Polygon({{0, 10}, {20, 10}, {20, 2}, {34, 15}, {20, 28}, {20, 20}, {0, 20}}));
  out.emplace_back("trapezoid", Polygon({{5, 0}, {25, 0}, {35, 14}, {0, 14}}));
  out.emplace_back("comb", Polygon({{0, 0}, {30, 0}, {30, 20}, {25, 20}, {25, 8}, {20, 8}, {20, 20}, {15, 20},
                                    {15, 8}, {10, 8}, {10, 20}, {5, 20}, {5, 8}, {0, 8}}));
  out.emplace_back("offset_square", translated(Polygon({{0, 0}, {12.5, 0}, {12.5, 12.5}, {0, 12.5}}), {3.3, 7.7}));
  return out;
}

}  // namespace veingrow::testing
