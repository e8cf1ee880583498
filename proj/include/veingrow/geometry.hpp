#pragma once

// Planar primitives shared by the codec, target and ingest modules.
//
// Coordinates are image coordinates: x grows rightward, y grows downward and
// angles are measured from +x toward +y.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "veingrow/error.hpp"

namespace veingrow {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Areas below this (px^2) are degenerate.
inline constexpr double kAreaEpsilon = 1e-9;
/// Distances below this (px) are treated as coincidence / on-boundary.
inline constexpr double kLengthEpsilon = 1e-9;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend constexpr Point2 operator*(Point2 a, double s) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Point2 a, Point2 b) = default;

  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

constexpr double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

inline Point2 unit_vector(double angle) { return {std::cos(angle), std::sin(angle)}; }

/// Ordered vertex ring. The constructor only enforces the structural minimum
/// (three finite vertices) so that reconstructed contours, which may fold over
/// themselves, remain representable. Use Polygon::validated() for inputs that
/// must be simple.
class Polygon {
 public:
  explicit Polygon(std::vector<Point2> vertices) : vertices_(std::move(vertices)) {
    if (vertices_.size() < 3) {
      throw Error(ErrorCode::DegenerateGeometry, "polygon needs at least 3 vertices");
    }
    for (const auto& v : vertices_) {
      if (!v.finite()) throw Error(ErrorCode::DegenerateGeometry, "non-finite vertex");
    }
  }

  /// Builds a polygon and enforces simplicity, nonzero area and distinct
  /// vertices. Throws DegenerateGeometry with the defect as message.
  static Polygon validated(std::vector<Point2> vertices);

  std::span<const Point2> vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  const Point2& operator[](std::size_t i) const { return vertices_[i]; }
  const Point2& next(std::size_t i) const { return vertices_[(i + 1) % vertices_.size()]; }

  friend bool operator==(const Polygon&, const Polygon&) = default;

 private:
  std::vector<Point2> vertices_;
};

/// Axis-aligned bounds.
struct Bounds {
  Point2 min;
  Point2 max;
  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
};

inline Bounds bounds(const Polygon& p) {
  Bounds b{p[0], p[0]};
  for (const auto& v : p.vertices()) {
    b.min.x = std::min(b.min.x, v.x);
    b.min.y = std::min(b.min.y, v.y);
    b.max.x = std::max(b.max.x, v.x);
    b.max.y = std::max(b.max.y, v.y);
  }
  return b;
}

inline double signed_area(const Polygon& p) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += cross(p[i], p.next(i));
  return 0.5 * acc;
}

inline double area(const Polygon& p) { return std::abs(signed_area(p)); }

/// Area-weighted centroid from the shoelace moments.
inline Point2 polygon_centroid(const Polygon& p) {
  // Moments are taken relative to the first vertex to limit cancellation for
  // polygons far from the origin.
  const Point2 ref = p[0];
  double a2 = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Point2 u = p[i] - ref;
    const Point2 v = p.next(i) - ref;
    const double c = cross(u, v);
    a2 += c;
    cx += (u.x + v.x) * c;
    cy += (u.y + v.y) * c;
  }
  if (std::abs(0.5 * a2) < kAreaEpsilon) {
    throw Error(ErrorCode::DegenerateGeometry, "polygon area below threshold");
  }
  return {ref.x + cx / (3.0 * a2), ref.y + cy / (3.0 * a2)};
}

inline double point_segment_distance(Point2 q, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(q, a);
  const double t = std::clamp(dot(q - a, ab) / len2, 0.0, 1.0);
  return distance(q, a + t * ab);
}

/// Exact (continuous) minimum distance from q to the polygon boundary.
inline double boundary_distance(const Polygon& p, Point2 q) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.size(); ++i) {
    best = std::min(best, point_segment_distance(q, p[i], p.next(i)));
  }
  return best;
}

/// Even-odd containment. Points within kLengthEpsilon of the boundary count
/// as inside.
inline bool point_in_polygon(const Polygon& p, Point2 q) {
  if (boundary_distance(p, q) <= kLengthEpsilon) return true;
  bool inside = false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Point2 a = p[i];
    const Point2 b = p.next(i);
    if ((a.y > q.y) != (b.y > q.y)) {
      const double x = a.x + (q.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (q.x < x) inside = !inside;
    }
  }
  return inside;
}

/// Inside and farther than kLengthEpsilon from the boundary.
inline bool strictly_inside(const Polygon& p, Point2 q) {
  return point_in_polygon(p, q) && boundary_distance(p, q) > kLengthEpsilon;
}

namespace detail {

inline int orientation(Point2 a, Point2 b, Point2 c) {
  const double v = cross(b - a, c - a);
  if (v > 0) return 1;
  if (v < 0) return -1;
  return 0;
}

inline bool on_segment_collinear(Point2 a, Point2 b, Point2 q) {
  return std::min(a.x, b.x) <= q.x && q.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= q.y &&
         q.y <= std::max(a.y, b.y);
}

inline bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d) {
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment_collinear(a, b, c)) return true;
  if (o2 == 0 && on_segment_collinear(a, b, d)) return true;
  if (o3 == 0 && on_segment_collinear(c, d, a)) return true;
  if (o4 == 0 && on_segment_collinear(c, d, b)) return true;
  return false;
}

}  // namespace detail

/// Returns a human readable defect, or nullopt when the ring is a valid
/// simple polygon.
inline std::optional<std::string> polygon_defect(std::span<const Point2> v) {
  const std::size_t n = v.size();
  if (n < 3) return "fewer than 3 vertices";
  for (const auto& p : v) {
    if (!p.finite()) return "non-finite vertex";
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (distance(v[i], v[j]) <= kLengthEpsilon) return "duplicate vertex";
    }
  }
  double a2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) a2 += cross(v[i] - v[0], v[(i + 1) % n] - v[0]);
  if (std::abs(0.5 * a2) < kAreaEpsilon) return "zero area";

  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = v[i];
    const Point2 b = v[(i + 1) % n];
    // Consecutive edges folding back onto each other.
    const Point2 c = v[(i + 2) % n];
    if (cross(b - a, c - b) == 0.0 && dot(b - a, c - b) < 0.0) return "self-intersection";
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // adjacent through the closing edge
      if (detail::segments_intersect(a, b, v[j], v[(j + 1) % n])) return "self-intersection";
    }
  }
  return std::nullopt;
}

inline Polygon Polygon::validated(std::vector<Point2> vertices) {
  if (auto defect = polygon_defect(vertices)) {
    throw Error(ErrorCode::DegenerateGeometry, *defect);
  }
  return Polygon(std::move(vertices));
}

/// Distance from an interior origin to the FARTHEST crossing of the ray
/// origin + t * direction (t > 0) with the boundary. `direction` must be a
/// unit vector.
inline double ray_cast_distance(const Polygon& p, Point2 origin, Point2 direction) {
  if (!strictly_inside(p, origin)) {
    throw Error(ErrorCode::OriginOutsideMask, "ray origin is not strictly inside the polygon");
  }
  constexpr double kParamSlack = 1e-12;
  double best = -1.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Point2 a = p[i];
    const Point2 e = p.next(i) - a;
    const Point2 ao = a - origin;
    const double denom = cross(direction, e);
    const double scale = norm(e);
    if (std::abs(denom) > 1e-14 * scale) {
      const double t = cross(ao, e) / denom;
      const double u = cross(ao, direction) / denom;
      if (u >= -kParamSlack && u <= 1.0 + kParamSlack && t > 0.0) best = std::max(best, t);
    } else if (std::abs(cross(ao, direction)) <= kLengthEpsilon) {
      // Edge collinear with the ray: both endpoints are boundary hits.
      best = std::max({best, dot(ao, direction), dot(p.next(i) - origin, direction)});
    }
  }
  if (best <= 0.0) {
    throw Error(ErrorCode::InternalGeometryError, "ray from an interior origin found no boundary");
  }
  return best;
}

inline double ray_cast_distance(const Polygon& p, Point2 origin, double angle) {
  return ray_cast_distance(p, origin, unit_vector(angle));
}

/// Sampling lattice. Pixel (i, j) covers [origin.x + i, origin.x + i + 1) x
/// [origin.y + j, origin.y + j + 1) and is probed at supersample^2 evenly
/// spaced subsample centers.
struct RasterGrid {
  int width = 1;
  int height = 1;
  int supersample = 1;
  Point2 origin{0.0, 0.0};

  void validate() const {
    if (width < 1 || height < 1) throw Error(ErrorCode::ParamError, "grid must be at least 1x1");
    if (supersample != 1 && supersample != 2 && supersample != 4 && supersample != 8) {
      throw Error(ErrorCode::ParamError, "supersample must be one of 1, 2, 4, 8");
    }
  }

  int sample_width() const { return width * supersample; }
  int sample_height() const { return height * supersample; }

  Point2 sample_center(int sx, int sy) const {
    return {origin.x + (sx + 0.5) / supersample, origin.y + (sy + 0.5) / supersample};
  }
  Point2 pixel_center(int px, int py) const { return {origin.x + px + 0.5, origin.y + py + 0.5}; }

  bool contains(const Bounds& b) const {
    return b.min.x >= origin.x - kLengthEpsilon && b.min.y >= origin.y - kLengthEpsilon &&
           b.max.x <= origin.x + width + kLengthEpsilon &&
           b.max.y <= origin.y + height + kLengthEpsilon;
  }
};

/// Smallest integer-aligned grid covering the polygon plus `pad` pixels.
inline RasterGrid grid_for(const Polygon& p, int supersample, int pad = 1) {
  const Bounds b = bounds(p);
  RasterGrid g;
  g.origin = {std::floor(b.min.x) - pad, std::floor(b.min.y) - pad};
  g.width = static_cast<int>(std::ceil(b.max.x) - g.origin.x) + pad;
  g.height = static_cast<int>(std::ceil(b.max.y) - g.origin.y) + pad;
  g.supersample = supersample;
  return g;
}

/// Binary coverage at subsample resolution.
struct RasterMask {
  RasterGrid grid;
  std::vector<std::uint8_t> samples;  // row-major, sample_width x sample_height

  bool sample(int sx, int sy) const {
    return samples[static_cast<std::size_t>(sy) * grid.sample_width() + sx] != 0;
  }

  /// Number of inside subsamples of pixel (px, py), in [0, supersample^2].
  int pixel_count(int px, int py) const {
    int count = 0;
    const int ss = grid.supersample;
    for (int dy = 0; dy < ss; ++dy) {
      for (int dx = 0; dx < ss; ++dx) count += sample(px * ss + dx, py * ss + dy);
    }
    return count;
  }

  std::int64_t count() const {
    std::int64_t c = 0;
    for (auto s : samples) c += s;
    return c;
  }

  /// Fractional covered area in px^2.
  double area() const {
    return static_cast<double>(count()) / (grid.supersample * grid.supersample);
  }
};

/// Scanline even-odd fill sampled at subsample centers. Samples within 1e-9
/// of the boundary are left unset, so every set sample is strictly interior.
inline RasterMask rasterize(const Polygon& p, const RasterGrid& g) {
  constexpr double kNearCrossing = 1e-6;
  g.validate();
  if (!g.contains(bounds(p))) {
    throw Error(ErrorCode::OutOfBounds, "polygon exceeds raster grid");
  }
  const int sw = g.sample_width();
  const int sh = g.sample_height();
  const double ss = g.supersample;
  RasterMask mask{g, std::vector<std::uint8_t>(static_cast<std::size_t>(sw) * sh, 0)};

  std::vector<double> crossings;
  std::vector<std::pair<double, double>> on_boundary;
  for (int sy = 0; sy < sh; ++sy) {
    const double y = g.origin.y + (sy + 0.5) / ss;
    crossings.clear();
    on_boundary.clear();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const Point2 a = p[i];
      const Point2 b = p.next(i);
      if ((a.y > y) != (b.y > y)) {
        crossings.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
      }
      if (a.y == y && b.y == y) on_boundary.emplace_back(std::min(a.x, b.x), std::max(a.x, b.x));
      if (a.y == y) on_boundary.emplace_back(a.x, a.x);
    }
    std::sort(crossings.begin(), crossings.end());
    for (double x : crossings) on_boundary.emplace_back(x, x);

    std::uint8_t* row = mask.samples.data() + static_cast<std::size_t>(sy) * sw;
    for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
      const double x0 = crossings[k];
      const double x1 = crossings[k + 1];
      int first = std::max(0, static_cast<int>(std::floor((x0 - g.origin.x) * ss - 0.5)));
      int last = std::min(sw - 1, static_cast<int>(std::ceil((x1 - g.origin.x) * ss - 0.5)));
      for (int sx = first; sx <= last; ++sx) {
        const double x = g.origin.x + (sx + 0.5) / ss;
        if (!(x > x0 && x < x1)) continue;
        // Near a crossing the scanline test can be off by rounding; settle
        // those samples with the exact boundary distance.
        if (x - x0 < kNearCrossing || x1 - x < kNearCrossing) {
          if (boundary_distance(p, {x, y}) <= kLengthEpsilon) continue;
        }
        row[sx] = 1;
      }
    }
    for (const auto& [lo, hi] : on_boundary) {
      int first = std::max(0, static_cast<int>(std::floor((lo - g.origin.x) * ss - 0.5)));
      int last = std::min(sw - 1, static_cast<int>(std::ceil((hi - g.origin.x) * ss - 0.5)));
      for (int sx = first; sx <= last; ++sx) {
        const double x = g.origin.x + (sx + 0.5) / ss;
        if (x >= lo && x <= hi) row[sx] = 0;
      }
    }
  }
  return mask;
}

/// Intersection over union of two rasterized polygons, counted per subsample.
inline double raster_iou(const Polygon& a, const Polygon& b, const RasterGrid& g) {
  const RasterMask ma = rasterize(a, g);
  const RasterMask mb = rasterize(b, g);
  std::int64_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < ma.samples.size(); ++i) {
    inter += ma.samples[i] & mb.samples[i];
    uni += ma.samples[i] | mb.samples[i];
  }
  if (uni == 0) throw Error(ErrorCode::DegenerateGeometry, "union of rasterized masks is empty");
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// The centroid when it is strictly interior; otherwise the interior sample
/// of `g` farthest from the boundary (a rasterized pole of inaccessibility).
inline Point2 interior_anchor(const Polygon& p, const RasterGrid& g) {
  const Point2 c = polygon_centroid(p);
  if (strictly_inside(p, c)) return c;

  const RasterMask mask = rasterize(p, g);
  std::optional<Point2> best;
  double best_dist = 0.0;
  for (int sy = 0; sy < g.sample_height(); ++sy) {
    for (int sx = 0; sx < g.sample_width(); ++sx) {
      if (!mask.sample(sx, sy)) continue;
      const Point2 q = g.sample_center(sx, sy);
      const double d = boundary_distance(p, q);
      if (d > best_dist && point_in_polygon(p, q)) {
        best_dist = d;
        best = q;
      }
    }
  }
  if (!best || best_dist <= kLengthEpsilon) {
    throw Error(ErrorCode::DegenerateGeometry, "no interior sample at this grid resolution");
  }
  return *best;
}

}  // namespace veingrow
