#pragma once

// Per-pixel training targets: centroidness, the FCOS and PolarMask
// centerness baselines, and FPN level routing.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include "veingrow/error.hpp"
#include "veingrow/geometry.hpp"
#include "veingrow/vein_codec.hpp"

namespace veingrow {

/// H x W weights in [0, 1], sampled at pixel centers of `grid`.
struct WeightMap {
  RasterGrid grid;
  std::vector<double> values;

  WeightMap() = default;
  explicit WeightMap(RasterGrid g)
      : grid(g), values(static_cast<std::size_t>(g.width) * g.height, 0.0) {
    grid.supersample = 1;
  }

  int width() const { return grid.width; }
  int height() const { return grid.height; }
  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * grid.width + x]; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * grid.width + x]; }
};

struct BoxExtents {
  double left = 0.0;
  double top = 0.0;
  double right = 0.0;
  double bottom = 0.0;

  double max_extent() const { return std::max({left, top, right, bottom}); }
};

/// Extents from `q` to the sides of an axis-aligned box.
inline BoxExtents box_extents(const Bounds& box, Point2 q) {
  return {q.x - box.min.x, q.y - box.min.y, box.max.x - q.x, box.max.y - q.y};
}

/// A unit-pitch grid whose pixel centers include `anchor` and which covers
/// the polygon with `pad` pixels to spare. Target maps sampled on it have a
/// sample exactly at the anchor.
inline RasterGrid target_grid(const Polygon& p, Point2 anchor, int pad = 1) {
  const Bounds b = bounds(p);
  RasterGrid g;
  g.supersample = 1;
  g.origin.x = anchor.x - 0.5 - std::ceil(anchor.x - b.min.x) - pad;
  g.origin.y = anchor.y - 0.5 - std::ceil(anchor.y - b.min.y) - pad;
  g.width = static_cast<int>(std::ceil(b.max.x - g.origin.x)) + pad;
  g.height = static_cast<int>(std::ceil(b.max.y - g.origin.y)) + pad;
  return g;
}

struct CentroidnessOptions {
  /// When set, the boundary distance is the minimum over this many contour
  /// points spaced evenly by arc length instead of the exact distance.
  std::optional<int> contour_samples;
  /// Overrides the anchor (default: interior_anchor on the map grid).
  std::optional<Point2> anchor;
};

namespace detail {

inline std::vector<Point2> contour_samples(const Polygon& p, int m) {
  std::vector<double> cumulative(p.size() + 1, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    cumulative[i + 1] = cumulative[i] + distance(p[i], p.next(i));
  }
  const double perimeter = cumulative.back();
  std::vector<Point2> out;
  out.reserve(m);
  std::size_t edge = 0;
  for (int s = 0; s < m; ++s) {
    const double target = perimeter * s / m;
    while (edge + 1 < p.size() && cumulative[edge + 1] <= target) ++edge;
    const double len = cumulative[edge + 1] - cumulative[edge];
    const double t = len > 0 ? (target - cumulative[edge]) / len : 0.0;
    out.push_back(p[edge] + t * (p.next(edge) - p[edge]));
  }
  return out;
}

inline double nearest_sample(std::span<const Point2> samples, Point2 q) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) best = std::min(best, distance(s, q));
  return best;
}

}  // namespace detail

/// Centroidness at a single interior point q: d_min / (d_c + d_min).
inline double centroidness_at(const Polygon& p, Point2 anchor, Point2 q,
                              const CentroidnessOptions& opts = {}) {
  if (!point_in_polygon(p, q)) return 0.0;
  double d_min = 0.0;
  if (opts.contour_samples) {
    d_min = detail::nearest_sample(detail::contour_samples(p, *opts.contour_samples), q);
  } else {
    d_min = boundary_distance(p, q);
  }
  const double d_c = distance(q, anchor);
  if (d_min + d_c == 0.0) return 0.0;
  return d_min / (d_c + d_min);
}

inline WeightMap centroidness_map(const Polygon& p, const RasterGrid& g,
                                  const CentroidnessOptions& opts = {}) {
  RasterGrid pixels = g;
  pixels.supersample = 1;
  const Point2 anchor = opts.anchor ? *opts.anchor : interior_anchor(p, pixels);
  const RasterMask mask = rasterize(p, pixels);

  std::vector<Point2> samples;
  if (opts.contour_samples) {
    if (*opts.contour_samples < 3) throw Error(ErrorCode::ParamError, "need >= 3 contour samples");
    samples = detail::contour_samples(p, *opts.contour_samples);
  }

  WeightMap map(pixels);
  for (int y = 0; y < pixels.height; ++y) {
    for (int x = 0; x < pixels.width; ++x) {
      if (!mask.sample(x, y)) continue;
      const Point2 q = pixels.pixel_center(x, y);
      const double d_min =
          samples.empty() ? boundary_distance(p, q) : detail::nearest_sample(samples, q);
      const double d_c = distance(q, anchor);
      map.at(x, y) = d_min / (d_c + d_min);
    }
  }
  return map;
}

/// sqrt(min(l,r)/max(l,r) * min(t,b)/max(t,b)).
inline double fcos_centerness(const BoxExtents& b) {
  const double lr = std::max(b.left, b.right);
  const double tb = std::max(b.top, b.bottom);
  if (lr <= 0.0 || tb <= 0.0) throw Error(ErrorCode::DegenerateGeometry, "zero box extent");
  const double v = (std::min(b.left, b.right) / lr) * (std::min(b.top, b.bottom) / tb);
  return std::sqrt(std::max(0.0, v));
}

/// FCOS centerness of every pixel center inside `box`; zero elsewhere.
inline WeightMap fcos_centerness_map(const Bounds& box, const RasterGrid& g) {
  if (box.width() <= 0.0 || box.height() <= 0.0) {
    throw Error(ErrorCode::DegenerateGeometry, "zero box extent");
  }
  WeightMap map(g);
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      const BoxExtents e = box_extents(box, g.pixel_center(x, y));
      if (e.left < 0 || e.top < 0 || e.right < 0 || e.bottom < 0) continue;
      map.at(x, y) = fcos_centerness(e);
    }
  }
  return map;
}

/// min/max of the n polar ray distances from an interior point.
inline double polarmask_centerness(const Polygon& p, Point2 q, const PolarConfig& cfg) {
  cfg.validate();
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (int k = 0; k < cfg.n; ++k) {
    const double d = ray_cast_distance(p, q, cfg.direction(k));
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return lo / hi;
}

inline WeightMap polarmask_centerness_map(const Polygon& p, const PolarConfig& cfg,
                                          const RasterGrid& g) {
  RasterGrid pixels = g;
  pixels.supersample = 1;
  const RasterMask mask = rasterize(p, pixels);
  WeightMap map(pixels);
  for (int y = 0; y < pixels.height; ++y) {
    for (int x = 0; x < pixels.width; ++x) {
      const Point2 q = pixels.pixel_center(x, y);
      if (mask.sample(x, y) && strictly_inside(p, q)) map.at(x, y) = polarmask_centerness(p, q, cfg);
    }
  }
  return map;
}

/// Pyramid level 3..7 for the largest box extent. Ranges are (lo, hi]:
/// (-1,64] -> 3, (64,128] -> 4, (128,256] -> 5, (256,512] -> 6, above -> 7.
inline int fpn_level_assign(const BoxExtents& b) {
  const double m = b.max_extent();
  if (m <= 64.0) return 3;
  if (m <= 128.0) return 4;
  if (m <= 256.0) return 5;
  if (m <= 512.0) return 6;
  return 7;
}

/// Binary PGM: "P5\n<w> <h>\n255\n" followed by round(255 * w) per pixel.
inline void write_pgm(std::ostream& out, const WeightMap& map) {
  out << "P5\n" << map.width() << ' ' << map.height() << "\n255\n";
  for (double v : map.values) {
    const long byte = std::lround(255.0 * std::clamp(v, 0.0, 1.0));
    out.put(static_cast<char>(static_cast<unsigned char>(byte)));
  }
}

/// Row-major CSV, one image row per line, six decimals.
inline void write_csv(std::ostream& out, const WeightMap& map) {
  out << std::fixed << std::setprecision(6);
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      if (x) out << ',';
      out << map.at(x, y);
    }
    out << '\n';
  }
}

}  // namespace veingrow
