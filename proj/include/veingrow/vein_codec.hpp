#pragma once

// Vein representation of a single instance contour.
//
// A root inside the mask sprouts n major veins along a shared polar direction
// set. Each pair of adjacent major veins bounds a "part". For every part a
// node is searched between the two veins; when the boundary between the two
// major endpoints turns by more than a half turn around the node the part is
// twisty and is refined by minor veins grown from the node along the same
// direction set. Decoding walks the endpoints in increasing angle.
//
// Distances come from an OffsetOracle, which in this library is the exact
// ray cast against the ground-truth polygon.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "veingrow/error.hpp"
#include "veingrow/geometry.hpp"

namespace veingrow {

struct PolarConfig {
  int n = 8;
  double angle_offset = 0.0;

  void validate() const {
    if (n < 3) throw Error(ErrorCode::ParamError, "direction count must be >= 3");
    if (!std::isfinite(angle_offset)) throw Error(ErrorCode::ParamError, "non-finite angle offset");
  }

  int wrap(int k) const { return ((k % n) + n) % n; }

  double theta(int k) const { return angle_offset + kTwoPi * wrap(k) / n; }

  /// Unit vector of direction k. Quarter-turn directions are returned exactly
  /// when there is no offset so axis-aligned traces stay exact.
  Point2 direction(int k) const {
    k = wrap(k);
    if (angle_offset == 0.0 && (4 * k) % n == 0) {
      switch ((4 * k) / n) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, 1.0};
        case 2: return {-1.0, 0.0};
        case 3: return {0.0, -1.0};
      }
    }
    return unit_vector(theta(k));
  }
};

/// Ground-truth offset map: distances from any interior point to the contour
/// along every direction of the polar configuration.
class OffsetOracle {
 public:
  OffsetOracle(Polygon polygon, PolarConfig cfg)
      : polygon_(std::make_shared<const Polygon>(std::move(polygon))), cfg_(cfg) {
    cfg_.validate();
  }

  const Polygon& polygon() const { return *polygon_; }
  const PolarConfig& config() const { return cfg_; }

  double distance(Point2 q, int k) const {
    return ray_cast_distance(*polygon_, q, cfg_.direction(k));
  }

  std::vector<double> operator()(Point2 q) const {
    if (!strictly_inside(*polygon_, q)) {
      throw Error(ErrorCode::OriginOutsideMask, "oracle query outside the polygon");
    }
    std::vector<double> out(cfg_.n);
    for (int k = 0; k < cfg_.n; ++k) out[k] = distance(q, k);
    return out;
  }

 private:
  std::shared_ptr<const Polygon> polygon_;
  PolarConfig cfg_;
};

inline OffsetOracle build_offset_oracle(const Polygon& p, const PolarConfig& cfg) {
  return OffsetOracle(p, cfg);
}

struct MajorVeinSet {
  Point2 root;
  std::vector<double> distances;
  std::vector<Point2> endpoints;

  friend bool operator==(const MajorVeinSet&, const MajorVeinSet&) = default;
};

struct PartRefinement {
  int part_index = 0;
  // Empty when the node search escaped the mask.
  std::optional<Point2> node;
  bool is_twisty = false;
  std::vector<int> minor_directions;
  std::vector<Point2> minor_endpoints;

  friend bool operator==(const PartRefinement&, const PartRefinement&) = default;
};

struct VeinTree {
  PolarConfig config;
  MajorVeinSet majors;
  std::vector<PartRefinement> parts;
  int search_depth = 3;

  int twisty_count() const {
    int c = 0;
    for (const auto& part : parts) c += part.is_twisty;
    return c;
  }

  friend bool operator==(const VeinTree& a, const VeinTree& b) {
    return a.config.n == b.config.n && a.config.angle_offset == b.config.angle_offset &&
           a.majors == b.majors && a.parts == b.parts && a.search_depth == b.search_depth;
  }
};

inline MajorVeinSet grow_major_veins(const OffsetOracle& oracle, Point2 root,
                                     const PolarConfig& cfg) {
  MajorVeinSet set{root, oracle(root), {}};
  set.endpoints.reserve(cfg.n);
  for (int k = 0; k < cfg.n; ++k) {
    set.endpoints.push_back(root + set.distances[k] * cfg.direction(k));
  }
  return set;
}

/// Node of part k (between directions k and k+1) reached after `depth`
/// two-leg probes. Probe i walks a fraction of the current distance along
/// direction k, then a fraction of the distance along direction k+1; the
/// fractions are 1/(2(s-i)-1) and 1/(2(s-i)-2), and 1/2 for both on the last
/// probe.
inline Point2 search_node(const OffsetOracle& oracle, Point2 root, int part, int depth,
                          const PolarConfig& cfg) {
  if (depth < 1) throw Error(ErrorCode::ParamError, "search depth must be >= 1");
  const Point2 dir_pre = cfg.direction(part);
  const Point2 dir_nxt = cfg.direction(part + 1);

  auto probe = [&](Point2 from, int k) {
    if (!strictly_inside(oracle.polygon(), from)) {
      throw Error(ErrorCode::NodeSearchEscaped, "node search left the mask");
    }
    return oracle.distance(from, k);
  };

  Point2 c = root;
  for (int i = 0; i < depth; ++i) {
    double lambda_pre = 0.5;
    double lambda_nxt = 0.5;
    if (i != depth - 1) {
      lambda_pre = 1.0 / (2.0 * (depth - i) - 1.0);
      lambda_nxt = 1.0 / (2.0 * (depth - i) - 2.0);
    }
    Point2 node = c + lambda_pre * probe(c, part) * dir_pre;
    node = node + lambda_nxt * probe(node, part + 1) * dir_nxt;
    c = node;
  }
  if (!strictly_inside(oracle.polygon(), c)) {
    throw Error(ErrorCode::NodeSearchEscaped, "node landed outside the mask");
  }
  return c;
}

/// Counter-clockwise (increasing theta) sweep in [0, 2pi) from a to b.
inline double sweep_angle(Point2 a, Point2 b) {
  double s = std::atan2(cross(a, b), dot(a, b));
  if (s < 0.0) s += kTwoPi;
  return s;
}

/// Sweeps within this many radians of a half turn count as straight.
inline constexpr double kTwistyTolerance = 1e-9;

inline bool detect_twisty(Point2 node, Point2 e_pre, Point2 e_nxt, const PolarConfig& cfg) {
  (void)cfg;
  if (distance(node, e_pre) < kLengthEpsilon || distance(node, e_nxt) < kLengthEpsilon) {
    throw Error(ErrorCode::DegenerateGeometry, "node coincides with a major endpoint");
  }
  return sweep_angle(e_pre - node, e_nxt - node) > kPi + kTwistyTolerance;
}

/// Minor veins for every global direction strictly inside the sweep from
/// node->e_pre to node->e_nxt, ordered along the sweep.
inline std::vector<std::pair<int, Point2>> grow_minor_veins(const OffsetOracle& oracle, Point2 node,
                                                            Point2 e_pre, Point2 e_nxt,
                                                            const PolarConfig& cfg) {
  if (!strictly_inside(oracle.polygon(), node)) {
    throw Error(ErrorCode::OriginOutsideMask, "node is not inside the polygon");
  }
  const Point2 v_pre = e_pre - node;
  const double start = std::atan2(v_pre.y, v_pre.x);
  const double sweep = sweep_angle(v_pre, e_nxt - node);

  std::vector<std::pair<double, int>> picked;
  for (int j = 0; j < cfg.n; ++j) {
    double rel = std::remainder(cfg.theta(j) - start, kTwoPi);
    if (rel < 0.0) rel += kTwoPi;
    if (rel > 0.0 && rel < sweep) picked.emplace_back(rel, j);
  }
  std::sort(picked.begin(), picked.end());

  std::vector<std::pair<int, Point2>> veins;
  veins.reserve(picked.size());
  for (const auto& [rel, j] : picked) {
    veins.emplace_back(j, node + oracle.distance(node, j) * cfg.direction(j));
  }
  return veins;
}

inline VeinTree encode(const Polygon& p, const PolarConfig& cfg, int depth, const RasterGrid& g) {
  cfg.validate();
  if (depth < 1) throw Error(ErrorCode::ParamError, "search depth must be >= 1");
  const OffsetOracle oracle(p, cfg);
  const Point2 root = interior_anchor(p, g);

  VeinTree tree{cfg, grow_major_veins(oracle, root, cfg), {}, depth};
  tree.parts.reserve(cfg.n);
  for (int k = 0; k < cfg.n; ++k) {
    PartRefinement part;
    part.part_index = k;
    const Point2 e_pre = tree.majors.endpoints[k];
    const Point2 e_nxt = tree.majors.endpoints[cfg.wrap(k + 1)];
    try {
      const Point2 node = search_node(oracle, root, k, depth, cfg);
      part.node = node;
      part.is_twisty = detect_twisty(node, e_pre, e_nxt, cfg);
      if (part.is_twisty) {
        for (const auto& [dir, endpoint] : grow_minor_veins(oracle, node, e_pre, e_nxt, cfg)) {
          part.minor_directions.push_back(dir);
          part.minor_endpoints.push_back(endpoint);
        }
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NodeSearchEscaped && e.code() != ErrorCode::DegenerateGeometry) {
        throw;
      }
      // Escaped or degenerate searches keep the coarse contour for this part.
      part.is_twisty = false;
      part.minor_directions.clear();
      part.minor_endpoints.clear();
      if (e.code() == ErrorCode::NodeSearchEscaped) part.node.reset();
    }
    tree.parts.push_back(std::move(part));
  }
  return tree;
}

/// Contour assembled as major endpoint k followed by the minor endpoints of
/// part k, for k in increasing angle. With use_minor = false only the major
/// endpoints are used.
inline Polygon decode(const VeinTree& t, bool use_minor = true) {
  std::vector<Point2> contour;
  for (std::size_t k = 0; k < t.majors.endpoints.size(); ++k) {
    contour.push_back(t.majors.endpoints[k]);
    if (use_minor && k < t.parts.size()) {
      const auto& minors = t.parts[k].minor_endpoints;
      contour.insert(contour.end(), minors.begin(), minors.end());
    }
  }
  if (contour.size() < 3) {
    throw Error(ErrorCode::DegenerateGeometry, "fewer than 3 contour points");
  }
  return Polygon(std::move(contour));
}

struct CoverRatios {
  double major_only = 0.0;
  double veinmask = 0.0;
};

/// Both cover ratios from a single encoding.
inline CoverRatios cover_ratios(const Polygon& p, const PolarConfig& cfg, int depth,
                                const RasterGrid& g) {
  const VeinTree tree = encode(p, cfg, depth, g);
  CoverRatios r;
  r.major_only = raster_iou(p, decode(tree, false), g);
  r.veinmask = tree.twisty_count() == 0 ? r.major_only : raster_iou(p, decode(tree, true), g);
  return r;
}

inline double cover_ratio(const Polygon& p, const PolarConfig& cfg, int depth, const RasterGrid& g,
                          bool use_minor) {
  const VeinTree tree = encode(p, cfg, depth, g);
  return raster_iou(p, decode(tree, use_minor), g);
}

// Serialization: one object per instance, keys in a fixed order.

inline nlohmann::ordered_json to_json(const VeinTree& t, std::int64_t instance_id) {
  using nlohmann::ordered_json;
  auto point = [](Point2 q) { return ordered_json::array({q.x, q.y}); };
  ordered_json j;
  j["instance_id"] = instance_id;
  j["n"] = t.config.n;
  j["s"] = t.search_depth;
  j["root"] = point(t.majors.root);
  j["major_distances"] = t.majors.distances;
  ordered_json parts = ordered_json::array();
  for (const auto& part : t.parts) {
    ordered_json pj;
    pj["index"] = part.part_index;
    pj["node"] = part.node ? point(*part.node) : ordered_json(nullptr);
    pj["twisty"] = part.is_twisty;
    ordered_json minor = ordered_json::array();
    for (std::size_t i = 0; i < part.minor_directions.size(); ++i) {
      ordered_json mj;
      mj["dir"] = part.minor_directions[i];
      mj["endpoint"] = point(part.minor_endpoints[i]);
      minor.push_back(std::move(mj));
    }
    pj["minor"] = std::move(minor);
    parts.push_back(std::move(pj));
  }
  j["parts"] = std::move(parts);
  return j;
}

/// Inverse of to_json. Major endpoints are recomputed from the distances.
inline VeinTree vein_tree_from_json(const nlohmann::ordered_json& j) {
  try {
    auto point = [](const nlohmann::ordered_json& a) {
      return Point2{a.at(0).get<double>(), a.at(1).get<double>()};
    };
    VeinTree t;
    t.config.n = j.at("n").get<int>();
    t.config.validate();
    t.search_depth = j.at("s").get<int>();
    t.majors.root = point(j.at("root"));
    t.majors.distances = j.at("major_distances").get<std::vector<double>>();
    if (static_cast<int>(t.majors.distances.size()) != t.config.n) {
      throw Error(ErrorCode::ParseError, "major_distances length differs from n");
    }
    for (int k = 0; k < t.config.n; ++k) {
      t.majors.endpoints.push_back(t.majors.root + t.majors.distances[k] * t.config.direction(k));
    }
    for (const auto& pj : j.at("parts")) {
      PartRefinement part;
      part.part_index = pj.at("index").get<int>();
      if (!pj.at("node").is_null()) part.node = point(pj.at("node"));
      part.is_twisty = pj.at("twisty").get<bool>();
      for (const auto& mj : pj.at("minor")) {
        part.minor_directions.push_back(mj.at("dir").get<int>());
        part.minor_endpoints.push_back(point(mj.at("endpoint")));
      }
      t.parts.push_back(std::move(part));
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

}  // namespace veingrow
