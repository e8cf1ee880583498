#pragma once

// COCO-style annotation loading, corpus filtering, and synthetic fixtures.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "veingrow/error.hpp"
#include "veingrow/geometry.hpp"

namespace veingrow {

struct BoxXYWH {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
};

struct AnnotationRecord {
  std::int64_t instance_id = 0;
  std::int64_t image_id = 0;
  std::int64_t category_id = 0;
  std::vector<Polygon> polygons;
  BoxXYWH bbox;
  double area = 0.0;
};

struct SkippedAnnotation {
  std::int64_t instance_id = 0;
  std::string reason;
};

struct CocoParseResult {
  std::vector<AnnotationRecord> records;
  std::vector<SkippedAnnotation> skipped;
  int rle_skipped = 0;
};

namespace detail {

inline std::optional<std::string> read_rings(const nlohmann::json& seg,
                                             std::vector<Polygon>& rings) {
  if (!seg.is_array() || seg.empty()) return "segmentation is not a polygon list";
  for (const auto& flat : seg) {
    if (!flat.is_array()) return "segmentation ring is not a list";
    if (flat.size() % 2 != 0) return "odd coordinate count";
    if (flat.size() < 6) return "fewer than 6 coordinates";
    std::vector<Point2> pts;
    pts.reserve(flat.size() / 2);
    for (std::size_t i = 0; i < flat.size(); i += 2) {
      if (!flat[i].is_number() || !flat[i + 1].is_number()) return "non-numeric coordinate";
      pts.push_back({flat[i].get<double>(), flat[i + 1].get<double>()});
    }
    if (auto defect = polygon_defect(pts)) return "invalid polygon: " + *defect;
    rings.emplace_back(std::move(pts));
  }
  return std::nullopt;
}

}  // namespace detail

/// Parses an already-loaded COCO document. RLE segmentations and malformed
/// or non-simple polygons are skipped and reported, never repaired.
inline CocoParseResult parse_coco_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("annotations") || !doc["annotations"].is_array()) {
    throw Error(ErrorCode::ParseError, "document has no \"annotations\" array");
  }
  CocoParseResult out;
  for (const auto& ann : doc["annotations"]) {
    const std::int64_t id = ann.value("id", std::int64_t{-1});
    if (!ann.contains("segmentation")) {
      out.skipped.push_back({id, "missing segmentation"});
      continue;
    }
    const auto& seg = ann["segmentation"];
    if (seg.is_object()) {
      ++out.rle_skipped;
      out.skipped.push_back({id, "RLE segmentation"});
      continue;
    }
    AnnotationRecord rec;
    rec.instance_id = id;
    rec.image_id = ann.value("image_id", std::int64_t{0});
    rec.category_id = ann.value("category_id", std::int64_t{0});
    if (auto reason = detail::read_rings(seg, rec.polygons)) {
      out.skipped.push_back({id, *reason});
      continue;
    }

    double ring_area = 0.0;
    Bounds box = bounds(rec.polygons.front());
    for (const auto& ring : rec.polygons) {
      ring_area += area(ring);
      const Bounds b = bounds(ring);
      box.min.x = std::min(box.min.x, b.min.x);
      box.min.y = std::min(box.min.y, b.min.y);
      box.max.x = std::max(box.max.x, b.max.x);
      box.max.y = std::max(box.max.y, b.max.y);
    }
    rec.area = ann.contains("area") && ann["area"].is_number() ? ann["area"].get<double>() : ring_area;
    if (ann.contains("bbox") && ann["bbox"].is_array() && ann["bbox"].size() == 4) {
      const auto& b = ann["bbox"];
      rec.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
    } else {
      rec.bbox = {box.min.x, box.min.y, box.width(), box.height()};
    }
    if (!(rec.area > 0.0)) {
      out.skipped.push_back({id, "non-positive area"});
      continue;
    }
    out.records.push_back(std::move(rec));
  }
  if (out.records.empty()) throw Error(ErrorCode::EmptyCorpus, "no usable polygon annotations");
  return out;
}

inline CocoParseResult parse_coco(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  return parse_coco_json(doc);
}

struct CorpusFilter {
  double min_area = 0.0;
  std::optional<std::set<std::int64_t>> categories;
  std::optional<std::size_t> max_instances;
  bool skip_multipart = true;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["min_area"] = min_area;
    j["categories"] = categories ? nlohmann::ordered_json(*categories) : nlohmann::ordered_json(nullptr);
    j["max_instances"] = max_instances ? nlohmann::ordered_json(*max_instances) : nlohmann::ordered_json(nullptr);
    j["skip_multipart"] = skip_multipart;
    return j;
  }
};

/// Order-preserving filter; truncation happens after all other criteria.
inline std::vector<AnnotationRecord> apply_filter(const std::vector<AnnotationRecord>& records,
                                                  const CorpusFilter& f) {
  if (f.min_area < 0.0) throw Error(ErrorCode::ParamError, "min_area must be >= 0");
  std::vector<AnnotationRecord> out;
  for (const auto& r : records) {
    if (f.max_instances && out.size() >= *f.max_instances) break;
    if (r.area < f.min_area) continue;
    if (f.categories && !f.categories->count(r.category_id)) continue;
    if (f.skip_multipart && r.polygons.size() > 1) continue;
    out.push_back(r);
  }
  return out;
}

/// The ring a single-contour representation encodes: the largest by area.
inline const Polygon& primary_ring(const AnnotationRecord& r) {
  return *std::max_element(r.polygons.begin(), r.polygons.end(),
                           [](const Polygon& a, const Polygon& b) { return area(a) < area(b); });
}

// ---------------------------------------------------------------------------
// Synthetic shapes

enum class ShapeKind { Circle, Square, Star, NotchedSquare, RandomBlob };

inline ShapeKind parse_shape_kind(std::string_view s) {
  if (s == "circle") return ShapeKind::Circle;
  if (s == "square") return ShapeKind::Square;
  if (s == "star") return ShapeKind::Star;
  if (s == "notched_square") return ShapeKind::NotchedSquare;
  if (s == "random_blob") return ShapeKind::RandomBlob;
  throw Error(ErrorCode::ParamError, "unknown shape kind '" + std::string(s) + "'");
}

struct ShapeParams {
  Point2 center{0.0, 0.0};
  double size = 50.0;        // radius for round shapes, side for squares
  int vertices = 512;        // circle / random_blob vertex count
  int star_points = 5;
  double inner_ratio = 0.5;  // star inner radius / outer radius
  double notch_width = 30.0;
  double notch_depth = 30.0;
  double roughness = 0.35;   // random_blob radial variation
};

namespace detail {

inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Deterministic fixture polygon. The notched square has its notch cut into
/// the middle of the top (minimum y) side.
inline Polygon synthesize_shape(ShapeKind kind, const ShapeParams& p, std::uint64_t seed = 0) {
  if (!(p.size > 0.0)) throw Error(ErrorCode::ParamError, "size must be positive");
  const Point2 c = p.center;
  switch (kind) {
    case ShapeKind::Circle: {
      if (p.vertices < 8) throw Error(ErrorCode::ParamError, "circle needs >= 8 vertices");
      std::vector<Point2> v;
      for (int i = 0; i < p.vertices; ++i) {
        v.push_back(c + p.size * unit_vector(kTwoPi * i / p.vertices));
      }
      return Polygon::validated(std::move(v));
    }
    case ShapeKind::Square: {
      const double h = 0.5 * p.size;
      return Polygon::validated({{c.x - h, c.y - h}, {c.x + h, c.y - h}, {c.x + h, c.y + h}, {c.x - h, c.y + h}});
    }
    case ShapeKind::Star: {
      if (p.star_points < 3) throw Error(ErrorCode::ParamError, "star needs >= 3 points");
      if (!(p.inner_ratio > 0.0 && p.inner_ratio < 1.0)) {
        throw Error(ErrorCode::ParamError, "inner_ratio must be in (0,1)");
      }
      std::vector<Point2> v;
      for (int i = 0; i < 2 * p.star_points; ++i) {
        const double r = (i % 2 == 0) ? p.size : p.size * p.inner_ratio;
        v.push_back(c + r * unit_vector(kPi * i / p.star_points - kPi / 2));
      }
      return Polygon::validated(std::move(v));
    }
    case ShapeKind::NotchedSquare: {
      const double s = p.size;
      if (!(p.notch_width > 0.0 && p.notch_width < s && p.notch_depth > 0.0 && p.notch_depth < s)) {
        throw Error(ErrorCode::ParamError, "notch must fit inside the square");
      }
      const double x0 = c.x - 0.5 * s, y0 = c.y - 0.5 * s;
      const double a = c.x - 0.5 * p.notch_width, b = c.x + 0.5 * p.notch_width;
      return Polygon::validated({{x0, y0},
                                 {a, y0},
                                 {a, y0 + p.notch_depth},
                                 {b, y0 + p.notch_depth},
                                 {b, y0},
                                 {x0 + s, y0},
                                 {x0 + s, y0 + s},
                                 {x0, y0 + s}});
    }
    case ShapeKind::RandomBlob: {
      if (p.vertices < 8) throw Error(ErrorCode::ParamError, "random_blob needs >= 8 vertices");
      if (!(p.roughness >= 0.0 && p.roughness <= 0.9)) {
        throw Error(ErrorCode::ParamError, "roughness must be in [0,0.9]");
      }
      std::mt19937_64 rng(seed);
      // Low-order harmonics give lobes and bays; per-vertex noise adds detail.
      constexpr int kHarmonics = 6;
      double amp[kHarmonics], phase[kHarmonics];
      for (int h = 0; h < kHarmonics; ++h) {
        amp[h] = detail::unit_uniform(rng) / (h + 1);
        phase[h] = kTwoPi * detail::unit_uniform(rng);
      }
      double amp_sum = 0.0;
      for (double a : amp) amp_sum += a;
      std::vector<Point2> v;
      for (int i = 0; i < p.vertices; ++i) {
        const double theta = kTwoPi * (i + 0.8 * (detail::unit_uniform(rng) - 0.5)) / p.vertices;
        double wave = 0.0;
        for (int h = 0; h < kHarmonics; ++h) wave += amp[h] * std::cos((h + 2) * theta + phase[h]);
        const double noise = 0.1 * (detail::unit_uniform(rng) - 0.5);
        const double r = p.size * (1.0 + p.roughness * (wave / amp_sum + noise));
        v.push_back(c + r * unit_vector(theta));
      }
      return Polygon::validated(std::move(v));
    }
  }
  throw Error(ErrorCode::ParamError, "unknown shape kind");
}

/// Minimal COCO document holding one annotation per polygon.
inline nlohmann::json to_coco_json(const std::vector<Polygon>& polygons, std::int64_t first_id = 1) {
  nlohmann::json doc;
  doc["images"] = nlohmann::json::array();
  doc["categories"] = nlohmann::json::array({{{"id", 1}, {"name", "object"}}});
  doc["annotations"] = nlohmann::json::array();
  for (std::size_t i = 0; i < polygons.size(); ++i) {
    const Polygon& p = polygons[i];
    std::vector<double> flat;
    for (const auto& v : p.vertices()) {
      flat.push_back(v.x);
      flat.push_back(v.y);
    }
    const Bounds b = bounds(p);
    const auto id = first_id + static_cast<std::int64_t>(i);
    doc["images"].push_back({{"id", id}});
    doc["annotations"].push_back({{"id", id},
                                  {"image_id", id},
                                  {"category_id", 1},
                                  {"iscrowd", 0},
                                  {"area", area(p)},
                                  {"bbox", {b.min.x, b.min.y, b.width(), b.height()}},
                                  {"segmentation", nlohmann::json::array({flat})}});
  }
  return doc;
}

}  // namespace veingrow
