#pragma once

// Corpus-level commands behind the `veingrow` executable. They live in the
// library so tests can drive them in-process; the executable only parses
// flags and wires logging.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "veingrow/error.hpp"
#include "veingrow/geometry.hpp"
#include "veingrow/ingest.hpp"
#include "veingrow/losses.hpp"
#include "veingrow/targets.hpp"
#include "veingrow/vein_codec.hpp"

namespace veingrow {

inline constexpr std::string_view kToolVersion = "0.3.0";

enum class ExitCode : int { Ok = 0, CheckFailed = 1, EmptyCorpus = 2, IoError = 3 };

enum class LogLevel { Error, Warn, Info, Debug };

/// Log sink; the executable forwards to spdlog, tests capture lines.
using Logger = std::function<void(LogLevel, const std::string&)>;

struct RunConfig {
  std::string input;
  std::string out_dir = ".";
  std::vector<int> complexities{4, 8, 12, 20, 24};
  int depth = 3;
  int supersample = 4;
  bool use_minor = true;
  CorpusFilter filter;
  std::uint64_t seed = 0;
  int workers = 1;
  /// loss-check only: added to every analytic gradient (harness self-test).
  double corrupt_gradient = 0.0;

  void validate() const {
    if (complexities.empty()) throw Error(ErrorCode::ParamError, "no complexities given");
    for (int n : complexities) {
      if (n < 3) throw Error(ErrorCode::ParamError, "complexities must be >= 3");
    }
    if (depth < 1) throw Error(ErrorCode::ParamError, "depth must be >= 1");
    if (workers < 1) throw Error(ErrorCode::ParamError, "workers must be >= 1");
    RasterGrid{1, 1, supersample}.validate();
  }
};

namespace detail {

inline void log(const Logger& logger, LogLevel level, const std::string& msg) {
  if (logger) logger(level, msg);
}

/// Runs fn(i) for i in [0, count) on `workers` threads. fn must not throw.
template <class Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  const std::size_t threads = std::min<std::size_t>(std::max(1, workers), count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

inline std::string fixed6(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << v;
  return os.str();
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline std::filesystem::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::IoError, "cannot create output directory " + dir);
  }
  return dir;
}

inline std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

struct LoadedCorpus {
  std::vector<AnnotationRecord> records;  // sorted by instance_id
  std::size_t parsed = 0;
  std::size_t skipped = 0;
  int rle_skipped = 0;
};

inline LoadedCorpus load_corpus(const RunConfig& cfg, const Logger& logger) {
  CocoParseResult parsed = parse_coco(cfg.input);
  for (const auto& s : parsed.skipped) {
    log(logger, LogLevel::Warn, "skip " + std::to_string(s.instance_id) + ": " + s.reason);
  }
  LoadedCorpus corpus;
  corpus.parsed = parsed.records.size();
  corpus.skipped = parsed.skipped.size();
  corpus.rle_skipped = parsed.rle_skipped;
  corpus.records = apply_filter(parsed.records, cfg.filter);
  if (corpus.records.empty()) throw Error(ErrorCode::EmptyCorpus, "filtered corpus is empty");
  std::stable_sort(corpus.records.begin(), corpus.records.end(),
                   [](const auto& a, const auto& b) { return a.instance_id < b.instance_id; });
  return corpus;
}

/// Linear interpolation between closest ranks on sorted data.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline nlohmann::ordered_json base_metadata(const RunConfig& cfg, std::string_view command) {
  nlohmann::ordered_json m;
  m["tool"] = "veingrow";
  m["version"] = kToolVersion;
  m["command"] = command;
  m["generated_at"] = utc_timestamp();
  m["input"] = cfg.input;
  m["filter"] = cfg.filter.to_json();
  m["complexities"] = cfg.complexities;
  m["depth"] = cfg.depth;
  m["supersample"] = cfg.supersample;
  m["use_minor"] = cfg.use_minor;
  m["seed"] = cfg.seed;
  m["workers"] = cfg.workers;
  return m;
}

/// Maps a library error onto the stable process exit code.
inline ExitCode exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::EmptyCorpus:
    case ErrorCode::ParseError: return ExitCode::EmptyCorpus;
    case ErrorCode::IoError: return ExitCode::IoError;
    default: return ExitCode::CheckFailed;
  }
}

}  // namespace detail

struct CoverRatioRow {
  int complexity = 0;
  std::string method;  // "major_only" | "veinmask"
  double mean = 0.0;
  double median = 0.0;
  double p10 = 0.0;
  std::size_t instance_count = 0;
};

struct InstanceCover {
  std::int64_t instance_id = 0;
  int complexity = 0;
  std::optional<CoverRatios> ratios;
  int twisty_parts = 0;
  std::string failure;
};

/// Cover ratios of every (instance, complexity) pair, ordered by instance id
/// then by position in the complexity list.
inline std::vector<InstanceCover> compute_cover_ratios(const std::vector<AnnotationRecord>& records,
                                                       const RunConfig& cfg) {
  const std::size_t nc = cfg.complexities.size();
  std::vector<InstanceCover> out(records.size() * nc);
  detail::parallel_for(out.size(), cfg.workers, [&](std::size_t idx) {
    const auto& rec = records[idx / nc];
    InstanceCover& cell = out[idx];
    cell.instance_id = rec.instance_id;
    cell.complexity = cfg.complexities[idx % nc];
    try {
      const Polygon& poly = primary_ring(rec);
      const RasterGrid grid = grid_for(poly, cfg.supersample);
      const PolarConfig polar{cell.complexity, 0.0};
      const VeinTree tree = encode(poly, polar, cfg.depth, grid);
      CoverRatios r;
      r.major_only = raster_iou(poly, decode(tree, false), grid);
      r.veinmask = tree.twisty_count() == 0 ? r.major_only : raster_iou(poly, decode(tree, true), grid);
      cell.ratios = r;
      cell.twisty_parts = tree.twisty_count();
    } catch (const Error& e) {
      cell.failure = e.what();
    }
  });
  return out;
}

inline std::vector<CoverRatioRow> summarize_cover_ratios(const std::vector<InstanceCover>& cells,
                                                         const RunConfig& cfg) {
  std::vector<CoverRatioRow> rows;
  for (int n : cfg.complexities) {
    std::vector<double> major, vein;
    for (const auto& c : cells) {
      if (c.complexity != n || !c.ratios) continue;
      major.push_back(c.ratios->major_only);
      vein.push_back(c.ratios->veinmask);
    }
    auto row = [&](const char* method, const std::vector<double>& v) {
      double sum = 0.0;
      for (double x : v) sum += x;
      return CoverRatioRow{n,
                           method,
                           v.empty() ? std::nan("") : sum / static_cast<double>(v.size()),
                           detail::quantile(v, 0.5),
                           detail::quantile(v, 0.1),
                           v.size()};
    };
    rows.push_back(row("major_only", major));
    if (cfg.use_minor) rows.push_back(row("veinmask", vein));
  }
  return rows;
}

/// cover_ratio.csv + cover_ratio_instances.csv + cover_ratio_meta.json.
inline ExitCode cmd_cover_ratio(const RunConfig& cfg, const Logger& logger) {
  try {
    cfg.validate();
    const auto corpus = detail::load_corpus(cfg, logger);
    const auto out_dir = detail::prepare_out_dir(cfg.out_dir);
    const auto start = std::chrono::steady_clock::now();
    const auto cells = compute_cover_ratios(corpus.records, cfg);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    nlohmann::ordered_json failures = nlohmann::ordered_json::array();
    for (const auto& c : cells) {
      if (c.ratios) continue;
      detail::log(logger, LogLevel::Warn,
                  "instance " + std::to_string(c.instance_id) + " n=" + std::to_string(c.complexity) +
                      " failed: " + c.failure);
      failures.push_back({{"instance_id", c.instance_id}, {"complexity", c.complexity}, {"reason", c.failure}});
    }

    const auto rows = summarize_cover_ratios(cells, cfg);
    {
      auto out = detail::open_out(out_dir / "cover_ratio.csv");
      out << "complexity,method,mean_iou,median_iou,p10_iou,instance_count\n";
      for (const auto& r : rows) {
        out << r.complexity << ',' << r.method << ',' << detail::fixed6(r.mean) << ','
            << detail::fixed6(r.median) << ',' << detail::fixed6(r.p10) << ',' << r.instance_count
            << '\n';
      }
    }
    {
      auto out = detail::open_out(out_dir / "cover_ratio_instances.csv");
      out << "instance_id,complexity,major_only_iou,veinmask_iou,twisty_parts\n";
      for (const auto& c : cells) {
        if (!c.ratios) continue;
        out << c.instance_id << ',' << c.complexity << ',' << detail::fixed6(c.ratios->major_only)
            << ',' << detail::fixed6(c.ratios->veinmask) << ',' << c.twisty_parts << '\n';
      }
    }
    auto meta = detail::base_metadata(cfg, "cover-ratio");
    meta["instances_parsed"] = corpus.parsed;
    meta["annotations_skipped"] = corpus.skipped;
    meta["rle_skipped"] = corpus.rle_skipped;
    meta["instances_used"] = corpus.records.size();
    meta["failures"] = std::move(failures);
    meta["elapsed_seconds"] = seconds;
    detail::open_out(out_dir / "cover_ratio_meta.json") << meta.dump(2) << '\n';
    detail::log(logger, LogLevel::Info,
                "cover-ratio: " + std::to_string(corpus.records.size()) + " instances in " +
                    detail::fixed6(seconds) + " s");
    return ExitCode::Ok;
  } catch (const Error& e) {
    detail::log(logger, LogLevel::Error, e.what());
    return detail::exit_code_for(e);
  }
}

/// veintrees.jsonl: one line per (instance, complexity).
inline ExitCode cmd_encode(const RunConfig& cfg, const Logger& logger) {
  try {
    cfg.validate();
    const auto corpus = detail::load_corpus(cfg, logger);
    const auto out_dir = detail::prepare_out_dir(cfg.out_dir);
    const std::size_t nc = cfg.complexities.size();
    std::vector<std::string> lines(corpus.records.size() * nc);
    std::vector<std::string> errors(lines.size());
    detail::parallel_for(lines.size(), cfg.workers, [&](std::size_t idx) {
      const auto& rec = corpus.records[idx / nc];
      try {
        const Polygon& poly = primary_ring(rec);
        const PolarConfig polar{cfg.complexities[idx % nc], 0.0};
        VeinTree tree = encode(poly, polar, cfg.depth, grid_for(poly, cfg.supersample));
        if (!cfg.use_minor) {
          for (auto& part : tree.parts) {
            part.is_twisty = false;
            part.minor_directions.clear();
            part.minor_endpoints.clear();
          }
        }
        lines[idx] = to_json(tree, rec.instance_id).dump();
      } catch (const Error& e) {
        errors[idx] = e.what();
      }
    });
    auto out = detail::open_out(out_dir / "veintrees.jsonl");
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (!errors[i].empty()) {
        detail::log(logger, LogLevel::Warn,
                    "instance " + std::to_string(corpus.records[i / nc].instance_id) + " failed: " + errors[i]);
        continue;
      }
      out << lines[i] << '\n';
    }
    return ExitCode::Ok;
  } catch (const Error& e) {
    detail::log(logger, LogLevel::Error, e.what());
    return detail::exit_code_for(e);
  }
}

/// Per instance: centroidness, FCOS and PolarMask centerness, each as PGM and
/// CSV, plus targets_meta.json.
inline ExitCode cmd_targets(const RunConfig& cfg, const Logger& logger) {
  try {
    cfg.validate();
    const auto corpus = detail::load_corpus(cfg, logger);
    const auto out_dir = detail::prepare_out_dir(cfg.out_dir);
    const PolarConfig polar{cfg.complexities.front(), 0.0};

    nlohmann::ordered_json instances = nlohmann::ordered_json::array();
    for (const auto& rec : corpus.records) {
      try {
        const Polygon& poly = primary_ring(rec);
        const Point2 centroid = polygon_centroid(poly);
        const Point2 anchor = interior_anchor(poly, grid_for(poly, 1));
        const bool fallback = !(anchor == centroid);
        const RasterGrid grid = target_grid(poly, anchor);
        const Bounds box = bounds(poly);

        CentroidnessOptions opts;
        opts.anchor = anchor;
        const std::pair<const char*, WeightMap> maps[] = {
            {"centroidness", centroidness_map(poly, grid, opts)},
            {"fcos_centerness", fcos_centerness_map(box, grid)},
            {"polarmask_centerness", polarmask_centerness_map(poly, polar, grid)},
        };
        const std::string stem = std::to_string(rec.instance_id) + "_";
        for (const auto& [name, map] : maps) {
          auto pgm = detail::open_out(out_dir / (stem + name + ".pgm"), true);
          write_pgm(pgm, map);
          auto csv = detail::open_out(out_dir / (stem + name + ".csv"));
          write_csv(csv, map);
        }
        nlohmann::ordered_json j;
        j["instance_id"] = rec.instance_id;
        j["anchor"] = {anchor.x, anchor.y};
        j["centroid"] = {centroid.x, centroid.y};
        j["fallback"] = fallback;
        j["grid_origin"] = {grid.origin.x, grid.origin.y};
        j["width"] = grid.width;
        j["height"] = grid.height;
        j["fpn_level"] = fpn_level_assign(box_extents(box, anchor));
        instances.push_back(std::move(j));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::IoError) throw;
        detail::log(logger, LogLevel::Warn,
                    "instance " + std::to_string(rec.instance_id) + " failed: " + e.what());
      }
    }
    auto meta = detail::base_metadata(cfg, "targets");
    meta["polarmask_directions"] = polar.n;
    meta["instances"] = std::move(instances);
    detail::open_out(out_dir / "targets_meta.json") << meta.dump(2) << '\n';
    return ExitCode::Ok;
  } catch (const Error& e) {
    detail::log(logger, LogLevel::Error, e.what());
    return detail::exit_code_for(e);
  }
}

/// loss_check.csv (gradient rows) and loss_invariants.csv. Exit 1 on any
/// failed check.
inline ExitCode cmd_loss_check(const RunConfig& cfg, const Logger& logger) {
  try {
    const auto out_dir = detail::prepare_out_dir(cfg.out_dir);
    GradCheckConfig gc;
    gc.seed = cfg.seed;
    gc.corrupt_gradient = cfg.corrupt_gradient;
    const auto rows = run_gradient_checks(gc);
    const auto invariants = run_invariance_checks(cfg.seed);
    {
      auto out = detail::open_out(out_dir / "loss_check.csv");
      write_grad_report(out, rows);
    }
    {
      auto out = detail::open_out(out_dir / "loss_invariants.csv");
      out << "check,pass,detail\n";
      for (const auto& c : invariants) {
        out << c.name << ',' << (c.pass ? "true" : "false") << ',' << c.detail << '\n';
      }
    }
    bool ok = true;
    for (const auto& r : rows) {
      if (!r.pass) {
        ok = false;
        detail::log(logger, LogLevel::Error,
                    "gradient check failed: " + r.loss_name + " trial " + std::to_string(r.trial));
      }
    }
    for (const auto& c : invariants) {
      if (!c.pass) {
        ok = false;
        detail::log(logger, LogLevel::Error, "invariance check failed: " + c.name);
      }
    }
    return ok ? ExitCode::Ok : ExitCode::CheckFailed;
  } catch (const Error& e) {
    detail::log(logger, LogLevel::Error, e.what());
    return detail::exit_code_for(e);
  }
}

}  // namespace veingrow
