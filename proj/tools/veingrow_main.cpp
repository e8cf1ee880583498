#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "veingrow/cli.hpp"

namespace {

std::shared_ptr<spdlog::logger> make_logger() {
  auto logger = spdlog::stderr_logger_st("veingrow");
  logger->set_pattern("%v");
  logger->set_level(spdlog::level::warn);
  if (const char* env = std::getenv("VEINGROW_LOG")) {
    const std::string level = env;
    if (level == "error") logger->set_level(spdlog::level::err);
    else if (level == "warn") logger->set_level(spdlog::level::warn);
    else if (level == "info") logger->set_level(spdlog::level::info);
    else if (level == "debug") logger->set_level(spdlog::level::debug);
  }
  return logger;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace veingrow;
  auto spd = make_logger();
  const Logger logger = [spd](LogLevel level, const std::string& msg) {
    switch (level) {
      case LogLevel::Error: spd->error(msg); break;
      case LogLevel::Warn: spd->warn(msg); break;
      case LogLevel::Info: spd->info(msg); break;
      case LogLevel::Debug: spd->debug(msg); break;
    }
  };

  CLI::App app{"Vein contour encoding, cover-ratio analysis, targets and loss checks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  RunConfig cfg;
  std::string complexities = "4,8,12,20,24";
  bool no_minor = false;
  std::size_t max_instances = 0;
  std::vector<std::int64_t> categories;
  bool keep_multipart = false;

  auto add_common = [&](CLI::App* sub, bool needs_input) {
    auto* in = sub->add_option("--input", cfg.input, "COCO-format annotation JSON");
    if (needs_input) in->required();
    sub->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
    sub->add_option("--complexities", complexities, "comma separated direction counts")
        ->capture_default_str();
    sub->add_option("--depth", cfg.depth, "node search depth s")->capture_default_str();
    sub->add_option("--supersample", cfg.supersample, "raster subsamples per pixel axis")
        ->capture_default_str();
    sub->add_flag("--no-minor", no_minor, "major veins only");
    sub->add_option("--min-area", cfg.filter.min_area, "drop instances below this area (px^2)");
    sub->add_option("--max-instances", max_instances, "keep at most N instances (0 = all)");
    sub->add_option("--categories", categories, "keep only these category ids")->delimiter(',');
    sub->add_flag("--keep-multipart", keep_multipart, "encode the largest ring of multi-ring instances");
    sub->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    sub->add_option("--workers", cfg.workers, "worker threads")->capture_default_str();
  };

  auto* cover = app.add_subcommand("cover-ratio", "mask cover-ratio upper bound per complexity");
  add_common(cover, true);
  auto* enc = app.add_subcommand("encode", "write vein trees as JSON lines");
  add_common(enc, true);
  auto* targets = app.add_subcommand("targets", "centroidness and centerness maps");
  add_common(targets, true);
  auto* loss = app.add_subcommand("loss-check", "finite-difference gradient and invariance checks");
  add_common(loss, false);
  loss->add_option("--corrupt-gradient", cfg.corrupt_gradient, "offset added to analytic gradients (self-test)");

  std::string synth_kind = "random_blob";
  int synth_count = 100;
  std::string synth_path = "synthetic_coco.json";
  ShapeParams synth_params;
  auto* synth = app.add_subcommand("synth", "write a synthetic COCO corpus");
  synth->add_option("--kind", synth_kind, "circle|square|star|notched_square|random_blob")->capture_default_str();
  synth->add_option("--count", synth_count, "number of instances")->capture_default_str();
  synth->add_option("--size", synth_params.size, "radius or side (px)")->capture_default_str();
  synth->add_option("--vertices", synth_params.vertices, "vertex count for round shapes")->capture_default_str();
  synth->add_option("--roughness", synth_params.roughness, "random_blob radial variation")->capture_default_str();
  synth->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  synth->add_option("--output", synth_path, "output JSON path")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    cfg.complexities = parse_int_list(complexities);
  } catch (const std::exception&) {
    logger(LogLevel::Error, "invalid --complexities '" + complexities + "'");
    return static_cast<int>(ExitCode::CheckFailed);
  }
  cfg.use_minor = !no_minor;
  cfg.filter.skip_multipart = !keep_multipart;
  if (max_instances > 0) cfg.filter.max_instances = max_instances;
  if (!categories.empty()) cfg.filter.categories.emplace(categories.begin(), categories.end());

  try {
    if (*cover) return static_cast<int>(cmd_cover_ratio(cfg, logger));
    if (*enc) return static_cast<int>(cmd_encode(cfg, logger));
    if (*targets) return static_cast<int>(cmd_targets(cfg, logger));
    if (*loss) return static_cast<int>(cmd_loss_check(cfg, logger));
    if (*synth) {
      const ShapeKind kind = parse_shape_kind(synth_kind);
      std::vector<Polygon> polys;
      for (int i = 0; i < synth_count; ++i) {
        ShapeParams p = synth_params;
        p.center = {2.0 * p.size, 2.0 * p.size};
        polys.push_back(synthesize_shape(kind, p, cfg.seed + static_cast<std::uint64_t>(i)));
      }
      std::ofstream out(synth_path);
      if (!out) {
        logger(LogLevel::Error, "cannot write " + synth_path);
        return static_cast<int>(ExitCode::IoError);
      }
      out << to_coco_json(polys).dump() << '\n';
      return 0;
    }
  } catch (const Error& e) {
    logger(LogLevel::Error, e.what());
    return static_cast<int>(e.code() == ErrorCode::IoError ? ExitCode::IoError : ExitCode::CheckFailed);
  }
  return 0;
}
