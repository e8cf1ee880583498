#pragma once

// Regression and classification losses with analytic derivatives, plus a
// finite-difference harness that checks those derivatives.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "veingrow/error.hpp"

namespace veingrow {

/// Predictions are clamped to this floor (px) before evaluation.
inline constexpr double kPredictionFloor = 1e-6;

struct DistanceVectorPair {
  std::vector<double> predicted;
  std::vector<double> target;
};

struct LossReport {
  double value = 0.0;
  std::vector<double> gradient;  // d loss / d predicted[k]
  int clamped = 0;               // predictions raised to kPredictionFloor
};

struct ScalarLoss {
  double value = 0.0;
  double gradient = 0.0;  // d loss / d prob
};

namespace detail {

struct ClampedPair {
  std::vector<double> d;
  std::span<const double> t;
  int clamped = 0;
  double target_sum = 0.0;
};

inline ClampedPair prepare(const DistanceVectorPair& pair) {
  if (pair.predicted.size() != pair.target.size() || pair.target.empty()) {
    throw Error(ErrorCode::ShapeError, "predicted and target lengths differ or are empty");
  }
  ClampedPair c{pair.predicted, pair.target, 0, 0.0};
  for (double t : pair.target) {
    if (!(t > 0.0) || !std::isfinite(t)) {
      throw Error(ErrorCode::DegenerateTarget, "targets must be finite and positive");
    }
    c.target_sum += t;
  }
  if (c.target_sum < 1e-9) throw Error(ErrorCode::DegenerateTarget, "target sum below 1e-9");
  for (double& d : c.d) {
    if (!std::isfinite(d)) throw Error(ErrorCode::NumericalDomain, "non-finite prediction");
    if (d < kPredictionFloor) {
      d = kPredictionFloor;
      ++c.clamped;
    }
  }
  return c;
}

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace detail

/// sum |d_k - d*_k| / sum d*_k. Subgradient 0 at d_k = d*_k.
inline LossReport r_iou_loss(const DistanceVectorPair& pair) {
  const auto c = detail::prepare(pair);
  LossReport r;
  r.clamped = c.clamped;
  r.gradient.resize(c.d.size());
  double residual = 0.0;
  for (std::size_t k = 0; k < c.d.size(); ++k) {
    residual += std::abs(c.d[k] - c.t[k]);
    r.gradient[k] = detail::sign(c.d[k] - c.t[k]) / c.target_sum;
  }
  r.value = residual / c.target_sum;
  return r;
}

/// log(sum max(d_k, d*_k) / sum min(d_k, d*_k)). Ties contribute 0.
inline LossReport polar_iou_loss(const DistanceVectorPair& pair) {
  const auto c = detail::prepare(pair);
  double hi = 0.0, lo = 0.0;
  for (std::size_t k = 0; k < c.d.size(); ++k) {
    hi += std::max(c.d[k], c.t[k]);
    lo += std::min(c.d[k], c.t[k]);
  }
  LossReport r;
  r.clamped = c.clamped;
  r.value = std::log(hi / lo);
  r.gradient.resize(c.d.size());
  for (std::size_t k = 0; k < c.d.size(); ++k) {
    if (c.d[k] > c.t[k]) {
      r.gradient[k] = 1.0 / hi;
    } else if (c.d[k] < c.t[k]) {
      r.gradient[k] = -1.0 / lo;
    } else {
      r.gradient[k] = 0.0;
    }
  }
  return r;
}

/// Alpha-balanced focal loss of one probability.
inline ScalarLoss focal_loss(double prob, int label, double gamma = 2.0, double alpha = 0.25) {
  if (!(prob > 0.0 && prob < 1.0)) throw Error(ErrorCode::NumericalDomain, "prob must be in (0,1)");
  if (label != 0 && label != 1) throw Error(ErrorCode::ParamError, "label must be 0 or 1");
  if (!(gamma >= 0.0)) throw Error(ErrorCode::ParamError, "gamma must be >= 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::ParamError, "alpha must be in (0,1)");

  if (label == 1) {
    const double q = 1.0 - prob;
    const double mod = std::pow(q, gamma);
    const double value = -alpha * mod * std::log(prob);
    const double dmod = gamma == 0.0 ? 0.0 : -gamma * std::pow(q, gamma - 1.0);
    return {value, -alpha * (dmod * std::log(prob) + mod / prob)};
  }
  const double mod = std::pow(prob, gamma);
  const double value = -(1.0 - alpha) * mod * std::log1p(-prob);
  const double dmod = gamma == 0.0 ? 0.0 : gamma * std::pow(prob, gamma - 1.0);
  return {value, -(1.0 - alpha) * (dmod * std::log1p(-prob) - mod / (1.0 - prob))};
}

/// Binary cross-entropy against a soft target in [0, 1].
inline ScalarLoss bce_loss(double prob, double target) {
  if (!(prob > 0.0 && prob < 1.0)) throw Error(ErrorCode::NumericalDomain, "prob must be in (0,1)");
  if (!(target >= 0.0 && target <= 1.0)) throw Error(ErrorCode::ParamError, "target must be in [0,1]");
  const double value = -(target * std::log(prob) + (1.0 - target) * std::log1p(-prob));
  return {value, -target / prob + (1.0 - target) / (1.0 - prob)};
}

struct LossWeights {
  double r_iou = 1.0;
  double focal = 1.0;
  double bce = 1.0;
};

/// Plain sum of the three terms; weights default to 1.
inline double total_loss(double riou, double fl, double ce, const LossWeights& w = {}) {
  return w.r_iou * riou + w.focal * fl + w.bce * ce;
}

// ---------------------------------------------------------------------------
// Finite-difference verification

struct GradCheckRow {
  std::string loss_name;
  int trial = 0;
  double max_rel_err = 0.0;
  bool pass = false;
};

struct GradCheckConfig {
  std::uint64_t seed = 0;
  int trials = 100;
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Test hook: perturbs every analytic gradient before comparison.
  double corrupt_gradient = 0.0;
};

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
  return std::abs(analytic - numeric) / scale;
}

namespace detail {

/// Uniform double in [lo, hi) from the top 53 bits; stable across platforms.
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline DistanceVectorPair random_pair(std::mt19937_64& rng) {
  const int n = 4 + static_cast<int>(rng() % 33);
  DistanceVectorPair pair;
  for (int k = 0; k < n; ++k) {
    const double t = uniform(rng, 1.0, 100.0);
    // Residuals stay at least 1e-3 away from the kink at d = d*.
    double r = uniform(rng, 1e-3, 0.5 * t);
    if (rng() & 1) r = -r;
    pair.target.push_back(t);
    pair.predicted.push_back(t + r);
  }
  return pair;
}

template <class LossFn>
double vector_rel_err(const LossFn& loss, const DistanceVectorPair& pair, const GradCheckConfig& cfg) {
  const LossReport base = loss(pair);
  double worst = 0.0;
  for (std::size_t k = 0; k < pair.predicted.size(); ++k) {
    DistanceVectorPair plus = pair, minus = pair;
    plus.predicted[k] += cfg.step;
    minus.predicted[k] -= cfg.step;
    const double numeric = (loss(plus).value - loss(minus).value) / (2.0 * cfg.step);
    worst = std::max(worst, relative_error(base.gradient[k] + cfg.corrupt_gradient, numeric));
  }
  return worst;
}

template <class ScalarFn>
double scalar_rel_err(const ScalarFn& f, double p, const GradCheckConfig& cfg) {
  const double numeric = (f(p + cfg.step).value - f(p - cfg.step).value) / (2.0 * cfg.step);
  return relative_error(f(p).gradient + cfg.corrupt_gradient, numeric);
}

}  // namespace detail

/// Runs `trials` seeded random checks for each of r_iou, polar_iou, focal
/// and bce. Rows are ordered by loss, then trial.
inline std::vector<GradCheckRow> run_gradient_checks(const GradCheckConfig& cfg) {
  std::vector<GradCheckRow> rows;
  auto emit = [&](const char* name, int trial, double err) {
    rows.push_back({name, trial, err, err < cfg.tolerance});
  };

  std::mt19937_64 rng(cfg.seed);
  std::vector<DistanceVectorPair> pairs;
  for (int t = 0; t < cfg.trials; ++t) pairs.push_back(detail::random_pair(rng));
  for (int t = 0; t < cfg.trials; ++t) emit("r_iou", t, detail::vector_rel_err(r_iou_loss, pairs[t], cfg));
  for (int t = 0; t < cfg.trials; ++t) {
    emit("polar_iou", t, detail::vector_rel_err(polar_iou_loss, pairs[t], cfg));
  }
  for (int t = 0; t < cfg.trials; ++t) {
    const double p = detail::uniform(rng, 0.01, 0.99);
    const int label = static_cast<int>(rng() & 1);
    const double gamma = detail::uniform(rng, 0.0, 5.0);
    const double alpha = detail::uniform(rng, 0.05, 0.95);
    auto f = [&](double x) { return focal_loss(x, label, gamma, alpha); };
    emit("focal", t, detail::scalar_rel_err(f, p, cfg));
  }
  for (int t = 0; t < cfg.trials; ++t) {
    const double p = detail::uniform(rng, 0.01, 0.99);
    const double target = detail::uniform(rng, 0.0, 1.0);
    auto f = [&](double x) { return bce_loss(x, target); };
    emit("bce", t, detail::scalar_rel_err(f, p, cfg));
  }
  return rows;
}

struct InvarianceCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Scale invariance of both IoU losses, the zero-iff-equal property of
/// R-IoU, and its uniform gradient magnitude, over seeded random pairs.
inline std::vector<InvarianceCheck> run_invariance_checks(std::uint64_t seed, int trials = 100) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  bool scale_riou = true, scale_polar = true, zero_iff = true, uniform_grad = true;
  double worst_scale = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto pair = detail::random_pair(rng);
    const double base_r = r_iou_loss(pair).value;
    const double base_p = polar_iou_loss(pair).value;
    for (double alpha : {0.5, 2.0, 10.0}) {
      DistanceVectorPair scaled = pair;
      for (auto& d : scaled.predicted) d *= alpha;
      for (auto& d : scaled.target) d *= alpha;
      const double er = std::abs(r_iou_loss(scaled).value - base_r);
      const double ep = std::abs(polar_iou_loss(scaled).value - base_p);
      worst_scale = std::max({worst_scale, er, ep});
      scale_riou = scale_riou && er <= 1e-12;
      scale_polar = scale_polar && ep <= 1e-12;
    }
    // Zero exactly on the identity, nonzero after touching any single entry.
    DistanceVectorPair same{pair.target, pair.target};
    zero_iff = zero_iff && r_iou_loss(same).value == 0.0 && base_r > 0.0;
    DistanceVectorPair one_off = same;
    one_off.predicted[rng() % one_off.predicted.size()] += 1e-9;
    zero_iff = zero_iff && r_iou_loss(one_off).value > 0.0;

    const auto report = r_iou_loss(pair);
    double sum = 0.0;
    for (double v : pair.target) sum += v;
    for (std::size_t k = 0; k < pair.target.size(); ++k) {
      if (pair.predicted[k] != pair.target[k]) {
        uniform_grad = uniform_grad && std::abs(report.gradient[k]) == 1.0 / sum;
      }
    }
  }
  return {
      {"r_iou_scale_invariance", scale_riou, "max |delta| " + std::to_string(worst_scale)},
      {"polar_iou_scale_invariance", scale_polar, "max |delta| " + std::to_string(worst_scale)},
      {"r_iou_zero_iff_equal", zero_iff, ""},
      {"r_iou_uniform_gradient_magnitude", uniform_grad, ""},
  };
}

/// CSV with columns loss_name,trial,max_rel_err,pass.
inline void write_grad_report(std::ostream& out, std::span<const GradCheckRow> rows) {
  out << "loss_name,trial,max_rel_err,pass\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6e", r.max_rel_err);
    out << r.loss_name << ',' << r.trial << ',' << buf << ',' << (r.pass ? "true" : "false") << '\n';
  }
}

}  // namespace veingrow
