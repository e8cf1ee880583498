#pragma once

// Reference dataflow of the surroundings sensitive feature block: the input
// grid is shifted one pixel in each of the four directions, four sensitivity
// logits are predicted per pixel by a fixed linear map, normalized across
// directions, used to weight the shifted grids, and everything is
// concatenated after the untouched input.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "veingrow/error.hpp"

namespace veingrow {

/// H x W x C values, channel-fastest.
class FeatureGrid {
 public:
  FeatureGrid(int height, int width, int channels)
      : height_(height), width_(width), channels_(channels) {
    if (height < 1 || width < 1 || channels < 1) {
      throw Error(ErrorCode::ShapeError, "feature grid dimensions must be >= 1");
    }
    values_.assign(static_cast<std::size_t>(height) * width * channels, 0.0);
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }

  double& at(int y, int x, int c) { return values_[index(y, x, c)]; }
  double at(int y, int x, int c) const { return values_[index(y, x, c)]; }

  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const FeatureGrid&, const FeatureGrid&) = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int height_;
  int width_;
  int channels_;
  std::vector<double> values_;
};

enum class Shift { Left, Top, Right, Bottom };

inline constexpr std::array<Shift, 4> kShiftOrder{Shift::Left, Shift::Top, Shift::Right,
                                                  Shift::Bottom};

/// Moves every value one pixel in `dir` (Right: (x, y) -> (x + 1, y), Top:
/// (x, y) -> (x, y - 1)). Vacated cells are zero; values pushed off the
/// edge are dropped.
inline FeatureGrid translate(const FeatureGrid& f, Shift dir) {
  int dx = 0, dy = 0;
  switch (dir) {
    case Shift::Left: dx = -1; break;
    case Shift::Right: dx = 1; break;
    case Shift::Top: dy = -1; break;
    case Shift::Bottom: dy = 1; break;
  }
  FeatureGrid out(f.height(), f.width(), f.channels());
  for (int y = 0; y < f.height(); ++y) {
    const int ty = y + dy;
    if (ty < 0 || ty >= f.height()) continue;
    for (int x = 0; x < f.width(); ++x) {
      const int tx = x + dx;
      if (tx < 0 || tx >= f.width()) continue;
      for (int c = 0; c < f.channels(); ++c) out.at(ty, tx, c) = f.at(y, x, c);
    }
  }
  return out;
}

/// Raw logits A_1..A_4 and their per-pixel normalized weights A'_1..A'_4.
struct SensitivityStack {
  int height = 0;
  int width = 0;
  std::array<std::vector<double>, 4> raw;
  std::array<std::vector<double>, 4> normalized;

  double weight(int i, int y, int x) const {
    return normalized[i][static_cast<std::size_t>(y) * width + x];
  }
};

/// Per-pixel softmax across the four maps, with max subtraction.
inline SensitivityStack normalize_sensitivity(int height, int width,
                                              const std::array<std::vector<double>, 4>& logits) {
  const std::size_t size = static_cast<std::size_t>(height) * width;
  for (const auto& m : logits) {
    if (m.size() != size) throw Error(ErrorCode::ShapeError, "sensitivity map size mismatch");
  }
  SensitivityStack s{height, width, logits, {}};
  for (auto& m : s.normalized) m.resize(size);
  for (std::size_t i = 0; i < size; ++i) {
    const double top = std::max({logits[0][i], logits[1][i], logits[2][i], logits[3][i]});
    std::array<double, 4> e{};
    double sum = 0.0;
    for (int k = 0; k < 4; ++k) {
      e[k] = std::exp(logits[k][i] - top);
      sum += e[k];
    }
    for (int k = 0; k < 4; ++k) s.normalized[k][i] = e[k] / sum;
  }
  return s;
}

/// Fixed linear map from C input channels to the four sensitivity logits.
struct SensitivityPredictor {
  std::array<std::vector<double>, 4> weights;  // each of length C
  std::array<double, 4> bias{};

  static SensitivityPredictor zeros(int channels) {
    SensitivityPredictor p;
    for (auto& w : p.weights) w.assign(channels, 0.0);
    return p;
  }

  std::array<std::vector<double>, 4> logits(const FeatureGrid& f) const {
    for (const auto& w : weights) {
      if (static_cast<int>(w.size()) != f.channels()) {
        throw Error(ErrorCode::ShapeError, "predictor width does not match channels");
      }
    }
    const std::size_t size = static_cast<std::size_t>(f.height()) * f.width();
    std::array<std::vector<double>, 4> out;
    for (int k = 0; k < 4; ++k) {
      out[k].assign(size, bias[k]);
      for (int y = 0; y < f.height(); ++y) {
        for (int x = 0; x < f.width(); ++x) {
          double acc = bias[k];
          for (int c = 0; c < f.channels(); ++c) acc += weights[k][c] * f.at(y, x, c);
          out[k][static_cast<std::size_t>(y) * f.width() + x] = acc;
        }
      }
    }
    return out;
  }
};

/// [f, A'_1*T_left(f), A'_2*T_top(f), A'_3*T_right(f), A'_4*T_bottom(f)]
/// along channels, with the sensitivity supplied explicitly.
inline FeatureGrid sccs_combine(const FeatureGrid& f, const SensitivityStack& s) {
  if (s.height != f.height() || s.width != f.width()) {
    throw Error(ErrorCode::ShapeError, "sensitivity and feature sizes differ");
  }
  const int C = f.channels();
  FeatureGrid out(f.height(), f.width(), 5 * C);
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      for (int c = 0; c < C; ++c) out.at(y, x, c) = f.at(y, x, c);
    }
  }
  for (int k = 0; k < 4; ++k) {
    const FeatureGrid shifted = translate(f, kShiftOrder[k]);
    for (int y = 0; y < f.height(); ++y) {
      for (int x = 0; x < f.width(); ++x) {
        const double w = s.weight(k, y, x);
        for (int c = 0; c < C; ++c) out.at(y, x, (k + 1) * C + c) = w * shifted.at(y, x, c);
      }
    }
  }
  return out;
}

inline FeatureGrid sccs_forward(const FeatureGrid& f, const SensitivityPredictor& predictor) {
  return sccs_combine(f, normalize_sensitivity(f.height(), f.width(), predictor.logits(f)));
}

/// CSV fixture format: first line "H,W,C", then one line per row y holding
/// the W*C values of that row (channel-fastest), 9 significant digits.
inline void write_feature_csv(std::ostream& out, const FeatureGrid& f) {
  out << f.height() << ',' << f.width() << ',' << f.channels() << '\n';
  char buf[32];
  for (int y = 0; y < f.height(); ++y) {
    bool first = true;
    for (int x = 0; x < f.width(); ++x) {
      for (int c = 0; c < f.channels(); ++c) {
        std::snprintf(buf, sizeof buf, "%.9g", f.at(y, x, c));
        out << (first ? "" : ",") << buf;
        first = false;
      }
    }
    out << '\n';
  }
}

inline FeatureGrid read_feature_csv(std::istream& in) {
  auto split = [](const std::string& line) {
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "bad number in feature CSV: '" + cell + "'");
      }
    }
    return v;
  };
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "missing feature CSV header");
  const auto dims = split(line);
  if (dims.size() != 3) throw Error(ErrorCode::ParseError, "feature CSV header must be H,W,C");
  FeatureGrid f(static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2]));
  for (int y = 0; y < f.height(); ++y) {
    if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "feature CSV truncated");
    const auto row = split(line);
    if (static_cast<int>(row.size()) != f.width() * f.channels()) {
      throw Error(ErrorCode::ParseError, "feature CSV row has wrong length");
    }
    for (int x = 0; x < f.width(); ++x) {
      for (int c = 0; c < f.channels(); ++c) f.at(y, x, c) = row[x * f.channels() + c];
    }
  }
  return f;
}

}  // namespace veingrow
