#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bricklab/render.hpp"

namespace bricklab {

/// Raw per-pixel scores, row-major.
struct ScoreMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  ScoreMap() = default;
  ScoreMap(int h, int w, double fill = 0.0) : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}
  double& at(int row, int col) { return values[static_cast<std::size_t>(row) * width + col]; }
  double at(int row, int col) const { return values[static_cast<std::size_t>(row) * width + col]; }
  std::size_t size() const { return values.size(); }
};

/// Acceptable pixels.
struct TargetMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> values;

  TargetMask() = default;
  TargetMask(int h, int w) : height(h), width(w), values(static_cast<std::size_t>(h) * w, 0) {}
  static TargetMask from_pixels(int h, int w, const std::vector<Pixel>& pixels);
  void set(int row, int col) { values[static_cast<std::size_t>(row) * width + col] = 1; }
  bool any() const;
};

struct LossResult {
  double loss = 0;
  ScoreMap gradient;
};

enum class CursorLoss { summed_ce, bce, mse };
std::string to_string(CursorLoss l);
CursorLoss cursor_loss_from_string(const std::string& s);

enum class SampleMode { stochastic, argmax };

std::vector<double> pixel_softmax(const ScoreMap& x);
LossResult summed_ce_loss(const ScoreMap& x, const TargetMask& y);
LossResult bce_loss(const ScoreMap& x, const TargetMask& y);
LossResult mse_constant_loss(const ScoreMap& x, const TargetMask& y, double c);
double target_constant(int height, int width, double p_single);
/// Dispatch on the configured loss; mse uses target_constant(h, w, 0.999).
LossResult cursor_loss(CursorLoss kind, const ScoreMap& x, const TargetMask& y);

Pixel sample_pixel(const ScoreMap& x, SampleMode mode, std::mt19937_64& rng);

/// Softmax over a small logit vector, max-subtracted.
std::vector<double> softmax(const std::vector<double>& logits);
/// Index sampled from softmax(logits), or the first maximum in argmax mode.
int sample_index(const std::vector<double>& logits, SampleMode mode, std::mt19937_64& rng);

}  // namespace bricklab
