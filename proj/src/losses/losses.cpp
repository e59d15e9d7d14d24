#include <algorithm>
#include <cmath>
#include <limits>

#include "bricklab/losses.hpp"

namespace bricklab {

namespace {

void require_same_shape(const ScoreMap& x, const TargetMask& y) {
  if (x.height != y.height || x.width != y.width) throw Error("score map and target mask differ in size");
}

double sigmoid(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

// ln(1 + e^v) without overflow.
double softplus(double v) { return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

// Draws an index from probabilities that sum to one.
std::size_t draw(const std::vector<double>& p, std::mt19937_64& rng) {
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  for (std::size_t i = 0; i < p.size(); ++i) {
    u -= p[i];
    if (u < 0) return i;
  }
  // rounding left a sliver; return the last index with mass
  for (std::size_t i = p.size(); i-- > 0;) {
    if (p[i] > 0) return i;
  }
  return 0;
}

}  // namespace

TargetMask TargetMask::from_pixels(int h, int w, const std::vector<Pixel>& pixels) {
  TargetMask m(h, w);
  for (const Pixel& p : pixels) {
    if (p.row < 0 || p.col < 0 || p.row >= h || p.col >= w) throw Error("target pixel out of bounds");
    m.set(p.row, p.col);
  }
  return m;
}

bool TargetMask::any() const { return std::any_of(values.begin(), values.end(), [](std::uint8_t v) { return v != 0; }); }

std::string to_string(CursorLoss l) {
  switch (l) {
    case CursorLoss::summed_ce:
      return "summed_ce";
    case CursorLoss::bce:
      return "bce";
    case CursorLoss::mse:
      return "mse";
  }
  return "?";
}

CursorLoss cursor_loss_from_string(const std::string& s) {
  if (s == "summed_ce") return CursorLoss::summed_ce;
  if (s == "bce") return CursorLoss::bce;
  if (s == "mse") return CursorLoss::mse;
  throw Error("unknown cursor loss '" + s + "'");
}

std::vector<double> softmax(const std::vector<double>& logits) {
  if (logits.empty()) return {};
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<double> pixel_softmax(const ScoreMap& x) { return softmax(x.values); }

LossResult summed_ce_loss(const ScoreMap& x, const TargetMask& y) {
  require_same_shape(x, y);
  if (!y.any()) throw Error("summed cross-entropy needs at least one acceptable pixel");
  // -ln sum_y p = lse(x) - lse(x over y), both max-subtracted
  const double m = *std::max_element(x.values.begin(), x.values.end());
  double all = 0, good = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = std::exp(x.values[i] - m);
    all += e;
    if (y.values[i]) good += e;
  }
  LossResult r;
  r.gradient = ScoreMap(x.height, x.width);
  if (good == 0) {
    // every acceptable pixel underflowed; fall back to the log domain
    double mg = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (y.values[i]) mg = std::max(mg, x.values[i]);
    }
    double g = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (y.values[i]) g += std::exp(x.values[i] - mg);
    }
    r.loss = (m + std::log(all)) - (mg + std::log(g));
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double p = std::exp(x.values[i] - m) / all;
      r.gradient.values[i] = p - (y.values[i] ? std::exp(x.values[i] - mg) / g : 0.0);
    }
    return r;
  }
  r.loss = std::max(0.0, std::log(all) - std::log(good));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = std::exp(x.values[i] - m);
    r.gradient.values[i] = e / all - (y.values[i] ? e / good : 0.0);
  }
  return r;
}

LossResult bce_loss(const ScoreMap& x, const TargetMask& y) {
  require_same_shape(x, y);
  const double n = static_cast<double>(x.size());
  LossResult r;
  r.gradient = ScoreMap(x.height, x.width);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x.values[i];
    r.loss += y.values[i] ? softplus(-v) : softplus(v);
    r.gradient.values[i] = (sigmoid(v) - (y.values[i] ? 1.0 : 0.0)) / n;
  }
  r.loss /= n;
  return r;
}

LossResult mse_constant_loss(const ScoreMap& x, const TargetMask& y, double c) {
  require_same_shape(x, y);
  if (!(c > 0)) throw Error("mse target constant must be positive");
  const double n = static_cast<double>(x.size());
  LossResult r;
  r.gradient = ScoreMap(x.height, x.width);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x.values[i] - (y.values[i] ? c : -c);
    r.loss += d * d;
    r.gradient.values[i] = 2.0 * d / n;
  }
  r.loss /= n;
  return r;
}

double target_constant(int height, int width, double p_single) {
  const double n = static_cast<double>(height) * width;
  if (n < 2) throw Error("target constant needs at least two pixels");
  if (!(p_single > 0 && p_single < 1)) throw Error("target probability must lie in (0, 1)");
  return 0.5 * std::log(p_single / (1.0 - p_single) * (n - 1.0));
}

LossResult cursor_loss(CursorLoss kind, const ScoreMap& x, const TargetMask& y) {
  switch (kind) {
    case CursorLoss::summed_ce:
      return summed_ce_loss(x, y);
    case CursorLoss::bce:
      return bce_loss(x, y);
    case CursorLoss::mse:
      return mse_constant_loss(x, y, target_constant(x.height, x.width, 0.999));
  }
  throw Error("unknown cursor loss");
}

int sample_index(const std::vector<double>& logits, SampleMode mode, std::mt19937_64& rng) {
  if (logits.empty()) throw Error("cannot sample from an empty distribution");
  if (mode == SampleMode::argmax) {
    return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  }
  return static_cast<int>(draw(softmax(logits), rng));
}

Pixel sample_pixel(const ScoreMap& x, SampleMode mode, std::mt19937_64& rng) {
  if (x.width <= 0 || x.height <= 0) throw Error("cannot sample from an empty score map");
  const int i = sample_index(x.values, mode, rng);
  return {i / x.width, i % x.width};
}

}  // namespace bricklab
