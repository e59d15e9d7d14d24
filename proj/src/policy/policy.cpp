#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bricklab/expert.hpp"
#include "bricklab/policy.hpp"

namespace bricklab {

namespace {

constexpr int kBaseFeatures = 21;
constexpr int kHistLevels = 8;  // per channel
constexpr int kHistBins = kHistLevels * kHistLevels * kHistLevels;
constexpr double kHistScale = 1.0 / 256.0;
constexpr double kOffLogit = -30.0;

bool is_bg(const Rgb& c) { return c == kBackground; }

int hist_bin(const Rgb& c) {
  const int s = 256 / kHistLevels;
  return (c[0] / s) * kHistLevels * kHistLevels + (c[1] / s) * kHistLevels + c[2] / s;
}

struct Bounds {
  int top = 0, left = 0, count = 0;
};

Bounds silhouette(const Image& img) {
  Bounds b{img.height, img.width, 0};
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      if (is_bg(img.pixels[static_cast<std::size_t>(r) * img.width + c])) continue;
      b.top = std::min(b.top, r);
      b.left = std::min(b.left, c);
      ++b.count;
    }
  }
  return b;
}

// Silhouette and colour mismatch after lining up the top-left corners of the two silhouettes.
std::pair<int, int> aligned_mismatch(const Image& cur, const Image& ins, const Bounds& bc, const Bounds& bi) {
  if (bc.count == 0 || bi.count == 0) return {bc.count + bi.count, 0};
  const int dr = bc.top - bi.top, dc = bc.left - bi.left;
  int sil = 0, col = 0;
  for (int r = 0; r < cur.height; ++r) {
    for (int c = 0; c < cur.width; ++c) {
      const Rgb& a = cur.pixels[static_cast<std::size_t>(r) * cur.width + c];
      const int ir = r - dr, ic = c - dc;
      const bool inside = ir >= 0 && ic >= 0 && ir < ins.height && ic < ins.width;
      const Rgb b = inside ? ins.pixels[static_cast<std::size_t>(ir) * ins.width + ic] : kBackground;
      if (is_bg(a) != is_bg(b)) {
        ++sil;
      } else if (!is_bg(a) && a != b) {
        ++col;
      }
    }
  }
  // instruction pixels shifted out of the frame
  for (int r = 0; r < ins.height; ++r) {
    for (int c = 0; c < ins.width; ++c) {
      const int cr = r + dr, cc = c + dc;
      if (cr >= 0 && cc >= 0 && cr < cur.height && cc < cur.width) continue;
      if (!is_bg(ins.pixels[static_cast<std::size_t>(r) * ins.width + c])) ++sil;
    }
  }
  return {sil, col};
}

// 1 on stud marks, 2 on anti-stud marks.
std::vector<std::uint8_t> stud_marks(const Image& img) {
  static const int offsets[8][2] = {{-2, 0}, {2, 0}, {0, -2}, {0, 2}, {-2, -2}, {-2, 2}, {2, -2}, {2, 2}};
  std::vector<std::uint8_t> out(img.pixels.size(), 0);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      const Rgb& p = img.pixels[static_cast<std::size_t>(r) * img.width + c];
      if (is_bg(p)) continue;
      for (const auto& o : offsets) {
        const int rr = r + o[0], cc = c + o[1];
        if (rr < 0 || cc < 0 || rr >= img.height || cc >= img.width) continue;
        const Rgb& n = img.pixels[static_cast<std::size_t>(rr) * img.width + cc];
        if (is_bg(n) || n == p) continue;
        if (stud_shade(n) == p || socket_shade(n) == p) {
          out[static_cast<std::size_t>(r) * img.width + c] = stud_shade(n) == p ? 1 : 2;
          break;
        }
      }
    }
  }
  return out;
}

std::vector<double> matvec(const std::vector<double>& w, int rows, const std::vector<double>& x) {
  std::vector<double> out(static_cast<std::size_t>(rows), 0.0);
  const std::size_t cols = x.size();
  for (int r = 0; r < rows; ++r) {
    const double* row = w.data() + static_cast<std::size_t>(r) * cols;
    double s = 0;
    for (std::size_t k = 0; k < cols; ++k) s += row[k] * x[k];
    out[static_cast<std::size_t>(r)] = s;
  }
  return out;
}

// Cross-entropy of a softmax head; accumulates (p - onehot) x^T into grad.
double head_ce(const std::vector<double>& logits, int label, const std::vector<double>& x, std::vector<double>& grad) {
  const std::vector<double> p = softmax(logits);
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < p.size(); ++r) {
    const double d = p[r] - (static_cast<int>(r) == label ? 1.0 : 0.0);
    if (d == 0) continue;
    double* row = grad.data() + r * cols;
    for (std::size_t k = 0; k < cols; ++k) row[k] += d * x[k];
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double total = 0;
  for (double l : logits) total += std::exp(l - m);
  return m + std::log(total) - logits[static_cast<std::size_t>(label)];
}

ScoreMap cursor_map(const std::vector<float>& phi, int h, int w, const double* weights) {
  ScoreMap x(h, w);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const float* f = phi.data() + i * kPixelFeatures;
    double s = 0;
    for (int k = 0; k < kPixelFeatures; ++k) s += weights[k] * f[k];
    x.values[i] = s;
  }
  return x;
}

double cursor_term(CursorLoss kind, const std::vector<float>& phi, int h, int w, const std::vector<double>& weights,
                   int mode, const std::vector<Pixel>& mask, std::vector<double>& grad) {
  if (mask.empty()) return 0;
  const double* wm = weights.data() + static_cast<std::size_t>(mode) * kPixelFeatures;
  const ScoreMap x = cursor_map(phi, h, w, wm);
  const LossResult r = cursor_loss(kind, x, TargetMask::from_pixels(h, w, mask));
  double* gm = grad.data() + static_cast<std::size_t>(mode) * kPixelFeatures;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double g = r.gradient.values[i];
    if (g == 0) continue;
    const float* f = phi.data() + i * kPixelFeatures;
    for (int k = 0; k < kPixelFeatures; ++k) gm[k] += g * f[k];
  }
  return r.loss;
}

int index_of(const std::vector<int>& ids, int id) {
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw Error("id " + std::to_string(id) + " not covered by the policy heads");
  return static_cast<int>(it - ids.begin());
}

std::vector<double> one_hot_logits(std::size_t n, int hot) {
  std::vector<double> v(n, kOffLogit);
  if (hot >= 0 && static_cast<std::size_t>(hot) < n) v[static_cast<std::size_t>(hot)] = 0.0;
  return v;
}

ScoreMap mask_map(int h, int w, const std::vector<Pixel>& pixels) {
  const double c = target_constant(h, w, 0.999);
  ScoreMap x(h, w, -c);
  for (const Pixel& p : pixels) x.at(p.row, p.col) = c;
  return x;
}

// Distribution that puts all its mass on `a`, with cursor masks from the frame.
ActionDistribution point_distribution(const BreakMakeEnv& env, const Action& a) {
  const Catalog& cat = env.catalog();
  ActionDistribution d;
  d.mode_logits = one_hot_logits(kNumModes, static_cast<int>(a.mode));
  d.angle_logits = one_hot_logits(kNumAngles, a.angle);
  d.move_logits = one_hot_logits(kNumMoves, a.direction * kNumMagnitudes + a.magnitude);
  int shape_index = -1;
  for (std::size_t i = 0; i < cat.shapes().size(); ++i) {
    if (cat.shapes()[i].id == a.shape) shape_index = static_cast<int>(i);
  }
  d.shape_logits = one_hot_logits(cat.shapes().size(), shape_index);
  d.color_logits = one_hot_logits(cat.colors().size(), a.color);
  const Example ex = make_example(env, a);
  const int h = env.frame().height, w = env.frame().width;
  d.click = mask_map(h, w, ex.click_mask);
  d.release = mask_map(h, w, ex.release_mask);
  d.conditioning = {a.mode, a.angle, a.direction * kNumMagnitudes + a.magnitude, a.shape, a.color};
  return d;
}

std::vector<double> json_doubles(const nlohmann::json& j, std::size_t expected, const char* what) {
  auto v = j.get<std::vector<double>>();
  if (v.size() != expected) throw Error(std::string("checkpoint weight block '") + what + "' has the wrong size");
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(std::string("checkpoint weight block '") + what + "' is not finite");
  }
  return v;
}

}  // namespace

Example make_example(const BreakMakeEnv& env, const Action& expert_action) {
  Example ex;
  ex.observation = env.observation();
  ex.action = expert_action;
  const FrameBuffers& fb = env.frame();
  auto mask = [&](const Pixel& p) {
    const SnapId s = fb.snap_at(p);
    if (s.empty()) return fb.in_bounds(p) ? std::vector<Pixel>{p} : std::vector<Pixel>{};
    return snap_pixels(fb, s);
  };
  if (uses_click(expert_action.mode)) ex.click_mask = mask(expert_action.click);
  if (uses_release(expert_action.mode)) ex.release_mask = mask(expert_action.release);
  return ex;
}

LossReport Policy::update(const std::vector<const Example*>&) { return {}; }

PolicyOutput ExpertPolicy::act(const BreakMakeEnv& env, SampleMode, std::mt19937_64& rng) const {
  const ExpertAction ea = expert_act(env, rng);
  PolicyOutput out;
  if (ea.terminate()) {
    out.stop_reason = ea.reason;
    return out;
  }
  out.action = ea.action;
  out.distribution = point_distribution(env, *ea.action);
  return out;
}

NoisyExpertPolicy::NoisyExpertPolicy(double epsilon) : epsilon_(epsilon) {
  if (!(epsilon >= 0 && epsilon <= 1)) throw Error("noise level must lie in [0, 1]");
}

std::string NoisyExpertPolicy::name() const {
  std::ostringstream s;
  s << "noisy:" << epsilon_;
  return s.str();
}

PolicyOutput NoisyExpertPolicy::act(const BreakMakeEnv& env, SampleMode mode, std::mt19937_64& rng) const {
  // the coin is only thrown when it can matter, so eps 0 replays the expert exactly
  bool random = epsilon_ >= 1.0;
  if (epsilon_ > 0 && epsilon_ < 1) random = std::uniform_real_distribution<double>(0, 1)(rng) < epsilon_;
  if (!random) return ExpertPolicy().act(env, mode, rng);
  PolicyOutput out;
  out.action = random_action(env.catalog(), env.frame().width, env.frame().height, rng);
  out.distribution = point_distribution(env, *out.action);
  return out;
}

Action random_action(const Catalog& catalog, int width, int height, std::mt19937_64& rng) {
  auto uniform = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
  Action a;
  a.mode = static_cast<ActionMode>(uniform(kNumModes));
  a.click = {uniform(height), uniform(width)};
  a.release = {uniform(height), uniform(width)};
  a.angle = uniform(kNumAngles);
  a.direction = uniform(kNumDirections);
  a.magnitude = uniform(kNumMagnitudes);
  a.shape = catalog.shapes()[static_cast<std::size_t>(uniform(static_cast<int>(catalog.shapes().size())))].id;
  a.color = catalog.colors()[static_cast<std::size_t>(uniform(static_cast<int>(catalog.colors().size())))].id;
  return a;
}

int global_feature_count(int colors) { return 2 * kBaseFeatures + 2 * kHistBins + 2 * colors; }

std::vector<double> global_features(const Observation& obs, const std::vector<int>& color_ids) {
  const Image& cur = *obs.current;
  const Image& ins = *obs.instruction;
  const int colors = static_cast<int>(color_ids.size());
  std::vector<double> f(static_cast<std::size_t>(global_feature_count(colors)), 0.0);

  const Bounds bc = silhouette(cur), bi = silhouette(ins);
  const bool eq = cur == ins;
  const auto [sil, col] = aligned_mismatch(cur, ins, bc, bi);
  const double denom = std::max({bc.count, bi.count, 1});
  const double r = (bc.count - bi.count) / std::max(1.0, double(bi.count));
  int differ = 0;
  for (std::size_t i = 0; i < cur.pixels.size(); ++i) differ += cur.pixels[i] != ins.pixels[i];
  const auto studs = [](const Image& img) {
    const auto m = stud_marks(img);
    return static_cast<double>(m.size() - std::count(m.begin(), m.end(), 0));
  };

  double base[kBaseFeatures] = {1.0,
                                bc.count == 0 ? 1.0 : 0.0,
                                bi.count == 0 ? 1.0 : 0.0,
                                eq ? 1.0 : 0.0,
                                eq && bc.count == 0 ? 1.0 : 0.0,
                                sil / denom < 0.05 ? 1.0 : 0.0,
                                (sil + col) / denom < 0.05 ? 1.0 : 0.0,
                                std::min(1.0, (sil + col) / denom),
                                r < -0.1 ? 1.0 : 0.0,
                                r >= -0.1 && r < -0.01 ? 1.0 : 0.0,
                                std::abs(r) <= 0.01 ? 1.0 : 0.0,
                                r > 0.01 && r <= 0.1 ? 1.0 : 0.0,
                                r > 0.1 ? 1.0 : 0.0,
                                obs.task_tokens ? 1.0 : 0.0,
                                (bi.count - bc.count) / 256.0,
                                differ / 256.0,
                                studs(ins) / 16.0,
                                studs(cur) / 16.0};
  std::size_t at = 2 * kBaseFeatures;
  for (const Rgb& p : cur.pixels) {
    if (!is_bg(p)) f[at + static_cast<std::size_t>(hist_bin(p))] += kHistScale;
  }
  for (const Rgb& p : ins.pixels) {
    if (!is_bg(p)) f[at + kHistBins + static_cast<std::size_t>(hist_bin(p))] += kHistScale;
  }
  // colour make-up of the two images regardless of where things are
  double l1 = 0;
  for (std::size_t b = 0; b < static_cast<std::size_t>(kHistBins); ++b) l1 += std::abs(f[at + b] - f[at + kHistBins + b]);
  l1 /= std::max({bc.count, bi.count, 1}) * kHistScale;
  base[kBaseFeatures - 3] = l1;
  base[kBaseFeatures - 2] = l1 < 0.15 ? 1.0 : 0.0;
  base[kBaseFeatures - 1] = l1 < 0.4 ? 1.0 : 0.0;
  at += 2 * kHistBins;

  const std::size_t gate = obs.phase == Phase::make_phase ? kBaseFeatures : 0;
  for (int k = 0; k < kBaseFeatures; ++k) f[gate + static_cast<std::size_t>(k)] = base[k];

  if (obs.task_tokens) {
    for (int i = 0; i < colors; ++i) {
      if (color_ids[static_cast<std::size_t>(i)] == obs.task_tokens->first) f[at + static_cast<std::size_t>(i)] = 1;
      if (color_ids[static_cast<std::size_t>(i)] == obs.task_tokens->second)
        f[at + static_cast<std::size_t>(colors + i)] = 1;
    }
  }
  return f;
}

std::vector<float> pixel_features(const Observation& obs) {
  const Image& cur = *obs.current;
  const Image& ins = *obs.instruction;
  if (cur.width != ins.width || cur.height != ins.height) throw Error("observation images differ in size");
  const int h = cur.height, w = cur.width;
  const std::size_t n = cur.pixels.size();
  const std::vector<std::uint8_t> spot = stud_marks(cur), ispot = stud_marks(ins);
  std::vector<std::uint8_t> differ(n);
  for (std::size_t i = 0; i < n; ++i) differ[i] = cur.pixels[i] != ins.pixels[i];
  // summed-area table of `differ` for the 5x5 density
  std::vector<int> sat(static_cast<std::size_t>(h + 1) * (w + 1), 0);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      sat[static_cast<std::size_t>(r + 1) * (w + 1) + c + 1] = differ[static_cast<std::size_t>(r) * w + c] +
                                                                 sat[static_cast<std::size_t>(r) * (w + 1) + c + 1] +
                                                                 sat[static_cast<std::size_t>(r + 1) * (w + 1) + c] -
                                                                 sat[static_cast<std::size_t>(r) * (w + 1) + c];
  auto box = [&](int r0, int c0, int r1, int c1) {
    r0 = std::max(r0, 0), c0 = std::max(c0, 0), r1 = std::min(r1, h), c1 = std::min(c1, w);
    return sat[static_cast<std::size_t>(r1) * (w + 1) + c1] - sat[static_cast<std::size_t>(r0) * (w + 1) + c1] -
           sat[static_cast<std::size_t>(r1) * (w + 1) + c0] + sat[static_cast<std::size_t>(r0) * (w + 1) + c0];
  };

  std::vector<float> out(n * kPixelFeatures);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      const float s = spot[i] == 1, k = spot[i] == 2, d = differ[i], ib = is_bg(ins.pixels[i]);
      const float row = static_cast<float>(r) / h;
      float* f = out.data() + i * kPixelFeatures;
      f[0] = 1;
      f[1] = is_bg(cur.pixels[i]);
      f[2] = ib;
      f[3] = d;
      f[4] = s;
      f[5] = s * d;
      f[6] = s * ib;
      f[7] = s * (1 - d);
      f[8] = s * d * (1 - ib);
      f[9] = row;
      f[10] = static_cast<float>(c) / w;
      f[11] = box(r - 2, c - 2, r + 3, c + 3) / 25.0f;
      f[12] = ispot[i] != 0;
      f[13] = s * row;
      f[14] = k;
      f[15] = k * (1 - d);
      f[16] = k * d * (1 - ib);
    }
  }
  return out;
}

ReferencePolicyParams ReferencePolicyParams::init(const Catalog& catalog, std::uint64_t seed) {
  ReferencePolicyParams p;
  for (const BrickShape& s : catalog.shapes()) p.shape_ids.push_back(s.id);
  for (const Color& c : catalog.colors()) p.color_ids.push_back(c.id);
  p.global_features = global_feature_count(static_cast<int>(p.color_ids.size()));
  p.seed = seed;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.01);
  auto fill = [&](std::vector<double>& w, std::size_t size) {
    w.resize(size);
    for (double& v : w) v = n(rng);
  };
  const auto g = static_cast<std::size_t>(p.global_features);
  fill(p.mode_w, kNumModes * g);
  fill(p.angle_w, kNumAngles * g);
  fill(p.move_w, kNumMoves * g);
  fill(p.shape_w, p.shape_ids.size() * g);
  fill(p.color_w, p.color_ids.size() * g);
  fill(p.click_w, kNumModes * kPixelFeatures);
  fill(p.release_w, kNumModes * kPixelFeatures);
  return p;
}

nlohmann::json params_to_json(const ReferencePolicyParams& p) {
  return {{"format", "bricklab-reference-policy"},
          {"version", 1},
          {"shape_ids", p.shape_ids},
          {"color_ids", p.color_ids},
          {"global_features", p.global_features},
          {"pixel_features", kPixelFeatures},
          {"learning_rate", p.learning_rate},
          {"cursor_learning_rate", p.cursor_learning_rate},
          {"cursor_loss", to_string(p.cursor_loss)},
          {"seed", p.seed},
          {"weights",
           {{"mode", p.mode_w},
            {"angle", p.angle_w},
            {"move", p.move_w},
            {"shape", p.shape_w},
            {"color", p.color_w},
            {"click", p.click_w},
            {"release", p.release_w}}}};
}

ReferencePolicyParams params_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "bricklab-reference-policy") throw Error("not a reference policy checkpoint");
    if (j.at("version") != 1) throw Error("unsupported checkpoint version");
    if (j.at("pixel_features") != kPixelFeatures) throw Error("checkpoint pixel feature count mismatch");
    ReferencePolicyParams p;
    p.shape_ids = j.at("shape_ids").get<std::vector<int>>();
    p.color_ids = j.at("color_ids").get<std::vector<int>>();
    p.global_features = j.at("global_features").get<int>();
    if (p.global_features != global_feature_count(static_cast<int>(p.color_ids.size())))
      throw Error("checkpoint global feature count mismatch");
    p.learning_rate = j.at("learning_rate").get<double>();
    p.cursor_learning_rate = j.at("cursor_learning_rate").get<double>();
    p.cursor_loss = cursor_loss_from_string(j.at("cursor_loss").get<std::string>());
    p.seed = j.at("seed").get<std::uint64_t>();
    const auto& w = j.at("weights");
    const auto g = static_cast<std::size_t>(p.global_features);
    p.mode_w = json_doubles(w.at("mode"), kNumModes * g, "mode");
    p.angle_w = json_doubles(w.at("angle"), kNumAngles * g, "angle");
    p.move_w = json_doubles(w.at("move"), kNumMoves * g, "move");
    p.shape_w = json_doubles(w.at("shape"), p.shape_ids.size() * g, "shape");
    p.color_w = json_doubles(w.at("color"), p.color_ids.size() * g, "color");
    p.click_w = json_doubles(w.at("click"), kNumModes * kPixelFeatures, "click");
    p.release_w = json_doubles(w.at("release"), kNumModes * kPixelFeatures, "release");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const ReferencePolicyParams& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint " + path);
  out << params_to_json(p).dump() << "\n";
}

ReferencePolicyParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read checkpoint " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed checkpoint " + path + ": " + e.what());
  }
  return params_from_json(j);
}

ActionDistribution ReferencePolicy::heads(const Observation& obs) const {
  const std::vector<double> g = global_features(obs, params_.color_ids);
  ActionDistribution d;
  d.mode_logits = matvec(params_.mode_w, kNumModes, g);
  d.angle_logits = matvec(params_.angle_w, kNumAngles, g);
  d.move_logits = matvec(params_.move_w, kNumMoves, g);
  d.shape_logits = matvec(params_.shape_w, static_cast<int>(params_.shape_ids.size()), g);
  d.color_logits = matvec(params_.color_w, static_cast<int>(params_.color_ids.size()), g);
  return d;
}

ActionMode ReferencePolicy::predict_mode(const Observation& obs) const {
  const std::vector<double> g = global_features(obs, params_.color_ids);
  const std::vector<double> l = matvec(params_.mode_w, kNumModes, g);
  return static_cast<ActionMode>(std::max_element(l.begin(), l.end()) - l.begin());
}

PolicyOutput ReferencePolicy::act(const BreakMakeEnv& env, SampleMode mode, std::mt19937_64& rng) const {
  return act(env.observation(), mode, rng);
}

PolicyOutput ReferencePolicy::act(const Observation& obs, SampleMode mode, std::mt19937_64& rng) const {
  PolicyOutput out;
  ActionDistribution& d = out.distribution;
  d = heads(obs);
  // mode first, then its parameters, then cursors conditioned on both
  Conditioning& c = d.conditioning;
  c.mode = static_cast<ActionMode>(sample_index(d.mode_logits, mode, rng));
  c.angle = sample_index(d.angle_logits, mode, rng);
  c.move = sample_index(d.move_logits, mode, rng);
  c.shape = params_.shape_ids[static_cast<std::size_t>(sample_index(d.shape_logits, mode, rng))];
  c.color = params_.color_ids[static_cast<std::size_t>(sample_index(d.color_logits, mode, rng))];

  const std::vector<float> phi = pixel_features(obs);
  const int h = obs.current->height, w = obs.current->width;
  const int m = static_cast<int>(c.mode);
  d.click = cursor_map(phi, h, w, params_.click_w.data() + static_cast<std::size_t>(m) * kPixelFeatures);
  d.release = cursor_map(phi, h, w, params_.release_w.data() + static_cast<std::size_t>(m) * kPixelFeatures);

  Action a = Action::simple(c.mode);
  a.angle = c.angle;
  a.direction = c.move / kNumMagnitudes;
  a.magnitude = c.move % kNumMagnitudes;
  a.shape = c.shape;
  a.color = c.color;
  a.click = sample_pixel(d.click, mode, rng);
  a.release = sample_pixel(d.release, mode, rng);
  out.action = a;
  return out;
}

std::pair<LossReport, ReferencePolicyParams> ReferencePolicy::gradient(const std::vector<const Example*>& batch) const {
  if (batch.empty()) throw Error("policy update needs a non-empty batch");
  ReferencePolicyParams grad = params_;
  for (auto* w : {&grad.mode_w, &grad.angle_w, &grad.move_w, &grad.shape_w, &grad.color_w, &grad.click_w,
                  &grad.release_w}) {
    std::fill(w->begin(), w->end(), 0.0);
  }
  LossReport rep;
  rep.samples = static_cast<int>(batch.size());
  for (const Example* ex : batch) {
    const Observation& obs = ex->observation;
    const Action& a = ex->action;
    const std::vector<double> g = global_features(obs, params_.color_ids);
    const int m = static_cast<int>(a.mode);
    rep.mode += head_ce(matvec(params_.mode_w, kNumModes, g), m, g, grad.mode_w);
    switch (a.mode) {
      case ActionMode::rotate:
        rep.angle += head_ce(matvec(params_.angle_w, kNumAngles, g), a.angle, g, grad.angle_w);
        break;
      case ActionMode::translate:
        rep.move += head_ce(matvec(params_.move_w, kNumMoves, g), a.direction * kNumMagnitudes + a.magnitude, g,
                            grad.move_w);
        break;
      case ActionMode::pick:
        rep.shape += head_ce(matvec(params_.shape_w, static_cast<int>(params_.shape_ids.size()), g),
                             index_of(params_.shape_ids, a.shape), g, grad.shape_w);
        rep.color += head_ce(matvec(params_.color_w, static_cast<int>(params_.color_ids.size()), g),
                             index_of(params_.color_ids, a.color), g, grad.color_w);
        break;
      default:
        break;
    }
    if (uses_click(a.mode) || uses_release(a.mode)) {
      const std::vector<float> phi = pixel_features(obs);
      const int h = obs.current->height, w = obs.current->width;
      if (uses_click(a.mode))
        rep.click += cursor_term(params_.cursor_loss, phi, h, w, params_.click_w, m, ex->click_mask, grad.click_w);
      if (uses_release(a.mode))
        rep.release +=
            cursor_term(params_.cursor_loss, phi, h, w, params_.release_w, m, ex->release_mask, grad.release_w);
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (double* v : {&rep.mode, &rep.angle, &rep.move, &rep.shape, &rep.color, &rep.click, &rep.release}) *v *= inv;
  for (auto* w : {&grad.mode_w, &grad.angle_w, &grad.move_w, &grad.shape_w, &grad.color_w, &grad.click_w,
                  &grad.release_w}) {
    for (double& v : *w) v *= inv;
  }
  return {rep, grad};
}

LossReport ReferencePolicy::update(const std::vector<const Example*>& batch) {
  const auto [rep, grad] = gradient(batch);
  auto step = [](std::vector<double>& w, const std::vector<double>& g, double lr) {
    if (lr == 0) return;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
  };
  const double lr = params_.learning_rate, clr = params_.cursor_learning_rate;
  step(params_.mode_w, grad.mode_w, lr);
  step(params_.angle_w, grad.angle_w, lr);
  step(params_.move_w, grad.move_w, lr);
  step(params_.shape_w, grad.shape_w, lr);
  step(params_.color_w, grad.color_w, lr);
  step(params_.click_w, grad.click_w, clr);
  step(params_.release_w, grad.release_w, clr);
  return rep;
}

std::unique_ptr<Policy> make_policy(const std::string& spec) {
  if (spec == "expert") return std::make_unique<ExpertPolicy>();
  if (spec.rfind("noisy:", 0) == 0) {
    double eps = 0;
    try {
      std::size_t used = 0;
      eps = std::stod(spec.substr(6), &used);
      if (used != spec.size() - 6) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      throw Error("bad noise level in policy '" + spec + "'");
    }
    return std::make_unique<NoisyExpertPolicy>(eps);
  }
  return std::make_unique<ReferencePolicy>(load_checkpoint(spec));
}

}  // namespace bricklab
