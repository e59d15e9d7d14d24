#pragma once

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "bricklab/env.hpp"
#include "bricklab/losses.hpp"

namespace bricklab {

inline constexpr int kNumMoves = kNumDirections * kNumMagnitudes;  // index = direction * 3 + magnitude

/// What the cursor maps were conditioned on.
struct Conditioning {
  ActionMode mode = ActionMode::done;
  int angle = 0;
  int move = 0;
  int shape = 0;  // catalog shape id
  int color = 0;  // catalog color id
};

struct ActionDistribution {
  std::vector<double> mode_logits;   // kNumModes
  std::vector<double> angle_logits;  // kNumAngles
  std::vector<double> move_logits;   // kNumMoves
  std::vector<double> shape_logits;  // one per catalog shape, catalog order
  std::vector<double> color_logits;  // one per catalog color
  ScoreMap click;
  ScoreMap release;
  Conditioning conditioning;
};

struct PolicyOutput {
  std::optional<Action> action;  // empty when the policy stops the episode
  ActionDistribution distribution;
  std::string stop_reason;
};

/// Observation with the expert's label and the pixel sets of the snaps it clicked.
struct Example {
  Observation observation;
  Action action;
  std::vector<Pixel> click_mask;
  std::vector<Pixel> release_mask;
};
Example make_example(const BreakMakeEnv& env, const Action& expert_action);

/// Per-head losses, each summed over the batch and divided by the batch size.
struct LossReport {
  double mode = 0;
  double angle = 0;
  double move = 0;
  double shape = 0;
  double color = 0;
  double click = 0;
  double release = 0;
  int samples = 0;

  double total() const { return mode + angle + move + shape + color + click + release; }
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  /// Acts on env.observation(); only privileged policies look further into `env`.
  virtual PolicyOutput act(const BreakMakeEnv& env, SampleMode mode, std::mt19937_64& rng) const = 0;
  virtual std::unique_ptr<Policy> clone() const = 0;
  virtual bool trainable() const { return false; }
  virtual LossReport update(const std::vector<const Example*>& batch);
};

class ExpertPolicy : public Policy {
 public:
  std::string name() const override { return "expert"; }
  PolicyOutput act(const BreakMakeEnv& env, SampleMode mode, std::mt19937_64& rng) const override;
  std::unique_ptr<Policy> clone() const override { return std::make_unique<ExpertPolicy>(*this); }
};

/// With probability epsilon a uniformly random action, otherwise the expert's.
class NoisyExpertPolicy : public Policy {
 public:
  explicit NoisyExpertPolicy(double epsilon);
  std::string name() const override;
  PolicyOutput act(const BreakMakeEnv& env, SampleMode mode, std::mt19937_64& rng) const override;
  std::unique_ptr<Policy> clone() const override { return std::make_unique<NoisyExpertPolicy>(*this); }
  double epsilon() const { return epsilon_; }

 private:
  double epsilon_;
};

Action random_action(const Catalog& catalog, int width, int height, std::mt19937_64& rng);

inline constexpr int kPixelFeatures = 17;

struct ReferencePolicyParams {
  std::vector<int> shape_ids;  // head index -> catalog shape id
  std::vector<int> color_ids;
  int global_features = 0;
  // Row-major weight matrices, one row per output.
  std::vector<double> mode_w;     // kNumModes x global
  std::vector<double> angle_w;    // kNumAngles x global
  std::vector<double> move_w;     // kNumMoves x global
  std::vector<double> shape_w;    // shapes x global
  std::vector<double> color_w;    // colors x global
  std::vector<double> click_w;    // kNumModes x kPixelFeatures
  std::vector<double> release_w;  // kNumModes x kPixelFeatures
  double learning_rate = 1.0;
  double cursor_learning_rate = 0.5;
  CursorLoss cursor_loss = CursorLoss::summed_ce;
  std::uint64_t seed = 0;

  /// Small random weights drawn from `seed`.
  static ReferencePolicyParams init(const Catalog& catalog, std::uint64_t seed);
  bool operator==(const ReferencePolicyParams&) const = default;
};

nlohmann::json params_to_json(const ReferencePolicyParams& p);
ReferencePolicyParams params_from_json(const nlohmann::json& j);
void save_checkpoint(const ReferencePolicyParams& p, const std::string& path);
ReferencePolicyParams load_checkpoint(const std::string& path);

/// Observation features shared by the scalar heads.
std::vector<double> global_features(const Observation& obs, const std::vector<int>& color_ids);
int global_feature_count(int colors);
/// kPixelFeatures values per pixel, row-major.
std::vector<float> pixel_features(const Observation& obs);

/// Linear-logistic policy: one softmax head per action factor, linear cursor maps per mode.
class ReferencePolicy : public Policy {
 public:
  explicit ReferencePolicy(ReferencePolicyParams params) : params_(std::move(params)) {}
  std::string name() const override { return "reference"; }
  PolicyOutput act(const BreakMakeEnv& env, SampleMode mode, std::mt19937_64& rng) const override;
  PolicyOutput act(const Observation& obs, SampleMode mode, std::mt19937_64& rng) const;
  std::unique_ptr<Policy> clone() const override { return std::make_unique<ReferencePolicy>(*this); }
  bool trainable() const override { return true; }
  LossReport update(const std::vector<const Example*>& batch) override;

  /// Scalar head logits without sampling.
  ActionDistribution heads(const Observation& obs) const;
  ActionMode predict_mode(const Observation& obs) const;
  /// Loss of the batch and its gradient laid out like the params.
  std::pair<LossReport, ReferencePolicyParams> gradient(const std::vector<const Example*>& batch) const;

  const ReferencePolicyParams& params() const { return params_; }
  ReferencePolicyParams& params() { return params_; }

 private:
  ReferencePolicyParams params_;
};

/// "expert", "noisy:<eps>" or a checkpoint path.
std::unique_ptr<Policy> make_policy(const std::string& spec);

}  // namespace bricklab
