#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bricklab/env.hpp"
#include "bricklab/metrics.hpp"

namespace bricklab {

/// Either a concrete action or a request to terminate the episode early.
struct ExpertAction {
  std::optional<Action> action;
  std::string reason;  // why the expert terminated, empty otherwise

  bool terminate() const { return !action.has_value(); }
  static ExpertAction stop(std::string why) { return {std::nullopt, std::move(why)}; }
};

/// Everything the expert reads; the frame must be rendered from `scene`.
struct ExpertView {
  const Catalog& catalog;
  const Assembly& scene;
  const Assembly& target;  // original model
  std::optional<ColorSwap> recolor;
  const std::vector<InstructionEntry>& stack;
  Phase phase;
  const FrameBuffers& frame;
  Camera camera;  // used to render lookahead scenes
};

ExpertAction expert_act(const ExpertView& view, std::mt19937_64& rng);
ExpertAction expert_act(const BreakMakeEnv& env, std::mt19937_64& rng);

struct Rollout {
  std::vector<TrajectoryRecord> trajectory;
  Scores scores;
  bool finished = false;     // ended with a successful Done
  bool terminated = false;   // expert asked to stop early
  std::string terminate_reason;
  Assembly final_scene;
  int steps = 0;
  int max_stack_depth = 0;
};

Rollout expert_rollout(const Catalog& catalog, const TaskSpec& task, std::uint64_t seed, const EnvConfig& config = {});

}  // namespace bricklab
