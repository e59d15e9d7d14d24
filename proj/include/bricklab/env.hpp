#pragma once

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bricklab/core.hpp"
#include "bricklab/render.hpp"

namespace bricklab {

enum class Phase { break_phase, make_phase };

enum class ActionMode { rotate, translate, pick, assemble, disassemble, push, pop, switch_phase, done };
inline constexpr int kNumModes = 9;
inline constexpr int kNumAngles = 3;      // 90, 180, 270 degrees
inline constexpr int kNumDirections = 6;  // +x -x +y -y +z -z
inline constexpr int kNumMagnitudes = 3;  // 1, 2, 4 units

std::string to_string(Phase p);
std::string to_string(ActionMode m);
ActionMode mode_from_string(const std::string& s);

struct Action {
  ActionMode mode = ActionMode::done;
  Pixel click;
  Pixel release;
  int angle = 0;      // index into {90, 180, 270}
  int direction = 0;  // index into {+x, -x, +y, -y, +z, -z}
  int magnitude = 0;  // index into {1, 2, 4}
  int shape = 0;
  int color = 0;

  static Action simple(ActionMode m) { return Action{m, {}, {}, 0, 0, 0, 0, 0}; }
  bool operator==(const Action&) const = default;
};

/// True when the action's mode uses the click (and release) cursor.
bool uses_click(ActionMode m);
bool uses_release(ActionMode m);

nlohmann::json action_to_json(const Action& a);
Action action_from_json(const nlohmann::json& j);
std::string describe(const Action& a);

Vec3i direction_vector(int direction);
/// Translate offset in LDU: {1,2,4} stud pitches along x/y, brick heights along z.
Vec3i translate_offset(int direction, int magnitude);

struct Image {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;
  bool operator==(const Image&) const = default;
};
using ImagePtr = std::shared_ptr<const Image>;

ImagePtr blank_image(int width, int height);

struct InstructionEntry {
  ImagePtr image;
  Assembly snapshot;
};

using ColorSwap = std::pair<int, int>;  // (old color, new color)

struct Observation {
  ImagePtr current;
  ImagePtr instruction;
  Phase phase = Phase::break_phase;
  std::optional<ColorSwap> task_tokens;
};

struct TaskSpec {
  Assembly target;
  std::optional<ColorSwap> recolor;
  int max_steps = 0;  // 0 selects 8 * |target| + 16
};

int default_step_budget(std::size_t target_size);

struct StepInfo {
  SnapId resolved_snap;
  SnapId release_snap;
  std::string failure;
};

struct StepResult {
  Observation observation;
  bool success = false;
  bool done = false;
  StepInfo info;
};

// Pure action semantics shared by the environment and the expert's lookahead.
std::optional<BrickInstance> rotated_brick(const Catalog& catalog, const Assembly& scene, const SnapId& snap, int angle);
std::optional<BrickInstance> translated_brick(const Catalog& catalog, const Assembly& scene, int instance, int direction,
                                              int magnitude);
std::optional<BrickInstance> assembled_brick(const Catalog& catalog, const Assembly& scene, const SnapId& moving,
                                             const SnapId& fixed);
/// Pose a freshly picked brick takes: centred above the scene with 48 LDU clearance.
Pose pick_pose(const Catalog& catalog, const Assembly& scene, int shape);
inline constexpr int kPickClearance = 48;

struct EnvConfig {
  Camera camera;
};

class BreakMakeEnv {
 public:
  BreakMakeEnv(const Catalog& catalog, EnvConfig config = {});

  Observation reset(const TaskSpec& task, std::uint64_t seed);
  StepResult step(const Action& action);

  const Assembly& scene() const { return scene_; }
  const std::vector<InstructionEntry>& stack() const { return stack_; }
  Phase phase() const { return phase_; }
  const FrameBuffers& frame() const { return frame_; }
  const TaskSpec& task() const { return task_; }
  /// Target with the recolor substitution applied.
  const Assembly& effective_target() const { return effective_target_; }
  int steps() const { return steps_; }
  int max_steps() const { return max_steps_; }
  bool done() const { return done_; }
  Observation observation() const;
  /// Scene at Done or budget exhaustion; throws while the episode runs.
  const Assembly& final_assembly() const;
  const Catalog& catalog() const { return catalog_; }
  const Camera& camera() const { return config_.camera; }

 private:
  bool apply(const Action& action, StepInfo& info);
  void rerender();

  const Catalog& catalog_;
  EnvConfig config_;
  TaskSpec task_;
  Assembly effective_target_;
  Assembly scene_;
  std::vector<InstructionEntry> stack_;
  Phase phase_ = Phase::break_phase;
  FrameBuffers frame_;
  ImagePtr image_;
  ImagePtr blank_;
  std::mt19937_64 camera_rng_;
  int steps_ = 0;
  int max_steps_ = 0;
  bool done_ = true;
};

/// One line of the trajectory log.
struct TrajectoryRecord {
  int step = 0;
  Phase phase = Phase::break_phase;
  Action action;
  bool success = false;
  std::optional<Action> expert_action;
  bool expert_terminated = false;  // expert asked for early termination
  SnapId resolved_snap;
};

nlohmann::json record_to_json(const TrajectoryRecord& r);
TrajectoryRecord record_from_json(const nlohmann::json& j);

/// A whole episode: enough to replay it frame by frame.
struct TrajectoryLog {
  TaskSpec task;
  std::uint64_t seed = 0;
  bool jitter = false;
  std::string policy;
  std::string instructions;
  std::vector<TrajectoryRecord> records;
};

nlohmann::json trajectory_to_json(const Catalog& catalog, const TrajectoryLog& log);
TrajectoryLog trajectory_from_json(const Catalog& catalog, const nlohmann::json& j);
void save_trajectory(const Catalog& catalog, const TrajectoryLog& log, const std::string& path);
TrajectoryLog load_trajectory(const Catalog& catalog, const std::string& path);
/// Re-executes the logged actions; frame k is the scene after step k. Throws
/// when a step's outcome differs from the log.
std::vector<FrameBuffers> replay_frames(const Catalog& catalog, const TrajectoryLog& log);

}  // namespace bricklab
