#include <algorithm>
#include <array>
#include <fstream>

#include "bricklab/env.hpp"

namespace bricklab {

using nlohmann::json;

namespace {

constexpr std::array<const char*, kNumModes> kModeNames = {
    "rotate", "translate", "pick", "assemble", "disassemble", "push", "pop", "switch_phase", "done"};

}  // namespace

std::string to_string(Phase p) { return p == Phase::break_phase ? "break" : "make"; }

std::string to_string(ActionMode m) { return kModeNames[static_cast<std::size_t>(m)]; }

ActionMode mode_from_string(const std::string& s) {
  for (std::size_t i = 0; i < kModeNames.size(); ++i) {
    if (s == kModeNames[i]) return static_cast<ActionMode>(i);
  }
  throw Error("unknown action mode '" + s + "'");
}

bool uses_click(ActionMode m) {
  return m == ActionMode::rotate || m == ActionMode::translate || m == ActionMode::assemble ||
         m == ActionMode::disassemble;
}

bool uses_release(ActionMode m) { return m == ActionMode::assemble; }

json action_to_json(const Action& a) {
  json j{{"mode", to_string(a.mode)}};
  if (uses_click(a.mode)) j["click"] = {a.click.row, a.click.col};
  if (uses_release(a.mode)) j["release"] = {a.release.row, a.release.col};
  switch (a.mode) {
    case ActionMode::rotate:
      j["angle"] = 90 * (a.angle + 1);
      break;
    case ActionMode::translate:
      j["direction"] = a.direction;
      j["magnitude"] = a.magnitude;
      break;
    case ActionMode::pick:
      j["shape"] = a.shape;
      j["color"] = a.color;
      break;
    default:
      break;
  }
  return j;
}

Action action_from_json(const json& j) {
  Action a = Action::simple(mode_from_string(j.at("mode").get<std::string>()));
  if (j.contains("click")) a.click = {j["click"].at(0).get<int>(), j["click"].at(1).get<int>()};
  if (j.contains("release")) a.release = {j["release"].at(0).get<int>(), j["release"].at(1).get<int>()};
  if (j.contains("angle")) a.angle = j["angle"].get<int>() / 90 - 1;
  if (j.contains("direction")) a.direction = j["direction"].get<int>();
  if (j.contains("magnitude")) a.magnitude = j["magnitude"].get<int>();
  if (j.contains("shape")) a.shape = j["shape"].get<int>();
  if (j.contains("color")) a.color = j["color"].get<int>();
  return a;
}

std::string describe(const Action& a) { return action_to_json(a).dump(); }

Vec3i direction_vector(int direction) {
  static const Vec3i dirs[kNumDirections] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  if (direction < 0 || direction >= kNumDirections) throw Error("direction index out of range");
  return dirs[direction];
}

Vec3i translate_offset(int direction, int magnitude) {
  if (magnitude < 0 || magnitude >= kNumMagnitudes) throw Error("magnitude index out of range");
  const int unit = direction >= 4 ? kBrickHeight : kStudPitch;
  return direction_vector(direction) * (unit << magnitude);
}

ImagePtr blank_image(int width, int height) {
  auto img = std::make_shared<Image>();
  img->width = width;
  img->height = height;
  img->pixels.assign(static_cast<std::size_t>(width) * height, kBackground);
  return img;
}

int default_step_budget(std::size_t target_size) { return 8 * static_cast<int>(target_size) + 16; }

std::optional<BrickInstance> rotated_brick(const Catalog& catalog, const Assembly& scene, const SnapId& snap, int angle) {
  const BrickInstance* b = scene.find(snap.instance);
  if (!b || angle < 0 || angle >= kNumAngles) return std::nullopt;
  const WorldSnap ws = world_snap(catalog, *b, snap.snap);
  const auto& g = RotationGroup::instance();
  const int q = g.about_axis(ws.axis, angle + 1);
  // Rotate about the snap: x -> Q (x - p) + p.
  BrickInstance moved = *b;
  moved.pose.rotation = g.compose(q, b->pose.rotation);
  moved.pose.translation = g.apply(q, b->pose.translation - ws.position) + ws.position;
  if (check_collision(catalog, scene, moved)) return std::nullopt;
  return moved;
}

std::optional<BrickInstance> translated_brick(const Catalog& catalog, const Assembly& scene, int instance, int direction,
                                              int magnitude) {
  const BrickInstance* b = scene.find(instance);
  if (!b || direction < 0 || direction >= kNumDirections || magnitude < 0 || magnitude >= kNumMagnitudes) {
    return std::nullopt;
  }
  BrickInstance moved = *b;
  moved.pose.translation = moved.pose.translation + translate_offset(direction, magnitude);
  if (check_collision(catalog, scene, moved)) return std::nullopt;
  return moved;
}

std::optional<BrickInstance> assembled_brick(const Catalog& catalog, const Assembly& scene, const SnapId& moving,
                                             const SnapId& fixed) {
  const BrickInstance* m = scene.find(moving.instance);
  const BrickInstance* f = scene.find(fixed.instance);
  if (!m || !f || m->id == f->id) return std::nullopt;
  const WorldSnap a = world_snap(catalog, *m, moving.snap);
  const WorldSnap b = world_snap(catalog, *f, fixed.snap);
  if (a.gender == b.gender) return std::nullopt;
  const auto& g = RotationGroup::instance();
  const int align = g.compose(g.minimal_between(a.axis, -b.axis), m->pose.rotation);
  const Vec3i local = catalog.shape(m->shape).snaps[static_cast<std::size_t>(moving.snap)].position;
  // Keep the prior heading when possible, then try the other residual yaws.
  for (int k : {0, 1, 3, 2}) {
    BrickInstance out = *m;
    out.pose.rotation = g.compose(g.about_axis(b.axis, k), align);
    out.pose.translation = b.position - g.apply(out.pose.rotation, local);
    if (!check_collision(catalog, scene, out)) return out;
  }
  return std::nullopt;
}

Pose pick_pose(const Catalog& catalog, const Assembly& scene, int shape) {
  if (scene.empty()) return {};
  Box box = world_bounds(catalog, scene.bricks().begin()->second);
  for (const auto& [id, b] : scene.bricks()) {
    const Box w = world_bounds(catalog, b);
    for (int k = 0; k < 3; ++k) {
      box.lo[k] = std::min(box.lo[k], w.lo[k]);
      box.hi[k] = std::max(box.hi[k], w.hi[k]);
    }
  }
  const Box& own = catalog.shape(shape).bounds;
  auto snap_to_studs = [](int v) {
    const int q = v >= 0 ? (v + kStudPitch / 2) / kStudPitch : -((-v + kStudPitch / 2) / kStudPitch);
    return q * kStudPitch;
  };
  Pose p;
  p.translation.x = snap_to_studs((box.lo.x + box.hi.x - own.lo.x - own.hi.x) / 2);
  p.translation.y = snap_to_studs((box.lo.y + box.hi.y - own.lo.y - own.hi.y) / 2);
  p.translation.z = box.hi.z + kPickClearance - own.lo.z;
  return p;
}

BreakMakeEnv::BreakMakeEnv(const Catalog& catalog, EnvConfig config)
    : catalog_(catalog), config_(std::move(config)) {
  blank_ = blank_image(config_.camera.width, config_.camera.height);
  image_ = blank_;
}

void BreakMakeEnv::rerender() {
  const Camera cam = config_.camera.jitter ? sample_camera(config_.camera, camera_rng_) : config_.camera;
  frame_ = render(catalog_, scene_, cam);
  auto img = std::make_shared<Image>();
  img->width = frame_.width;
  img->height = frame_.height;
  img->pixels = frame_.color;
  image_ = std::move(img);
}

Observation BreakMakeEnv::reset(const TaskSpec& task, std::uint64_t seed) {
  for (const auto& [id, b] : task.target.bricks()) {
    if (!catalog_.has_shape(b.shape) || !catalog_.has_color(b.color)) {
      throw Error("target brick " + std::to_string(id) + " uses an unknown shape or color");
    }
  }
  if (!occupancy_valid(catalog_, task.target)) throw Error("target assembly has overlapping bricks");
  if (task.recolor) {
    const auto [from, to] = *task.recolor;
    const bool present = std::any_of(task.target.bricks().begin(), task.target.bricks().end(),
                                     [&](const auto& kv) { return kv.second.color == from; });
    if (!present) throw Error("recolor source color does not occur in the target");
    if (!catalog_.has_color(to)) throw Error("recolor destination color unknown");
  }
  task_ = task;
  effective_target_ = task.recolor ? recolored(task.target, task.recolor->first, task.recolor->second) : task.target;
  max_steps_ = task.max_steps > 0 ? task.max_steps : default_step_budget(task.target.size());
  scene_ = task.target;
  stack_.clear();
  phase_ = Phase::break_phase;
  steps_ = 0;
  done_ = false;
  camera_rng_.seed(seed);
  rerender();
  return observation();
}

Observation BreakMakeEnv::observation() const {
  Observation o;
  o.current = image_;
  o.instruction = stack_.empty() ? blank_ : stack_.back().image;
  o.phase = phase_;
  o.task_tokens = task_.recolor;
  return o;
}

const Assembly& BreakMakeEnv::final_assembly() const {
  if (!done_) throw Error("episode still running");
  return scene_;
}

bool BreakMakeEnv::apply(const Action& a, StepInfo& info) {
  auto resolve = [&](const Pixel& p, SnapId& out) {
    out = frame_.snap_at(p);
    if (out.empty()) info.failure = "cursor hit no snap";
    return !out.empty();
  };
  auto commit = [&](const std::optional<BrickInstance>& moved, const char* why) {
    if (!moved) {
      info.failure = why;
      return false;
    }
    *scene_.find_mut(moved->id) = *moved;
    rerender();
    return true;
  };

  switch (a.mode) {
    case ActionMode::rotate: {
      if (!resolve(a.click, info.resolved_snap)) return false;
      return commit(rotated_brick(catalog_, scene_, info.resolved_snap, a.angle), "rotation collides");
    }
    case ActionMode::translate: {
      if (!resolve(a.click, info.resolved_snap)) return false;
      return commit(translated_brick(catalog_, scene_, info.resolved_snap.instance, a.direction, a.magnitude),
                    "translation collides");
    }
    case ActionMode::pick: {
      if (!catalog_.has_shape(a.shape) || !catalog_.has_color(a.color)) {
        info.failure = "unknown shape or color";
        return false;
      }
      scene_.add(a.shape, a.color, pick_pose(catalog_, scene_, a.shape));
      rerender();
      return true;
    }
    case ActionMode::assemble: {
      if (!resolve(a.click, info.resolved_snap) || !resolve(a.release, info.release_snap)) return false;
      return commit(assembled_brick(catalog_, scene_, info.resolved_snap, info.release_snap),
                    "snaps incompatible or placement collides");
    }
    case ActionMode::disassemble: {
      if (!resolve(a.click, info.resolved_snap)) return false;
      scene_.remove(info.resolved_snap.instance);
      rerender();
      return true;
    }
    case ActionMode::push:
      stack_.push_back({image_, scene_});
      return true;
    case ActionMode::pop:
      if (stack_.empty()) {
        info.failure = "instruction stack empty";
        return false;
      }
      stack_.pop_back();
      return true;
    case ActionMode::switch_phase:
      if (phase_ != Phase::break_phase) {
        info.failure = "already in make phase";
        return false;
      }
      phase_ = Phase::make_phase;
      scene_ = Assembly{};
      rerender();
      return true;
    case ActionMode::done:
      if (phase_ != Phase::make_phase) {
        info.failure = "done is only allowed in the make phase";
        return false;
      }
      done_ = true;
      return true;
  }
  return false;
}

StepResult BreakMakeEnv::step(const Action& action) {
  if (done_) throw Error("step called on a finished episode");
  StepResult r;
  r.success = apply(action, r.info);
  ++steps_;
  if (steps_ >= max_steps_) done_ = true;
  r.done = done_;
  r.observation = observation();
  return r;
}

json record_to_json(const TrajectoryRecord& r) {
  json j{{"step", r.step}, {"phase", to_string(r.phase)}, {"action", action_to_json(r.action)}, {"success", r.success}};
  if (r.expert_terminated) {
    j["expert_action"] = "TERMINATE_EARLY";
  } else if (r.expert_action) {
    j["expert_action"] = action_to_json(*r.expert_action);
  } else {
    j["expert_action"] = nullptr;
  }
  j["resolved_snap"] = r.resolved_snap.empty() ? json(nullptr) : json{r.resolved_snap.instance, r.resolved_snap.snap};
  return j;
}

TrajectoryRecord record_from_json(const json& j) {
  TrajectoryRecord r;
  r.step = j.at("step").get<int>();
  r.phase = j.at("phase").get<std::string>() == "break" ? Phase::break_phase : Phase::make_phase;
  r.action = action_from_json(j.at("action"));
  r.success = j.at("success").get<bool>();
  const json& e = j.at("expert_action");
  if (e.is_string()) {
    r.expert_terminated = true;
  } else if (!e.is_null()) {
    r.expert_action = action_from_json(e);
  }
  const json& s = j.at("resolved_snap");
  if (!s.is_null()) r.resolved_snap = {s.at(0).get<int>(), s.at(1).get<int>()};
  return r;
}

json trajectory_to_json(const Catalog& catalog, const TrajectoryLog& log) {
  json j{{"format", "bricklab-trajectory"},
         {"version", 1},
         {"target", json::parse(assembly_to_json_text(catalog, log.task.target))},
         {"recolor", log.task.recolor ? json{log.task.recolor->first, log.task.recolor->second} : json(nullptr)},
         {"max_steps", log.task.max_steps},
         {"seed", log.seed},
         {"jitter", log.jitter},
         {"policy", log.policy},
         {"instructions", log.instructions}};
  j["records"] = json::array();
  for (const TrajectoryRecord& r : log.records) j["records"].push_back(record_to_json(r));
  return j;
}

TrajectoryLog trajectory_from_json(const Catalog& catalog, const json& j) {
  try {
    if (j.at("format") != "bricklab-trajectory") throw Error("not a trajectory file");
    if (j.at("version") != 1) throw Error("unsupported trajectory version");
    TrajectoryLog log;
    log.task.target = assembly_from_json_text(catalog, j.at("target").dump());
    if (!j.at("recolor").is_null()) log.task.recolor = ColorSwap{j["recolor"].at(0).get<int>(), j["recolor"].at(1).get<int>()};
    log.task.max_steps = j.at("max_steps").get<int>();
    log.seed = j.at("seed").get<std::uint64_t>();
    log.jitter = j.at("jitter").get<bool>();
    log.policy = j.at("policy").get<std::string>();
    log.instructions = j.at("instructions").get<std::string>();
    for (const json& r : j.at("records")) log.records.push_back(record_from_json(r));
    return log;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed trajectory: ") + e.what());
  }
}

void save_trajectory(const Catalog& catalog, const TrajectoryLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << trajectory_to_json(catalog, log).dump() << '\n';
}

TrajectoryLog load_trajectory(const Catalog& catalog, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(path + ": " + e.what());
  }
  return trajectory_from_json(catalog, j);
}

std::vector<FrameBuffers> replay_frames(const Catalog& catalog, const TrajectoryLog& log) {
  EnvConfig config;
  if (log.jitter) config.camera.jitter = CameraJitter{};
  BreakMakeEnv env(catalog, config);
  env.reset(log.task, log.seed);
  std::vector<FrameBuffers> frames;
  for (const TrajectoryRecord& r : log.records) {
    if (env.done()) throw Error("trajectory continues after the episode ended");
    const StepResult s = env.step(r.action);
    if (s.success != r.success) throw Error("replay diverges at step " + std::to_string(r.step));
    frames.push_back(env.frame());
  }
  return frames;
}

}  // namespace bricklab
