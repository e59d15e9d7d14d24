#include <algorithm>
#include <functional>
#include <map>

#include "bricklab/expert.hpp"

namespace bricklab {

namespace {

struct Plan {
  std::optional<Action> action;
  std::string failure;
};

Plan fail(std::string why) { return {std::nullopt, std::move(why)}; }

std::vector<SnapId> visible_of(const FrameBuffers& frame, int instance) {
  std::vector<SnapId> out;
  for (const SnapId& s : visible_snaps(frame)) {
    if (s.instance == instance) out.push_back(s);
  }
  return out;
}

Pixel pixel_of(const FrameBuffers& frame, const SnapId& s, std::mt19937_64& rng) {
  const auto px = snap_pixels(frame, s);
  if (px.empty()) throw Error("snap has no pixels");
  return px[rng() % px.size()];
}

Action cursor_action(ActionMode mode, Pixel click) {
  Action a = Action::simple(mode);
  a.click = click;
  return a;
}

Assembly with_brick(const Assembly& scene, const BrickInstance& b) {
  Assembly out = scene;
  *out.find_mut(b.id) = b;
  return out;
}

// Snap pairs (own snap index, scene snap) that mate once brick `id` sits at `goal`.
std::vector<std::pair<int, SnapId>> mates_at_goal(const Catalog& catalog, const Assembly& scene, int id, const Pose& goal) {
  Assembly placed = scene;
  placed.find_mut(id)->pose = goal;
  std::vector<std::pair<int, SnapId>> out;
  for (const Edge& e : edges_of(catalog, placed, id)) {
    if (e.instance_a == id) {
      out.push_back({e.snap_a, {e.instance_b, e.snap_b}});
    } else {
      out.push_back({e.snap_b, {e.instance_a, e.snap_a}});
    }
  }
  return out;
}

// First move of a shortest collision-free translation path (up to three
// moves) that carries `b` onto `goal`.
std::optional<std::pair<int, int>> translation_to(const Catalog& catalog, const Assembly& scene, const BrickInstance& b,
                                                  const Pose& goal) {
  const Pose from = canonical_pose(catalog, b.shape, b.pose).pose;
  const Pose to = canonical_pose(catalog, b.shape, goal).pose;
  if (from.rotation != to.rotation || from.translation == to.translation) return std::nullopt;
  const Vec3i delta = to.translation - from.translation;
  std::vector<std::pair<int, int>> moves;
  for (int mag = 0; mag < kNumMagnitudes; ++mag)
    for (int dir = 0; dir < kNumDirections; ++dir) moves.push_back({dir, mag});
  Assembly with = with_brick(scene, b);
  auto clear = [&](const std::vector<std::pair<int, int>>& path) {
    BrickInstance cur = b;
    for (const auto& [dir, mag] : path) {
      cur.pose.translation = cur.pose.translation + translate_offset(dir, mag);
      if (check_collision(catalog, with, cur)) return false;
    }
    return true;
  };
  for (const auto& m1 : moves) {
    if (translate_offset(m1.first, m1.second) == delta && clear({m1})) return m1;
  }
  for (const auto& m1 : moves) {
    const Vec3i r1 = delta - translate_offset(m1.first, m1.second);
    for (const auto& m2 : moves) {
      if (translate_offset(m2.first, m2.second) == r1 && clear({m1, m2})) return m1;
    }
  }
  for (const auto& m1 : moves) {
    const Vec3i r1 = delta - translate_offset(m1.first, m1.second);
    for (const auto& m2 : moves) {
      const Vec3i r2 = r1 - translate_offset(m2.first, m2.second);
      for (const auto& m3 : moves) {
        if (translate_offset(m3.first, m3.second) == r2 && clear({m1, m2, m3})) return m1;
      }
    }
  }
  return std::nullopt;
}

// Depth-limited search over moves of brick `id` (assemble on visible snaps,
// translate, rotate) for a sequence that ends on `goal`. Every intermediate
// state must leave the brick with a visible snap. Returns the first move.
std::optional<Action> search_move(const Catalog& catalog, const Camera& camera, const Assembly& scene,
                                  const FrameBuffers& frame, int id, const Pose& goal, int depth, std::mt19937_64& rng) {
  const BrickInstance& b = *scene.find(id);
  auto own = visible_of(frame, id);
  if (own.empty()) return std::nullopt;
  std::shuffle(own.begin(), own.end(), rng);
  std::vector<SnapId> fixed;
  for (const SnapId& s : visible_snaps(frame)) {
    if (s.instance != id) fixed.push_back(s);
  }
  std::shuffle(fixed.begin(), fixed.end(), rng);

  auto translate = [&](int dir, int mag) {
    Action a = cursor_action(ActionMode::translate, pixel_of(frame, own.front(), rng));
    a.direction = dir;
    a.magnitude = mag;
    return a;
  };
  const auto path = translation_to(catalog, scene, b, goal);
  if (path) {
    const Pose p{b.pose.rotation, b.pose.translation + translate_offset(path->first, path->second)};
    if (same_placement(catalog, b.shape, p, goal)) return translate(path->first, path->second);
  }
  std::vector<std::pair<Action, BrickInstance>> children;
  for (const SnapId& o : own) {
    for (const SnapId& f : fixed) {
      const auto sim = assembled_brick(catalog, scene, o, f);
      if (!sim) continue;
      Action a = Action::simple(ActionMode::assemble);
      a.click = pixel_of(frame, o, rng);
      a.release = pixel_of(frame, f, rng);
      if (same_placement(catalog, b.shape, sim->pose, goal)) return a;
      if (children.size() < 6 && translation_to(catalog, with_brick(scene, *sim), *sim, goal)) children.push_back({a, *sim});
    }
  }
  if (depth <= 1) return std::nullopt;
  if (path) {
    if (auto moved = translated_brick(catalog, scene, id, path->first, path->second)) {
      children.insert(children.begin(), {translate(path->first, path->second), *moved});
    }
  }
  for (const SnapId& v : own) {
    for (int angle = 0; angle < kNumAngles; ++angle) {
      const auto rotated = rotated_brick(catalog, scene, v, angle);
      if (!rotated) continue;
      Action a = cursor_action(ActionMode::rotate, pixel_of(frame, v, rng));
      a.angle = angle;
      children.push_back({a, *rotated});
    }
  }
  for (int mag = 0; mag < kNumMagnitudes; ++mag) {
    for (int dir = 0; dir < kNumDirections; ++dir) {
      if (auto moved = translated_brick(catalog, scene, id, dir, mag)) children.push_back({translate(dir, mag), *moved});
    }
  }
  for (const auto& [action, moved] : children) {
    const Assembly next = with_brick(scene, moved);
    if (search_move(catalog, camera, next, render(catalog, next, camera), id, goal, depth - 1, rng)) return action;
  }
  return std::nullopt;
}

// Move a disconnected or wrongly connected brick to `goal`.
Plan plan_placement(const Catalog& catalog, const Camera& camera, const Assembly& scene, const FrameBuffers& frame, int id,
                    const Pose& goal, std::mt19937_64& rng) {
  if (mates_at_goal(catalog, scene, id, goal).empty()) return fail("target pose has no connection to the current scene");
  if (visible_of(frame, id).empty()) return fail("misplaced brick has no visible snap");
  for (int depth = 1; depth <= 2; ++depth) {
    if (auto a = search_move(catalog, camera, scene, frame, id, goal, depth, rng)) return {a, ""};
  }
  return fail("required snap not visible for assembly");
}

// A misplaced brick that still has a correct connection: translate, rotate,
// rotate-then-translate, or take it off.
Plan plan_connected_fix(const Catalog& catalog, const Assembly& scene, const FrameBuffers& frame, int id, const Pose& goal,
                        std::mt19937_64& rng) {
  const BrickInstance& b = *scene.find(id);
  auto pivots = visible_of(frame, id);
  if (pivots.empty()) return fail("misplaced brick has no visible snap");
  std::shuffle(pivots.begin(), pivots.end(), rng);
  for (int dir = 0; dir < kNumDirections; ++dir) {
    for (int mag = 0; mag < kNumMagnitudes; ++mag) {
      const auto moved = translated_brick(catalog, scene, id, dir, mag);
      if (moved && same_placement(catalog, b.shape, moved->pose, goal)) {
        Action a = cursor_action(ActionMode::translate, pixel_of(frame, pivots.front(), rng));
        a.direction = dir;
        a.magnitude = mag;
        return {a, ""};
      }
    }
  }
  std::optional<Action> two_step;
  for (const SnapId& v : pivots) {
    for (int angle = 0; angle < kNumAngles; ++angle) {
      const auto rotated = rotated_brick(catalog, scene, v, angle);
      if (!rotated) continue;
      Action a = cursor_action(ActionMode::rotate, pixel_of(frame, v, rng));
      a.angle = angle;
      if (same_placement(catalog, b.shape, rotated->pose, goal)) return {a, ""};
      if (two_step) continue;
      const Assembly turned = with_brick(scene, *rotated);
      for (int dir = 0; dir < kNumDirections && !two_step; ++dir) {
        for (int mag = 0; mag < kNumMagnitudes && !two_step; ++mag) {
          const auto moved = translated_brick(catalog, turned, id, dir, mag);
          if (moved && same_placement(catalog, b.shape, moved->pose, goal)) two_step = a;
        }
      }
    }
  }
  if (two_step) return {two_step, ""};
  return {cursor_action(ActionMode::disassemble, pixel_of(frame, pivots.front(), rng)), ""};
}

// Would the make phase be able to put `brick` back onto `rest`? Simulates the
// pick, renders, and follows the placement plan for a few steps.
bool placement_lookahead(const Catalog& catalog, const Camera& camera, const Assembly& rest, const BrickInstance& brick,
                         std::mt19937_64& rng) {
  if (rest.empty()) return true;
  Assembly scene = rest;
  scene.insert({brick.id, brick.shape, brick.color, pick_pose(catalog, rest, brick.shape)});
  for (int step = 0; step < 8; ++step) {
    const FrameBuffers frame = render(catalog, scene, camera);
    const Plan plan = plan_placement(catalog, camera, scene, frame, brick.id, brick.pose, rng);
    if (!plan.action) return false;
    const SnapId click = frame.snap_at(plan.action->click);
    if (plan.action->mode == ActionMode::translate) {
      const auto moved = translated_brick(catalog, scene, click.instance, plan.action->direction, plan.action->magnitude);
      if (!moved) return false;
      scene = with_brick(scene, *moved);
      continue;
    }
    if (plan.action->mode == ActionMode::rotate) {
      const auto turned = rotated_brick(catalog, scene, click, plan.action->angle);
      if (!turned) return false;
      scene = with_brick(scene, *turned);
      continue;
    }
    const auto placed = assembled_brick(catalog, scene, click, frame.snap_at(plan.action->release));
    return placed && same_placement(catalog, brick.shape, placed->pose, brick.pose);
  }
  return false;
}

ExpertAction choose_disassembly(const ExpertView& v, std::mt19937_64& rng) {
  std::map<int, int> visible_count;
  for (const SnapId& s : visible_snaps(v.frame)) ++visible_count[s.instance];
  const int root = v.scene.bricks().begin()->first;
  std::vector<int> candidates;
  for (const auto& [id, n] : visible_count) {
    if (id != root || v.scene.size() == 1) candidates.push_back(id);
  }
  if (candidates.empty()) return ExpertAction::stop("no removable brick has a visible snap");
  // Newest bricks first: generators add bricks in a buildable order.
  std::sort(candidates.begin(), candidates.end(), std::greater<>());

  auto click_on = [&](int id) {
    const auto snaps = visible_of(v.frame, id);
    return ExpertAction{cursor_action(ActionMode::disassemble, pixel_of(v.frame, snaps[rng() % snaps.size()], rng)), ""};
  };
  std::vector<int> connected;
  for (int id : candidates) {
    Assembly rest = v.scene;
    rest.remove(id);
    if (is_connected(v.catalog, rest)) connected.push_back(id);
  }
  std::mt19937_64 look_rng(rng());
  for (int id : connected) {
    Assembly rest = v.scene;
    rest.remove(id);
    if (placement_lookahead(v.catalog, v.camera, rest, *v.scene.find(id), look_rng)) return click_on(id);
  }
  return click_on(connected.empty() ? candidates.front() : connected.front());
}

}  // namespace

ExpertAction expert_act(const ExpertView& v, std::mt19937_64& rng) {
  if (v.phase == Phase::break_phase && v.stack.empty()) return {Action::simple(ActionMode::push), ""};

  Assembly reference;
  if (!v.stack.empty()) {
    reference = v.stack.back().snapshot;
    if (v.phase == Phase::make_phase && v.recolor) reference = recolored(reference, v.recolor->first, v.recolor->second);
  } else {
    reference = v.recolor ? recolored(v.target, v.recolor->first, v.recolor->second) : v.target;
  }

  const MatchResult m = match(v.catalog, v.scene, reference);
  const MatchStatistics st = match_statistics(v.catalog, m, v.scene, reference);
  const std::vector<int> misplaced = st.m_p();
  if (st.f_n.size() > 1 || misplaced.size() > 1 || (!misplaced.empty() && v.scene.size() != reference.size())) {
    return ExpertAction::stop("scene differs from the instruction by more than one brick");
  }

  if (v.phase == Phase::break_phase) {
    const long r = static_cast<long>(reference.size()) - static_cast<long>(v.scene.size());
    if (r > 1 || r < 0) return ExpertAction::stop("more than one brick removed since the last push");
    if (r == 1) return {Action::simple(ActionMode::push), ""};
    if (v.scene.empty()) return {Action::simple(ActionMode::switch_phase), ""};
    if (st.perfect()) return choose_disassembly(v, rng);
  } else if (st.perfect()) {
    return {Action::simple(v.stack.empty() ? ActionMode::done : ActionMode::pop), ""};
  }

  if (!st.f_p.empty()) {
    const int id = st.f_p[rng() % st.f_p.size()];
    const auto snaps = visible_of(v.frame, id);
    if (snaps.empty()) return ExpertAction::stop("extra brick has no visible snap");
    return {cursor_action(ActionMode::disassemble, pixel_of(v.frame, snaps[rng() % snaps.size()], rng)), ""};
  }
  if (!st.f_n.empty()) {
    const BrickInstance& t = *reference.find(st.f_n[rng() % st.f_n.size()]);
    Action a = Action::simple(ActionMode::pick);
    a.shape = t.shape;
    a.color = t.color;
    return {a, ""};
  }
  const int id = misplaced.front();
  const Pose goal = compose(m.transform.inverse(), reference.find(m.mapping.at(id))->pose);
  const Plan plan = st.c_p.empty() ? plan_placement(v.catalog, v.camera, v.scene, v.frame, id, goal, rng)
                                   : plan_connected_fix(v.catalog, v.scene, v.frame, id, goal, rng);
  if (!plan.action) return ExpertAction::stop(plan.failure);
  return {plan.action, ""};
}

ExpertAction expert_act(const BreakMakeEnv& env, std::mt19937_64& rng) {
  Camera cam = env.camera();
  cam.jitter.reset();
  const ExpertView view{env.catalog(), env.scene(), env.task().target, env.task().recolor, env.stack(),
                        env.phase(),   env.frame(), cam};
  return expert_act(view, rng);
}

Rollout expert_rollout(const Catalog& catalog, const TaskSpec& task, std::uint64_t seed, const EnvConfig& config) {
  BreakMakeEnv env(catalog, config);
  env.reset(task, seed);
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + 1);
  Rollout out;
  while (!env.done()) {
    const ExpertAction ea = expert_act(env, rng);
    if (ea.terminate()) {
      out.terminated = true;
      out.terminate_reason = ea.reason;
      break;
    }
    TrajectoryRecord rec;
    rec.step = env.steps();
    rec.phase = env.phase();
    rec.action = *ea.action;
    rec.expert_action = ea.action;
    const StepResult r = env.step(*ea.action);
    rec.success = r.success;
    rec.resolved_snap = r.info.resolved_snap;
    out.trajectory.push_back(rec);
    out.max_stack_depth = std::max(out.max_stack_depth, static_cast<int>(env.stack().size()));
    if (r.success && ea.action->mode == ActionMode::done) out.finished = true;
  }
  out.final_scene = env.scene();
  out.steps = env.steps();
  out.scores = score(catalog, out.final_scene, env.effective_target());
  return out;
}

}  // namespace bricklab
