#include <doctest.h>

#include "bricklab/datagen.hpp"
#include "bricklab/expert.hpp"

using namespace bricklab;

namespace {

const Catalog& cat() { return Catalog::builtin(); }

Assembly rc(int n, std::uint64_t seed) {
  RandomConstructionConfig c;
  c.bricks = n;
  c.seed = seed;
  return generate_random_construction(cat(), c);
}

}  // namespace

TEST_CASE("expert rebuilds RC-2 perfectly within budget") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Assembly target = rc(2, seed);
    const Rollout r = expert_rollout(cat(), {target, std::nullopt, 0}, seed);
    CHECK_MESSAGE(r.finished, "seed ", seed, ": ", r.terminate_reason);
    CHECK(r.scores.f1_b == 1.0);
    CHECK(r.scores.f1_e == 1.0);
    CHECK(r.scores.f1_a == 1.0);
    CHECK(r.scores.aed == 0.0);
    CHECK(r.steps <= 8 * 2 + 16);
    CHECK(r.max_stack_depth == 3);
    for (const TrajectoryRecord& t : r.trajectory) {
      REQUIRE(t.expert_action.has_value());
      CHECK(*t.expert_action == t.action);
    }
  }
}

TEST_CASE("expert on an empty target") {
  const Rollout r = expert_rollout(cat(), {Assembly{}, std::nullopt, 0}, 1);
  REQUIRE(r.trajectory.size() == 4);
  CHECK(r.trajectory[0].action.mode == ActionMode::push);
  CHECK(r.trajectory[1].action.mode == ActionMode::switch_phase);
  CHECK(r.trajectory[2].action.mode == ActionMode::pop);
  CHECK(r.trajectory[3].action.mode == ActionMode::done);
  CHECK(r.finished);
}

TEST_CASE("expert stacks one instruction per brick") {
  const Assembly target = rc(4, 9);
  const Rollout r = expert_rollout(cat(), {target, std::nullopt, 0}, 2);
  CHECK(r.finished);
  CHECK(r.max_stack_depth == 5);
  int disassembles = 0, picks = 0;
  for (const TrajectoryRecord& t : r.trajectory) {
    CHECK(t.success);
    if (t.action.mode == ActionMode::disassemble) ++disassembles;
    if (t.action.mode == ActionMode::pick) ++picks;
  }
  CHECK(disassembles == 4);
  CHECK(picks == 4);
}

TEST_CASE("expert honours a recolor task") {
  const Assembly target = rc(2, 4);
  const int from = target.bricks().begin()->second.color;
  const int to = from == 1 ? 4 : 1;
  const Rollout r = expert_rollout(cat(), {target, ColorSwap{from, to}, 0}, 3);
  CHECK(r.finished);
  CHECK(r.scores.f1_a == 1.0);
  bool saw = false;
  for (const auto& [id, b] : r.final_scene.bricks()) {
    CHECK(b.color != from);
    if (b.color == to) saw = true;
  }
  CHECK(saw);
}

TEST_CASE("expert rollouts are deterministic") {
  const Assembly target = rc(4, 3);
  const Rollout a = expert_rollout(cat(), {target, std::nullopt, 0}, 5);
  const Rollout b = expert_rollout(cat(), {target, std::nullopt, 0}, 5);
  REQUIRE(a.trajectory.size() == b.trajectory.size());
  for (std::size_t i = 0; i < a.trajectory.size(); ++i) CHECK(a.trajectory[i].action == b.trajectory[i].action);
  CHECK(a.final_scene == b.final_scene);
}

TEST_CASE("expert terminates early when the scene drifts") {
  const Assembly target = rc(4, 6);
  BreakMakeEnv env(cat());
  env.reset({target, std::nullopt, 0}, 1);
  std::mt19937_64 rng(1);
  REQUIRE(env.step(*expert_act(env, rng).action).success);  // push
  // remove two bricks behind the expert's back via a fresh view
  Assembly drifted = target;
  const auto ids = drifted.ids();
  drifted.remove(ids[ids.size() - 1]);
  drifted.remove(ids[ids.size() - 2]);
  const FrameBuffers frame = render(cat(), drifted, env.camera());
  const ExpertView view{cat(), drifted, target, std::nullopt, env.stack(), Phase::break_phase, frame, env.camera()};
  const ExpertAction a = expert_act(view, rng);
  CHECK(a.terminate());
  CHECK_FALSE(a.reason.empty());
}
