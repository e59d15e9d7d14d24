#include <doctest.h>

#include <random>

#include "bricklab/metrics.hpp"
#include "oracles.hpp"
#include "scenes.hpp"

using namespace bricklab;
using namespace bricklab::scenes;

TEST_CASE("identical assemblies score perfectly") {
  Assembly a;
  a.add(sid("brick2x4"), 1, {});
  a.add(sid("brick1x2"), 4, {0, {0, 0, 24}});
  const MatchResult m = match(cat(), a, a);
  CHECK(m.transform == Pose{});
  CHECK(m.pose_correct == std::vector<int>{1, 2});
  const Scores s = score(cat(), a, a);
  CHECK(s.f1_b == 1.0);
  CHECK(s.f1_e == 1.0);
  CHECK(s.f1_a == 1.0);
  CHECK(s.aed == 0.0);
  const Scores empty = score(cat(), Assembly{}, Assembly{});
  CHECK(empty.f1_b == 1.0);
  CHECK(empty.aed == 0.0);
}

TEST_CASE("global rotation is recovered by the alignment") {
  Assembly a;
  a.add(sid("brick2x4"), 1, {});
  a.add(sid("brick1x2"), 4, {0, {0, 0, 24}});
  a.add(sid("headlight1x1"), 2, {0, {20, 60, 24}});
  const Pose rz{group().about_axis({0, 0, 1}, 1), {}};
  const Assembly moved = transform_assembly(a, rz);
  const MatchResult m = match(cat(), moved, a);
  CHECK(m.pose_correct.size() == 3);
  CHECK(m.transform == rz.inverse());
  const Scores s = score(cat(), moved, a);
  CHECK(s.f1_a == 1.0);
  CHECK(s.f1_e == 1.0);
}

TEST_CASE("score examples") {
  Assembly target;
  const int lower = target.add(sid("brick2x4"), 1, {});
  const int upper = target.add(sid("brick1x2"), 4, {0, {0, 0, 24}});
  REQUIRE(derive_edges(cat(), target).size() == 2);

  SUBCASE("estimated empty") {
    const Scores s = score(cat(), Assembly{}, target);
    CHECK(s.f1_b == 0.0);
    CHECK(s.f1_a == 0.0);
    CHECK(s.f1_e == 0.0);
    CHECK(s.aed == 2.0);
  }
  SUBCASE("one brick misposed and disconnected") {
    Assembly est = target;
    est.find_mut(upper)->pose.translation = {100, 100, 100};
    const Scores s = score(cat(), est, target);
    CHECK(s.f1_b == 1.0);
    CHECK(s.f1_a == doctest::Approx(0.5));
    CHECK(s.aed == 1.0);
    CHECK(s.f1_e == 0.0);
    const MatchResult m = match(cat(), est, target);
    const MatchStatistics st = match_statistics(cat(), m, est, target);
    CHECK(st.d_p == std::vector<int>{upper});
    CHECK(st.c_p.empty());
  }
  SUBCASE("one extra floating brick") {
    Assembly est = target;
    const int extra = est.add(sid("plate2x2"), 14, {0, {200, 0, 0}});
    const MatchStatistics st = match_statistics(cat(), match(cat(), est, target), est, target);
    CHECK(st.f_p == std::vector<int>{extra});
    CHECK(st.t_p == std::vector<int>{lower, upper});
    CHECK(score(cat(), est, target).aed == 1.0);
  }
  SUBCASE("attached at the right snap with the wrong yaw") {
    // Hand enumeration: the 1x2 anti-stud 0 at (0,0,24) mates the 2x4 stud at
    // (0,0,24) in both assemblies; yawing the 1x2 by 90 degrees about that
    // point keeps this edge and drops the second one.
    Assembly est = target;
    est.find_mut(upper)->pose = {group().about_axis({0, 0, 1}, 1), {0, 0, 24}};
    REQUIRE_FALSE(check_collision(cat(), est, *est.find(upper)));
    REQUIRE(derive_edges(cat(), est).size() == 1);
    const MatchResult m = match(cat(), est, target);
    const MatchStatistics st = match_statistics(cat(), m, est, target);
    CHECK(st.c_p == std::vector<int>{upper});
    CHECK(st.t_p == std::vector<int>{lower});
    CHECK(st.d_p.empty());
    const Scores s = score(cat(), est, target);
    CHECK(s.f1_e == doctest::Approx(2.0 / 3.0));
  }
}

TEST_CASE("stale mapping is rejected") {
  Assembly a;
  a.add(sid("brick2x4"), 1, {});
  MatchResult m = match(cat(), a, a);
  m.mapping[7] = 1;
  CHECK_THROWS_AS(match_statistics(cat(), m, a, a), Error);
}

TEST_CASE("fast match agrees with the exhaustive oracle") {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const Assembly target = small_scene(rng, 1 + trial % 4);
    const Assembly est = trial % 3 == 2 ? small_scene(rng, 1 + (trial / 3) % 4) : perturbed(rng, target);
    const MatchResult m = match(cat(), est, target);
    const oracle::ExhaustiveResult o = oracle::exhaustive_match(cat(), est, target);
    CAPTURE(trial);
    CHECK(static_cast<int>(m.pose_correct.size()) == o.pose_correct);
    CHECK(static_cast<int>(m.mapping.size()) == o.mapped);
    const Scores s = score(cat(), est, target);
    CHECK(s.f1_b == o.f1_b);
    CHECK(s.f1_a == o.f1_a);
    CHECK(s.aed == o.aed);
    const EdgeCounts ec = edge_counts(cat(), m, est, target);
    CHECK(ec.true_positive == edge_true_positives(m, est, target));
    CHECK(s.f1_a <= s.f1_b);
    for (double v : {s.f1_b, s.f1_e, s.f1_a}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("scores are invariant to global transforms and id permutations") {
  std::mt19937 rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    const Assembly target = small_scene(rng, 4);
    const Assembly est = perturbed(rng, target);
    const Scores base = score(cat(), est, target);
    const Scores moved = score(cat(), transform_assembly(est, random_transform(rng)), target);
    CHECK(moved.f1_b == base.f1_b);
    CHECK(moved.f1_a == base.f1_a);
    CHECK(moved.f1_e == base.f1_e);
    CHECK(moved.aed == base.aed);
    Assembly renamed;
    for (const auto& [id, b] : est.bricks()) renamed.insert({100 - id, b.shape, b.color, b.pose});
    const Scores r = score(cat(), renamed, target);
    CHECK(r.f1_b == base.f1_b);
    CHECK(r.f1_a == base.f1_a);
    CHECK(r.aed == base.aed);
    CHECK(score(cat(), target, target).aed == 0.0);
    CHECK(score(cat(), Assembly{}, target).aed == static_cast<double>(target.size()));
  }
}
