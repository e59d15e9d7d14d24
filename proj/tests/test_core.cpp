#include <doctest.h>

#include <random>

#include "bricklab/core.hpp"
#include "oracles.hpp"

using namespace bricklab;

namespace {

const Catalog& cat() { return Catalog::builtin(); }
int sid(const char* name) { return cat().find_shape(name)->id; }

// Loose random scene: bricks dropped at random lattice poses, colliding ones rejected.
Assembly random_scene(std::mt19937& rng, int n) {
  Assembly a;
  std::uniform_int_distribution<int> shape(0, static_cast<int>(cat().shapes().size()) - 1);
  std::uniform_int_distribution<int> rot(0, 23);
  std::uniform_int_distribution<int> coord(-3, 3);
  int guard = 0;
  while (static_cast<int>(a.size()) < n && guard++ < 2000) {
    BrickInstance b{a.next_instance_id(), shape(rng), 4, {rot(rng), {coord(rng) * 10, coord(rng) * 10, coord(rng) * 8}}};
    if (!check_collision(cat(), a, b)) a.insert(b);
  }
  return a;
}

}  // namespace

TEST_CASE("rotation table is a group") {
  const auto& g = RotationGroup::instance();
  CHECK(g.matrix(0) == Mat3i{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}});
  for (int a = 0; a < 24; ++a) {
    CHECK(g.compose(a, 0) == a);
    CHECK(g.compose(0, a) == a);
    CHECK(g.compose(a, g.inverse(a)) == 0);
    for (int b = 0; b < 24; ++b) {
      const int ab = g.compose(a, b);
      CHECK(ab >= 0);
      CHECK(ab < 24);
      // Associativity against a third element.
      for (int c = 0; c < 24; c += 5) CHECK(g.compose(ab, c) == g.compose(a, g.compose(b, c)));
    }
  }
}

TEST_CASE("about_axis follows the right-hand rule") {
  const auto& g = RotationGroup::instance();
  // Rz(90) = [[0,-1,0],[1,0,0],[0,0,1]] worked by hand.
  CHECK(g.apply(g.about_axis({0, 0, 1}, 1), {20, 0, 0}) == Vec3i{0, 20, 0});
  CHECK(g.apply(g.about_axis({1, 0, 0}, 1), {0, 0, 1}) == Vec3i{0, -1, 0});
  CHECK(g.about_axis({0, 0, 1}, 4) == 0);
  CHECK(g.apply(g.minimal_between({0, 0, -1}, {0, 1, 0}), {0, 0, -1}) == Vec3i{0, 1, 0});
  CHECK(g.apply(g.minimal_between({0, 0, 1}, {0, 0, -1}), {0, 0, 1}) == Vec3i{0, 0, -1});
}

TEST_CASE("world_snap applies rotation then translation") {
  BrickInstance b{1, sid("brick1x2"), 0, {}};
  // brick1x2 snap 0 is the stud at local (0,0,24).
  auto w = world_snap(cat(), b, 0);
  CHECK(w.position == Vec3i{0, 0, 24});
  CHECK(w.axis == Vec3i{0, 0, 1});
  b.pose.translation = {20, 0, 0};
  CHECK(world_snap(cat(), b, 0).position == Vec3i{20, 0, 24});

  // Second stud sits at local (0,20,24); a 90 degree yaw sends y to -x.
  b.pose = {RotationGroup::instance().about_axis({0, 0, 1}, 1), {}};
  w = world_snap(cat(), b, 1);
  CHECK(w.position == Vec3i{-20, 0, 24});
  CHECK(w.axis == Vec3i{0, 0, 1});

  CHECK_THROWS_AS(world_snap(cat(), b, 99), Error);
}

TEST_CASE("derive_edges on small configurations") {
  Assembly a;
  CHECK(derive_edges(cat(), a).empty());

  a.add(sid("brick2x4"), 1, {});
  a.add(sid("brick2x4"), 4, {0, {0, 0, 24}});
  const auto edges = derive_edges(cat(), a);
  CHECK(edges.size() == 8);
  CHECK(edges == oracle::edges_by_enumeration(cat(), a));

  Assembly side;
  side.add(sid("brick2x4"), 1, {});
  side.add(sid("brick2x4"), 1, {0, {40, 0, 0}});
  CHECK(derive_edges(cat(), side).empty());
  CHECK_FALSE(is_connected(cat(), side));
}

TEST_CASE("check_collision examples") {
  Assembly a;
  const BrickInstance b{1, sid("brick2x4"), 1, {}};
  CHECK_FALSE(check_collision(cat(), a, b));
  a.insert(b);
  CHECK(check_collision(cat(), a, BrickInstance{2, sid("brick2x4"), 1, {}}));
  // Offset by exactly the 2-stud footprint width.
  const BrickInstance beside{2, sid("brick2x4"), 1, {0, {40, 0, 0}}};
  CHECK_FALSE(check_collision(cat(), a, beside));
  CHECK_FALSE(oracle::voxels_intersect(cat(), b, beside));
  // Re-posing a brick ignores its own occupancy.
  CHECK_FALSE(check_collision(cat(), a, b));
}

TEST_CASE("collision agrees with the voxel oracle on random pairs") {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> shape(0, static_cast<int>(cat().shapes().size()) - 1);
  std::uniform_int_distribution<int> rot(0, 23);
  std::uniform_int_distribution<int> coord(-4, 4);
  for (int trial = 0; trial < 300; ++trial) {
    const BrickInstance a{1, shape(rng), 0, {rot(rng), {}}};
    const BrickInstance b{2, shape(rng), 0, {rot(rng), {coord(rng) * 10, coord(rng) * 10, coord(rng) * 4}}};
    Assembly scene;
    scene.insert(a);
    CHECK(check_collision(cat(), scene, b) == oracle::voxels_intersect(cat(), a, b));
  }
}

TEST_CASE("collision is consistent across insertion order") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const Assembly a = random_scene(rng, 6);
    REQUIRE(occupancy_valid(cat(), a));
    for (const auto& [id, brick] : a.bricks()) {
      Assembly rest = a;
      rest.remove(id);
      CHECK_FALSE(check_collision(cat(), rest, brick));
    }
  }
}

TEST_CASE("transform_assembly preserves edges") {
  std::mt19937 rng(3);
  Assembly a;
  a.add(sid("brick2x4"), 1, {});
  a.add(sid("plate2x2"), 2, {0, {0, 20, 24}});
  a.add(sid("headlight1x1"), 3, {0, {20, 60, 24}});
  const auto base = derive_edges(cat(), a);
  REQUIRE(base.size() == 5);

  CHECK(transform_assembly(a, {}) == a);
  std::uniform_int_distribution<int> rot(0, 23);
  for (int trial = 0; trial < 50; ++trial) {
    const Pose t{rot(rng), {2 * (trial % 7), -4 * (trial % 5), 8}};
    const Assembly moved = transform_assembly(a, t);
    CHECK(derive_edges(cat(), moved) == base);
    CHECK(transform_assembly(moved, t.inverse()) == a);
  }
}

TEST_CASE("derive_edges is invariant under brick reindexing") {
  std::mt19937 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const Assembly a = random_scene(rng, 5);
    CHECK(derive_edges(cat(), a) == oracle::edges_by_enumeration(cat(), a));
    // Reverse the ids and map the edges back.
    Assembly r;
    const int top = a.next_instance_id();
    for (const auto& [id, b] : a.bricks()) r.insert({top - id, b.shape, b.color, b.pose});
    std::vector<Edge> mapped;
    for (const Edge& e : derive_edges(cat(), r)) {
      Edge m{top - e.instance_a, e.snap_a, top - e.instance_b, e.snap_b};
      if (m.instance_a > m.instance_b) m = {m.instance_b, m.snap_b, m.instance_a, m.snap_a};
      mapped.push_back(m);
    }
    std::sort(mapped.begin(), mapped.end());
    CHECK(mapped == derive_edges(cat(), a));
    // edges_of agrees with the global derivation.
    for (const auto& [id, b] : a.bricks()) {
      std::vector<Edge> expect;
      for (const Edge& e : derive_edges(cat(), a))
        if (e.instance_a == id || e.instance_b == id) expect.push_back(e);
      CHECK(edges_of(cat(), a, id) == expect);
    }
  }
}

TEST_CASE("shape symmetries") {
  const auto& g = RotationGroup::instance();
  CHECK(cat().shape(sid("brick2x2")).symmetries.size() == 4);
  CHECK(cat().shape(sid("brick2x4")).symmetries.size() == 2);
  CHECK(cat().shape(sid("headlight1x1")).symmetries.size() == 1);
  CHECK(cat().shape(sid("slope2x2")).symmetries.size() == 1);

  // A 2x2 brick yawed 90 degrees about its centre (10,10) is the same placement.
  const Pose yaw{g.about_axis({0, 0, 1}, 1), {20, 0, 0}};
  CHECK(same_placement(cat(), sid("brick2x2"), {}, yaw));
  CHECK_FALSE(same_placement(cat(), sid("brick2x4"), {}, yaw));
  // Snap index mapping lands each world snap on the same world snap of the canonical pose.
  const BrickInstance b{1, sid("brick2x2"), 0, yaw};
  const CanonicalPose cp = canonical_pose(cat(), b.shape, b.pose);
  const BrickInstance c{1, b.shape, 0, cp.pose};
  for (int j = 0; j < 8; ++j) {
    CHECK(world_snap(cat(), b, j).position == world_snap(cat(), c, cp.snap_map[static_cast<std::size_t>(j)]).position);
  }
}

TEST_CASE("assembly json round trip and catalog file round trip") {
  std::mt19937 rng(2);
  const Assembly a = random_scene(rng, 6);
  CHECK(assembly_from_json_text(cat(), assembly_to_json_text(cat(), a)) == a);
  CHECK(assembly_to_json_text(cat(), Assembly{}) == R"({"bricks":[],"version":1})");
  CHECK_THROWS_AS(assembly_from_json_text(cat(), R"({"version":1,"bricks":[{"id":1,"shape":"nope","color":0,"rot":0,"pos":[0,0,0]}]})"), Error);
  CHECK_THROWS_AS(assembly_from_json_text(cat(), R"({"version":1,"bricks":[{"id":1,"shape":"brick1x1","color":0,"rot":0,"pos":[1,0,0]}]})"), Error);

  const Catalog again = Catalog::from_json_text(cat().to_json_text());
  REQUIRE(again.shapes().size() == cat().shapes().size());
  for (std::size_t i = 0; i < again.shapes().size(); ++i) {
    CHECK(again.shapes()[i].boxes == cat().shapes()[i].boxes);
    CHECK(again.shapes()[i].symmetries.size() == cat().shapes()[i].symmetries.size());
  }
  CHECK(again.colors().size() == 16);
}

TEST_CASE("catalog validation") {
  CHECK(cat().shapes().size() >= 14);
  CHECK_THROWS_AS(Catalog::from_json_text(R"({"version":1,"colors":[{"id":0,"name":"k","rgb":[0,0,0]}],
      "shapes":[{"id":0,"name":"a","cells":[[0,0,0]],"snaps":[{"pos":[0,0,8],"axis":[0,0,1],"gender":"stud"}]}]})"),
                  Error);  // no horizontal snap
  CHECK_THROWS_AS(Catalog::from_json_text(R"({"version":1,"colors":[{"id":0,"name":"k","rgb":[0,0,0]}],
      "shapes":[{"id":0,"name":"a","cells":[[0,0,0]],"snaps":[{"pos":[0,0,40],"axis":[1,0,0],"gender":"stud"}]}]})"),
                  Error);  // snap floating away from the cells
}
