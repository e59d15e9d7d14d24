#include <algorithm>
#include <map>
#include <random>

#include "bricklab/datagen.hpp"

namespace bricklab {

namespace {

bool inside_frame(const Catalog& catalog, const BrickInstance& b, const Camera& camera) {
  const Projector proj(camera);
  const Box w = world_bounds(catalog, b);
  for (int corner = 0; corner < 8; ++corner) {
    const Projection p = proj.project({double(corner & 1 ? w.hi.x : w.lo.x), double(corner & 2 ? w.hi.y : w.lo.y),
                                       double(corner & 4 ? w.hi.z : w.lo.z)});
    if (p.col < 2 || p.row < 2 || p.col > camera.width - 2 || p.row > camera.height - 2) return false;
  }
  return true;
}

constexpr int kMaxRestarts = 10;

}  // namespace

std::vector<std::string> validate_assembly(const Catalog& catalog, const Assembly& assembly, const Camera& camera) {
  std::vector<std::string> out;
  if (!occupancy_valid(catalog, assembly)) out.push_back("overlapping bricks");
  if (!is_connected(catalog, assembly)) out.push_back("not connected");
  const FrameBuffers fb = render(catalog, assembly, camera);
  std::map<int, int> shown;
  for (const SnapId& s : visible_snaps(fb)) ++shown[s.instance];
  for (const auto& [id, b] : assembly.bricks()) {
    if (!shown.count(id)) out.push_back("brick " + std::to_string(id) + " has no visible snap");
  }
  return out;
}

Assembly generate_random_construction(const Catalog& catalog, const RandomConstructionConfig& config) {
  if (config.bricks < 1) throw Error("random construction needs at least one brick");
  if (config.shapes.empty()) throw Error("random construction needs at least one shape");
  std::vector<int> shapes;
  for (const auto& name : config.shapes) {
    const BrickShape* s = catalog.find_shape(name);
    if (!s) throw Error("unknown shape '" + name + "'");
    shapes.push_back(s->id);
  }
  std::vector<int> colors = config.colors;
  if (colors.empty()) {
    for (const Color& c : catalog.colors()) colors.push_back(c.id);
  }
  std::mt19937_64 rng(config.seed);
  auto pick = [&](const auto& v) { return v[rng() % v.size()]; };
  const auto& g = RotationGroup::instance();

  // One growth attempt; stops at the first brick that cannot be placed.
  auto grow = [&](Assembly& a) {
    a.add(pick(shapes), pick(colors), {});
    while (static_cast<int>(a.size()) < config.bricks) {
      // Only attach to snaps visible right now, so the build order is one an
      // assembling agent could follow.
      const std::vector<SnapId> open = visible_snaps(render(catalog, a, config.camera));
      if (open.empty()) return;
      bool placed = false;
      for (int attempt = 0; attempt < config.max_attempts && !placed; ++attempt) {
        const SnapId& at = pick(open);
        const WorldSnap w = world_snap(catalog, *a.find(at.instance), at.snap);
        const BrickShape& shape = catalog.shape(pick(shapes));
        std::vector<const SnapSpec*> fits;
        for (const SnapSpec& s : shape.snaps) {
          if (s.gender != w.gender) fits.push_back(&s);
        }
        if (fits.empty()) continue;
        const SnapSpec& own = *pick(fits);
        const int yaw = static_cast<int>(rng() % 4);
        BrickInstance b{a.next_instance_id(), shape.id, pick(colors), {}};
        b.pose.rotation = g.compose(g.about_axis(w.axis, yaw), g.minimal_between(own.axis, -w.axis));
        b.pose.translation = w.position - g.apply(b.pose.rotation, own.position);
        if (check_collision(catalog, a, b) || !inside_frame(catalog, b, config.camera)) continue;
        Assembly grown = a;
        grown.insert(b);
        if (!validate_assembly(catalog, grown, config.camera).empty()) continue;
        a = std::move(grown);
        placed = true;
      }
      if (!placed) return;
    }
  };

  // A partial build can dead-end (e.g. a column of 1x1 bricks where every new
  // brick hides an old one); start over on the same stream.
  std::size_t reached = 0;
  for (int restart = 0; restart < kMaxRestarts; ++restart) {
    Assembly a;
    grow(a);
    if (static_cast<int>(a.size()) == config.bricks) return a;
    reached = std::max(reached, a.size());
  }
  throw Error("random construction failed to place brick " + std::to_string(reached + 1) + " after " +
              std::to_string(config.max_attempts) + " attempts (seed " + std::to_string(config.seed) + ")");
}

}  // namespace bricklab
