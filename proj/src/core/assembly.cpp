#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "bricklab/core.hpp"

namespace bricklab {

using nlohmann::json;

int Assembly::add(int shape, int color, const Pose& pose) {
  const int id = next_id_;
  insert({id, shape, color, pose});
  return id;
}

void Assembly::insert(const BrickInstance& brick) {
  if (brick.id <= 0) throw Error("instance ids must be positive");
  if (!bricks_.emplace(brick.id, brick).second) {
    throw Error("duplicate instance id " + std::to_string(brick.id));
  }
  next_id_ = std::max(next_id_, brick.id + 1);
}

bool Assembly::remove(int id) { return bricks_.erase(id) > 0; }

const BrickInstance* Assembly::find(int id) const {
  const auto it = bricks_.find(id);
  return it == bricks_.end() ? nullptr : &it->second;
}

BrickInstance* Assembly::find_mut(int id) {
  const auto it = bricks_.find(id);
  return it == bricks_.end() ? nullptr : &it->second;
}

std::vector<int> Assembly::ids() const {
  std::vector<int> out;
  out.reserve(bricks_.size());
  for (const auto& [id, _] : bricks_) out.push_back(id);
  return out;
}

WorldSnap world_snap(const Catalog& catalog, const BrickInstance& brick, int snap_index) {
  const BrickShape& shape = catalog.shape(brick.shape);
  if (snap_index < 0 || static_cast<std::size_t>(snap_index) >= shape.snaps.size()) {
    throw Error("snap index " + std::to_string(snap_index) + " out of range for " + shape.name);
  }
  const SnapSpec& s = shape.snaps[static_cast<std::size_t>(snap_index)];
  return {brick.pose.apply_point(s.position), brick.pose.apply_dir(s.axis), s.gender};
}

std::vector<Box> world_boxes(const Catalog& catalog, const BrickInstance& brick) {
  const BrickShape& shape = catalog.shape(brick.shape);
  std::vector<Box> out;
  out.reserve(shape.boxes.size());
  for (const Box& b : shape.boxes) out.push_back(b.transformed(brick.pose));
  return out;
}

Box world_bounds(const Catalog& catalog, const BrickInstance& brick) {
  return catalog.shape(brick.shape).bounds.transformed(brick.pose);
}

namespace {

struct Vec3iHash {
  std::size_t operator()(const Vec3i& v) const {
    return static_cast<std::size_t>(v.x) * 73856093u ^ static_cast<std::size_t>(v.y) * 19349663u ^
           static_cast<std::size_t>(v.z) * 83492791u;
  }
};

struct SnapRef {
  int instance;
  int snap;
  Vec3i axis;
  Gender gender;
};

void collect_edges(const std::vector<SnapRef>& refs, std::vector<Edge>& out) {
  for (std::size_t i = 0; i < refs.size(); ++i) {
    for (std::size_t j = i + 1; j < refs.size(); ++j) {
      const SnapRef& a = refs[i];
      const SnapRef& b = refs[j];
      if (a.instance == b.instance || a.gender == b.gender || a.axis != -b.axis) continue;
      if (a.instance < b.instance) {
        out.push_back({a.instance, a.snap, b.instance, b.snap});
      } else {
        out.push_back({b.instance, b.snap, a.instance, a.snap});
      }
    }
  }
}

}  // namespace

std::vector<Edge> derive_edges(const Catalog& catalog, const Assembly& assembly) {
  std::unordered_map<Vec3i, std::vector<SnapRef>, Vec3iHash> by_position;
  for (const auto& [id, brick] : assembly.bricks()) {
    const BrickShape& shape = catalog.shape(brick.shape);
    for (const SnapSpec& s : shape.snaps) {
      by_position[brick.pose.apply_point(s.position)].push_back(
          {id, s.index, brick.pose.apply_dir(s.axis), s.gender});
    }
  }
  std::vector<Edge> edges;
  for (const auto& [pos, refs] : by_position) {
    if (refs.size() > 1) collect_edges(refs, edges);
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

std::vector<Edge> edges_of(const Catalog& catalog, const Assembly& assembly, int instance_id) {
  const BrickInstance* brick = assembly.find(instance_id);
  if (!brick) return {};
  const BrickShape& shape = catalog.shape(brick->shape);
  std::unordered_map<Vec3i, std::vector<SnapRef>, Vec3iHash> mine;
  for (const SnapSpec& s : shape.snaps) {
    mine[brick->pose.apply_point(s.position)].push_back({instance_id, s.index, brick->pose.apply_dir(s.axis), s.gender});
  }
  const Box bounds = world_bounds(catalog, *brick);
  std::vector<Edge> edges;
  for (const auto& [id, other] : assembly.bricks()) {
    if (id == instance_id) continue;
    const Box ob = world_bounds(catalog, other);
    // Snaps lie on the closed boxes, so touching bounds is required for contact.
    if (ob.lo.x > bounds.hi.x || bounds.lo.x > ob.hi.x || ob.lo.y > bounds.hi.y || bounds.lo.y > ob.hi.y ||
        ob.lo.z > bounds.hi.z || bounds.lo.z > ob.hi.z) {
      continue;
    }
    for (const SnapSpec& s : catalog.shape(other.shape).snaps) {
      const auto it = mine.find(other.pose.apply_point(s.position));
      if (it == mine.end()) continue;
      std::vector<SnapRef> refs = it->second;
      refs.push_back({id, s.index, other.pose.apply_dir(s.axis), s.gender});
      collect_edges(refs, edges);
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

bool check_collision(const Catalog& catalog, const Assembly& assembly, const BrickInstance& candidate) {
  const std::vector<Box> mine = world_boxes(catalog, candidate);
  const Box bounds = world_bounds(catalog, candidate);
  for (const auto& [id, other] : assembly.bricks()) {
    if (id == candidate.id) continue;
    if (!world_bounds(catalog, other).overlaps(bounds)) continue;
    for (const Box& b : world_boxes(catalog, other)) {
      for (const Box& m : mine) {
        if (b.overlaps(m)) return true;
      }
    }
  }
  return false;
}

bool occupancy_valid(const Catalog& catalog, const Assembly& assembly) {
  for (const auto& [id, brick] : assembly.bricks()) {
    if (check_collision(catalog, assembly, brick)) return false;
  }
  return true;
}

bool is_connected(const Catalog& catalog, const Assembly& assembly) {
  if (assembly.size() <= 1) return true;
  std::map<int, int> parent;
  for (int id : assembly.ids()) parent[id] = id;
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Edge& e : derive_edges(catalog, assembly)) parent[find(e.instance_a)] = find(e.instance_b);
  const int root = find(parent.begin()->first);
  return std::all_of(parent.begin(), parent.end(), [&](const auto& kv) { return find(kv.first) == root; });
}

Assembly transform_assembly(const Assembly& assembly, const Pose& transform) {
  Assembly out;
  for (const auto& [id, brick] : assembly.bricks()) {
    BrickInstance b = brick;
    b.pose = compose(transform, brick.pose);
    out.insert(b);
  }
  return out;
}

CanonicalPose canonical_pose(const Catalog& catalog, int shape_id, const Pose& pose) {
  const BrickShape& shape = catalog.shape(shape_id);
  std::size_t best = 0;
  Pose best_pose = compose(pose, shape.symmetries.front().transform);
  for (std::size_t k = 1; k < shape.symmetries.size(); ++k) {
    const Pose p = compose(pose, shape.symmetries[k].transform);
    if (p < best_pose) {
      best_pose = p;
      best = k;
    }
  }
  const auto& perm = shape.symmetries[best].snap_perm;
  std::vector<int> snap_map(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) snap_map[static_cast<std::size_t>(perm[i])] = static_cast<int>(i);
  return {best_pose, std::move(snap_map)};
}

bool same_placement(const Catalog& catalog, int shape, const Pose& a, const Pose& b) {
  if (a == b) return true;
  return canonical_pose(catalog, shape, a).pose == canonical_pose(catalog, shape, b).pose;
}

Assembly recolored(const Assembly& assembly, int from, int to) {
  Assembly out;
  for (const auto& [id, brick] : assembly.bricks()) {
    BrickInstance b = brick;
    if (b.color == from) b.color = to;
    out.insert(b);
  }
  return out;
}

std::string assembly_to_json_text(const Catalog& catalog, const Assembly& assembly) {
  json j;
  j["version"] = 1;
  j["bricks"] = json::array();
  for (const auto& [id, b] : assembly.bricks()) {
    j["bricks"].push_back({{"id", id},
                           {"shape", catalog.shape(b.shape).name},
                           {"color", b.color},
                           {"rot", b.pose.rotation},
                           {"pos", {b.pose.translation.x, b.pose.translation.y, b.pose.translation.z}}});
  }
  return j.dump();
}

Assembly assembly_from_json_text(const Catalog& catalog, std::string_view text) {
  Assembly out;
  try {
    const json j = json::parse(text);
    if (j.at("version").get<int>() != 1) throw Error("unsupported assembly version");
    for (const auto& jb : j.at("bricks")) {
      const std::string name = jb.at("shape").get<std::string>();
      const BrickShape* shape = catalog.find_shape(name);
      if (!shape) throw Error("unknown shape '" + name + "'");
      BrickInstance b;
      b.id = jb.at("id").get<int>();
      b.shape = shape->id;
      b.color = jb.at("color").get<int>();
      if (!catalog.has_color(b.color)) throw Error("unknown color " + std::to_string(b.color));
      b.pose.rotation = jb.at("rot").get<int>();
      const auto& p = jb.at("pos");
      b.pose.translation = {p.at(0).get<int>(), p.at(1).get<int>(), p.at(2).get<int>()};
      if (!b.pose.lattice_valid()) throw Error("brick " + std::to_string(b.id) + " has an off-lattice pose");
      out.insert(b);
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed assembly: ") + e.what());
  }
  return out;
}

Assembly load_assembly(const Catalog& catalog, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open assembly " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return assembly_from_json_text(catalog, ss.str());
}

void save_assembly(const Catalog& catalog, const Assembly& assembly, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write assembly " + path);
  out << assembly_to_json_text(catalog, assembly) << '\n';
}

}  // namespace bricklab
