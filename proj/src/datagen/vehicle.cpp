#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "bricklab/datagen.hpp"

namespace bricklab {

namespace {

Choice uniform(std::string name, std::vector<std::string> options, bool color = false) {
  std::vector<double> w(options.size(), 1.0);
  return {std::move(name), std::move(options), std::move(w), color};
}

std::vector<std::string> palette_names() {
  std::vector<std::string> out;
  for (int i = 0; i < 16; ++i) out.push_back(std::to_string(i));
  return out;
}

// Incremental vehicle assembly: every part must touch the model, avoid
// overlaps and leave every brick with a visible snap.
class Builder {
 public:
  Builder(const Catalog& catalog, const Camera& camera) : catalog_(catalog), camera_(camera) {}

  int shape(const std::string& name) const {
    const BrickShape* s = catalog_.find_shape(name);
    if (!s) throw Error("vehicle grammar uses unknown shape '" + name + "'");
    return s->id;
  }

  // Places without the visibility test; used for the chassis core.
  int place_unchecked(const std::string& name, int color, const Pose& pose) {
    BrickInstance b{a_.next_instance_id(), shape(name), color, pose};
    if (check_collision(catalog_, a_, b)) throw Error("vehicle grammar produced overlapping " + name);
    a_.insert(b);
    return b.id;
  }

  int try_place(const std::string& name, int color, const std::vector<Pose>& candidates) {
    for (const Pose& pose : candidates) {
      BrickInstance b{a_.next_instance_id(), shape(name), color, pose};
      if (check_collision(catalog_, a_, b)) continue;
      Assembly grown = a_;
      grown.insert(b);
      if (!a_.empty() && edges_of(catalog_, grown, b.id).empty()) continue;
      if (!validate_assembly(catalog_, grown, camera_).empty()) continue;
      a_ = std::move(grown);
      return b.id;
    }
    return 0;
  }

  // Pose that puts `own_snap` of a new brick onto a host snap, with a residual yaw.
  Pose attach_pose(int host, int host_snap, const std::string& name, int own_snap, int yaw) const {
    const auto& g = RotationGroup::instance();
    const WorldSnap w = world_snap(catalog_, *a_.find(host), host_snap);
    const SnapSpec& own = catalog_.shape(shape(name)).snaps.at(static_cast<std::size_t>(own_snap));
    Pose p;
    p.rotation = g.compose(g.about_axis(w.axis, yaw), g.minimal_between(own.axis, -w.axis));
    p.translation = w.position - g.apply(p.rotation, own.position);
    return p;
  }

  int snap_index(const std::string& name, const Vec3i& pos, Gender gender) const {
    for (const SnapSpec& s : catalog_.shape(shape(name)).snaps) {
      if (s.position == pos && s.gender == gender) return s.index;
    }
    throw Error("no snap at requested position on " + name);
  }

  const Assembly& assembly() const { return a_; }

 private:
  const Catalog& catalog_;
  Camera camera_;
  Assembly a_;
};

// Pose covering cells [x, x+2) in x and [y, y+4) in y for 2x4 footprints.
Pose cells(int x, int y, int z) { return {0, {x * kStudPitch, y * kStudPitch, z}}; }

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

VehicleGrammarConfig VehicleGrammarConfig::defaults() {
  VehicleGrammarConfig c;
  c.choices = {
      uniform("length", {"10", "12", "14"}),
      uniform("cab_length", {"2", "4"}),
      uniform("cab_height", {"1", "2", "3"}),
      uniform("cab_position", {"front", "middle"}),
      uniform("cab_style", {"solid", "split"}),
      uniform("windshield", {"none", "slopes", "windshield"}),
      uniform("headlights", {"none", "plain", "lenses"}),
      uniform("wings", {"none", "wings"}),
      uniform("rotor", {"none", "rotor"}),
      uniform("exhaust", {"none", "single", "double"}),
      uniform("cargo", {"0", "1", "2", "3"}),
      uniform("cargo_shape", {"brick1x2", "brick2x2", "plate2x2", "round1x1"}),
      uniform("chassis_color", palette_names(), true),
      uniform("cab_color", palette_names(), true),
      uniform("glass_color", palette_names(), true),
      uniform("wheel_color", palette_names(), true),
      uniform("accent_color", palette_names(), true),
      uniform("wing_color", palette_names(), true),
      uniform("cargo_color", palette_names(), true),
  };
  return c;
}

const Choice& VehicleGrammarConfig::choice(const std::string& name) const {
  for (const Choice& c : choices) {
    if (c.name == name) return c;
  }
  throw Error("vehicle grammar has no choice '" + name + "'");
}

double shannon_bits(const std::vector<double>& weights) {
  double total = 0;
  for (double w : weights) {
    if (w < 0) throw Error("negative choice weight");
    total += w;
  }
  if (total <= 0) throw Error("choice weights sum to zero");
  double bits = 0;
  for (double w : weights) {
    if (w > 0) bits -= (w / total) * std::log2(w / total);
  }
  return bits;
}

EntropyBits grammar_entropy(const VehicleGrammarConfig& config) {
  EntropyBits e;
  for (const Choice& c : config.choices) {
    (c.affects_color ? e.color : e.shape) += shannon_bits(c.weights);
  }
  return e;
}

Assembly generate_vehicle(const Catalog& catalog, const VehicleGrammarConfig& config) {
  for (const Choice& c : config.choices) {
    if (c.options.empty() || c.options.size() != c.weights.size()) {
      throw Error("vehicle grammar choice '" + c.name + "' is malformed");
    }
  }
  std::mt19937_64 rng(mix(config.seed, 0));
  auto draw = [&](const std::string& name) {
    const Choice& c = config.choice(name);
    std::discrete_distribution<std::size_t> d(c.weights.begin(), c.weights.end());
    return c.options[d(rng)];
  };
  auto draw_int = [&](const std::string& name) { return std::stoi(draw(name)); };

  const int length = draw_int("length");
  const int cab_length = draw_int("cab_length");
  const int cab_height = draw_int("cab_height");
  const std::string cab_position = draw("cab_position");
  const std::string cab_style = draw("cab_style");
  const std::string windshield = draw("windshield");
  const std::string headlights = draw("headlights");
  const bool wings = draw("wings") == "wings";
  const bool rotor = draw("rotor") == "rotor";
  const std::string exhaust = draw("exhaust");
  const int cargo = draw_int("cargo");
  const std::string cargo_shape = draw("cargo_shape");
  const int chassis_color = draw_int("chassis_color");
  const int cab_color = draw_int("cab_color");
  const int glass_color = draw_int("glass_color");
  const int wheel_color = draw_int("wheel_color");
  const int accent_color = draw_int("accent_color");
  const int wing_color = draw_int("wing_color");
  const int cargo_color = draw_int("cargo_color");

  Builder b(catalog, Camera{});
  // Floor: 2x4 pieces along x at z = 0, front (+x) and rear pieces carry the axles.
  // The piece over cells x = 0, 1 comes first so brick 1 sits at the origin.
  const int x0 = -((length / 2) / 2) * 2;
  const int x1 = x0 + length - 1;
  std::vector<int> floor_x;
  for (int x = x0; x <= x1; x += 2) floor_x.push_back(x);
  std::stable_sort(floor_x.begin(), floor_x.end(), [](int a, int c) { return (a == 0) > (c == 0); });
  std::map<int, int> floor_piece;
  for (int x : floor_x) {
    const bool axle = x == x0 || x == x1 - 1;
    floor_piece[x] = b.place_unchecked(axle ? "axle_plate2x4" : "plate2x4", chassis_color, cells(x, 0, 0));
  }
  // Joint plates tie consecutive floor pieces together.
  for (int x = x0 + 1; x + 1 <= x1 - 1; x += 2) {
    b.place_unchecked("plate2x2", chassis_color, {0, {x * kStudPitch, kStudPitch, kPlateHeight}});
  }
  // Wheels on the four axle side studs.
  for (int x : {x0, x1 - 1}) {
    for (const Vec3i& stud : {Vec3i{10, -10, 4}, Vec3i{10, 70, 4}}) {
      const int host = floor_piece[x];
      const int snap = b.snap_index("axle_plate2x4", stud, Gender::stud);
      const int hub = b.snap_index("wheel", {10, 10, 0}, Gender::anti_stud);
      b.place_unchecked("wheel", wheel_color, b.attach_pose(host, snap, "wheel", hub, 0));
    }
  }
  if (!validate_assembly(catalog, b.assembly()).empty()) throw Error("vehicle chassis fails validation");

  // Body parts rest on the joint plates. The cab covers the far half only so
  // the joints under it keep exposed studs.
  const int body_z = 2 * kPlateHeight;
  const auto& g = RotationGroup::instance();
  const int yaw90 = g.about_axis({0, 0, 1}, 1);
  // Keep the cab clear of the sight line to the far rear wheel.
  int cab_x = cab_position == "front" ? x1 - cab_length - 2 : x0 + 4;
  cab_x = std::max(cab_x, x0 + 4);

  // Cab layers step toward the far side so each keeps exposed studs.
  int cab_top = body_z;
  int top_layer_y = 0;
  for (int layer = 0; layer < cab_height; ++layer) {
    const int z = body_z + layer * kBrickHeight;
    const int y = -layer;
    bool ok;
    if (cab_style == "solid") {
      if (cab_length == 4) {
        // brick2x4 turned to run along x: cells [cab_x, cab_x+4) x {y, y+1}.
        ok = b.try_place("brick2x4", cab_color, {{yaw90, {(cab_x + 3) * kStudPitch, y * kStudPitch, z}}}) != 0;
      } else {
        ok = b.try_place("brick2x2", cab_color, {{0, {cab_x * kStudPitch, y * kStudPitch, z}}}) != 0;
      }
    } else {
      ok = true;
      for (int x = cab_x; x < cab_x + cab_length && ok; ++x) {
        ok = b.try_place("brick1x2", cab_color, {{0, {x * kStudPitch, y * kStudPitch, z}}}) != 0;
      }
    }
    if (!ok) break;
    cab_top = z + kBrickHeight;
    top_layer_y = y;
  }
  const int top_layer_x = cab_x;

  const int glass_x = cab_x + cab_length;
  if (windshield == "windshield") {
    b.try_place("windshield2x4", glass_color, {cells(glass_x, 0, body_z)});
  } else if (windshield == "slopes") {
    b.try_place("slope2x2", glass_color, {{0, {glass_x * kStudPitch, 0, body_z}}});
  }

  if (headlights != "none") {
    for (int y : {2, 3}) {
      const int id = b.try_place("headlight1x1", accent_color, {{0, {x1 * kStudPitch, y * kStudPitch, kPlateHeight}}});
      if (id && headlights == "lenses") {
        const int side = b.snap_index("headlight1x1", {10, 0, 12}, Gender::stud);
        const int under = b.snap_index("round1x1", {0, 0, 0}, Gender::anti_stud);
        std::vector<Pose> poses;
        for (int yaw = 0; yaw < 4; ++yaw) poses.push_back(b.attach_pose(id, side, "round1x1", under, yaw));
        b.try_place("round1x1", accent_color, poses);
      }
    }
  }

  if (wings && cab_top > body_z) {
    std::vector<Pose> poses;
    for (int x = top_layer_x; x + 1 < top_layer_x + cab_length + 1; ++x) {
      for (int y : {top_layer_y - 2, top_layer_y - 1, top_layer_y}) poses.push_back({0, {x * kStudPitch, y * kStudPitch, cab_top}});
    }
    b.try_place("plate2x6", wing_color, poses);
  }
  if (rotor && cab_top > body_z) {
    std::vector<Pose> masts;
    for (int x = top_layer_x + cab_length - 1; x >= top_layer_x; --x) {
      for (int y : {top_layer_y + 1, top_layer_y}) {
        for (int z : {cab_top, cab_top + kPlateHeight}) masts.push_back({0, {x * kStudPitch, y * kStudPitch, z}});
      }
    }
    const int mast = b.try_place("round1x1", accent_color, masts);
    if (mast) {
      const Vec3i top = b.assembly().find(mast)->pose.translation + Vec3i{0, 0, 2 * kPlateHeight};
      b.try_place("rotor_plate1x7", wing_color,
                  {{0, top + Vec3i{0, -3 * kStudPitch, 0}}, {yaw90, top + Vec3i{3 * kStudPitch, 0, 0}}});
    }
  }

  if (exhaust != "none") {
    std::vector<Pose> pipes;
    for (int y : {0, 1, 2, 3}) pipes.push_back({0, {x0 * kStudPitch, y * kStudPitch, kPlateHeight}});
    int top = b.try_place("round1x1", accent_color, pipes);
    if (top && exhaust == "double") {
      b.try_place("round1x1", accent_color, {{0, b.assembly().find(top)->pose.translation + Vec3i{0, 0, 2 * kPlateHeight}}});
    }
  }

  // Cargo sits on free upward studs behind the cab; filler anywhere.
  auto stud_candidates = [&](const std::string& name, int max_x) {
    std::vector<Pose> out;
    const BrickShape& shape = catalog.shape(b.shape(name));
    for (const auto& [id, host] : b.assembly().bricks()) {
      const BrickShape& hs = catalog.shape(host.shape);
      for (const SnapSpec& sp : hs.snaps) {
        const WorldSnap w = world_snap(catalog, host, sp.index);
        if (w.gender != Gender::stud || w.axis != Vec3i{0, 0, 1} || w.position.x >= max_x) continue;
        for (const SnapSpec& own : shape.snaps) {
          if (own.gender != Gender::anti_stud) continue;
          for (int yaw = 0; yaw < 4; ++yaw) out.push_back(b.attach_pose(id, sp.index, name, own.index, yaw));
        }
      }
    }
    std::shuffle(out.begin(), out.end(), rng);
    if (out.size() > 48) out.resize(48);
    return out;
  };
  for (int i = 0; i < cargo; ++i) b.try_place(cargo_shape, cargo_color, stud_candidates(cargo_shape, cab_x * kStudPitch));
  for (int guard = 0; static_cast<int>(b.assembly().size()) < config.min_bricks && guard < 40; ++guard) {
    b.try_place(cargo_shape, cargo_color, stud_candidates(cargo_shape, 1 << 20));
  }

  const int n = static_cast<int>(b.assembly().size());
  if (n < config.min_bricks || n > config.max_bricks) {
    throw Error("vehicle with " + std::to_string(n) + " bricks is outside the configured band (seed " +
                std::to_string(config.seed) + ")");
  }
  return b.assembly();
}

}  // namespace bricklab
