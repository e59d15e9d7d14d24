#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bricklab/core.hpp"

namespace bricklab {

using nlohmann::json;

namespace {

std::vector<Box> merge_cells(const std::vector<Vec3i>& cells) {
  std::set<Vec3i> remaining(cells.begin(), cells.end());
  std::vector<Box> boxes;
  while (!remaining.empty()) {
    const Vec3i start = *remaining.begin();
    Vec3i size{1, 1, 1};
    auto slab_free = [&](Vec3i lo, Vec3i extent) {
      for (int i = 0; i < extent.x; ++i)
        for (int j = 0; j < extent.y; ++j)
          for (int k = 0; k < extent.z; ++k)
            if (!remaining.count({lo.x + i, lo.y + j, lo.z + k})) return false;
      return true;
    };
    while (slab_free({start.x + size.x, start.y, start.z}, {1, size.y, size.z})) ++size.x;
    while (slab_free({start.x, start.y + size.y, start.z}, {size.x, 1, size.z})) ++size.y;
    while (slab_free({start.x, start.y, start.z + size.z}, {size.x, size.y, 1})) ++size.z;
    for (int i = 0; i < size.x; ++i)
      for (int j = 0; j < size.y; ++j)
        for (int k = 0; k < size.z; ++k) remaining.erase({start.x + i, start.y + j, start.z + k});
    const Box lo = cell_box(start);
    const Box hi = cell_box(start + size - Vec3i{1, 1, 1});
    boxes.push_back({lo.lo, hi.hi});
  }
  return boxes;
}

Box union_bounds(const std::vector<Box>& boxes) {
  Box b = boxes.front();
  for (const Box& x : boxes) {
    for (int i = 0; i < 3; ++i) {
      b.lo[i] = std::min(b.lo[i], x.lo[i]);
      b.hi[i] = std::max(b.hi[i], x.hi[i]);
    }
  }
  return b;
}

bool is_unit_axis(const Vec3i& a) { return l1_norm(a) == 1; }

const char* gender_name(Gender g) { return g == Gender::stud ? "stud" : "anti_stud"; }

Gender parse_gender(const std::string& s) {
  if (s == "stud") return Gender::stud;
  if (s == "anti_stud") return Gender::anti_stud;
  throw Error("unknown snap gender: " + s);
}

Vec3i vec_from(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>()}; }

// Block of sx * sy * h cells with a stud on top and an anti-stud underneath
// every footprint cell.
BrickShape block(int id, std::string name, int sx, int sy, int h) {
  BrickShape s;
  s.id = id;
  s.name = std::move(name);
  for (int i = 0; i < sx; ++i)
    for (int j = 0; j < sy; ++j)
      for (int k = 0; k < h; ++k) s.cells.push_back({i, j, k});
  for (int i = 0; i < sx; ++i)
    for (int j = 0; j < sy; ++j)
      s.snaps.push_back({0, {i * kStudPitch, j * kStudPitch, h * kPlateHeight}, {0, 0, 1}, Gender::stud});
  for (int i = 0; i < sx; ++i)
    for (int j = 0; j < sy; ++j)
      s.snaps.push_back({0, {i * kStudPitch, j * kStudPitch, 0}, {0, 0, -1}, Gender::anti_stud});
  return s;
}

void reindex(BrickShape& s) {
  for (std::size_t i = 0; i < s.snaps.size(); ++i) s.snaps[i].index = static_cast<int>(i);
}

Catalog make_builtin() {
  Catalog c;
  int id = 0;
  c.add_shape(block(id++, "brick1x1", 1, 1, 3));
  c.add_shape(block(id++, "brick1x2", 1, 2, 3));
  c.add_shape(block(id++, "brick2x2", 2, 2, 3));
  c.add_shape(block(id++, "brick2x4", 2, 4, 3));
  c.add_shape(block(id++, "brick2x6", 2, 6, 3));
  c.add_shape(block(id++, "plate1x1", 1, 1, 1));
  c.add_shape(block(id++, "plate1x2", 1, 2, 1));
  c.add_shape(block(id++, "plate2x2", 2, 2, 1));
  c.add_shape(block(id++, "plate2x4", 2, 4, 1));
  c.add_shape(block(id++, "plate2x6", 2, 6, 1));

  {
    // 45 degree slope: studs only on the back (low x) row.
    BrickShape s = block(id++, "slope2x2", 2, 2, 3);
    std::erase_if(s.snaps, [](const SnapSpec& sp) { return sp.gender == Gender::stud && sp.position.x != 0; });
    c.add_shape(s);
  }
  {
    // Windshield: full plate base, glass wall two plates high on the back row.
    BrickShape s = block(id++, "windshield2x4", 2, 4, 1);
    std::erase_if(s.snaps, [](const SnapSpec& sp) { return sp.gender == Gender::stud; });
    for (int j = 0; j < 4; ++j) {
      s.cells.push_back({0, j, 1});
      s.cells.push_back({0, j, 2});
      s.snaps.push_back({0, {0, j * kStudPitch, 3 * kPlateHeight}, {0, 0, 1}, Gender::stud});
    }
    c.add_shape(s);
  }
  {
    BrickShape s = block(id++, "headlight1x1", 1, 1, 3);
    s.snaps.push_back({0, {kStudPitch / 2, 0, 12}, {1, 0, 0}, Gender::stud});
    c.add_shape(s);
  }
  c.add_shape(block(id++, "round1x1", 1, 1, 2));
  {
    // Wheel lying flat in its local frame: hub socket underneath, hubcap stud on top.
    BrickShape s;
    s.id = id++;
    s.name = "wheel";
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) s.cells.push_back({i, j, k});
    s.snaps.push_back({0, {kStudPitch / 2, kStudPitch / 2, 0}, {0, 0, -1}, Gender::anti_stud});
    s.snaps.push_back({0, {kStudPitch / 2, kStudPitch / 2, 2 * kPlateHeight}, {0, 0, 1}, Gender::stud});
    c.add_shape(s);
  }
  {
    BrickShape s = block(id++, "axle_plate2x4", 2, 4, 1);
    s.snaps.push_back({0, {kStudPitch / 2, -kStudPitch / 2, 4}, {0, -1, 0}, Gender::stud});
    s.snaps.push_back({0, {kStudPitch / 2, 3 * kStudPitch + kStudPitch / 2, 4}, {0, 1, 0}, Gender::stud});
    c.add_shape(s);
  }
  c.add_shape(block(id++, "rotor_plate1x7", 1, 7, 1));

  const std::array<std::pair<const char*, std::array<std::uint8_t, 3>>, 16> palette{{
      {"black", {27, 42, 52}},        {"blue", {30, 90, 168}},         {"green", {0, 133, 43}},
      {"dark_turquoise", {6, 157, 159}}, {"red", {180, 0, 0}},        {"dark_pink", {211, 53, 157}},
      {"brown", {88, 57, 39}},        {"light_gray", {160, 165, 169}}, {"dark_gray", {99, 95, 97}},
      {"light_blue", {180, 210, 228}}, {"bright_green", {75, 159, 74}}, {"light_turquoise", {85, 165, 175}},
      {"salmon", {242, 112, 94}},     {"pink", {252, 151, 172}},       {"yellow", {242, 205, 55}},
      {"white", {255, 255, 255}},
  }};
  for (std::size_t i = 0; i < palette.size(); ++i) {
    c.add_color({static_cast<int>(i), palette[i].first, palette[i].second});
  }
  c.validate();
  return c;
}

}  // namespace

void BrickShape::finalize() {
  if (cells.empty()) {
    throw Error("shape '" + name + "' has no occupancy");
  }
  reindex(*this);
  boxes = merge_cells(cells);
  bounds = union_bounds(boxes);

  std::vector<Box> unit;
  for (const Vec3i& c : cells) unit.push_back(cell_box(c));
  std::sort(unit.begin(), unit.end());

  symmetries.clear();
  const auto& group = RotationGroup::instance();
  for (int r = 0; r < RotationGroup::kSize; ++r) {
    std::vector<Box> rotated;
    for (const Box& b : unit) rotated.push_back(b.transformed({r, {}}));
    const Box rb = union_bounds(rotated);
    const Vec3i shift = bounds.lo - rb.lo;
    for (Box& b : rotated) b = {b.lo + shift, b.hi + shift};
    std::sort(rotated.begin(), rotated.end());
    if (rotated != unit) continue;

    const Pose t{r, shift};
    std::vector<int> perm(snaps.size(), -1);
    bool ok = true;
    for (std::size_t i = 0; i < snaps.size() && ok; ++i) {
      const Vec3i p = t.apply_point(snaps[i].position);
      const Vec3i a = group.apply(r, snaps[i].axis);
      ok = false;
      for (std::size_t j = 0; j < snaps.size(); ++j) {
        if (snaps[j].position == p && snaps[j].axis == a && snaps[j].gender == snaps[i].gender) {
          perm[i] = static_cast<int>(j);
          ok = true;
          break;
        }
      }
    }
    if (ok) symmetries.push_back({t, std::move(perm)});
  }
}

void Catalog::add_shape(BrickShape shape) {
  if (shape_index_.count(shape.id)) {
    throw Error("duplicate shape id " + std::to_string(shape.id));
  }
  shape.finalize();
  shape_index_[shape.id] = shapes_.size();
  shapes_.push_back(std::move(shape));
}

void Catalog::add_color(Color color) {
  if (color.id != static_cast<int>(colors_.size())) {
    throw Error("colors must be listed with consecutive ids from 0");
  }
  colors_.push_back(std::move(color));
}

const BrickShape& Catalog::shape(int id) const {
  const auto it = shape_index_.find(id);
  if (it == shape_index_.end()) {
    throw Error("unknown shape id " + std::to_string(id));
  }
  return shapes_[it->second];
}

const BrickShape* Catalog::find_shape(std::string_view name) const {
  for (const auto& s : shapes_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

const Color& Catalog::color(int id) const {
  if (!has_color(id)) {
    throw Error("unknown color id " + std::to_string(id));
  }
  return colors_[static_cast<std::size_t>(id)];
}

int Catalog::max_shape_id() const { return shape_index_.empty() ? -1 : shape_index_.rbegin()->first; }

void Catalog::validate() const {
  bool lateral = false;
  std::set<std::string> names;
  for (const auto& s : shapes_) {
    if (!names.insert(s.name).second) throw Error("duplicate shape name " + s.name);
    for (const auto& sp : s.snaps) {
      if (!is_unit_axis(sp.axis)) throw Error("snap axis not axis-aligned in " + s.name);
      if (sp.position.x % kPlacementGrid || sp.position.y % kPlacementGrid || sp.position.z % kPlacementGrid) {
        throw Error("snap off the placement grid in " + s.name);
      }
      bool anchored = false;
      for (const auto& c : s.cells) {
        const Box b = cell_box(c);
        anchored = anchored || (sp.position.x >= b.lo.x && sp.position.x <= b.hi.x && sp.position.y >= b.lo.y &&
                                sp.position.y <= b.hi.y && sp.position.z >= b.lo.z && sp.position.z <= b.hi.z);
      }
      if (!anchored) throw Error("snap not adjacent to occupancy in " + s.name);
      lateral = lateral || sp.axis.z == 0;
    }
  }
  if (!shapes_.empty() && !lateral) {
    throw Error("catalog needs at least one horizontal-axis snap");
  }
  if (colors_.empty()) throw Error("catalog has no colors");
}

const Catalog& Catalog::builtin() {
  static const Catalog catalog = make_builtin();
  return catalog;
}

std::string Catalog::to_json_text() const {
  json j;
  j["version"] = 1;
  j["colors"] = json::array();
  for (const auto& c : colors_) {
    j["colors"].push_back({{"id", c.id}, {"name", c.name}, {"rgb", {c.rgb[0], c.rgb[1], c.rgb[2]}}});
  }
  j["shapes"] = json::array();
  for (const auto& s : shapes_) {
    json js{{"id", s.id}, {"name", s.name}, {"cells", json::array()}, {"snaps", json::array()}};
    for (const auto& c : s.cells) js["cells"].push_back({c.x, c.y, c.z});
    for (const auto& sp : s.snaps) {
      js["snaps"].push_back({{"pos", {sp.position.x, sp.position.y, sp.position.z}},
                             {"axis", {sp.axis.x, sp.axis.y, sp.axis.z}},
                             {"gender", gender_name(sp.gender)}});
    }
    j["shapes"].push_back(js);
  }
  return j.dump(1);
}

Catalog Catalog::from_json_text(std::string_view text) {
  Catalog c;
  try {
    const json j = json::parse(text);
    if (j.at("version").get<int>() != 1) throw Error("unsupported catalog version");
    for (const auto& jc : j.at("colors")) {
      Color col{jc.at("id").get<int>(), jc.at("name").get<std::string>(), {}};
      for (int i = 0; i < 3; ++i) col.rgb[static_cast<std::size_t>(i)] = jc.at("rgb").at(i).get<std::uint8_t>();
      c.add_color(col);
    }
    for (const auto& js : j.at("shapes")) {
      BrickShape s;
      s.id = js.at("id").get<int>();
      s.name = js.at("name").get<std::string>();
      for (const auto& cell : js.at("cells")) s.cells.push_back(vec_from(cell));
      for (const auto& sp : js.at("snaps")) {
        s.snaps.push_back({0, vec_from(sp.at("pos")), vec_from(sp.at("axis")),
                           parse_gender(sp.at("gender").get<std::string>())});
      }
      c.add_shape(std::move(s));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed catalog: ") + e.what());
  }
  c.validate();
  return c;
}

Catalog Catalog::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open catalog " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

}  // namespace bricklab
