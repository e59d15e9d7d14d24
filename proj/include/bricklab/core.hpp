#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bricklab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// LDraw units.
inline constexpr int kStudPitch = 20;
inline constexpr int kPlateHeight = 8;
inline constexpr int kBrickHeight = 24;
// Finest placement grid for pose translations.
inline constexpr int kPlacementGrid = 2;

struct Vec3i {
  int x = 0;
  int y = 0;
  int z = 0;

  constexpr Vec3i operator+(const Vec3i& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3i operator-(const Vec3i& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3i operator-() const { return {-x, -y, -z}; }
  constexpr Vec3i operator*(int s) const { return {x * s, y * s, z * s}; }
  constexpr int operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  int& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr auto operator<=>(const Vec3i&) const = default;
  constexpr bool operator==(const Vec3i&) const = default;
};

constexpr int dot(const Vec3i& a, const Vec3i& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3i cross(const Vec3i& a, const Vec3i& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
constexpr int l1_norm(const Vec3i& v) {
  return (v.x < 0 ? -v.x : v.x) + (v.y < 0 ? -v.y : v.y) + (v.z < 0 ? -v.z : v.z);
}

using Mat3i = std::array<std::array<int, 3>, 3>;

/// The 24 axis-aligned proper rotations. Index 0 is the identity; the rest are
/// ordered by decreasing trace (smallest rotation angle first).
class RotationGroup {
 public:
  static constexpr int kSize = 24;
  static const RotationGroup& instance();

  const Mat3i& matrix(int r) const { return matrices_.at(static_cast<std::size_t>(r)); }
  int compose(int a, int b) const { return compose_[a][b]; }  // a after b
  int inverse(int r) const { return inverse_[r]; }
  int trace(int r) const;
  Vec3i apply(int r, const Vec3i& v) const;
  std::optional<int> index_of(const Mat3i& m) const;
  /// Right-handed rotation about a unit lattice axis by quarter_turns * 90 degrees.
  int about_axis(const Vec3i& axis, int quarter_turns) const;
  /// Smallest-angle rotation taking unit axis `from` onto unit axis `to`.
  /// For opposite axes a 180 degree turn about the first perpendicular of
  /// (+z, +x, +y) is used.
  int minimal_between(const Vec3i& from, const Vec3i& to) const;

 private:
  RotationGroup();
  std::vector<Mat3i> matrices_;
  std::array<std::array<int, kSize>, kSize> compose_{};
  std::array<int, kSize> inverse_{};
};

struct Pose {
  int rotation = 0;
  Vec3i translation{};

  Vec3i apply_point(const Vec3i& p) const;
  Vec3i apply_dir(const Vec3i& d) const;
  Pose inverse() const;
  bool lattice_valid() const;
  auto operator<=>(const Pose&) const = default;
  bool operator==(const Pose&) const = default;
};

/// (a o b): apply b first, then a.
Pose compose(const Pose& a, const Pose& b);

enum class Gender : std::uint8_t { stud, anti_stud };

constexpr Gender opposite(Gender g) { return g == Gender::stud ? Gender::anti_stud : Gender::stud; }

struct SnapSpec {
  int index = 0;
  Vec3i position{};
  Vec3i axis{0, 0, 1};
  Gender gender = Gender::stud;
};

/// Axis-aligned integer box; interiors overlap iff lo < other.hi on all axes.
struct Box {
  Vec3i lo{};
  Vec3i hi{};

  bool overlaps(const Box& o) const {
    return lo.x < o.hi.x && o.lo.x < hi.x && lo.y < o.hi.y && o.lo.y < hi.y && lo.z < o.hi.z &&
           o.lo.z < hi.z;
  }
  Box transformed(const Pose& p) const;
  bool operator==(const Box&) const = default;
  auto operator<=>(const Box&) const = default;
};

/// Local box of lattice cell (i, j, k): x in [20i-10, 20i+10], y likewise,
/// z in [8k, 8k+8]. Stud centres therefore sit on multiples of 20 in x/y.
Box cell_box(const Vec3i& cell);

/// A pose-space self-map of a shape: local geometry maps onto itself and
/// snap i lands on snap snap_perm[i].
struct ShapeSymmetry {
  Pose transform;
  std::vector<int> snap_perm;
};

struct BrickShape {
  int id = 0;
  std::string name;
  std::vector<Vec3i> cells;
  std::vector<SnapSpec> snaps;

  // Derived by finalize().
  std::vector<Box> boxes;  // merged cell boxes
  Box bounds{};
  std::vector<ShapeSymmetry> symmetries;  // includes identity first

  void finalize();
};

struct Color {
  int id = 0;
  std::string name;
  std::array<std::uint8_t, 3> rgb{};
};

class Catalog {
 public:
  static const Catalog& builtin();
  static Catalog from_json_text(std::string_view text);
  static Catalog load(const std::string& path);
  std::string to_json_text() const;

  void add_shape(BrickShape shape);
  void add_color(Color color);

  const BrickShape& shape(int id) const;
  const BrickShape* find_shape(std::string_view name) const;
  const Color& color(int id) const;
  bool has_shape(int id) const { return shape_index_.count(id) != 0; }
  bool has_color(int id) const { return id >= 0 && static_cast<std::size_t>(id) < colors_.size(); }
  const std::vector<BrickShape>& shapes() const { return shapes_; }
  const std::vector<Color>& colors() const { return colors_; }
  int max_shape_id() const;

  /// Throws Error when a catalog invariant is broken.
  void validate() const;

 private:
  std::vector<BrickShape> shapes_;
  std::map<int, std::size_t> shape_index_;
  std::vector<Color> colors_;
};

struct BrickInstance {
  int id = 0;
  int shape = 0;
  int color = 0;
  Pose pose{};
  bool operator==(const BrickInstance&) const = default;
};

class Assembly {
 public:
  using Map = std::map<int, BrickInstance>;

  /// Adds a brick with a fresh id and returns that id.
  int add(int shape, int color, const Pose& pose);
  /// Inserts with the caller's id; next_instance_id advances past it.
  void insert(const BrickInstance& brick);
  bool remove(int id);
  const BrickInstance* find(int id) const;
  BrickInstance* find_mut(int id);
  const Map& bricks() const { return bricks_; }
  std::size_t size() const { return bricks_.size(); }
  bool empty() const { return bricks_.empty(); }
  int next_instance_id() const { return next_id_; }
  std::vector<int> ids() const;

  bool operator==(const Assembly& o) const { return bricks_ == o.bricks_; }

 private:
  Map bricks_;
  int next_id_ = 1;
};

struct Edge {
  int instance_a = 0;
  int snap_a = 0;
  int instance_b = 0;
  int snap_b = 0;
  auto operator<=>(const Edge&) const = default;
  bool operator==(const Edge&) const = default;
};

struct WorldSnap {
  Vec3i position;
  Vec3i axis;
  Gender gender;
};

WorldSnap world_snap(const Catalog& catalog, const BrickInstance& brick, int snap_index);
std::vector<Box> world_boxes(const Catalog& catalog, const BrickInstance& brick);
Box world_bounds(const Catalog& catalog, const BrickInstance& brick);

/// Pairs of world-coincident, anti-parallel, opposite-gender snaps, sorted.
std::vector<Edge> derive_edges(const Catalog& catalog, const Assembly& assembly);
/// Edges incident to one brick of the assembly.
std::vector<Edge> edges_of(const Catalog& catalog, const Assembly& assembly, int instance_id);

/// True iff `candidate` overlaps any other brick of the assembly. A brick
/// with the candidate's id is ignored (re-posing).
bool check_collision(const Catalog& catalog, const Assembly& assembly, const BrickInstance& candidate);
bool occupancy_valid(const Catalog& catalog, const Assembly& assembly);
bool is_connected(const Catalog& catalog, const Assembly& assembly);

Assembly transform_assembly(const Assembly& assembly, const Pose& transform);

/// Canonical representative of a brick pose modulo its shape's symmetries.
/// snap_map[j] is the canonical-pose index of world snap j of the input pose.
struct CanonicalPose {
  Pose pose;
  std::vector<int> snap_map;
};
CanonicalPose canonical_pose(const Catalog& catalog, int shape, const Pose& pose);
bool same_placement(const Catalog& catalog, int shape, const Pose& a, const Pose& b);

/// Returns a copy with every brick of color `from` set to `to`.
Assembly recolored(const Assembly& assembly, int from, int to);

std::string assembly_to_json_text(const Catalog& catalog, const Assembly& assembly);
Assembly assembly_from_json_text(const Catalog& catalog, std::string_view text);
Assembly load_assembly(const Catalog& catalog, const std::string& path);
void save_assembly(const Catalog& catalog, const Assembly& assembly, const std::string& path);

}  // namespace bricklab
