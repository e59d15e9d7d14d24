#include <algorithm>
#include <array>

#include "bricklab/core.hpp"

namespace bricklab {

namespace {

Mat3i multiply(const Mat3i& a, const Mat3i& b) {
  Mat3i out{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      int s = 0;
      for (int k = 0; k < 3; ++k) {
        s += a[i][k] * b[k][j];
      }
      out[i][j] = s;
    }
  }
  return out;
}

int determinant(const Mat3i& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

int trace_of(const Mat3i& m) { return m[0][0] + m[1][1] + m[2][2]; }

}  // namespace

RotationGroup::RotationGroup() {
  std::array<int, 3> perm{0, 1, 2};
  do {
    for (int signs = 0; signs < 8; ++signs) {
      Mat3i m{};
      for (int i = 0; i < 3; ++i) {
        m[i][perm[i]] = (signs >> i) & 1 ? -1 : 1;
      }
      if (determinant(m) == 1) {
        matrices_.push_back(m);
      }
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  // Identity first, then by decreasing trace; matrix order breaks ties.
  std::stable_sort(matrices_.begin(), matrices_.end(), [](const Mat3i& a, const Mat3i& b) {
    if (trace_of(a) != trace_of(b)) {
      return trace_of(a) > trace_of(b);
    }
    return a > b;
  });

  for (int a = 0; a < kSize; ++a) {
    for (int b = 0; b < kSize; ++b) {
      compose_[a][b] = *index_of(multiply(matrices_[a], matrices_[b]));
    }
  }
  for (int a = 0; a < kSize; ++a) {
    for (int b = 0; b < kSize; ++b) {
      if (compose_[a][b] == 0) {
        inverse_[a] = b;
      }
    }
  }
}

const RotationGroup& RotationGroup::instance() {
  static const RotationGroup group;
  return group;
}

int RotationGroup::trace(int r) const { return trace_of(matrix(r)); }

Vec3i RotationGroup::apply(int r, const Vec3i& v) const {
  const Mat3i& m = matrices_[static_cast<std::size_t>(r)];
  return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z, m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
          m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
}

std::optional<int> RotationGroup::index_of(const Mat3i& m) const {
  for (std::size_t i = 0; i < matrices_.size(); ++i) {
    if (matrices_[i] == m) {
      return static_cast<int>(i);
    }
  }
  return std::nullopt;
}

int RotationGroup::about_axis(const Vec3i& axis, int quarter_turns) const {
  const int q = ((quarter_turns % 4) + 4) % 4;
  // Rodrigues with cos/sin in {0, +-1}: R = c I + s [a]x + (1 - c) a a^T.
  static constexpr int kCos[4] = {1, 0, -1, 0};
  static constexpr int kSin[4] = {0, 1, 0, -1};
  const int c = kCos[q];
  const int s = kSin[q];
  const int a[3] = {axis.x, axis.y, axis.z};
  const int k[3][3] = {{0, -a[2], a[1]}, {a[2], 0, -a[0]}, {-a[1], a[0], 0}};
  Mat3i m{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      m[i][j] = (i == j ? c : 0) + s * k[i][j] + (1 - c) * a[i] * a[j];
    }
  }
  const auto idx = index_of(m);
  if (!idx) {
    throw Error("about_axis: axis is not a unit lattice direction");
  }
  return *idx;
}

int RotationGroup::minimal_between(const Vec3i& from, const Vec3i& to) const {
  const int d = dot(from, to);
  if (d == 1) {
    return 0;
  }
  if (d == 0) {
    return about_axis(cross(from, to), 1);
  }
  for (const Vec3i& candidate : {Vec3i{0, 0, 1}, Vec3i{1, 0, 0}, Vec3i{0, 1, 0}}) {
    if (dot(candidate, from) == 0) {
      return about_axis(candidate, 2);
    }
  }
  throw Error("minimal_between: not unit lattice axes");
}

Vec3i Pose::apply_point(const Vec3i& p) const {
  return RotationGroup::instance().apply(rotation, p) + translation;
}

Vec3i Pose::apply_dir(const Vec3i& d) const { return RotationGroup::instance().apply(rotation, d); }

Pose Pose::inverse() const {
  const auto& g = RotationGroup::instance();
  const int inv = g.inverse(rotation);
  return {inv, -g.apply(inv, translation)};
}

bool Pose::lattice_valid() const {
  return rotation >= 0 && rotation < RotationGroup::kSize && translation.x % kPlacementGrid == 0 &&
         translation.y % kPlacementGrid == 0 && translation.z % kPlacementGrid == 0;
}

Pose compose(const Pose& a, const Pose& b) {
  const auto& g = RotationGroup::instance();
  return {g.compose(a.rotation, b.rotation), g.apply(a.rotation, b.translation) + a.translation};
}

Box Box::transformed(const Pose& p) const {
  const Vec3i a = p.apply_point(lo);
  const Vec3i b = p.apply_point(hi);
  return {{std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)},
          {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)}};
}

Box cell_box(const Vec3i& c) {
  return {{c.x * kStudPitch - kStudPitch / 2, c.y * kStudPitch - kStudPitch / 2, c.z * kPlateHeight},
          {c.x * kStudPitch + kStudPitch / 2, c.y * kStudPitch + kStudPitch / 2, (c.z + 1) * kPlateHeight}};
}

}  // namespace bricklab
