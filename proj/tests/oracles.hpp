#pragma once

// Brute-force reference computations used only by the tests. None of these
// call into the code paths they check.

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <tuple>
#include <vector>

#include "bricklab/core.hpp"

namespace bricklab::oracle {

// All snap pairs of the assembly compared by their world position, axis and
// gender, computed straight from the rotation matrices.
inline std::vector<Edge> edges_by_enumeration(const Catalog& catalog, const Assembly& a) {
  const auto& g = RotationGroup::instance();
  struct S {
    int id, idx;
    Vec3i p, ax;
    Gender gender;
  };
  std::vector<S> all;
  for (const auto& [id, b] : a.bricks()) {
    const Mat3i& m = g.matrix(b.pose.rotation);
    for (const auto& sp : catalog.shape(b.shape).snaps) {
      Vec3i p{}, ax{};
      for (int i = 0; i < 3; ++i) {
        p[i] = m[i][0] * sp.position.x + m[i][1] * sp.position.y + m[i][2] * sp.position.z + b.pose.translation[i];
        ax[i] = m[i][0] * sp.axis.x + m[i][1] * sp.axis.y + m[i][2] * sp.axis.z;
      }
      all.push_back({id, sp.index, p, ax, sp.gender});
    }
  }
  std::vector<Edge> out;
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = 0; j < all.size(); ++j) {
      const S& x = all[i];
      const S& y = all[j];
      if (x.id >= y.id) continue;
      if (x.p == y.p && x.ax == -y.ax && x.gender != y.gender) out.push_back({x.id, x.idx, y.id, y.idx});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Occupied 2-LDU voxels (by odd centre coordinates) of a brick, from the
// shape's raw cells rather than its merged boxes.
inline std::set<std::tuple<int, int, int>> voxels(const Catalog& catalog, const BrickInstance& b) {
  std::set<std::tuple<int, int, int>> out;
  const auto& g = RotationGroup::instance();
  for (const Vec3i& c : catalog.shape(b.shape).cells) {
    for (int x = c.x * 20 - 9; x < c.x * 20 + 10; x += 2)
      for (int y = c.y * 20 - 9; y < c.y * 20 + 10; y += 2)
        for (int z = c.z * 8 + 1; z < c.z * 8 + 8; z += 2) {
          const Vec3i w = g.apply(b.pose.rotation, {x, y, z}) + b.pose.translation;
          out.insert({w.x, w.y, w.z});
        }
  }
  return out;
}

inline bool voxels_intersect(const Catalog& catalog, const BrickInstance& a, const BrickInstance& b) {
  const auto va = voxels(catalog, a);
  for (const auto& v : voxels(catalog, b)) {
    if (va.count(v)) return true;
  }
  return false;
}

// ---- alignment and assignment oracle ----------------------------------------

using M3 = std::array<std::array<int, 3>, 3>;

// All signed permutation matrices with determinant +1, enumerated directly.
inline std::vector<M3> proper_rotations() {
  std::vector<M3> out;
  const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (const auto& p : perms) {
    for (int signs = 0; signs < 8; ++signs) {
      M3 m{};
      for (int r = 0; r < 3; ++r) m[r][p[r]] = (signs >> r) & 1 ? -1 : 1;
      const int det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                      m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                      m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
      if (det == 1) out.push_back(m);
    }
  }
  return out;
}

inline Vec3i mul(const M3& m, const Vec3i& v) {
  return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z, m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
          m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
}

// World geometry of a brick: corner pairs of its raw cells and its snaps,
// after the brick pose and then an extra (m, t) transform.
struct Geometry {
  std::set<std::pair<Vec3i, Vec3i>> cells;
  std::set<std::tuple<Vec3i, Vec3i, int>> snaps;
  bool operator==(const Geometry&) const = default;
};

inline Geometry geometry(const Catalog& catalog, const BrickInstance& b, const M3& m, const Vec3i& t) {
  const auto& g = RotationGroup::instance();
  Geometry out;
  for (const Vec3i& c : catalog.shape(b.shape).cells) {
    Vec3i p0 = mul(m, g.apply(b.pose.rotation, {c.x * 20 - 10, c.y * 20 - 10, c.z * 8}) + b.pose.translation) + t;
    Vec3i p1 = mul(m, g.apply(b.pose.rotation, {c.x * 20 + 10, c.y * 20 + 10, c.z * 8 + 8}) + b.pose.translation) + t;
    for (int k = 0; k < 3; ++k) {
      if (p0[k] > p1[k]) std::swap(p0[k], p1[k]);
    }
    out.cells.insert({p0, p1});
  }
  for (const SnapSpec& s : catalog.shape(b.shape).snaps) {
    out.snaps.insert({mul(m, g.apply(b.pose.rotation, s.position) + b.pose.translation) + t,
                      mul(m, g.apply(b.pose.rotation, s.axis)), static_cast<int>(s.gender)});
  }
  return out;
}

inline Vec3i min_corner(const Geometry& geo) {
  Vec3i lo = geo.cells.begin()->first;
  for (const auto& cell : geo.cells) {
    const Vec3i& a = cell.first;
    lo = {std::min(lo.x, a.x), std::min(lo.y, a.y), std::min(lo.z, a.z)};
  }
  return lo;
}

// Maximum bipartite matching (Kuhn) on an adjacency list.
inline int max_matching(const std::vector<std::vector<int>>& adj, int right_size) {
  std::vector<int> owner(static_cast<std::size_t>(right_size), -1);
  int count = 0;
  for (std::size_t u = 0; u < adj.size(); ++u) {
    std::vector<char> seen(static_cast<std::size_t>(right_size), 0);
    std::function<bool(int)> augment = [&](int x) {
      for (int v : adj[static_cast<std::size_t>(x)]) {
        if (seen[static_cast<std::size_t>(v)]) continue;
        seen[static_cast<std::size_t>(v)] = 1;
        if (owner[static_cast<std::size_t>(v)] < 0 || augment(owner[static_cast<std::size_t>(v)])) {
          owner[static_cast<std::size_t>(v)] = x;
          return true;
        }
      }
      return false;
    };
    if (augment(static_cast<int>(u))) ++count;
  }
  return count;
}

struct ExhaustiveResult {
  int pose_correct = 0;  // best over all transforms
  int mapped = 0;        // maximum shape+color assignment
  double f1_b = 1, f1_a = 1, aed = 0;
};

inline ExhaustiveResult exhaustive_match(const Catalog& catalog, const Assembly& est, const Assembly& tgt) {
  std::vector<BrickInstance> e, t;
  for (const auto& [id, b] : est.bricks()) e.push_back(b);
  for (const auto& [id, b] : tgt.bricks()) t.push_back(b);
  const M3 ident{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  std::vector<Geometry> tg;
  for (const auto& b : t) tg.push_back(geometry(catalog, b, ident, {}));

  ExhaustiveResult r;
  for (const M3& m : proper_rotations()) {
    std::vector<Geometry> eg;
    for (const auto& b : e) eg.push_back(geometry(catalog, b, m, {}));
    std::set<Vec3i> translations{{0, 0, 0}};
    for (std::size_t i = 0; i < e.size(); ++i)
      for (std::size_t j = 0; j < t.size(); ++j)
        if (e[i].shape == t[j].shape && e[i].color == t[j].color) translations.insert(min_corner(tg[j]) - min_corner(eg[i]));
    for (const Vec3i& tr : translations) {
      std::vector<std::vector<int>> adj(e.size());
      for (std::size_t i = 0; i < e.size(); ++i) {
        const Geometry moved = geometry(catalog, e[i], m, tr);
        for (std::size_t j = 0; j < t.size(); ++j) {
          if (e[i].shape == t[j].shape && e[i].color == t[j].color && moved == tg[j]) adj[i].push_back(static_cast<int>(j));
        }
      }
      r.pose_correct = std::max(r.pose_correct, max_matching(adj, static_cast<int>(t.size())));
    }
  }
  std::vector<std::vector<int>> adj(e.size());
  for (std::size_t i = 0; i < e.size(); ++i)
    for (std::size_t j = 0; j < t.size(); ++j)
      if (e[i].shape == t[j].shape && e[i].color == t[j].color) adj[i].push_back(static_cast<int>(j));
  r.mapped = max_matching(adj, static_cast<int>(t.size()));
  const int n = static_cast<int>(e.size() + t.size());
  r.f1_b = n == 0 ? 1.0 : 2.0 * r.mapped / n;
  r.f1_a = n == 0 ? 1.0 : 2.0 * r.pose_correct / n;
  r.aed = n - r.mapped - r.pose_correct;
  return r;
}

}  // namespace bricklab::oracle
