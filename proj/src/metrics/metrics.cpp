#include <algorithm>
#include <set>
#include <tuple>

#include "bricklab/metrics.hpp"

namespace bricklab {

namespace {

struct Candidate {
  Pose transform;
  int votes = 0;
  std::pair<int, int> pair{0, 0};  // smallest generating (estimated, target) ids
};

// Ordering used when vote counts are equal.
bool preferred(const Candidate& a, const Candidate& b) {
  const auto& g = RotationGroup::instance();
  const int ta = g.trace(a.transform.rotation), tb = g.trace(b.transform.rotation);
  if (ta != tb) return ta > tb;
  const int la = l1_norm(a.transform.translation), lb = l1_norm(b.transform.translation);
  if (la != lb) return la < lb;
  if (a.pair != b.pair) return a.pair < b.pair;
  return a.transform < b.transform;
}

using PlacementKey = std::tuple<int, int, Pose>;  // shape, color, canonical pose

std::vector<std::pair<int, int>> pose_matches(const Catalog& catalog, const Pose& t, const Assembly& estimated,
                                              const std::map<PlacementKey, int>& target_index) {
  std::vector<std::pair<int, int>> out;
  std::set<int> used;
  for (const auto& [id, b] : estimated.bricks()) {
    const Pose moved = compose(t, b.pose);
    const auto it = target_index.find({b.shape, b.color, canonical_pose(catalog, b.shape, moved).pose});
    if (it == target_index.end() || used.count(it->second)) continue;
    used.insert(it->second);
    out.push_back({id, it->second});
  }
  return out;
}

}  // namespace

std::vector<int> MatchStatistics::m_p() const {
  std::vector<int> out = d_p;
  out.insert(out.end(), c_p.begin(), c_p.end());
  std::sort(out.begin(), out.end());
  return out;
}

double f1(int tp, int fp, int fn) {
  const int denom = 2 * tp + fp + fn;
  return denom == 0 ? 1.0 : 2.0 * tp / denom;
}

MatchResult match(const Catalog& catalog, const Assembly& estimated, const Assembly& target) {
  std::map<PlacementKey, int> target_index;
  for (const auto& [id, b] : target.bricks()) {
    target_index.emplace(PlacementKey{b.shape, b.color, canonical_pose(catalog, b.shape, b.pose).pose}, id);
  }

  // Every pose-correct pair votes for the transforms that would align it.
  std::map<Pose, Candidate> votes;
  votes[Pose{}] = Candidate{Pose{}, 0, {0, 0}};
  for (const auto& [eid, e] : estimated.bricks()) {
    const Pose e_inv = e.pose.inverse();
    for (const auto& [tid, t] : target.bricks()) {
      if (e.shape != t.shape || e.color != t.color) continue;
      for (const ShapeSymmetry& s : catalog.shape(e.shape).symmetries) {
        const Pose tr = compose(compose(t.pose, s.transform), e_inv);
        auto [it, fresh] = votes.try_emplace(tr, Candidate{tr, 0, {eid, tid}});
        if (!fresh) it->second.pair = std::min(it->second.pair, std::make_pair(eid, tid));
        ++it->second.votes;
      }
    }
  }
  std::vector<Candidate> ranked;
  ranked.reserve(votes.size());
  for (auto& [_, c] : votes) ranked.push_back(c);
  std::sort(ranked.begin(), ranked.end(), [](const Candidate& a, const Candidate& b) {
    if (a.votes != b.votes) return a.votes > b.votes;
    return preferred(a, b);
  });

  // Votes bound the greedy count from above; stop once no candidate can win.
  const Candidate* best = nullptr;
  std::vector<std::pair<int, int>> best_pairs;
  for (const Candidate& c : ranked) {
    if (best && c.votes < static_cast<int>(best_pairs.size())) break;
    auto pairs = pose_matches(catalog, c.transform, estimated, target_index);
    if (!best || pairs.size() > best_pairs.size() ||
        (pairs.size() == best_pairs.size() && preferred(c, *best))) {
      best = &c;
      best_pairs = std::move(pairs);
    }
  }

  MatchResult out;
  out.transform = best->transform;
  std::set<int> used_target;
  for (const auto& [e, t] : best_pairs) {
    out.mapping[e] = t;
    out.pose_correct.push_back(e);
    used_target.insert(t);
  }
  // Complete on shape and color alone, lowest ids first.
  for (const auto& [eid, e] : estimated.bricks()) {
    if (out.mapping.count(eid)) continue;
    for (const auto& [tid, t] : target.bricks()) {
      if (used_target.count(tid) || t.shape != e.shape || t.color != e.color) continue;
      out.mapping[eid] = tid;
      used_target.insert(tid);
      break;
    }
  }
  std::sort(out.pose_correct.begin(), out.pose_correct.end());
  return out;
}

int canonical_snap(const Catalog& catalog, int shape, const Pose& pose, int snap) {
  return canonical_pose(catalog, shape, pose).snap_map.at(static_cast<std::size_t>(snap));
}

namespace {

void check_mapping(const MatchResult& m, const Assembly& estimated, const Assembly& target) {
  std::set<int> seen;
  for (const auto& [e, t] : m.mapping) {
    if (!estimated.find(e) || !target.find(t) || !seen.insert(t).second) {
      throw Error("match result does not belong to these assemblies");
    }
  }
  for (int e : m.pose_correct) {
    if (!m.mapping.count(e)) throw Error("pose-correct brick missing from mapping");
  }
}

using EdgeKey = std::tuple<int, int, int, int>;

EdgeKey normalized(int a, int sa, int b, int sb) {
  return a < b ? EdgeKey{a, sa, b, sb} : EdgeKey{b, sb, a, sa};
}

// Smallest snap index in the orbit of `snap` under the shape's symmetries.
int orbit_label(const Catalog& catalog, int shape, int snap) {
  int best = snap;
  for (const ShapeSymmetry& s : catalog.shape(shape).symmetries) {
    best = std::min(best, s.snap_perm.at(static_cast<std::size_t>(snap)));
  }
  return best;
}

// Snap labels used when comparing edges. Pose-correct bricks (and their
// targets) use canonical labels; a misplaced brick has no meaningful labelling
// of its own, so both sides fall back to the symmetry orbit.
struct EdgeLabeller {
  const Catalog& catalog;
  const MatchResult& m;
  std::set<int> correct_targets;

  EdgeLabeller(const Catalog& c, const MatchResult& match) : catalog(c), m(match) {
    for (int e : m.pose_correct) correct_targets.insert(m.mapping.at(e));
  }

  int estimated_label(const BrickInstance& b, int snap) const {
    if (std::binary_search(m.pose_correct.begin(), m.pose_correct.end(), b.id)) {
      return canonical_snap(catalog, b.shape, compose(m.transform, b.pose), snap);
    }
    return orbit_label(catalog, b.shape, snap);
  }
  int target_label(const BrickInstance& b, int snap) const {
    if (correct_targets.count(b.id)) return canonical_snap(catalog, b.shape, b.pose, snap);
    return orbit_label(catalog, b.shape, snap);
  }
};

// Estimated edges expressed in target ids.
std::vector<std::pair<Edge, EdgeKey>> mapped_edges(const EdgeLabeller& lab, const Assembly& estimated) {
  std::vector<std::pair<Edge, EdgeKey>> out;
  for (const Edge& e : derive_edges(lab.catalog, estimated)) {
    const auto ia = lab.m.mapping.find(e.instance_a);
    const auto ib = lab.m.mapping.find(e.instance_b);
    if (ia == lab.m.mapping.end() || ib == lab.m.mapping.end()) continue;
    const int sa = lab.estimated_label(*estimated.find(e.instance_a), e.snap_a);
    const int sb = lab.estimated_label(*estimated.find(e.instance_b), e.snap_b);
    out.push_back({e, normalized(ia->second, sa, ib->second, sb)});
  }
  return out;
}

std::set<EdgeKey> target_edge_keys(const EdgeLabeller& lab, const Assembly& target) {
  std::set<EdgeKey> out;
  for (const Edge& e : derive_edges(lab.catalog, target)) {
    out.insert(normalized(e.instance_a, lab.target_label(*target.find(e.instance_a), e.snap_a), e.instance_b,
                          lab.target_label(*target.find(e.instance_b), e.snap_b)));
  }
  return out;
}

}  // namespace

MatchStatistics match_statistics(const Catalog& catalog, const MatchResult& m, const Assembly& estimated,
                                 const Assembly& target) {
  check_mapping(m, estimated, target);
  MatchStatistics s;
  const std::set<int> correct(m.pose_correct.begin(), m.pose_correct.end());
  const EdgeLabeller lab(catalog, m);
  const std::set<EdgeKey> target_keys = target_edge_keys(lab, target);
  std::set<int> connected_right;
  for (const auto& [edge, key] : mapped_edges(lab, estimated)) {
    if (!target_keys.count(key)) continue;
    connected_right.insert(edge.instance_a);
    connected_right.insert(edge.instance_b);
  }
  std::set<int> mapped_targets;
  for (const auto& [id, b] : estimated.bricks()) {
    const auto it = m.mapping.find(id);
    if (it == m.mapping.end()) {
      s.f_p.push_back(id);
      continue;
    }
    mapped_targets.insert(it->second);
    if (correct.count(id)) {
      s.t_p.push_back(id);
    } else if (connected_right.count(id)) {
      s.c_p.push_back(id);
    } else {
      s.d_p.push_back(id);
    }
  }
  for (const auto& [id, b] : target.bricks()) {
    if (!mapped_targets.count(id)) s.f_n.push_back(id);
  }
  return s;
}

EdgeCounts edge_counts(const Catalog& catalog, const MatchResult& m, const Assembly& estimated, const Assembly& target) {
  check_mapping(m, estimated, target);
  EdgeCounts c;
  const EdgeLabeller lab(catalog, m);
  const std::set<EdgeKey> target_keys = target_edge_keys(lab, target);
  c.target = static_cast<int>(target_keys.size());
  c.estimated = static_cast<int>(derive_edges(catalog, estimated).size());
  std::set<EdgeKey> hit;
  for (const auto& [edge, key] : mapped_edges(lab, estimated)) {
    if (target_keys.count(key)) hit.insert(key);
  }
  c.true_positive = static_cast<int>(hit.size());
  return c;
}

Scores score(const Catalog& catalog, const Assembly& estimated, const Assembly& target) {
  const MatchResult m = match(catalog, estimated, target);
  const MatchStatistics s = match_statistics(catalog, m, estimated, target);
  const int ne = static_cast<int>(estimated.size()), nt = static_cast<int>(target.size());
  const int mapped = static_cast<int>(m.mapping.size());
  const int tp = static_cast<int>(s.t_p.size());
  const EdgeCounts ec = edge_counts(catalog, m, estimated, target);
  Scores out;
  out.f1_b = f1(mapped, ne - mapped, nt - mapped);
  out.f1_a = f1(tp, ne - tp, nt - tp);
  out.f1_e = f1(ec.true_positive, ec.estimated - ec.true_positive, ec.target - ec.true_positive);
  out.aed = static_cast<double>(s.m_p().size() + s.f_p.size() + s.f_n.size());
  return out;
}

}  // namespace bricklab
