#pragma once

#include <map>
#include <vector>

#include "bricklab/core.hpp"

namespace bricklab {

struct MatchResult {
  Pose transform;               // maps estimated frame onto target frame
  std::map<int, int> mapping;   // estimated id -> target id
  std::vector<int> pose_correct;  // estimated ids, sorted
};

struct MatchStatistics {
  std::vector<int> t_p;  // estimated ids
  std::vector<int> d_p;
  std::vector<int> c_p;
  std::vector<int> f_p;
  std::vector<int> f_n;  // target ids

  std::vector<int> m_p() const;
  /// Estimated equals target up to the alignment.
  bool perfect() const { return d_p.empty() && c_p.empty() && f_p.empty() && f_n.empty(); }
};

struct Scores {
  double f1_b = 1;
  double f1_e = 1;
  double f1_a = 1;
  double aed = 0;
};

/// Best single lattice transform plus a brick mapping between the two assemblies.
MatchResult match(const Catalog& catalog, const Assembly& estimated, const Assembly& target);
MatchStatistics match_statistics(const Catalog& catalog, const MatchResult& m, const Assembly& estimated,
                                 const Assembly& target);
Scores score(const Catalog& catalog, const Assembly& estimated, const Assembly& target);

/// Snap index of `snap` on a brick placed at `pose`, relabelled by the
/// shape's canonical pose so symmetric placements share labels.
int canonical_snap(const Catalog& catalog, int shape, const Pose& pose, int snap);

/// Edge counts behind f1_e: estimated edges whose mapped image is a target edge.
struct EdgeCounts {
  int estimated = 0;
  int target = 0;
  int true_positive = 0;
};
EdgeCounts edge_counts(const Catalog& catalog, const MatchResult& m, const Assembly& estimated, const Assembly& target);

double f1(int tp, int fp, int fn);

}  // namespace bricklab
