#pragma once

#include "propbench/box.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace propbench {

/// Per-target outcome of an injective matching. gt_iou[i] is 0 exactly when
/// target i is unmatched.
struct MatchResult {
  std::vector<double> gt_iou;
  std::vector<std::optional<std::size_t>> assignment;

  std::size_t matched_count() const;
};

/// Candidate/target pair with positive overlap above a floor.
struct OverlapPair {
  std::size_t target;
  std::size_t candidate;
  double iou;
};

/// All pairs with IoU > min_iou, ordered by (target, candidate). Candidates are
/// swept in left-edge order so that disjoint intervals are rejected early.
std::vector<OverlapPair> overlapping_pairs(std::span<const BBox> candidates, std::span<const BBox> targets,
                                           double min_iou);

/// Greedy bipartite matching: pairs with IoU > min_iou are visited by IoU
/// descending (ties by target then candidate index) and accepted while both
/// ends are free. The result is a maximal matching.
MatchResult greedy_match(std::span<const BBox> candidates, std::span<const BBox> targets, double min_iou = 0.0);

/// Per-target maximum IoU over all candidates; a candidate may serve many targets.
std::vector<double> best_overlap(std::span<const BBox> candidates, std::span<const BBox> targets);

/// Maximum over injective assignments of the summed IoU. Solved exactly by a
/// subset DP over the smaller side; throws InvalidArgument when
/// |candidates| * |targets| exceeds max_pairs.
double exact_match_value(std::span<const BBox> candidates, std::span<const BBox> targets,
                         std::size_t max_pairs = 100);

}  // namespace propbench
