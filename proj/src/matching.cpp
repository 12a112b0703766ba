#include "propbench/matching.hpp"

#include "propbench/error.hpp"

#include <algorithm>
#include <numeric>

namespace propbench {

std::size_t MatchResult::matched_count() const {
  return static_cast<std::size_t>(
      std::count_if(assignment.begin(), assignment.end(), [](const auto& a) { return a.has_value(); }));
}

std::vector<OverlapPair> overlapping_pairs(std::span<const BBox> candidates, std::span<const BBox> targets,
                                           double min_iou) {
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return candidates[a].x < candidates[b].x; });
  std::vector<double> lefts(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) lefts[i] = candidates[order[i]].x;

  std::vector<OverlapPair> pairs;
  std::vector<OverlapPair> row;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const BBox& tb = targets[t];
    const auto end = std::lower_bound(lefts.begin(), lefts.end(), tb.right()) - lefts.begin();
    row.clear();
    for (std::ptrdiff_t i = 0; i < end; ++i) {
      const BBox& cb = candidates[order[i]];
      if (cb.right() <= tb.x || cb.y >= tb.bottom() || cb.bottom() <= tb.y) continue;
      const double v = iou(cb, tb);
      if (v > min_iou) row.push_back({t, order[i], v});
    }
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.candidate < b.candidate; });
    pairs.insert(pairs.end(), row.begin(), row.end());
  }
  return pairs;
}

MatchResult greedy_match(std::span<const BBox> candidates, std::span<const BBox> targets, double min_iou) {
  if (!(min_iou >= 0.0 && min_iou < 1.0)) throw InvalidArgument("greedy_match: min_iou must lie in [0, 1)");
  MatchResult result;
  result.gt_iou.assign(targets.size(), 0.0);
  result.assignment.assign(targets.size(), std::nullopt);

  auto pairs = overlapping_pairs(candidates, targets, min_iou);
  // Total order: IoU descending, ties by (target, candidate).
  const auto before = [](const OverlapPair& a, const OverlapPair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.target != b.target) return a.target < b.target;
    return a.candidate < b.candidate;
  };

  std::vector<bool> used(candidates.size(), false);
  std::size_t remaining = std::min(candidates.size(), targets.size());
  // Sort lazily in growing chunks; the scan usually ends long before the tail.
  std::size_t begin = 0;
  std::size_t chunk = std::max<std::size_t>(1024, 2 * remaining);
  while (begin < pairs.size() && remaining > 0) {
    const std::size_t end = std::min(pairs.size(), begin + chunk);
    const auto first = pairs.begin() + std::ptrdiff_t(begin), last = pairs.begin() + std::ptrdiff_t(end);
    if (end < pairs.size()) std::nth_element(first, last, pairs.end(), before);
    std::sort(first, last, before);
    for (auto it = first; it != last && remaining > 0; ++it) {
      const auto& p = *it;
      if (used[p.candidate] || result.assignment[p.target]) continue;
      used[p.candidate] = true;
      result.assignment[p.target] = p.candidate;
      result.gt_iou[p.target] = p.iou;
      --remaining;
    }
    begin = end;
    chunk *= 2;
  }
  return result;
}

std::vector<double> best_overlap(std::span<const BBox> candidates, std::span<const BBox> targets) {
  std::vector<double> best(targets.size(), 0.0);
  for (const auto& p : overlapping_pairs(candidates, targets, 0.0)) best[p.target] = std::max(best[p.target], p.iou);
  return best;
}

double exact_match_value(std::span<const BBox> candidates, std::span<const BBox> targets, std::size_t max_pairs) {
  if (candidates.size() * targets.size() > max_pairs)
    throw InvalidArgument("exact_match_value: instance exceeds " + std::to_string(max_pairs) + " pairs");
  const bool small_is_target = targets.size() <= candidates.size();
  const auto small = small_is_target ? targets : candidates;
  const auto large = small_is_target ? candidates : targets;
  if (small.empty()) return 0.0;

  const std::size_t states = std::size_t{1} << small.size();
  std::vector<double> dp(states, -1.0);
  dp[0] = 0.0;
  for (const BBox& item : large) {
    std::vector<double> next = dp;
    for (std::size_t mask = 0; mask < states; ++mask) {
      if (dp[mask] < 0.0) continue;
      for (std::size_t j = 0; j < small.size(); ++j) {
        const std::size_t bit = std::size_t{1} << j;
        if (mask & bit) continue;
        const double v = dp[mask] + iou(item, small[j]);
        next[mask | bit] = std::max(next[mask | bit], v);
      }
    }
    dp = std::move(next);
  }
  return *std::max_element(dp.begin(), dp.end());
}

}  // namespace propbench
