#include "propbench/proposal_ops.hpp"

#include "propbench/error.hpp"
#include "propbench/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace propbench {

namespace {

struct BoxBits {
  std::uint64_t x, y, w, h;
  friend bool operator==(const BoxBits&, const BoxBits&) = default;
};

struct BoxBitsHash {
  std::size_t operator()(const BoxBits& b) const {
    std::uint64_t h = 0;
    for (std::uint64_t v : {b.x, b.y, b.w, b.h}) h = (h ^ v) * 0x100000001b3ULL + (h >> 17);
    return std::size_t(h);
  }
};

BoxBits bits(const BBox& b) {
  return {std::bit_cast<std::uint64_t>(b.x), std::bit_cast<std::uint64_t>(b.y), std::bit_cast<std::uint64_t>(b.w),
          std::bit_cast<std::uint64_t>(b.h)};
}

// true when a outranks b
bool outranks(const ScoredBox& a, const ScoredBox& b) {
  if (a.oracle != b.oracle) return a.oracle;
  if (a.oracle) return false;
  return a.score.value_or(0.0) > b.score.value_or(0.0);
}

void require_scored(const ProposalSet& ps, const char* op) {
  for (const auto& it : ps.items)
    if (!it.score && !it.oracle) throw InvalidArgument(std::string(op) + ": proposals must be scored");
}

ProposalSet select(const ProposalSet& ps, std::vector<std::size_t> indices, bool keep_input_order) {
  if (keep_input_order) std::sort(indices.begin(), indices.end());
  ProposalSet out;
  out.image_id = ps.image_id;
  out.ordering_meaningful = ps.ordering_meaningful;
  out.items.reserve(indices.size());
  for (std::size_t i : indices) out.items.push_back(ps.items[i]);
  return out;
}

}  // namespace

std::vector<std::size_t> rank_order(const ProposalSet& ps) {
  std::vector<std::size_t> order(ps.items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (ps.scored() || std::any_of(ps.items.begin(), ps.items.end(), [](const auto& s) { return s.oracle; }))
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return outranks(ps.items[a], ps.items[b]); });
  return order;
}

ProposalSet dedup(const ProposalSet& ps) {
  std::unordered_map<BoxBits, std::size_t, BoxBitsHash> best;
  best.reserve(ps.items.size());
  for (std::size_t i = 0; i < ps.items.size(); ++i) {
    auto [it, inserted] = best.try_emplace(bits(ps.items[i].box), i);
    if (!inserted && outranks(ps.items[i], ps.items[it->second])) it->second = i;
  }
  std::vector<std::size_t> keep;
  keep.reserve(best.size());
  for (std::size_t i = 0; i < ps.items.size(); ++i)
    if (best.at(bits(ps.items[i].box)) == i) keep.push_back(i);
  return select(ps, std::move(keep), true);
}

ProposalSet top_k(const ProposalSet& ps, std::size_t k) {
  if (!ps.ordering_meaningful && !ps.scored() && !ps.items.empty())
    throw InvalidArgument("top_k: proposals are neither scored nor ordered");
  auto order = rank_order(ps);
  if (order.size() > k) order.resize(k);
  return select(ps, std::move(order), false);
}

ProposalSet random_k(const ProposalSet& ps, std::size_t k, std::uint64_t seed) {
  const std::size_t n = ps.items.size();
  if (k >= n) return ps;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  idx.resize(k);
  return select(ps, std::move(idx), true);
}

double calibrate_count(const CalibrationTable& table, double target_count) {
  const auto& pts = table.points;
  if (pts.size() < 2) throw InvalidArgument("calibrate_count: at least two calibration points required");
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (!(pts[i].second > pts[i - 1].second))
      throw InvalidArgument("calibrate_count: counts must be strictly ascending");
  if (!(target_count >= pts.front().second && target_count <= pts.back().second))
    throw InvalidArgument("calibrate_count: target count outside the calibrated range");
  for (const auto& [param, count] : pts)
    if (count == target_count) return param;
  const auto hi = std::upper_bound(pts.begin(), pts.end(), target_count,
                                   [](double t, const auto& p) { return t < p.second; });
  const auto lo = hi - 1;
  const double f = (target_count - lo->second) / (hi->second - lo->second);
  return lo->first + f * (hi->first - lo->first);
}

ProposalSet nms(const ProposalSet& ps, double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw InvalidArgument("nms: beta must lie in (0, 1]");
  require_scored(ps, "nms");
  std::vector<std::size_t> kept;
  for (std::size_t i : rank_order(ps)) {
    const BBox& b = ps.items[i].box;
    const bool suppressed =
        std::any_of(kept.begin(), kept.end(), [&](std::size_t j) { return iou(b, ps.items[j].box) > beta; });
    if (!suppressed) kept.push_back(i);
  }
  return select(ps, std::move(kept), true);
}

AdaptiveNmsResult adaptive_nms(const ProposalSet& ps, std::size_t k, const AdaptiveNmsParams& params) {
  if (k == 0) throw InvalidArgument("adaptive_nms: k must be >= 1");
  if (!(params.beta0 > 0.0 && params.beta0 <= 1.0)) throw InvalidArgument("adaptive_nms: beta0 must lie in (0, 1]");
  if (!(params.eta > 0.0 && params.eta <= 1.0)) throw InvalidArgument("adaptive_nms: eta must lie in (0, 1]");
  require_scored(ps, "adaptive_nms");
  double beta = params.beta0;
  std::vector<std::size_t> kept;
  for (std::size_t i : rank_order(ps)) {
    if (kept.size() == k) break;
    const BBox& b = ps.items[i].box;
    const bool suppressed =
        std::any_of(kept.begin(), kept.end(), [&](std::size_t j) { return iou(b, ps.items[j].box) > beta; });
    if (suppressed) continue;
    kept.push_back(i);
    beta *= params.eta;
  }
  return {select(ps, std::move(kept), true), beta};
}

}  // namespace propbench
