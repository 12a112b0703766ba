#include <gtest/gtest.h>

#include "propbench/error.hpp"
#include "propbench/matching.hpp"
#include "support/oracles.hpp"

#include <random>
#include <set>

using namespace propbench;

namespace {

std::vector<BBox> random_boxes(std::mt19937& gen, std::size_t n, double extent) {
  std::vector<BBox> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(oracle::random_box(gen, extent));
  return out;
}

}  // namespace

TEST(GreedyMatch, IdenticalSetsMatchPerfectly) {
  const std::vector<BBox> boxes{{0, 0, 10, 10}, {20, 20, 5, 5}, {3, 3, 8, 4}};
  const auto m = greedy_match(boxes, boxes);
  for (double v : m.gt_iou) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(m.matched_count(), 3u);
}

TEST(GreedyMatch, OneCandidateTwoTargets) {
  const std::vector<BBox> cands{{0, 0, 10, 10}};
  const std::vector<BBox> targets{{0, 5, 10, 10}, {1, 1, 10, 10}};
  const auto m = greedy_match(cands, targets);
  EXPECT_EQ(m.gt_iou[0], 0.0);
  EXPECT_DOUBLE_EQ(m.gt_iou[1], iou(cands[0], targets[1]));
  EXPECT_FALSE(m.assignment[0].has_value());
  EXPECT_EQ(*m.assignment[1], 0u);
}

TEST(GreedyMatch, TiesBreakByTargetThenCandidate) {
  // Two targets at equal IoU to the same candidate: the lower target index wins.
  const std::vector<BBox> cands{{0, 0, 10, 10}};
  const std::vector<BBox> targets{{5, 0, 10, 10}, {-5, 0, 10, 10}};
  const auto m = greedy_match(cands, targets);
  EXPECT_TRUE(m.assignment[0].has_value());
  EXPECT_FALSE(m.assignment[1].has_value());
}

TEST(GreedyMatch, EmptyInputs) {
  const std::vector<BBox> none;
  const std::vector<BBox> some{{0, 0, 1, 1}};
  EXPECT_EQ(greedy_match(none, some).gt_iou, std::vector<double>{0.0});
  EXPECT_TRUE(greedy_match(some, none).gt_iou.empty());
}

TEST(GreedyMatch, RejectsBadThreshold) {
  const std::vector<BBox> b{{0, 0, 1, 1}};
  EXPECT_THROW(greedy_match(b, b, 1.0), InvalidArgument);
  EXPECT_THROW(greedy_match(b, b, -0.1), InvalidArgument);
}

TEST(GreedyMatch, HalfOfOptimumOnSixBySix) {
  std::mt19937 gen(21);
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = random_boxes(gen, 6, 50);
    const auto t = random_boxes(gen, 6, 50);
    for (double thr : {0.0, 0.5}) {
      const auto g = greedy_match(c, t, thr).matched_count();
      EXPECT_GE(2 * g, oracle::max_cardinality_matching(c, t, thr));
    }
  }
}

TEST(GreedyMatch, FuzzInjectiveMaximalDominated) {
  std::mt19937 gen(22);
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = random_boxes(gen, 1 + gen() % 30, 100);
    const auto t = random_boxes(gen, 1 + gen() % 10, 100);
    const double thr = trial % 2 ? 0.3 : 0.0;
    const auto m = greedy_match(c, t, thr);
    std::set<std::size_t> used;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (m.assignment[i]) {
        EXPECT_TRUE(used.insert(*m.assignment[i]).second);
        EXPECT_DOUBLE_EQ(m.gt_iou[i], iou(c[*m.assignment[i]], t[i]));
      } else {
        EXPECT_EQ(m.gt_iou[i], 0.0);
      }
    }
    // Maximal: no free pair remains above the floor.
    for (std::size_t i = 0; i < t.size(); ++i)
      for (std::size_t j = 0; j < c.size(); ++j)
        if (!m.assignment[i] && !used.count(j)) EXPECT_FALSE(iou(c[j], t[i]) > thr);
    const auto best = best_overlap(c, t);
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_GE(best[i], m.gt_iou[i]);
  }
}

TEST(OverlappingPairs, MatchesDenseEnumeration) {
  std::mt19937 gen(23);
  for (int trial = 0; trial < 100; ++trial) {
    const auto c = random_boxes(gen, 40, 200);
    const auto t = random_boxes(gen, 8, 200);
    const auto pairs = overlapping_pairs(c, t, 0.1);
    std::vector<std::tuple<std::size_t, std::size_t>> dense;
    for (std::size_t i = 0; i < t.size(); ++i)
      for (std::size_t j = 0; j < c.size(); ++j)
        if (oracle::corner_iou(c[j], t[i]) > 0.1) dense.emplace_back(i, j);
    ASSERT_EQ(pairs.size(), dense.size());
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      EXPECT_EQ(pairs[p].target, std::get<0>(dense[p]));
      EXPECT_EQ(pairs[p].candidate, std::get<1>(dense[p]));
    }
  }
}

TEST(BestOverlap, SubsetGivesOnes) {
  const std::vector<BBox> c{{0, 0, 10, 10}, {5, 5, 3, 3}, {40, 40, 2, 9}};
  const std::vector<BBox> t{c[2], c[0]};
  for (double v : best_overlap(c, t)) EXPECT_EQ(v, 1.0);
}

TEST(BestOverlap, EmptyCandidatesGiveZeros) {
  const std::vector<BBox> t{{0, 0, 1, 1}, {2, 2, 1, 1}};
  EXPECT_EQ(best_overlap({}, t), (std::vector<double>{0.0, 0.0}));
}

TEST(BestOverlap, ColumnMaxOfDenseMatrix) {
  std::mt19937 gen(24);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = random_boxes(gen, 5, 30);
    const auto t = random_boxes(gen, 5, 30);
    const auto got = best_overlap(c, t);
    for (std::size_t i = 0; i < t.size(); ++i) {
      double m = 0;
      for (const auto& b : c) m = std::max(m, oracle::corner_iou(b, t[i]));
      EXPECT_NEAR(got[i], m, 1e-12);
    }
  }
}

TEST(ExactMatchValue, IdentityAndSinglePair) {
  const std::vector<BBox> b{{0, 0, 10, 10}, {20, 0, 10, 10}, {40, 0, 10, 10}};
  EXPECT_DOUBLE_EQ(exact_match_value(b, b), 3.0);
  const std::vector<BBox> c{{0, 0, 10, 10}}, t{{0, 5, 10, 10}};
  EXPECT_DOUBLE_EQ(exact_match_value(c, t), iou(c[0], t[0]));
}

TEST(ExactMatchValue, MatchesPermutationEnumeration) {
  std::mt19937 gen(25);
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = random_boxes(gen, 1 + trial % 5, 30);
    const auto t = random_boxes(gen, 1 + (trial / 5) % 5, 30);
    EXPECT_NEAR(exact_match_value(c, t), oracle::enumerate_best_assignment(c, t), 1e-12);
  }
}

TEST(ExactMatchValue, RefusesLargeInstances) {
  std::mt19937 gen(26);
  const auto c = random_boxes(gen, 20, 30);
  const auto t = random_boxes(gen, 20, 30);
  EXPECT_THROW(exact_match_value(c, t), InvalidArgument);
}

TEST(GreedyMatch, LargeTiedInputsMatchFullSortReference) {
  std::mt19937 gen(27);
  for (int trial = 0; trial < 6; ++trial) {
    // Integer grid boxes in a small area give many pairs and many IoU ties.
    std::vector<BBox> c, t;
    for (int i = 0; i < 150 + trial * 40; ++i) c.push_back(oracle::random_box(gen, 25, true));
    for (int i = 0; i < 120 + trial * 30; ++i) t.push_back(oracle::random_box(gen, 25, true));
    for (double thr : {0.0, 0.5}) {
      std::vector<std::tuple<double, std::size_t, std::size_t>> all;
      for (std::size_t ti = 0; ti < t.size(); ++ti)
        for (std::size_t ci = 0; ci < c.size(); ++ci) {
          const double v = oracle::corner_iou(c[ci], t[ti]);
          if (v > thr) all.emplace_back(v, ti, ci);
        }
      std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });
      std::vector<bool> used(c.size(), false);
      std::vector<std::optional<std::size_t>> want(t.size());
      for (const auto& [v, ti, ci] : all)
        if (!used[ci] && !want[ti]) {
          used[ci] = true;
          want[ti] = ci;
        }
      EXPECT_EQ(greedy_match(c, t, thr).assignment, want) << "trial " << trial << " thr " << thr;
    }
  }
}
