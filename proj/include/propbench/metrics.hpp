#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace propbench {

/// Step function recall(o) sampled at ascending IoU thresholds.
struct RecallCurve {
  std::vector<double> thresholds;
  std::vector<double> recall;
};

/// One recall curve per proposal count, counts strictly ascending.
struct CurveFamily {
  std::vector<std::size_t> proposal_counts;
  std::vector<RecallCurve> curves;
};

/// 0.5, 0.505, ..., 1.0 (the reporting grid for curve files).
std::vector<double> default_thresholds();

/// `count` evenly spaced thresholds covering [lo, hi] inclusive.
std::vector<double> threshold_grid(double lo, double hi, std::size_t count);

/// recall(o) = |{i : matched_ious[i] >= o}| / n.
RecallCurve recall_curve(std::span<const double> matched_ious, std::span<const double> thresholds);

double recall_at(std::span<const double> matched_ious, double threshold);

/// Normalised integral of recall over [lo, hi], in closed form:
///   1/(n (hi-lo)) * sum_i clamp(iou_i - lo, 0, hi - lo)
/// (0.5, 1) is the average recall; (0, 1) is the mean matched IoU.
double average_recall(std::span<const double> matched_ious, double lo = 0.5, double hi = 1.0);

/// Average best overlap: mean of non-injective best overlaps.
double abo(std::span<const double> best_overlaps);

/// Volume under the recall surface: trapezoidal integral of each curve over its
/// threshold span (normalised by the span), averaged over the count grid.
double vus(const CurveFamily& family);

/// Interior edges of `bins` equal-count groups over `values` (bins-1 entries).
std::vector<double> quantile_bin_edges(std::span<const double> values, std::size_t bins);

/// Group index of `value` given interior edges: the number of edges <= value.
std::size_t bin_index(double value, std::span<const double> edges);

/// Unweighted mean of per-group means; items are grouped by sqrt(area) into
/// `bins` equal-count groups.
double size_binned_mean(std::span<const double> areas, std::span<const double> scores, std::size_t bins = 10);

/// As above with explicit interior edges on sqrt(area).
double size_binned_mean(std::span<const double> areas, std::span<const double> scores,
                        std::span<const double> sqrt_area_edges);

/// Sample Pearson correlation, accumulated in a single numerically stable pass.
double pearson(std::span<const double> xs, std::span<const double> ys);

}  // namespace propbench
