#include "propbench/metrics.hpp"

#include "propbench/error.hpp"

#include <algorithm>
#include <cmath>

namespace propbench {

namespace {

void check_ious(std::span<const double> ious, const char* what) {
  if (ious.empty()) throw InvalidArgument(std::string(what) + ": no ground truth");
  for (double v : ious)
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument(std::string(what) + ": IoU outside [0, 1]");
}

}  // namespace

std::vector<double> default_thresholds() { return threshold_grid(0.5, 1.0, 101); }

std::vector<double> threshold_grid(double lo, double hi, std::size_t count) {
  if (count < 2 || !(lo < hi)) throw InvalidArgument("threshold_grid: need count >= 2 and lo < hi");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = lo + (hi - lo) * double(i) / double(count - 1);
  out.back() = hi;
  return out;
}

RecallCurve recall_curve(std::span<const double> matched_ious, std::span<const double> thresholds) {
  check_ious(matched_ious, "recall_curve");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] >= 0.0 && thresholds[i] <= 1.0))
      throw InvalidArgument("recall_curve: threshold outside [0, 1]");
    if (i > 0 && !(thresholds[i] > thresholds[i - 1]))
      throw InvalidArgument("recall_curve: thresholds must be strictly ascending");
  }
  std::vector<double> sorted(matched_ious.begin(), matched_ious.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = double(sorted.size());
  RecallCurve curve;
  curve.thresholds.assign(thresholds.begin(), thresholds.end());
  curve.recall.reserve(thresholds.size());
  for (double t : thresholds) {
    const auto below = std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
    curve.recall.push_back(double(sorted.size() - std::size_t(below)) / n);
  }
  return curve;
}

double recall_at(std::span<const double> matched_ious, double threshold) {
  const double t[] = {threshold};
  return recall_curve(matched_ious, t).recall.front();
}

double average_recall(std::span<const double> matched_ious, double lo, double hi) {
  check_ious(matched_ious, "average_recall");
  if (!(lo >= 0.0 && lo < hi && hi <= 1.0)) throw InvalidArgument("average_recall: need 0 <= lo < hi <= 1");
  const double width = hi - lo;
  double sum = 0.0;
  for (double v : matched_ious) sum += std::min(std::max(v - lo, 0.0), width);
  return sum / (double(matched_ious.size()) * width);
}

double abo(std::span<const double> best_overlaps) {
  check_ious(best_overlaps, "abo");
  double sum = 0.0;
  for (double v : best_overlaps) sum += v;
  return sum / double(best_overlaps.size());
}

double vus(const CurveFamily& family) {
  if (family.curves.empty()) throw InvalidArgument("vus: empty curve family");
  if (family.curves.size() != family.proposal_counts.size())
    throw InvalidArgument("vus: one curve per proposal count required");
  for (std::size_t i = 1; i < family.proposal_counts.size(); ++i)
    if (!(family.proposal_counts[i] > family.proposal_counts[i - 1]))
      throw InvalidArgument("vus: proposal counts must be strictly ascending");
  const auto& grid = family.curves.front().thresholds;
  if (grid.size() < 2) throw InvalidArgument("vus: at least two thresholds required");
  double total = 0.0;
  for (const auto& c : family.curves) {
    if (c.thresholds != grid || c.recall.size() != grid.size())
      throw InvalidArgument("vus: inconsistent threshold grids across curves");
    double area = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i)
      area += 0.5 * (c.recall[i] + c.recall[i - 1]) * (grid[i] - grid[i - 1]);
    total += area / (grid.back() - grid.front());
  }
  return total / double(family.curves.size());
}

std::vector<double> quantile_bin_edges(std::span<const double> values, std::size_t bins) {
  if (bins == 0) throw InvalidArgument("quantile_bin_edges: bins must be >= 1");
  if (values.empty()) throw InvalidArgument("quantile_bin_edges: no values");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;
  edges.reserve(bins - 1);
  for (std::size_t b = 1; b < bins; ++b) edges.push_back(sorted[b * sorted.size() / bins]);
  return edges;
}

std::size_t bin_index(double value, std::span<const double> edges) {
  return std::size_t(std::upper_bound(edges.begin(), edges.end(), value) - edges.begin());
}

double size_binned_mean(std::span<const double> areas, std::span<const double> scores, std::size_t bins) {
  if (areas.empty()) throw InvalidArgument("size_binned_mean: empty input");
  std::vector<double> roots(areas.size());
  std::transform(areas.begin(), areas.end(), roots.begin(), [](double a) { return std::sqrt(a); });
  const auto edges = quantile_bin_edges(roots, bins);
  return size_binned_mean(areas, scores, edges);
}

double size_binned_mean(std::span<const double> areas, std::span<const double> scores,
                        std::span<const double> sqrt_area_edges) {
  if (areas.empty()) throw InvalidArgument("size_binned_mean: empty input");
  if (areas.size() != scores.size()) throw InvalidArgument("size_binned_mean: length mismatch");
  const std::size_t bins = sqrt_area_edges.size() + 1;
  std::vector<double> sum(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (std::size_t i = 0; i < areas.size(); ++i) {
    const std::size_t b = bin_index(std::sqrt(areas[i]), sqrt_area_edges);
    sum[b] += scores[i];
    ++count[b];
  }
  double total = 0.0;
  std::size_t present = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    total += sum[b] / double(count[b]);
    ++present;
  }
  return total / double(present);
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InvalidArgument("pearson: length mismatch");
  if (xs.size() < 2) throw InvalidArgument("pearson: need at least two points");
  // Welford co-moment update.
  double mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double n = double(i + 1);
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    mx += dx / n;
    my += dy / n;
    sxx += dx * (xs[i] - mx);
    syy += dy * (ys[i] - my);
    sxy += dx * (ys[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw InvalidArgument("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace propbench
