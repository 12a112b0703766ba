#include "propbench/detection.hpp"

#include "propbench/error.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_map>

namespace propbench {

std::vector<Detection> filter_by_proposals(std::span<const Detection> dets, const ProposalMap& proposals,
                                           double min_iou) {
  std::vector<Detection> out;
  for (const auto& d : dets) {
    const auto it = proposals.find(d.image_id);
    if (it == proposals.end()) continue;
    const auto& items = it->second.items;
    if (std::any_of(items.begin(), items.end(), [&](const ScoredBox& p) { return iou(d.box, p.box) > min_iou; }))
      out.push_back(d);
  }
  return out;
}

ProposalMap augment_with_gt(const ProposalMap& proposals, std::span<const Annotation> gts) {
  ProposalMap out = proposals;
  for (const auto& g : gts) {
    if (g.crowd) continue;
    auto& ps = out[g.image_id];
    ps.image_id = g.image_id;
    ps.items.push_back({g.box, std::nullopt, true});
  }
  return out;
}

std::vector<DetectionOutcome> classify_detections(std::span<const Detection> dets, std::span<const Annotation> gts,
                                                  const std::string& class_label, double iou_tp) {
  std::unordered_map<std::string, std::vector<std::size_t>> gt_by_image;
  for (std::size_t g = 0; g < gts.size(); ++g)
    if (gts[g].class_label == class_label && !gts[g].crowd) gt_by_image[gts[g].image_id].push_back(g);

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < dets.size(); ++i)
    if (dets[i].class_label == class_label) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  std::vector<DetectionOutcome> outcome(dets.size(), DetectionOutcome::ignored);
  std::vector<bool> taken(gts.size(), false);
  for (std::size_t i : order) {
    outcome[i] = DetectionOutcome::false_positive;
    const auto it = gt_by_image.find(dets[i].image_id);
    if (it == gt_by_image.end()) continue;
    std::optional<std::size_t> best;
    double best_iou = -1.0;
    bool hits_difficult = false;
    for (std::size_t g : it->second) {
      const double v = iou(dets[i].box, gts[g].box);
      if (v < iou_tp) continue;
      if (gts[g].difficult) {
        hits_difficult = true;
      } else if (!taken[g] && v > best_iou) {
        best = g;
        best_iou = v;
      }
    }
    if (best) {
      taken[*best] = true;
      outcome[i] = DetectionOutcome::true_positive;
    } else if (hits_difficult) {
      outcome[i] = DetectionOutcome::ignored;
    }
  }
  return outcome;
}

std::optional<double> average_precision(std::span<const Detection> dets, std::span<const Annotation> gts,
                                        const std::string& class_label, double iou_tp, ApInterpolation mode) {
  const auto npos = std::count_if(gts.begin(), gts.end(), [&](const Annotation& g) {
    return g.class_label == class_label && !g.crowd && !g.difficult;
  });
  if (npos == 0) return std::nullopt;

  const auto outcome = classify_detections(dets, gts, class_label, iou_tp);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < dets.size(); ++i)
    if (dets[i].class_label == class_label && outcome[i] != DetectionOutcome::ignored) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  std::vector<double> recall, precision;
  double tp = 0.0, fp = 0.0;
  for (std::size_t i : order) {
    (outcome[i] == DetectionOutcome::true_positive ? tp : fp) += 1.0;
    recall.push_back(tp / double(npos));
    precision.push_back(tp / (tp + fp));
  }

  if (mode == ApInterpolation::eleven_point) {
    double ap = 0.0;
    for (int t = 0; t <= 10; ++t) {
      const double r = t / 10.0;
      double p = 0.0;
      for (std::size_t j = 0; j < recall.size(); ++j)
        if (recall[j] >= r) p = std::max(p, precision[j]);
      ap += p / 11.0;
    }
    return ap;
  }

  std::vector<double> mrec{0.0}, mpre{0.0};
  mrec.insert(mrec.end(), recall.begin(), recall.end());
  mpre.insert(mpre.end(), precision.begin(), precision.end());
  mrec.push_back(1.0);
  mpre.push_back(0.0);
  for (std::size_t j = mpre.size() - 1; j > 0; --j) mpre[j - 1] = std::max(mpre[j - 1], mpre[j]);
  double ap = 0.0;
  for (std::size_t j = 1; j < mrec.size(); ++j)
    if (mrec[j] != mrec[j - 1]) ap += (mrec[j] - mrec[j - 1]) * mpre[j];
  return ap;
}

double mean_ap(std::span<const Detection> dets, std::span<const Annotation> gts, double iou_tp, ApInterpolation mode) {
  std::set<std::string> classes;
  for (const auto& g : gts)
    if (!g.crowd) classes.insert(g.class_label);
  double sum = 0.0;
  std::size_t defined = 0;
  for (const auto& c : classes) {
    if (auto ap = average_precision(dets, gts, c, iou_tp, mode)) {
      sum += *ap;
      ++defined;
    }
  }
  if (defined == 0) throw InvalidArgument("mean_ap: no class has a defined average precision");
  return sum / double(defined);
}

std::vector<Detection> oracle_nms(std::span<const Detection> dets, std::span<const Annotation> gts, double iou_tp) {
  std::set<std::string> classes;
  for (const auto& d : dets) classes.insert(d.class_label);
  std::vector<DetectionOutcome> outcome(dets.size(), DetectionOutcome::ignored);
  for (const auto& c : classes) {
    const auto per_class = classify_detections(dets, gts, c, iou_tp);
    for (std::size_t i = 0; i < dets.size(); ++i)
      if (dets[i].class_label == c) outcome[i] = per_class[i];
  }

  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> tps;
  for (std::size_t i = 0; i < dets.size(); ++i)
    if (outcome[i] == DetectionOutcome::true_positive) tps[{dets[i].image_id, dets[i].class_label}].push_back(i);

  std::vector<Detection> out;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (outcome[i] == DetectionOutcome::false_positive) {
      const auto it = tps.find({dets[i].image_id, dets[i].class_label});
      if (it != tps.end() &&
          std::any_of(it->second.begin(), it->second.end(), [&](std::size_t t) { return iou(dets[i].box, dets[t].box) > 0.0; }))
        continue;
    }
    out.push_back(dets[i]);
  }
  return out;
}

}  // namespace propbench
