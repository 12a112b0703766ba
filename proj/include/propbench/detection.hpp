#pragma once

#include "propbench/box.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace propbench {

struct Detection {
  std::string image_id;
  std::string class_label;
  BBox box;
  double score = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

using ProposalMap = std::map<std::string, ProposalSet>;

/// Keeps detections overlapping some proposal of their image by IoU > min_iou.
std::vector<Detection> filter_by_proposals(std::span<const Detection> dets, const ProposalMap& proposals,
                                           double min_iou = 0.8);

/// Appends every non-crowd ground-truth box to its image's proposals as an
/// oracle item (ranked above all scored items).
ProposalMap augment_with_gt(const ProposalMap& proposals, std::span<const Annotation> gts);

enum class ApInterpolation { all_points, eleven_point };

/// Outcome of PASCAL-style matching for one class.
enum class DetectionOutcome { true_positive, false_positive, ignored };

/// Per-detection outcome for `class_label` (other classes are reported as
/// ignored). Detections are visited by score descending, ties in input order;
/// each takes the best-overlapping unmatched non-difficult GT with IoU >= iou_tp.
/// A detection with no such GT but IoU >= iou_tp with a difficult GT is ignored.
/// Crowd GT is excluded.
std::vector<DetectionOutcome> classify_detections(std::span<const Detection> dets, std::span<const Annotation> gts,
                                                  const std::string& class_label, double iou_tp = 0.5);

/// Area under the monotone precision envelope; absent when the class has no
/// non-difficult, non-crowd GT.
std::optional<double> average_precision(std::span<const Detection> dets, std::span<const Annotation> gts,
                                        const std::string& class_label, double iou_tp = 0.5,
                                        ApInterpolation mode = ApInterpolation::all_points);

/// Mean of defined per-class APs over GT classes. Throws InvalidArgument when
/// no class has a defined AP.
double mean_ap(std::span<const Detection> dets, std::span<const Annotation> gts, double iou_tp = 0.5,
               ApInterpolation mode = ApInterpolation::all_points);

/// Removes every false positive with IoU > 0 against a true positive of the
/// same class and image. True positives, ignored detections and background
/// false positives are kept unchanged, in input order.
std::vector<Detection> oracle_nms(std::span<const Detection> dets, std::span<const Annotation> gts,
                                  double iou_tp = 0.5);

}  // namespace propbench
