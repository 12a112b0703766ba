#pragma once

#include "propbench/box.hpp"
#include "propbench/detection.hpp"
#include "propbench/geometry.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace propbench {

inline constexpr std::size_t kRepeatabilityBins = 10;

struct RepeatabilityReport {
  PerturbationSpec spec;
  std::vector<std::optional<double>> per_bin_scores;  // absent for empty bins
  double overall = 0.0;                               // unweighted mean of present bins
  std::size_t matched_pairs = 0;
  std::size_t reference_count = 0;
};

struct RepeatabilityOptions {
  /// Interior sqrt(area) edges; computed from the reference set when empty.
  std::vector<double> bin_edges;
  std::size_t bins = kRepeatabilityBins;
  /// Drop projected proposals whose centre falls outside the reference image
  /// (applied for rotation only).
  bool centre_filter = true;
};

/// Accumulated matched IoU per size bin; merges across images.
struct BinAccumulator {
  std::vector<double> sum;
  std::vector<std::size_t> count;
  std::size_t matched_pairs = 0;

  explicit BinAccumulator(std::size_t bins = kRepeatabilityBins) : sum(bins, 0.0), count(bins, 0) {}
  RepeatabilityReport report(const PerturbationSpec& spec) const;
};

/// Projects `perturbed` into the reference frame and greedily matches it
/// against `reference`, accumulating each reference proposal's matched IoU
/// into its size bin.
void accumulate_repeatability(BinAccumulator& acc, const ProposalSet& reference, const ProposalSet& perturbed,
                              const PerturbationSpec& spec, const ImageInfo& img, const std::optional<BBox>& crop,
                              std::span<const double> bin_edges, bool centre_filter = true);

/// Single-image repeatability. `img` is the unperturbed image. For rotation the
/// reference proposals live in the `crop` frame (the crop of the unrotated
/// image) and the perturbed image is the rotated image cropped the same way.
RepeatabilityReport evaluate_repeatability(const ProposalSet& reference, const ProposalSet& perturbed,
                                           const PerturbationSpec& spec, const ImageInfo& img,
                                           const std::optional<BBox>& crop, const RepeatabilityOptions& options = {});

/// Perturbation grids; an empty vector for a kind means its default grid.
struct PerturbationGridConfig {
  bool include_identity = true;
  std::optional<std::vector<double>> scale, rotation, blur, jpeg, illumination, saltpepper;
};

/// Default levels: scale 2^(i/4) for i in [-4, 4] \ {0} plus .9, .95, .99, 1.01,
/// 1.05, 1.1; rotation -20..20 in 5 degree steps; blur sigma {0, 0.5, 1, 2, 4, 8};
/// JPEG quality {5, 10, 20, ..., 100} plus lossless; brightness 50..150 % in
/// steps of 10; salt-and-pepper {1, 3, 10, 30, 100, 300, 1000} pixels.
std::vector<PerturbationSpec> perturbation_suite(const PerturbationGridConfig& config = {});

/// Largest |rotation| in a suite (0 when no rotation is present).
double max_rotation(std::span<const PerturbationSpec> suite);

struct RepeatabilityRow {
  PerturbationSpec spec;
  RepeatabilityReport report;
  std::vector<std::string> missing_images;
};

struct RepeatabilityInputs {
  std::span<const ImageInfo> images;
  /// Reference proposals per image for every non-rotation kind.
  const ProposalMap* reference = nullptr;
  /// Proposals per spec per image. The rotation-0 entry is the reference for
  /// rotations.
  const std::map<PerturbationSpec, ProposalMap>* perturbed = nullptr;
  /// Rotation crop per image; defaults to inscribed_crop at the suite's
  /// largest angle.
  const std::map<std::string, BBox>* crops = nullptr;
  std::size_t budget = 1000;
  bool centre_filter = true;
};

/// Pools every image's reference proposals into one set of size bins per
/// reference frame, then scores each spec. Images lacking proposals for a spec
/// are listed in missing_images and skipped.
std::vector<RepeatabilityRow> run_repeatability_experiment(const RepeatabilityInputs& inputs);

/// Keeps the first `budget` proposals by rank (scored or ordered sets) or in
/// file order otherwise.
ProposalSet truncate_to_budget(const ProposalSet& ps, std::size_t budget);

/// Perturbed image dimensions implied by a spec: round(s*W) x round(s*H) for
/// scale, the crop size for rotation, unchanged otherwise.
ImageInfo perturbed_image(const ImageInfo& reference, const PerturbationSpec& spec, const std::optional<BBox>& crop);

}  // namespace propbench
