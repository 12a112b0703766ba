#include "propbench/repeatability.hpp"

#include "propbench/error.hpp"
#include "propbench/matching.hpp"
#include "propbench/metrics.hpp"
#include "propbench/proposal_ops.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace propbench {

namespace {

std::vector<double> sqrt_areas(const ProposalSet& ps) {
  std::vector<double> out;
  out.reserve(ps.items.size());
  for (const auto& it : ps.items) out.push_back(std::sqrt(it.box.area()));
  return out;
}

std::vector<double> with_defaults(const std::optional<std::vector<double>>& v, std::vector<double> fallback) {
  return v ? *v : std::move(fallback);
}

const PerturbationSpec kRotationReference{PerturbationKind::rotation, 0.0};

}  // namespace

RepeatabilityReport BinAccumulator::report(const PerturbationSpec& spec) const {
  RepeatabilityReport r;
  r.spec = spec;
  r.matched_pairs = matched_pairs;
  r.per_bin_scores.assign(sum.size(), std::nullopt);
  double total = 0.0;
  std::size_t present = 0;
  for (std::size_t b = 0; b < sum.size(); ++b) {
    r.reference_count += count[b];
    if (count[b] == 0) continue;
    const double score = sum[b] / double(count[b]);
    r.per_bin_scores[b] = score;
    total += score;
    ++present;
  }
  r.overall = present == 0 ? 0.0 : total / double(present);
  return r;
}

ImageInfo perturbed_image(const ImageInfo& reference, const PerturbationSpec& spec, const std::optional<BBox>& crop) {
  ImageInfo out = reference;
  if (spec.kind == PerturbationKind::scale) {
    out.width = std::max(1, int(std::lround(spec.param * reference.width)));
    out.height = std::max(1, int(std::lround(spec.param * reference.height)));
  } else if (spec.kind == PerturbationKind::rotation) {
    if (!crop) throw InvalidArgument("rotation requires the crop rectangle");
    out.width = std::max(1, int(std::lround(crop->w)));
    out.height = std::max(1, int(std::lround(crop->h)));
  }
  return out;
}

void accumulate_repeatability(BinAccumulator& acc, const ProposalSet& reference, const ProposalSet& perturbed,
                              const PerturbationSpec& spec, const ImageInfo& img, const std::optional<BBox>& crop,
                              std::span<const double> bin_edges, bool centre_filter) {
  const ImageInfo pimg = perturbed_image(img, spec, crop);
  const bool rotation = spec.kind == PerturbationKind::rotation;
  const double frame_w = rotation ? double(pimg.width) : double(img.width);
  const double frame_h = rotation ? double(pimg.height) : double(img.height);

  std::vector<BBox> projected;
  projected.reserve(perturbed.items.size());
  for (const auto& it : perturbed.items) {
    const BBox b = project_box(it.box, spec, pimg, crop);
    if (rotation && centre_filter) {
      const auto c = b.centre();
      if (c.x() < 0.0 || c.y() < 0.0 || c.x() > frame_w || c.y() > frame_h) continue;
    }
    projected.push_back(b);
  }

  const auto targets = reference.boxes();
  const MatchResult m = greedy_match(projected, targets, 0.0);
  acc.matched_pairs += m.matched_count();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const std::size_t b = bin_index(std::sqrt(targets[i].area()), bin_edges);
    acc.sum[b] += m.gt_iou[i];
    ++acc.count[b];
  }
}

RepeatabilityReport evaluate_repeatability(const ProposalSet& reference, const ProposalSet& perturbed,
                                           const PerturbationSpec& spec, const ImageInfo& img,
                                           const std::optional<BBox>& crop, const RepeatabilityOptions& options) {
  validate(spec);
  if (reference.items.empty()) throw InvalidArgument("evaluate_repeatability: empty reference set");
  if (spec.kind == PerturbationKind::rotation && !crop)
    throw InvalidArgument("evaluate_repeatability: rotation requires the crop rectangle");
  const std::vector<double> edges =
      options.bin_edges.empty() ? quantile_bin_edges(sqrt_areas(reference), options.bins) : options.bin_edges;
  BinAccumulator acc(edges.size() + 1);
  accumulate_repeatability(acc, reference, perturbed, spec, img, crop, edges, options.centre_filter);
  return acc.report(spec);
}

std::vector<PerturbationSpec> perturbation_suite(const PerturbationGridConfig& config) {
  std::vector<double> scales;
  for (int i = -4; i <= 4; ++i)
    if (i != 0) scales.push_back(std::pow(2.0, i / 4.0));
  for (double s : {0.9, 0.95, 0.99, 1.01, 1.05, 1.1}) scales.push_back(s);
  std::sort(scales.begin(), scales.end());

  std::vector<double> rotations;
  for (int a = -20; a <= 20; a += 5) rotations.push_back(a);
  std::vector<double> jpeg{PerturbationSpec::kJpegLossless, 5.0};
  for (int q = 10; q <= 100; q += 10) jpeg.push_back(q);
  std::vector<double> illumination;
  for (int b = 50; b <= 150; b += 10) illumination.push_back(b);

  const std::pair<PerturbationKind, std::vector<double>> grids[] = {
      {PerturbationKind::scale, with_defaults(config.scale, scales)},
      {PerturbationKind::rotation, with_defaults(config.rotation, rotations)},
      {PerturbationKind::blur, with_defaults(config.blur, {0.0, 0.5, 1.0, 2.0, 4.0, 8.0})},
      {PerturbationKind::jpeg, with_defaults(config.jpeg, jpeg)},
      {PerturbationKind::illumination, with_defaults(config.illumination, illumination)},
      {PerturbationKind::saltpepper, with_defaults(config.saltpepper, {1, 3, 10, 30, 100, 300, 1000})},
  };

  std::vector<PerturbationSpec> suite;
  if (config.include_identity) suite.push_back({PerturbationKind::none, 0.0});
  for (const auto& [kind, params] : grids)
    for (double p : params) {
      PerturbationSpec spec{kind, p};
      validate(spec);
      suite.push_back(spec);
    }
  return suite;
}

double max_rotation(std::span<const PerturbationSpec> suite) {
  double m = 0.0;
  for (const auto& s : suite)
    if (s.kind == PerturbationKind::rotation) m = std::max(m, std::abs(s.param));
  return m;
}

ProposalSet truncate_to_budget(const ProposalSet& ps, std::size_t budget) {
  if (ps.items.size() <= budget) return ps;
  if (ps.ordering_meaningful || ps.scored()) return top_k(ps, budget);
  ProposalSet out = ps;
  out.items.resize(budget);
  return out;
}

std::vector<RepeatabilityRow> run_repeatability_experiment(const RepeatabilityInputs& inputs) {
  if (!inputs.reference || !inputs.perturbed) throw InvalidArgument("run_repeatability_experiment: missing inputs");
  std::vector<PerturbationSpec> specs;
  for (const auto& [spec, _] : *inputs.perturbed) specs.push_back(spec);
  const double theta_max = max_rotation(specs);

  auto crop_for = [&](const ImageInfo& img) -> BBox {
    if (inputs.crops) {
      const auto it = inputs.crops->find(img.id);
      if (it != inputs.crops->end()) return it->second;
    }
    return inscribed_crop(img.width, img.height, theta_max);
  };

  // Size-bin edges per reference frame, pooled over the dataset.
  auto pooled_edges = [&](const ProposalMap& refs) {
    std::vector<double> all;
    for (const auto& img : inputs.images) {
      const auto it = refs.find(img.id);
      if (it == refs.end()) continue;
      const auto a = sqrt_areas(truncate_to_budget(it->second, inputs.budget));
      all.insert(all.end(), a.begin(), a.end());
    }
    return all.empty() ? std::vector<double>{} : quantile_bin_edges(all, kRepeatabilityBins);
  };
  const auto default_edges = pooled_edges(*inputs.reference);
  const auto rot_ref_it = inputs.perturbed->find(kRotationReference);
  const auto rotation_edges = rot_ref_it == inputs.perturbed->end() ? std::vector<double>{} : pooled_edges(rot_ref_it->second);

  std::vector<RepeatabilityRow> rows;
  for (const auto& [spec, sets] : *inputs.perturbed) {
    const bool rotation = spec.kind == PerturbationKind::rotation;
    const ProposalMap* refs = rotation ? (rot_ref_it == inputs.perturbed->end() ? nullptr : &rot_ref_it->second)
                                       : inputs.reference;
    RepeatabilityRow row;
    row.spec = spec;
    BinAccumulator acc;
    for (const auto& img : inputs.images) {
      const ProposalSet* ref = nullptr;
      if (refs) {
        const auto it = refs->find(img.id);
        if (it != refs->end()) ref = &it->second;
      }
      const auto pit = sets.find(img.id);
      if (!ref || pit == sets.end()) {
        row.missing_images.push_back(img.id);
        continue;
      }
      const auto crop = rotation ? std::optional<BBox>(crop_for(img)) : std::nullopt;
      accumulate_repeatability(acc, truncate_to_budget(*ref, inputs.budget),
                               truncate_to_budget(pit->second, inputs.budget), spec, img, crop,
                               rotation ? rotation_edges : default_edges, inputs.centre_filter);
    }
    row.report = acc.report(spec);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace propbench
