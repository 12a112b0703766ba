// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include "propbench/baselines.hpp"
#include "propbench/cli.hpp"
#include "propbench/detection.hpp"
#include "propbench/io.hpp"
#include "propbench/matching.hpp"
#include "propbench/metrics.hpp"
#include "propbench/proposal_ops.hpp"
#include "propbench/repeatability.hpp"
#include "propbench/rng.hpp"
#include "propbench/segmentation.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace propbench;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::string detail = o.detail;
  if (limit_s > 0 && secs >= limit_s) {
    o.pass = false;
    detail += "; runtime limit " + std::to_string(limit_s) + " s exceeded";
  }
  char timing[64];
  std::snprintf(timing, sizeof(timing), "%.3f s", secs);
  std::printf("%s %s: %s [%s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), detail.c_str(), timing);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string num(double v, const char* fmt = "%.3g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

/// Pooled greedy-matched IoUs of `props` against each image's non-crowd annotations.
std::vector<double> pooled_matched(const DatasetManifest& ds, const ProposalMap& props) {
  std::vector<double> out;
  for (const auto& img : ds.images) {
    std::vector<BBox> targets;
    for (const auto& a : ds.annotations)
      if (a.image_id == img.id && !a.crowd) targets.push_back(a.box);
    const auto it = props.find(img.id);
    const std::vector<BBox> cands = it == props.end() ? std::vector<BBox>{} : it->second.boxes();
    const auto m = greedy_match(cands, targets);
    out.insert(out.end(), m.gt_iou.begin(), m.gt_iou.end());
  }
  return out;
}

Outcome ar_identity() {
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> ious(1 + gen() % 300);
    for (auto& v : ious) {
      const auto r = gen() % 20;
      // Mix in unmatched targets and values sitting exactly on the AR bounds.
      v = r == 0 ? 0.0 : r == 1 ? 0.5 : r == 2 ? 1.0 : u(gen);
    }
    const double closed = average_recall(ious, 0.5, 1.0);
    const double trap = oracle::trapezoid_recall_area(ious, 0.5, 1.0, 1e-4);
    worst = std::max(worst, std::abs(closed - trap));
  }
  return {worst <= 1e-4, "max |closed form - trapezoid| = " + num(worst) + " (tolerance 1e-4, 1000 multisets)"};
}

Outcome gt_oracle_ar() {
  auto ds = fixture::synthetic_dataset(50, 202);
  // Crowd regions are excluded from recall and from the oracle alike.
  ds.annotations.push_back({ds.images[0].id, "cat", {1, 1, 30, 30}, false, true});
  ProposalMap props;
  std::mt19937 gen(203);
  for (const auto& img : ds.images) {
    ProposalSet ps{img.id, {}, false};
    for (int i = 0; i < 100; ++i) ps.items.push_back({oracle::random_box(gen, std::min(img.width, img.height)), {}, false});
    props[img.id] = ps;
  }
  const double before = average_recall(pooled_matched(ds, props));
  const double after = average_recall(pooled_matched(ds, augment_with_gt(props, ds.annotations)));
  return {after == 1.0, "AR " + num(before, "%.6f") + " -> " + num(after, "%.17g") + " (required exactly 1)"};
}

Outcome sliding_identity_repeatability() {
  const auto ds = fixture::synthetic_dataset(100, 303);
  ProposalMap reference;
  std::map<PerturbationSpec, ProposalMap> perturbed;
  const PerturbationSpec identity{PerturbationKind::none, 0};
  for (const auto& img : ds.images) {
    reference[img.id] = sliding_window(img, 1000);
    // The perturbed run is generated independently on the (unchanged) perturbed image.
    perturbed[identity][img.id] = sliding_window(perturbed_image(img, identity, std::nullopt), 1000);
  }
  RepeatabilityInputs in;
  in.images = ds.images;
  in.reference = &reference;
  in.perturbed = &perturbed;
  in.budget = 1000;
  const auto rows = run_repeatability_experiment(in);
  const double r = rows.at(0).report.overall;
  return {r == 1.0, "overall = " + num(r, "%.17g") + " over " + std::to_string(rows[0].report.matched_pairs) +
                        " matched pairs on 100 images (required exactly 1)"};
}

Outcome uniform_coverage() {
  std::mt19937_64 gen(404);
  std::uniform_real_distribution<double> u(0, 1);
  std::lognormal_distribution<double> side(-1.5, 0.6);
  std::vector<ImageInfo> images;
  std::vector<Annotation> anns;
  for (int i = 0; i < 200; ++i) images.push_back({"im" + std::to_string(i), 300 + int(gen() % 400), 200 + int(gen() % 400), {}});
  for (int i = 0; i < 20000; ++i) {
    const auto& img = images[gen() % images.size()];
    const double w = std::clamp(side(gen), 0.01, 1.0) * img.width, h = std::clamp(side(gen), 0.01, 1.0) * img.height;
    anns.push_back({img.id, "a", {u(gen) * (img.width - w), u(gen) * (img.height - h), w, h}, false, false});
  }
  const auto stats = fit_box_stats(anns, images);
  const FeatureMatrix f = box_feature_matrix(anns, images);
  bool ok = true;
  std::string detail = "fractions inside [lo, hi] on " + std::to_string(f.rows()) + " annotations:";
  for (int d = 0; d < 4; ++d) {
    const double frac = ((f.col(d).array() >= stats.lo(d)) && (f.col(d).array() <= stats.hi(d))).cast<double>().mean();
    ok = ok && std::abs(frac - 0.99) <= 0.002;
    detail += " " + num(frac, "%.5f");
  }
  return {ok, detail + " (target 0.99 +- 0.002)"};
}

Outcome greedy_vs_optimal() {
  std::mt19937_64 gen(505);
  std::uniform_real_distribution<double> u(0, 1);
  std::size_t instances = 0, equal = 0, violations = 0;
  for (int t = 0; t < 10000; ++t) {
    const std::size_t nc = 1 + gen() % 8, nt = 1 + gen() % 8;
    std::vector<BBox> targets, cands;
    for (std::size_t i = 0; i < nt; ++i) targets.push_back(oracle::random_box(gen, 40));
    for (std::size_t i = 0; i < nc; ++i) {
      // Half the candidates jitter a target so that high-IoU conflicts are common.
      if (gen() % 2) {
        const BBox& g = targets[gen() % nt];
        cands.push_back({g.x + (u(gen) - 0.5) * g.w * 0.6, g.y + (u(gen) - 0.5) * g.h * 0.6, g.w * (0.7 + 0.6 * u(gen)),
                         g.h * (0.7 + 0.6 * u(gen))});
      } else {
        cands.push_back(oracle::random_box(gen, 40));
      }
    }
    for (double thr : {0.0, 0.5, 0.7}) {
      const std::size_t greedy = greedy_match(cands, targets, thr).matched_count();
      const std::size_t best = oracle::max_cardinality_matching(cands, targets, thr);
      ++instances;
      if (2 * greedy < best) ++violations;
      if (greedy == best) ++equal;
    }
  }
  return {violations == 0, std::to_string(violations) + " half-optimum violations in " + std::to_string(instances) +
                               " (instance, threshold) pairs; equality rate " +
                               num(double(equal) / double(instances), "%.4f")};
}

Outcome adaptive_nms_reduction() {
  std::mt19937_64 gen(606);
  std::uniform_real_distribution<double> u(0, 1);
  std::size_t mismatches = 0;
  for (int t = 0; t < 1000; ++t) {
    ProposalSet ps{"i", {}, false};
    const std::size_t n = 1 + gen() % 150;
    const bool coarse = t % 4 == 0;  // many tied scores
    for (std::size_t i = 0; i < n; ++i)
      ps.items.push_back({oracle::random_box(gen, 60), coarse ? double(gen() % 6) / 5.0 : u(gen), false});
    const double beta0 = 0.3 + 0.6 * u(gen);
    const std::size_t k = 1 + gen() % 80;
    const auto a = adaptive_nms(ps, k, {beta0, 1.0}).kept;
    const auto b = top_k(nms(ps, beta0), k);
    using Key = std::tuple<double, double, double, double, double>;
    std::multiset<Key> sa, sb;
    for (const auto& it : a.items) sa.emplace(it.box.x, it.box.y, it.box.w, it.box.h, *it.score);
    for (const auto& it : b.items) sb.emplace(it.box.x, it.box.y, it.box.w, it.box.h, *it.score);
    if (sa != sb) ++mismatches;
  }
  ProposalSet disjoint{"d", {}, false};
  for (int i = 0; i < 1200; ++i) disjoint.items.push_back({{double(i) * 10, 0, 5, 5}, 1.0 - i * 1e-4, false});
  const auto res = adaptive_nms(disjoint, 1000);
  const double want = 0.90 * std::pow(0.9996, 1000);
  const double err = std::abs(res.final_beta - want);
  const bool ok = mismatches == 0 && res.kept.items.size() == 1000 && err <= 1e-12;
  return {ok, std::to_string(mismatches) + " set mismatches in 1000; beta after 1000 keeps = " +
                  num(res.final_beta, "%.15f") + " (|error| " + num(err) + ", tolerance 1e-12)"};
}

Outcome gaussian_moments() {
  std::mt19937_64 gen(707);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<ImageInfo> images{{"a", 640, 480, {}}, {"b", 500, 375, {}}};
  std::vector<Annotation> anns;
  for (int i = 0; i < 5000; ++i) {
    const auto& img = images[i % 2];
    const double w = 5 + u(gen) * u(gen) * (img.width - 6), h = std::min(img.height - 1.0, 0.5 * w + 40 * u(gen) + 3);
    anns.push_back({img.id, "a", {u(gen) * (img.width - w), u(gen) * (img.height - h), w, h}, false, false});
  }
  const auto stats = fit_box_stats(anns, images);
  const std::size_t n = 100000;
  Rng rng(708);
  const FeatureMatrix f = draw_gaussian_features(stats, n, rng);
  const Eigen::RowVector4d mean = f.colwise().mean();
  const FeatureMatrix centred = f.rowwise() - mean;
  const Eigen::Matrix4d cov = (centred.transpose() * centred) / double(n - 1);
  double worst = 0;
  for (int i = 0; i < 4; ++i) {
    const double se = std::sqrt(stats.cov(i, i) / double(n));
    worst = std::max(worst, std::abs(mean(i) - stats.mean(i)) / se);
    for (int j = i; j < 4; ++j) {
      const double se_ij = std::sqrt((stats.cov(i, i) * stats.cov(j, j) + stats.cov(i, j) * stats.cov(i, j)) / double(n));
      worst = std::max(worst, std::abs(cov(i, j) - stats.cov(i, j)) / se_ij);
    }
  }
  return {worst <= 3.0, "largest deviation over 4 means and 10 covariance entries = " + num(worst) +
                            " standard errors (limit 3, 1e5 draws)"};
}

Outcome segmentation_sanity() {
  Raster halves{40, 30, 1, std::vector<std::uint8_t>(40 * 30, 20)};
  for (int y = 0; y < 30; ++y)
    for (int x = 20; x < 40; ++x) halves.samples[std::size_t(y) * 40 + x] = 230;
  SegParams sharp;
  sharp.presmooth_sigma = 0;  // uniform halves are compared unsmoothed
  const std::size_t two = region_count(felzenszwalb_segment(halves, sharp));
  const Raster flat{40, 30, 3, std::vector<std::uint8_t>(40 * 30 * 3, 128)};
  const std::size_t one = region_count(felzenszwalb_segment(flat));
  const auto photo = oracle::photo_fixture();
  std::vector<std::size_t> counts;
  bool monotone = true;
  for (double k : {50.0, 150.0, 300.0, 600.0, 1200.0}) {
    SegParams p;
    p.scale_k = k;
    counts.push_back(region_count(felzenszwalb_segment(photo, p)));
    if (counts.size() > 1 && counts.back() > counts[counts.size() - 2]) monotone = false;
  }
  std::string sweep;
  for (auto c : counts) sweep += (sweep.empty() ? "" : ",") + std::to_string(c);
  return {two == 2 && one == 1 && monotone, "halves -> " + std::to_string(two) + " regions, constant -> " +
                                                std::to_string(one) + ", scale_k sweep 50..1200 -> " + sweep};
}

Outcome pearson_properties() {
  std::mt19937_64 gen(909);
  std::normal_distribution<double> z(0, 1);
  double affine_err = 0, two_pass_err = 0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> x(3 + gen() % 200), y(x.size()), ax(x.size());
    double a = z(gen) * 10;
    if (a == 0) a = 1;
    const double b = z(gen) * 100;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = z(gen) * 5 + 2;
      y[i] = 0.3 * x[i] + z(gen);
      ax[i] = a * x[i] + b;
    }
    affine_err = std::max(affine_err, std::abs(pearson(x, ax) - (a > 0 ? 1.0 : -1.0)));
    two_pass_err = std::max(two_pass_err, std::abs(pearson(x, y) - oracle::two_pass_pearson(x, y)));
  }
  return {affine_err <= 1e-9 && two_pass_err <= 1e-12,
          "max |r(x, ax+b) - sign(a)| = " + num(affine_err) + " (tolerance 1e-9); max |r - two-pass| = " +
              num(two_pass_err) + " (tolerance 1e-12)"};
}

Outcome oracle_nms_dominance() {
  std::mt19937_64 gen(1010);
  std::uniform_real_distribution<double> u(0, 1);
  const char* classes[] = {"a", "b", "c"};
  std::size_t lowered = 0, removed_tp = 0, total_tp = 0;
  double gain = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<Annotation> gts;
    std::vector<Detection> dets;
    for (int img = 0; img < 5; ++img) {
      const std::string id = "im" + std::to_string(img);
      const int ng = 1 + int(gen() % 5);
      for (int g = 0; g < ng; ++g)
        gts.push_back({id, classes[gen() % 3], oracle::random_box(gen, 100), g > 0 && gen() % 8 == 0,
                       g > 0 && gen() % 10 == 0});
    }
    for (int d = 0; d < 60; ++d) {
      Detection det{"im" + std::to_string(gen() % 5), classes[gen() % 3], oracle::random_box(gen, 100), u(gen)};
      // Jittered copies of ground truth give true positives and near-duplicates.
      if (gen() % 2) {
        const auto& g = gts[gen() % gts.size()];
        det.image_id = g.image_id;
        det.class_label = g.class_label;
        det.box = {g.box.x + (u(gen) - 0.5) * 6, g.box.y + (u(gen) - 0.5) * 6, g.box.w, g.box.h};
      }
      dets.push_back(det);
    }
    const auto kept = oracle_nms(dets, gts);
    const double before = mean_ap(dets, gts), after = mean_ap(kept, gts);
    if (after < before) ++lowered;
    gain += after - before;
    for (const char* c : classes) {
      const auto outcome = classify_detections(dets, gts, c);
      for (std::size_t i = 0; i < dets.size(); ++i) {
        if (dets[i].class_label != c || outcome[i] != DetectionOutcome::true_positive) continue;
        ++total_tp;
        if (std::find(kept.begin(), kept.end(), dets[i]) == kept.end()) ++removed_tp;
      }
    }
  }
  return {lowered == 0 && removed_tp == 0, std::to_string(lowered) + " of 100 fixtures lost mAP; " +
                                               std::to_string(removed_tp) + " of " + std::to_string(total_tp) +
                                               " true positives removed; mean mAP gain " + num(gain / 100)};
}

int cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli_dispatch(args, out, err);
  if (code != kExitOk) throw std::runtime_error("propbench " + args.at(0) + " failed: " + err.str());
  return code;
}

Outcome pipeline_determinism() {
  fixture::TempDir dir("acceptance");
  const auto ds = fixture::synthetic_dataset(12, 1111);
  const std::string data = (dir / "data").string();
  save_dataset(ds, data);
  cli({"fit-stats", "--dataset", data, "--out", (dir / "stats.json").string()});

  // Repeatability layout: identity, scale and rotation proposals for each image.
  RepeatabilityManifest manifest;
  manifest.method = "sliding";
  manifest.root = dir / "layout";
  manifest.budget = 300;
  manifest.perturbations = {{PerturbationKind::none, 0},      {PerturbationKind::scale, 0.5},
                            {PerturbationKind::rotation, 0},  {PerturbationKind::rotation, 10},
                            {PerturbationKind::blur, 2}};
  for (const auto& spec : manifest.perturbations) {
    ProposalMap m;
    for (const auto& img : ds.images) {
      // Rotations use the default crop: inscribed at the suite's largest angle.
      std::optional<BBox> crop;
      if (spec.kind == PerturbationKind::rotation) crop = inscribed_crop(img.width, img.height, 10);
      m[img.id] = sliding_window(perturbed_image(img, spec, crop), 300);
    }
    const auto path = manifest.proposals_path(spec);
    fs::create_directories(path.parent_path());
    save_proposals(m, path);
  }
  save_repeatability_manifest(manifest, dir / "manifest.json");

  struct Step {
    std::string name;
    std::vector<std::string> args;
    std::string output;
  };
  std::vector<Step> steps;
  for (const char* method : {"uniform", "gaussian", "sliding"}) {
    const std::string out = (dir / (std::string(method) + ".jsonl")).string();
    steps.push_back({std::string("baseline ") + method,
                     {"baseline", "--method", method, "--dataset", data, "--stats", (dir / "stats.json").string(),
                      "--k", "200", "--seed", "42", "--out", out},
                     out});
    const std::string table = (dir / (std::string(method) + "_recall.csv")).string();
    steps.push_back({std::string("recall ") + method,
                     {"recall", "--dataset", data, "--proposals", out, "--out", table},
                     table});
  }
  const std::string rep = (dir / "repeatability.csv").string();
  steps.push_back({"repeatability",
                   {"repeatability", "--manifest", (dir / "manifest.json").string(), "--dataset", data, "--out", rep},
                   rep});

  // First pass with the default worker count, second pass single-threaded.
  std::vector<std::string> first;
  for (const auto& s : steps) {
    cli(s.args);
    first.push_back(fixture::read_text(s.output));
  }
  ::setenv("PROPBENCH_THREADS", "1", 1);
  std::vector<std::string> differing;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    fs::remove(steps[i].output);
    cli(steps[i].args);
    if (fixture::read_text(steps[i].output) != first[i]) differing.push_back(steps[i].name);
  }
  ::unsetenv("PROPBENCH_THREADS");
  std::string detail = std::to_string(steps.size() - differing.size()) + " of " + std::to_string(steps.size()) +
                       " result files byte-identical across two runs";
  for (const auto& d : differing) detail += "; differs: " + d;
  return {differing.empty(), detail};
}

}  // namespace

int main() {
  report("AR closed form equals trapezoid integration", 5, ar_identity);
  report("gt-oracle AR is exactly 1", 1, gt_oracle_ar);
  report("SlidingWindow identity repeatability is exactly 1", 5, sliding_identity_repeatability);
  report("Uniform baseline [lo, hi] covers 99% per dimension", 2, uniform_coverage);
  report("Greedy matching reaches half the exhaustive optimum", 30, greedy_vs_optimal);
  report("Adaptive NMS with eta 1 reduces to NMS then top-k", 10, adaptive_nms_reduction);
  report("Gaussian sampler reproduces fitted moments", 5, gaussian_moments);
  report("Segmentation sanity", 10, segmentation_sanity);
  report("Pearson correlation properties", 0, pearson_properties);
  report("Oracle NMS never lowers mAP nor removes a true positive", 10, oracle_nms_dominance);
  report("recall, repeatability and baseline are deterministic", 0, pipeline_determinism);
  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
