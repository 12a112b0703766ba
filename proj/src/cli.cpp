#include "propbench/cli.hpp"

#include "propbench/baselines.hpp"
#include "propbench/detection.hpp"
#include "propbench/error.hpp"
#include "propbench/io.hpp"
#include "propbench/matching.hpp"
#include "propbench/metrics.hpp"
#include "propbench/proposal_ops.hpp"
#include "propbench/repeatability.hpp"
#include "propbench/segmentation.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

namespace propbench {

namespace {

/// Usage problem detected after parsing (e.g. a missing --seed).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

class Provenance {
 public:
  explicit Provenance(std::string command) {
    entries_.emplace_back("tool", std::string("propbench ") + PROPBENCH_VERSION);
    entries_.emplace_back("command", std::move(command));
  }
  void add(std::string key, std::string value) { entries_.emplace_back(std::move(key), std::move(value)); }
  void input(const std::string& role, const fs::path& path) { add("input." + role, "sha256:" + file_digest(path)); }
  void dataset(const fs::path& dir) {
    input("images", dir / "images.jsonl");
    if (fs::exists(dir / "annotations.jsonl")) input("annotations", dir / "annotations.jsonl");
  }
  void seed(std::uint64_t s) {
    add("rng", rng_tag());
    add("seed", std::to_string(s));
  }
  const auto& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

ResultTable make_table(std::vector<Column> columns, const Provenance& prov) {
  ResultTable t;
  t.columns = std::move(columns);
  t.provenance = prov.entries();
  return t;
}

/// Ground-truth boxes per image, crowd excluded.
std::map<std::string, std::vector<BBox>> gt_by_image(const DatasetManifest& ds) {
  std::map<std::string, std::vector<BBox>> out;
  for (const auto& img : ds.images) out[img.id];
  for (const auto& a : ds.annotations)
    if (!a.crowd) out[a.image_id].push_back(a.box);
  return out;
}

struct RecallStats {
  std::vector<double> matched;  // injective, one per GT
  std::vector<double> best;     // non-injective, one per GT
};

/// Pools matched IoUs over the dataset after truncating each image's set to k.
RecallStats pooled_overlaps(const DatasetManifest& ds, const ProposalMap& proposals, std::optional<std::size_t> k) {
  const auto gts = gt_by_image(ds);
  std::vector<std::pair<const std::string*, const std::vector<BBox>*>> work;
  for (const auto& [id, boxes] : gts) work.emplace_back(&id, &boxes);
  std::vector<RecallStats> per(work.size());
  parallel_for(work.size(), [&](std::size_t i) {
    const auto& targets = *work[i].second;
    std::vector<BBox> cands;
    if (const auto it = proposals.find(*work[i].first); it != proposals.end())
      cands = (k ? truncate_to_budget(it->second, *k) : it->second).boxes();
    per[i].matched = greedy_match(cands, targets, 0.0).gt_iou;
    per[i].best = best_overlap(cands, targets);
  });
  RecallStats all;
  for (auto& p : per) {
    all.matched.insert(all.matched.end(), p.matched.begin(), p.matched.end());
    all.best.insert(all.best.end(), p.best.begin(), p.best.end());
  }
  if (all.matched.empty()) throw DataError("dataset has no (non-crowd) annotations to evaluate");
  return all;
}

std::vector<double> parse_number_list(const std::string& arg) {
  std::string text = arg;
  if (!arg.empty() && arg[0] == '@') {
    std::ifstream in(arg.substr(1));
    if (!in) throw DataError("cannot open '" + arg.substr(1) + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  for (char& c : text)
    if (c == ',' || c == ';' || c == '\n' || c == '\r' || c == '\t') c = ' ';
  std::istringstream in(text);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw DataError("not a number: '" + tok + "'");
    }
  }
  return out;
}

void write_table(const ResultTable& t, const fs::path& path) { write_results(t, path, table_format_for(path)); }

// ---------------------------------------------------------------- subcommands

struct Common {
  std::ostream& out;
  std::ostream& err;
};

void cmd_fit_stats(const Common& io, const fs::path& dataset, const fs::path& out_path, bool absolute) {
  const auto ds = load_dataset(dataset);
  const auto stats = fit_box_stats(ds.annotations, ds.images, absolute ? FeatureSpace::absolute : FeatureSpace::normalised);
  save_box_stats(stats, out_path);
  io.out << "fitted " << stats.sample_count << " annotations\n";
  const auto degenerate = stats.degenerate();
  if (degenerate.any()) io.err << "warning: degenerate feature range; uniform sampling will be unavailable\n";
}

struct BaselineArgs {
  std::string method;
  fs::path dataset, out, stats;
  std::optional<std::size_t> k;
  std::optional<std::uint64_t> seed;
  SegParams seg;
};

void cmd_baseline(const Common& io, const BaselineArgs& a) {
  const bool sampled = a.method == "uniform" || a.method == "gaussian";
  if (sampled && !a.seed) throw UsageError("--seed is required for the " + a.method + " baseline");
  if (sampled && a.stats.empty()) throw UsageError("--stats is required for the " + a.method + " baseline");
  if (a.method != "superpixels" && !a.k) throw UsageError("--k is required for the " + a.method + " baseline");

  const auto ds = load_dataset(a.dataset);
  BoxStats stats;
  if (sampled) stats = load_box_stats(a.stats);
  std::vector<ProposalSet> sets(ds.images.size());
  parallel_for(ds.images.size(), [&](std::size_t i) {
    const ImageInfo& img = ds.images[i];
    if (a.method == "uniform") {
      sets[i] = sample_uniform(stats, img, *a.k, derive_seed(*a.seed, img.id));
    } else if (a.method == "gaussian") {
      sets[i] = sample_gaussian(stats, img, *a.k, derive_seed(*a.seed, img.id));
    } else if (a.method == "sliding") {
      sets[i] = sliding_window(img, *a.k);
    } else {
      if (!img.raster_path) throw DataError("image '" + img.id + "' has no raster file");
      fs::path raster = *img.raster_path;
      if (raster.is_relative()) raster = a.dataset / raster;
      const Raster r = read_pnm(raster);
      if (r.width != img.width || r.height != img.height)
        throw DataError("raster of image '" + img.id + "' does not match its declared size");
      sets[i] = dedup(superpixel_proposals(felzenszwalb_segment(r, a.seg), img.id));
    }
  });
  ProposalMap out;
  std::size_t total = 0;
  for (auto& s : sets) {
    total += s.items.size();
    out.emplace(s.image_id, std::move(s));
  }
  save_proposals(out, a.out);
  io.out << "wrote " << total << " proposals for " << out.size() << " images\n";
}

struct RecallArgs {
  fs::path dataset, proposals, out, curve, plot;
  std::optional<std::size_t> k;
  double ar_lo = 0.5, ar_hi = 1.0;
};

void cmd_recall(const Common& io, const RecallArgs& a) {
  const auto ds = load_dataset(a.dataset);
  const auto props = load_proposals(a.proposals);
  const auto stats = pooled_overlaps(ds, props, a.k);

  const double ar = average_recall(stats.matched, a.ar_lo, a.ar_hi);
  const double abo_v = abo(stats.best);
  const double r05 = recall_at(stats.matched, 0.5);
  const double r07 = recall_at(stats.matched, 0.7);
  const double r08 = recall_at(stats.matched, 0.8);
  io.out << "AR=" << fixed6(ar) << "\nABO=" << fixed6(abo_v) << "\nrecall@0.5=" << fixed6(r05)
         << "\nrecall@0.7=" << fixed6(r07) << "\nrecall@0.8=" << fixed6(r08)
         << "\nannotations=" << stats.matched.size() << "\n";

  Provenance prov("recall");
  prov.dataset(a.dataset);
  prov.input("proposals", a.proposals);
  if (a.k) prov.add("k", std::to_string(*a.k));
  prov.add("ar_range", format_float(a.ar_lo) + ".." + format_float(a.ar_hi));

  const auto curve = recall_curve(stats.matched, default_thresholds());
  if (!a.out.empty()) {
    auto t = make_table({{"metric", ""}, {"value", ""}}, prov);
    t.add_row({std::string("AR"), ar});
    t.add_row({std::string("ABO"), abo_v});
    t.add_row({std::string("recall@0.5"), r05});
    t.add_row({std::string("recall@0.7"), r07});
    t.add_row({std::string("recall@0.8"), r08});
    t.add_row({std::string("annotations"), std::int64_t(stats.matched.size())});
    write_table(t, a.out);
  }
  if (!a.curve.empty()) {
    auto t = make_table({{"iou", "IoU"}, {"recall", ""}}, prov);
    for (std::size_t i = 0; i < curve.thresholds.size(); ++i) t.add_row({curve.thresholds[i], curve.recall[i]});
    write_table(t, a.curve);
  }
  if (!a.plot.empty()) {
    const PlotSeries s[] = {to_series(curve, a.proposals.parent_path().filename().string().empty()
                                                 ? a.proposals.stem().string()
                                                 : a.proposals.parent_path().filename().string())};
    emit_plot(s, a.plot, {"Recall vs IoU", "IoU", "recall"});
  }
}

struct RecallCountArgs {
  fs::path dataset, proposals, out, plot;
  std::vector<std::size_t> ks;
};

void cmd_recall_vs_count(const Common& io, RecallCountArgs a) {
  if (a.ks.empty()) throw UsageError("--ks needs at least one count");
  std::sort(a.ks.begin(), a.ks.end());
  a.ks.erase(std::unique(a.ks.begin(), a.ks.end()), a.ks.end());
  const auto ds = load_dataset(a.dataset);
  const auto props = load_proposals(a.proposals);

  Provenance prov("recall-vs-count");
  prov.dataset(a.dataset);
  prov.input("proposals", a.proposals);
  auto t = make_table({{"k", "proposals"}, {"recall@0.5", ""}, {"recall@0.8", ""}, {"AR", ""}, {"ABO", ""}}, prov);
  CurveFamily family;
  const auto grid = threshold_grid(0.0, 1.0, 1001);
  PlotSeries ar_series{"AR", {}, {}};
  for (std::size_t k : a.ks) {
    const auto st = pooled_overlaps(ds, props, k);
    const double ar = average_recall(st.matched);
    t.add_row({std::int64_t(k), recall_at(st.matched, 0.5), recall_at(st.matched, 0.8), ar, abo(st.best)});
    family.proposal_counts.push_back(k);
    family.curves.push_back(recall_curve(st.matched, grid));
    ar_series.x.push_back(double(k));
    ar_series.y.push_back(ar);
  }
  const double v = vus(family);
  io.out << "VUS=" << fixed6(v) << "\n";
  for (const auto& row : t.rows)
    io.out << "k=" << std::get<std::int64_t>(row[0]) << " AR=" << fixed6(std::get<double>(row[3])) << "\n";
  if (!a.out.empty()) write_table(t, a.out);
  if (!a.plot.empty()) {
    const PlotSeries s[] = {ar_series};
    emit_plot(s, a.plot, {"AR vs number of proposals", "proposals", "AR"});
  }
}

struct RepeatArgs {
  fs::path manifest, dataset, out;
  std::optional<std::size_t> budget;
  bool no_centre_filter = false;
  bool near_objects = false;
};

void cmd_repeatability(const Common& io, const RepeatArgs& a) {
  const auto manifest = load_repeatability_manifest(a.manifest);
  const auto ds = load_dataset(a.dataset);
  const std::size_t budget = a.budget.value_or(manifest.budget);

  const PerturbationSpec identity{PerturbationKind::none, 0.0};
  const fs::path ref_path = manifest.proposals_path(identity);
  if (!fs::exists(ref_path)) throw DataError("reference proposals not found at '" + ref_path.string() + "'");
  ProposalMap reference = load_proposals(ref_path);

  Provenance prov("repeatability");
  prov.dataset(a.dataset);
  prov.input("manifest", a.manifest);
  prov.add("method", manifest.method);
  prov.add("budget", std::to_string(budget));

  std::map<PerturbationSpec, ProposalMap> perturbed;
  std::vector<PerturbationSpec> missing_specs;
  for (const auto& spec : manifest.perturbations) {
    const fs::path p = manifest.proposals_path(spec);
    if (!fs::exists(p)) {
      missing_specs.push_back(spec);
      io.err << "warning: no proposals for " << spec.name() << " (" << p.string() << ")\n";
      continue;
    }
    perturbed.emplace(spec, load_proposals(p));
    prov.input(spec.name(), p);
  }

  if (a.near_objects) {
    // Keep reference proposals that overlap some annotation with IoU >= 0.5.
    const auto gts = gt_by_image(ds);
    auto restrict = [&](ProposalMap& m) {
      for (auto& [id, ps] : m) {
        const auto it = gts.find(id);
        const std::vector<BBox> targets = it == gts.end() ? std::vector<BBox>{} : it->second;
        const auto boxes = ps.boxes();
        std::vector<ScoredBox> kept;
        for (std::size_t i = 0; i < boxes.size(); ++i) {
          const BBox one[] = {boxes[i]};
          const auto best = best_overlap(targets, one);
          if (best[0] >= 0.5) kept.push_back(ps.items[i]);
        }
        ps.items = std::move(kept);
      }
    };
    restrict(reference);
    prov.add("reference_filter", "iou>=0.5 with annotations");
  }

  std::map<std::string, BBox> crops = manifest.crops;
  RepeatabilityInputs in;
  in.images = ds.images;
  in.reference = &reference;
  in.perturbed = &perturbed;
  in.crops = &crops;
  in.budget = budget;
  in.centre_filter = !a.no_centre_filter;
  const auto rows = run_repeatability_experiment(in);

  std::vector<Column> cols{{"perturbation", ""}, {"kind", ""}, {"param", ""}, {"repeatability", ""}};
  for (std::size_t b = 0; b < kRepeatabilityBins; ++b) cols.push_back({"bin" + std::to_string(b), ""});
  cols.insert(cols.end(), {{"matched_pairs", ""}, {"reference_count", ""}, {"missing_images", ""}});
  auto t = make_table(cols, prov);
  for (const auto& r : rows) {
    std::vector<Cell> row{r.spec.name(), to_string(r.spec.kind), r.spec.param, r.report.overall};
    for (const auto& s : r.report.per_bin_scores) row.push_back(s ? Cell(*s) : Cell(std::string()));
    row.push_back(std::int64_t(r.report.matched_pairs));
    row.push_back(std::int64_t(r.report.reference_count));
    row.push_back(std::int64_t(r.missing_images.size()));
    t.add_row(std::move(row));
    io.out << r.spec.name() << " repeatability=" << fixed6(r.report.overall) << "\n";
    if (!r.missing_images.empty())
      io.err << "warning: " << r.spec.name() << ": " << r.missing_images.size() << " image(s) without proposals\n";
  }
  for (const auto& spec : missing_specs) {
    std::vector<Cell> row{spec.name(), to_string(spec.kind), spec.param, std::string()};
    for (std::size_t b = 0; b < kRepeatabilityBins; ++b) row.push_back(std::string());
    row.push_back(std::int64_t(0));
    row.push_back(std::int64_t(0));
    row.push_back(std::int64_t(ds.images.size()));
    t.add_row(std::move(row));
  }
  if (!a.out.empty()) write_table(t, a.out);
}

void cmd_oracle_gt(const Common& io, const fs::path& dataset, const fs::path& proposals, const fs::path& out) {
  const auto ds = load_dataset(dataset);
  const auto props = load_proposals(proposals);
  const auto before = pooled_overlaps(ds, props, std::nullopt);
  const auto augmented = augment_with_gt(props, ds.annotations);
  const auto after = pooled_overlaps(ds, augmented, std::nullopt);
  io.out << "AR before=" << fixed6(average_recall(before.matched)) << "\nAR after=" << fixed6(average_recall(after.matched))
         << "\n";
  if (!out.empty()) save_proposals(augmented, out);
}

void cmd_oracle_nms(const Common& io, const fs::path& dataset, const fs::path& detections, const fs::path& out,
                    double iou_tp) {
  const auto ds = load_dataset(dataset);
  const auto dets = load_detections(detections);
  const auto kept = oracle_nms(dets, ds.annotations, iou_tp);
  io.out << "mAP before=" << fixed6(mean_ap(dets, ds.annotations, iou_tp))
         << "\nmAP after=" << fixed6(mean_ap(kept, ds.annotations, iou_tp)) << "\nremoved=" << dets.size() - kept.size()
         << "\n";
  if (!out.empty()) save_detections(kept, out);
}

/// Applies `op` to every image's proposal set.
void map_proposals(const Common& io, const fs::path& in, const fs::path& out,
                   const std::function<ProposalSet(const ProposalSet&)>& op) {
  const auto props = load_proposals(in);
  std::vector<const ProposalSet*> sets;
  for (const auto& [_, ps] : props) sets.push_back(&ps);
  std::vector<ProposalSet> results(sets.size());
  parallel_for(sets.size(), [&](std::size_t i) { results[i] = op(*sets[i]); });
  ProposalMap m;
  std::size_t before = 0, after = 0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    before += sets[i]->items.size();
    after += results[i].items.size();
    m.emplace(results[i].image_id, std::move(results[i]));
  }
  save_proposals(m, out);
  io.out << "kept " << after << " of " << before << " proposals\n";
}

}  // namespace

unsigned worker_count() {
  if (const char* env = std::getenv("PROPBENCH_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return unsigned(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"propbench: evaluation toolkit for object detection proposals", "propbench"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(PROPBENCH_VERSION));
  const Common io{out, err};
  std::function<void()> action;

  // fit-stats
  fs::path fs_dataset, fs_out;
  bool fs_absolute = false;
  auto* fit = app.add_subcommand("fit-stats", "Fit box statistics for the uniform/gaussian baselines");
  fit->add_option("--dataset", fs_dataset, "Dataset directory")->required();
  fit->add_option("--out", fs_out, "Output statistics JSON")->required();
  fit->add_flag("--absolute", fs_absolute, "Fit in absolute pixel units instead of image-normalised features");
  fit->callback([&] { action = [&] { cmd_fit_stats(io, fs_dataset, fs_out, fs_absolute); }; });

  // baseline
  BaselineArgs bl;
  std::size_t bl_k = 0;
  std::uint64_t bl_seed = 0;
  auto* base = app.add_subcommand("baseline", "Generate baseline proposals");
  base->add_option("--method", bl.method, "uniform | gaussian | sliding | superpixels")
      ->required()
      ->check(CLI::IsMember({"uniform", "gaussian", "sliding", "superpixels"}));
  base->add_option("--dataset", bl.dataset, "Dataset directory")->required();
  auto* bl_k_opt = base->add_option("--k", bl_k, "Proposals per image")->check(CLI::PositiveNumber);
  auto* bl_seed_opt = base->add_option("--seed", bl_seed, "Random seed (uniform/gaussian)");
  base->add_option("--stats", bl.stats, "Box statistics JSON from fit-stats");
  base->add_option("--scale-k", bl.seg.scale_k, "Segmentation merge constant")->capture_default_str();
  base->add_option("--sigma", bl.seg.presmooth_sigma, "Segmentation pre-smoothing sigma")->capture_default_str();
  base->add_option("--min-size", bl.seg.min_size, "Minimum segment size")->capture_default_str();
  base->add_option("--out", bl.out, "Output proposals.jsonl")->required();
  base->callback([&] {
    if (*bl_k_opt) bl.k = bl_k;
    if (*bl_seed_opt) bl.seed = bl_seed;
    action = [&] { cmd_baseline(io, bl); };
  });

  // recall
  RecallArgs rc;
  std::size_t rc_k = 0;
  auto* recall = app.add_subcommand("recall", "Recall curve, AR and ABO of a proposal file");
  recall->add_option("--dataset", rc.dataset, "Dataset directory")->required();
  recall->add_option("--proposals", rc.proposals, "proposals.jsonl")->required();
  auto* rc_k_opt = recall->add_option("--k", rc_k, "Proposals per image (top-k)")->check(CLI::PositiveNumber);
  recall->add_option("--ar-lo", rc.ar_lo, "Lower IoU bound of AR")->capture_default_str();
  recall->add_option("--ar-hi", rc.ar_hi, "Upper IoU bound of AR")->capture_default_str();
  recall->add_option("--out", rc.out, "Scalar results (.csv or .jsonl)");
  recall->add_option("--curve", rc.curve, "Recall-vs-IoU curve table (.csv or .jsonl)");
  recall->add_option("--plot", rc.plot, "Recall-vs-IoU SVG plot");
  recall->callback([&] {
    if (*rc_k_opt) rc.k = rc_k;
    action = [&] { cmd_recall(io, rc); };
  });

  // recall-vs-count
  RecallCountArgs rv;
  auto* rvc = app.add_subcommand("recall-vs-count", "Recall and AR as the number of proposals varies");
  rvc->add_option("--dataset", rv.dataset, "Dataset directory")->required();
  rvc->add_option("--proposals", rv.proposals, "proposals.jsonl")->required();
  rv.ks = {10, 100, 1000, 10000};
  rvc->add_option("--ks", rv.ks, "Proposal counts, comma separated")->delimiter(',')->capture_default_str();
  rvc->add_option("--out", rv.out, "Results table (.csv or .jsonl)");
  rvc->add_option("--plot", rv.plot, "AR-vs-count SVG plot");
  rvc->callback([&] { action = [&] { cmd_recall_vs_count(io, rv); }; });

  // repeatability
  RepeatArgs rp;
  std::size_t rp_budget = 0;
  auto* rep = app.add_subcommand("repeatability", "Repeatability under image perturbations");
  rep->add_option("--manifest", rp.manifest, "Repeatability layout manifest (JSON)")->required();
  rep->add_option("--dataset", rp.dataset, "Dataset directory")->required();
  auto* rp_budget_opt = rep->add_option("--budget", rp_budget, "Proposals per image (default from manifest)");
  rep->add_flag("--no-centre-filter", rp.no_centre_filter, "Keep rotated proposals whose centre leaves the image");
  rep->add_flag("--near-objects", rp.near_objects, "Only reference proposals with IoU >= 0.5 to an annotation");
  rep->add_option("--out", rp.out, "Results table (.csv or .jsonl)");
  rep->callback([&] {
    if (*rp_budget_opt) rp.budget = rp_budget;
    action = [&] { cmd_repeatability(io, rp); };
  });

  // oracle
  std::string or_mode;
  fs::path or_dataset, or_input, or_dets, or_out;
  double or_iou = 0.5;
  auto* orc = app.add_subcommand("oracle", "gt oracle (inject annotations) or nms oracle (suppress false positives)");
  orc->add_option("--mode", or_mode, "gt | nms")->required()->check(CLI::IsMember({"gt", "nms"}));
  orc->add_option("--dataset", or_dataset, "Dataset directory")->required();
  orc->add_option("--proposals", or_input, "proposals.jsonl (gt mode)");
  orc->add_option("--detections", or_dets, "detections.jsonl (nms mode)");
  orc->add_option("--iou-tp", or_iou, "True-positive IoU threshold (nms mode)")->capture_default_str();
  orc->add_option("--out", or_out, "Output file");
  orc->callback([&] {
    action = [&] {
      if (or_mode == "gt") {
        if (or_input.empty()) throw UsageError("--proposals is required for --mode gt");
        cmd_oracle_gt(io, or_dataset, or_input, or_out);
      } else {
        if (or_dets.empty()) throw UsageError("--detections is required for --mode nms");
        cmd_oracle_nms(io, or_dataset, or_dets, or_out, or_iou);
      }
    };
  });

  // filter-detections
  fs::path fd_dets, fd_props, fd_out;
  double fd_iou = 0.8;
  auto* fdet = app.add_subcommand("filter-detections", "Keep detections that overlap a proposal");
  fdet->add_option("--detections", fd_dets, "detections.jsonl")->required();
  fdet->add_option("--proposals", fd_props, "proposals.jsonl")->required();
  fdet->add_option("--min-iou", fd_iou, "Required IoU (strictly greater)")->capture_default_str();
  fdet->add_option("--out", fd_out, "Output detections.jsonl")->required();
  fdet->callback([&] {
    action = [&] {
      const auto dets = load_detections(fd_dets);
      const auto kept = filter_by_proposals(dets, load_proposals(fd_props), fd_iou);
      save_detections(kept, fd_out);
      io.out << "kept " << kept.size() << " of " << dets.size() << " detections\n";
    };
  });

  // correlate
  std::string co_x, co_y;
  fs::path co_out;
  auto* cor = app.add_subcommand("correlate", "Pearson correlation of two value lists");
  cor->add_option("--x", co_x, "Values (comma separated) or @file")->required();
  cor->add_option("--y", co_y, "Values (comma separated) or @file")->required();
  cor->add_option("--out", co_out, "Results table (.csv or .jsonl)");
  cor->callback([&] {
    action = [&] {
      const auto xs = parse_number_list(co_x);
      const auto ys = parse_number_list(co_y);
      const double r = pearson(xs, ys);
      io.out << "r=" << fixed6(r) << "\nn=" << xs.size() << "\n";
      if (!co_out.empty()) {
        Provenance prov("correlate");
        auto t = make_table({{"statistic", ""}, {"value", ""}}, prov);
        t.add_row({std::string("pearson_r"), r});
        t.add_row({std::string("n"), std::int64_t(xs.size())});
        write_table(t, co_out);
      }
    };
  });

  // nms / adaptive-nms / top-k / random-k / dedup
  fs::path po_in, po_out;
  double nms_beta = 0.5;
  AdaptiveNmsParams anms;
  std::size_t po_k = 0;
  std::uint64_t po_seed = 0;
  auto add_io = [&](CLI::App* sub) {
    sub->add_option("--proposals", po_in, "Input proposals.jsonl")->required();
    sub->add_option("--out", po_out, "Output proposals.jsonl")->required();
  };
  auto* nms_cmd = app.add_subcommand("nms", "Greedy non-maximum suppression");
  add_io(nms_cmd);
  nms_cmd->add_option("--beta", nms_beta, "IoU threshold")->required();
  nms_cmd->callback([&] {
    action = [&] { map_proposals(io, po_in, po_out, [&](const ProposalSet& ps) { return nms(ps, nms_beta); }); };
  });
  auto* anms_cmd = app.add_subcommand("adaptive-nms", "NMS with a multiplicatively decaying threshold");
  add_io(anms_cmd);
  anms_cmd->add_option("--beta0", anms.beta0, "Initial IoU threshold")->capture_default_str();
  anms_cmd->add_option("--eta", anms.eta, "Decay per kept proposal")->capture_default_str();
  anms_cmd->add_option("--k", po_k, "Proposals to keep")->required()->check(CLI::PositiveNumber);
  anms_cmd->callback([&] {
    action = [&] {
      map_proposals(io, po_in, po_out, [&](const ProposalSet& ps) { return adaptive_nms(ps, po_k, anms).kept; });
    };
  });
  auto* topk_cmd = app.add_subcommand("top-k", "Keep the k best-ranked proposals");
  add_io(topk_cmd);
  topk_cmd->add_option("--k", po_k, "Proposals to keep")->required();
  topk_cmd->callback([&] {
    action = [&] { map_proposals(io, po_in, po_out, [&](const ProposalSet& ps) { return top_k(ps, po_k); }); };
  });
  auto* randk_cmd = app.add_subcommand("random-k", "Keep k proposals sampled uniformly");
  add_io(randk_cmd);
  randk_cmd->add_option("--k", po_k, "Proposals to keep")->required();
  randk_cmd->add_option("--seed", po_seed, "Random seed")->required();
  randk_cmd->callback([&] {
    action = [&] {
      map_proposals(io, po_in, po_out,
                    [&](const ProposalSet& ps) { return random_k(ps, po_k, derive_seed(po_seed, ps.image_id)); });
    };
  });
  auto* dedup_cmd = app.add_subcommand("dedup", "Remove duplicate proposals");
  add_io(dedup_cmd);
  dedup_cmd->callback([&] {
    action = [&] { map_proposals(io, po_in, po_out, [](const ProposalSet& ps) { return dedup(ps); }); };
  });

  // plot
  fs::path pl_in, pl_out;
  std::string pl_x, pl_y, pl_series, pl_title;
  auto* plot = app.add_subcommand("plot", "Line chart (SVG + sidecar CSV) from a results table");
  plot->add_option("--input", pl_in, "Results table (.csv or .jsonl)")->required();
  plot->add_option("--x", pl_x, "Column for the x axis")->required();
  plot->add_option("--y", pl_y, "Column for the y axis")->required();
  plot->add_option("--series", pl_series, "Column that names the series");
  plot->add_option("--title", pl_title, "Chart title");
  plot->add_option("--out", pl_out, "Output SVG")->required();
  plot->callback([&] {
    action = [&] {
      fs::path sidecar = pl_out;
      sidecar.replace_extension(".csv");
      if (fs::weakly_canonical(sidecar) == fs::weakly_canonical(pl_in))
        throw UsageError("--out would overwrite --input with the plot's sidecar CSV");
      const auto t = read_results(pl_in, table_format_for(pl_in));
      auto col = [&](const std::string& name) -> std::size_t {
        for (std::size_t c = 0; c < t.columns.size(); ++c)
          if (t.columns[c].name == name) return c;
        throw DataError("column '" + name + "' not found in '" + pl_in.string() + "'");
      };
      auto as_double = [](const Cell& c) -> std::optional<double> {
        if (const auto* d = std::get_if<double>(&c)) return *d;
        if (const auto* i = std::get_if<std::int64_t>(&c)) return double(*i);
        return std::nullopt;
      };
      const std::size_t cx = col(pl_x), cy = col(pl_y);
      const std::optional<std::size_t> cs = pl_series.empty() ? std::nullopt : std::optional(col(pl_series));
      std::vector<PlotSeries> series;
      for (const auto& row : t.rows) {
        const auto x = as_double(row[cx]);
        const auto y = as_double(row[cy]);
        if (!x || !y) continue;
        std::string name = pl_y;
        if (cs) {
          const auto& c = row[*cs];
          name = std::holds_alternative<std::string>(c) ? std::get<std::string>(c)
                 : std::holds_alternative<std::int64_t>(c) ? std::to_string(std::get<std::int64_t>(c))
                                                            : format_float(std::get<double>(c));
        }
        auto it = std::find_if(series.begin(), series.end(), [&](const auto& s) { return s.name == name; });
        if (it == series.end()) it = series.insert(series.end(), PlotSeries{name, {}, {}});
        it->x.push_back(*x);
        it->y.push_back(*y);
      }
      emit_plot(series, pl_out, {pl_title, pl_x, pl_y});
      io.out << "wrote " << pl_out.string() << "\n";
    };
  });

  std::vector<std::string> argv_storage{"propbench"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_storage) argv.push_back(s.data());

  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (action) action();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

int cli_dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_dispatch(args, std::cout, std::cerr);
}

}  // namespace propbench
