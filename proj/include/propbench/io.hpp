#pragma once

#include "propbench/baselines.hpp"
#include "propbench/box.hpp"
#include "propbench/detection.hpp"
#include "propbench/geometry.hpp"
#include "propbench/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace propbench {

namespace fs = std::filesystem;

struct DatasetManifest {
  std::vector<ImageInfo> images;
  std::vector<Annotation> annotations;
  std::map<std::string, std::string> metadata;

  const ImageInfo* find_image(const std::string& id) const;
  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// Reads `images.jsonl`, `annotations.jsonl` and optional `metadata.json` from
/// a dataset directory. Malformed lines raise DataError naming file and line.
DatasetManifest load_dataset(const fs::path& dir);
void save_dataset(const DatasetManifest& dataset, const fs::path& dir);

/// Throws DataError on duplicate image ids, broken references or invalid boxes.
void validate(const DatasetManifest& dataset);

/// proposals.jsonl: {"image_id", "boxes": [[x,y,w,h],...], "scores": [...]?,
/// "sorted": bool, "oracle": [bool,...]?} per line.
ProposalMap load_proposals(const fs::path& path);
void save_proposals(const ProposalMap& proposals, const fs::path& path);

/// detections.jsonl: {"image_id", "class", "box": [x,y,w,h], "score"} per line.
std::vector<Detection> load_detections(const fs::path& path);
void save_detections(std::span<const Detection> dets, const fs::path& path);

/// Versioned JSON document holding BoxStats.
void save_box_stats(const BoxStats& stats, const fs::path& path);
BoxStats load_box_stats(const fs::path& path);

using Cell = std::variant<double, std::int64_t, std::string>;

struct Column {
  std::string name;
  std::string unit;  // may be empty
  friend bool operator==(const Column&, const Column&) = default;
};

/// Rectangular result table with a provenance block (tool version, seeds,
/// input digests).
struct ResultTable {
  std::vector<Column> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::pair<std::string, std::string>> provenance;

  void add_row(std::vector<Cell> row);
  friend bool operator==(const ResultTable&, const ResultTable&) = default;
};

enum class TableFormat { csv, jsonl };

/// Floats use 6 significant digits ("%.6g").
std::string format_float(double v);

std::string render_results(const ResultTable& table, TableFormat format);
/// Atomic: written to a sibling temp file and renamed on success.
void write_results(const ResultTable& table, const fs::path& path, TableFormat format);
ResultTable parse_results(const std::string& text, TableFormat format);
ResultTable read_results(const fs::path& path, TableFormat format);
TableFormat table_format_for(const fs::path& path);

/// Writes `content` to a temp file next to `path`, then renames it into place.
void atomic_write(const fs::path& path, const std::string& content);

/// Hex SHA-256 of a file's bytes.
std::string file_digest(const fs::path& path);

/// Named (x, y) series for line charts.
struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label = "x";
  std::string y_label = "y";
};

/// Emits an SVG line chart at `path` and a sidecar CSV (series,x,y) at
/// `path` with extension ".csv". Throws InvalidArgument for an empty set.
void emit_plot(std::span<const PlotSeries> series, const fs::path& path, const PlotOptions& options = {});
std::string render_svg(std::span<const PlotSeries> series, const PlotOptions& options);
std::string render_plot_csv(std::span<const PlotSeries> series);

PlotSeries to_series(const RecallCurve& curve, const std::string& name);

/// Repeatability layout manifest (JSON):
///   {"method": "sliding", "root": ".", "budget": 1000,
///    "perturbations": ["none-0", "scale-0.5", ...]}
/// Proposals live at {root}/{method}/{spec name}/proposals.jsonl; "root" is
/// relative to the manifest's directory. Optional "crops" maps image ids to
/// [x,y,w,h] rotation crops.
struct RepeatabilityManifest {
  std::string method;
  fs::path root;
  std::size_t budget = 1000;
  std::vector<PerturbationSpec> perturbations;
  std::map<std::string, BBox> crops;

  fs::path proposals_path(const PerturbationSpec& spec) const;
};

RepeatabilityManifest load_repeatability_manifest(const fs::path& path);
void save_repeatability_manifest(const RepeatabilityManifest& manifest, const fs::path& path);

}  // namespace propbench
