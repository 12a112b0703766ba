#include "propbench/io.hpp"

#include "propbench/error.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace propbench {

using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Calls fn(json, line_number) for each non-blank line.
template <typename Fn>
void for_each_jsonl(const fs::path& path, Fn fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      fn(json::parse(line), lineno);
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const InvalidArgument& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

BBox parse_box(const json& j) {
  if (!j.is_array() || j.size() != 4) throw InvalidArgument("box must be an array [x, y, w, h]");
  for (const auto& v : j)
    if (!v.is_number()) throw InvalidArgument("box coordinates must be numbers");
  BBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!b.valid()) throw InvalidArgument("invalid box (need finite values and w, h > 0)");
  return b;
}

json box_json(const BBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

std::string jsonl(const std::vector<json>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += l.dump();
    out += '\n';
  }
  return out;
}

json vec_json(const Eigen::Vector4d& v) { return json::array({v[0], v[1], v[2], v[3]}); }

Eigen::Vector4d vec_from(const json& j) {
  if (!j.is_array() || j.size() != 4) throw DataError("box stats: expected a 4-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

bool needs_quotes(const std::string& s) {
  if (s.find_first_of(",\"\r\n") != std::string::npos) return true;
  if (s.empty()) return false;
  double d;
  auto res = std::from_chars(s.data(), s.data() + s.size(), d);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::string csv_field(const std::string& s, bool force_quotes = false) {
  if (!force_quotes && !needs_quotes(s)) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string header_name(const Column& c) { return c.unit.empty() ? c.name : c.name + " [" + c.unit + "]"; }

Column parse_header(const std::string& s) {
  if (s.size() > 3 && s.back() == ']') {
    const auto open = s.rfind(" [");
    if (open != std::string::npos) return {s.substr(0, open), s.substr(open + 2, s.size() - open - 3)};
  }
  return {s, ""};
}

std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_float(*d);
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  return csv_field(std::get<std::string>(c));
}

Cell typed_cell(const std::string& s, bool quoted) {
  if (quoted || s.empty()) return s;
  std::int64_t i;
  auto ri = std::from_chars(s.data(), s.data() + s.size(), i);
  if (ri.ec == std::errc() && ri.ptr == s.data() + s.size()) return i;
  double d;
  auto rd = std::from_chars(s.data(), s.data() + s.size(), d);
  if (rd.ec == std::errc() && rd.ptr == s.data() + s.size()) return d;
  return s;
}

struct CsvField {
  std::string text;
  bool quoted = false;
};

/// Splits RFC-4180 records starting at `pos`; returns false at end of input.
bool next_record(const std::string& text, std::size_t& pos, std::vector<CsvField>& fields) {
  fields.clear();
  if (pos >= text.size()) return false;
  CsvField cur;
  bool in_quotes = false;
  while (pos < text.size()) {
    const char c = text[pos++];
    if (in_quotes) {
      if (c == '"') {
        if (pos < text.size() && text[pos] == '"') {
          cur.text += '"';
          ++pos;
        } else {
          in_quotes = false;
        }
      } else {
        cur.text += c;
      }
    } else if (c == '"') {
      in_quotes = true;
      cur.quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur = {};
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      cur.text += c;
    }
  }
  if (in_quotes) throw DataError("results CSV: unterminated quoted field");
  fields.push_back(std::move(cur));
  return true;
}

json cell_json(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    // Rounded like CSV but kept as a JSON float so the cell type survives.
    if (!std::isfinite(*d)) return format_float(*d);
    return std::strtod(format_float(*d).c_str(), nullptr);
  }
  if (const auto* i = std::get_if<std::int64_t>(&c)) return *i;
  return std::get<std::string>(c);
}

Cell json_cell(const json& j) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw DataError("results JSONL: unsupported cell value " + j.dump());
}

constexpr const char* kCsvMarker = "# propbench results v1";

}  // namespace

const ImageInfo* DatasetManifest::find_image(const std::string& id) const {
  for (const auto& img : images)
    if (img.id == id) return &img;
  return nullptr;
}

void validate(const DatasetManifest& dataset) {
  std::set<std::string> ids;
  for (const auto& img : dataset.images) {
    if (img.width < 1 || img.height < 1) throw DataError("image '" + img.id + "' has non-positive dimensions");
    if (!ids.insert(img.id).second) throw DataError("duplicate image id '" + img.id + "'");
  }
  for (const auto& a : dataset.annotations) {
    if (!ids.count(a.image_id)) throw DataError("annotation refers to unknown image '" + a.image_id + "'");
    if (!a.box.valid()) throw DataError("annotation of image '" + a.image_id + "' has an invalid box");
  }
}

DatasetManifest load_dataset(const fs::path& dir) {
  DatasetManifest ds;
  for_each_jsonl(dir / "images.jsonl", [&](const json& j, std::size_t) {
    ImageInfo img;
    img.id = j.at("id").get<std::string>();
    img.width = j.at("width").get<int>();
    img.height = j.at("height").get<int>();
    if (img.width < 1 || img.height < 1) throw InvalidArgument("image dimensions must be >= 1");
    if (j.contains("file") && !j["file"].is_null()) img.raster_path = j["file"].get<std::string>();
    ds.images.push_back(std::move(img));
  });
  const fs::path ann = dir / "annotations.jsonl";
  if (fs::exists(ann)) {
    for_each_jsonl(ann, [&](const json& j, std::size_t) {
      Annotation a;
      a.image_id = j.at("image_id").get<std::string>();
      a.class_label = j.value("class", std::string{});
      a.box = parse_box(j.at("box"));
      a.difficult = j.value("difficult", false);
      a.crowd = j.value("crowd", false);
      ds.annotations.push_back(std::move(a));
    });
  }
  const fs::path meta = dir / "metadata.json";
  if (fs::exists(meta)) {
    try {
      const json doc = json::parse(read_file(meta));
      for (const auto& [k, v] : doc.items())
        ds.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
    } catch (const json::exception& e) {
      throw DataError(meta.string() + ": " + e.what());
    }
  }
  validate(ds);
  return ds;
}

void save_dataset(const DatasetManifest& dataset, const fs::path& dir) {
  validate(dataset);
  fs::create_directories(dir);
  std::vector<json> images, anns;
  for (const auto& img : dataset.images) {
    json j{{"id", img.id}, {"width", img.width}, {"height", img.height}};
    if (img.raster_path) j["file"] = *img.raster_path;
    images.push_back(std::move(j));
  }
  for (const auto& a : dataset.annotations)
    anns.push_back({{"image_id", a.image_id},
                    {"class", a.class_label},
                    {"box", box_json(a.box)},
                    {"difficult", a.difficult},
                    {"crowd", a.crowd}});
  atomic_write(dir / "images.jsonl", jsonl(images));
  atomic_write(dir / "annotations.jsonl", jsonl(anns));
  if (!dataset.metadata.empty()) atomic_write(dir / "metadata.json", json(dataset.metadata).dump(2) + "\n");
}

ProposalMap load_proposals(const fs::path& path) {
  ProposalMap out;
  for_each_jsonl(path, [&](const json& j, std::size_t) {
    ProposalSet ps;
    ps.image_id = j.at("image_id").get<std::string>();
    ps.ordering_meaningful = j.value("sorted", false);
    const auto& boxes = j.at("boxes");
    if (!boxes.is_array()) throw InvalidArgument("boxes must be an array");
    const json* scores = j.contains("scores") && !j["scores"].is_null() ? &j["scores"] : nullptr;
    const json* oracle = j.contains("oracle") && !j["oracle"].is_null() ? &j["oracle"] : nullptr;
    if (scores && scores->size() != boxes.size()) throw InvalidArgument("scores and boxes differ in length");
    if (oracle && oracle->size() != boxes.size()) throw InvalidArgument("oracle flags and boxes differ in length");
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      ScoredBox s{parse_box(boxes[i]), std::nullopt, oracle ? (*oracle)[i].get<bool>() : false};
      if (scores && !(*scores)[i].is_null()) s.score = (*scores)[i].get<double>();
      ps.items.push_back(s);
    }
    validate(ps);
    if (out.count(ps.image_id)) throw InvalidArgument("duplicate proposal record for image '" + ps.image_id + "'");
    out.emplace(ps.image_id, std::move(ps));
  });
  return out;
}

void save_proposals(const ProposalMap& proposals, const fs::path& path) {
  std::vector<json> lines;
  for (const auto& [id, ps] : proposals) {
    json boxes = json::array();
    for (const auto& it : ps.items) boxes.push_back(box_json(it.box));
    json j{{"image_id", id}, {"boxes", boxes}, {"sorted", ps.ordering_meaningful}};
    if (ps.scored()) {
      json scores = json::array();
      for (const auto& it : ps.items) scores.push_back(it.score ? json(*it.score) : json(nullptr));
      j["scores"] = scores;
    }
    if (std::any_of(ps.items.begin(), ps.items.end(), [](const auto& s) { return s.oracle; })) {
      json flags = json::array();
      for (const auto& it : ps.items) flags.push_back(it.oracle);
      j["oracle"] = flags;
    }
    lines.push_back(std::move(j));
  }
  atomic_write(path, jsonl(lines));
}

std::vector<Detection> load_detections(const fs::path& path) {
  std::vector<Detection> out;
  for_each_jsonl(path, [&](const json& j, std::size_t) {
    Detection d;
    d.image_id = j.at("image_id").get<std::string>();
    d.class_label = j.at("class").get<std::string>();
    d.box = parse_box(j.at("box"));
    d.score = j.at("score").get<double>();
    if (!std::isfinite(d.score)) throw InvalidArgument("detection score must be finite");
    out.push_back(std::move(d));
  });
  return out;
}

void save_detections(std::span<const Detection> dets, const fs::path& path) {
  std::vector<json> lines;
  for (const auto& d : dets)
    lines.push_back({{"image_id", d.image_id}, {"class", d.class_label}, {"box", box_json(d.box)}, {"score", d.score}});
  atomic_write(path, jsonl(lines));
}

void save_box_stats(const BoxStats& stats, const fs::path& path) {
  json cov = json::array();
  for (int r = 0; r < 4; ++r) cov.push_back(vec_json(stats.cov.row(r).transpose()));
  json j{{"format", "propbench-box-stats"},
         {"version", 1},
         {"features", {"cx", "cy", "sqrt_area", "log_aspect"}},
         {"space", stats.space == FeatureSpace::normalised ? "normalised" : "absolute"},
         {"sample_count", stats.sample_count},
         {"lo", vec_json(stats.lo)},
         {"hi", vec_json(stats.hi)},
         {"mean", vec_json(stats.mean)},
         {"cov", cov}};
  atomic_write(path, j.dump(2) + "\n");
}

BoxStats load_box_stats(const fs::path& path) {
  try {
    const json j = json::parse(read_file(path));
    if (j.value("format", "") != "propbench-box-stats") throw DataError(path.string() + ": not a box stats document");
    if (j.value("version", 0) != 1) throw DataError(path.string() + ": unsupported box stats version");
    BoxStats s;
    s.space = j.at("space").get<std::string>() == "absolute" ? FeatureSpace::absolute : FeatureSpace::normalised;
    s.sample_count = j.value("sample_count", std::size_t{0});
    s.lo = vec_from(j.at("lo"));
    s.hi = vec_from(j.at("hi"));
    s.mean = vec_from(j.at("mean"));
    const auto& cov = j.at("cov");
    if (!cov.is_array() || cov.size() != 4) throw DataError(path.string() + ": cov must be 4x4");
    for (int r = 0; r < 4; ++r) s.cov.row(r) = vec_from(cov[r]).transpose();
    return s;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void ResultTable::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size())
    throw InvalidArgument("result row has " + std::to_string(row.size()) + " cells, table has " +
                          std::to_string(columns.size()) + " columns");
  rows.push_back(std::move(row));
}

std::string format_float(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string render_results(const ResultTable& table, TableFormat format) {
  if (table.provenance.empty()) throw InvalidArgument("result table needs a provenance block");
  for (const auto& r : table.rows)
    if (r.size() != table.columns.size()) throw InvalidArgument("result table is not rectangular");

  std::string out;
  if (format == TableFormat::csv) {
    out += kCsvMarker;
    out += '\n';
    for (const auto& [k, v] : table.provenance) {
      if ((k + v).find_first_of("\r\n") != std::string::npos || k.find(": ") != std::string::npos)
        throw InvalidArgument("provenance entries must be single-line");
      out += "# " + k + ": " + v + "\n";
    }
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      if (c) out += ',';
      out += csv_field(header_name(table.columns[c]));
    }
    out += '\n';
    for (const auto& row : table.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out += ',';
        out += cell_text(row[c]);
      }
      out += '\n';
    }
    return out;
  }

  json cols = json::array();
  for (const auto& c : table.columns) cols.push_back({{"name", c.name}, {"unit", c.unit}});
  json prov = json::array();
  for (const auto& [k, v] : table.provenance) prov.push_back(json::array({k, v}));
  out += json{{"columns", cols}, {"provenance", prov}}.dump() + "\n";
  for (const auto& row : table.rows) {
    json r = json::array();
    for (const auto& cell : row) r.push_back(cell_json(cell));
    out += r.dump() + "\n";
  }
  return out;
}

void write_results(const ResultTable& table, const fs::path& path, TableFormat format) {
  atomic_write(path, render_results(table, format));
}

ResultTable parse_results(const std::string& text, TableFormat format) {
  ResultTable t;
  if (format == TableFormat::csv) {
    std::size_t pos = 0;
    auto line_end = [&] { return text.find('\n', pos); };
    if (text.compare(0, std::char_traits<char>::length(kCsvMarker), kCsvMarker) != 0)
      throw DataError("results CSV: missing header marker");
    pos = line_end() + 1;
    while (pos < text.size() && text[pos] == '#') {
      const auto end = line_end();
      const std::string line = text.substr(pos + 2, end - pos - 2);
      const auto sep = line.find(": ");
      if (sep == std::string::npos) throw DataError("results CSV: malformed provenance line");
      t.provenance.emplace_back(line.substr(0, sep), line.substr(sep + 2));
      pos = end + 1;
    }
    std::vector<CsvField> fields;
    if (!next_record(text, pos, fields)) throw DataError("results CSV: missing column header");
    for (const auto& f : fields) t.columns.push_back(parse_header(f.text));
    while (next_record(text, pos, fields)) {
      std::vector<Cell> row;
      for (const auto& f : fields) row.push_back(typed_cell(f.text, f.quoted));
      if (row.size() != t.columns.size()) throw DataError("results CSV: ragged row");
      t.rows.push_back(std::move(row));
    }
    return t;
  }

  std::istringstream in(text);
  std::string line;
  try {
    if (!std::getline(in, line)) throw DataError("results JSONL: empty document");
    const json head = json::parse(line);
    for (const auto& c : head.at("columns")) t.columns.push_back({c.at("name"), c.at("unit")});
    for (const auto& p : head.at("provenance")) t.provenance.emplace_back(p.at(0), p.at(1));
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<Cell> row;
      for (const auto& v : json::parse(line)) row.push_back(json_cell(v));
      if (row.size() != t.columns.size()) throw DataError("results JSONL: ragged row");
      t.rows.push_back(std::move(row));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("results JSONL: ") + e.what());
  }
  return t;
}

ResultTable read_results(const fs::path& path, TableFormat format) { return parse_results(read_file(path), format); }

TableFormat table_format_for(const fs::path& path) {
  return path.extension() == ".jsonl" ? TableFormat::jsonl : TableFormat::csv;
}

void atomic_write(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out.write(content.data(), std::streamsize(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw DataError("failed writing '" + path.string() + "'");
    }
  }
  fs::rename(tmp, path);
}

std::string file_digest(const fs::path& path) {
  const std::string bytes = read_file(path);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr))
    throw DataError("sha256 failed for '" + path.string() + "'");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

fs::path RepeatabilityManifest::proposals_path(const PerturbationSpec& spec) const {
  return root / method / spec.name() / "proposals.jsonl";
}

RepeatabilityManifest load_repeatability_manifest(const fs::path& path) {
  try {
    const json j = json::parse(read_file(path));
    RepeatabilityManifest m;
    m.method = j.at("method").get<std::string>();
    m.root = path.parent_path() / j.value("root", std::string("."));
    m.budget = j.value("budget", std::size_t{1000});
    for (const auto& p : j.at("perturbations")) m.perturbations.push_back(PerturbationSpec::parse(p.get<std::string>()));
    if (j.contains("crops"))
      for (const auto& [id, box] : j["crops"].items()) m.crops[id] = parse_box(box);
    return m;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_repeatability_manifest(const RepeatabilityManifest& manifest, const fs::path& path) {
  json specs = json::array();
  for (const auto& s : manifest.perturbations) specs.push_back(s.name());
  json j{{"method", manifest.method},
         {"root", fs::relative(manifest.root, path.parent_path().empty() ? fs::path(".") : path.parent_path()).generic_string()},
         {"budget", manifest.budget},
         {"perturbations", specs}};
  if (!manifest.crops.empty()) {
    json crops = json::object();
    for (const auto& [id, b] : manifest.crops) crops[id] = box_json(b);
    j["crops"] = crops;
  }
  atomic_write(path, j.dump(2) + "\n");
}

}  // namespace propbench
