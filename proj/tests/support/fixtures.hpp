#pragma once

#include "propbench/io.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <unistd.h>

namespace fixture {

namespace fs = std::filesystem;

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("propbench_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

inline std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Images of varied size with 1..6 non-crowd annotations each, two classes.
inline propbench::DatasetManifest synthetic_dataset(int images, std::uint32_t seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(0, 1);
  propbench::DatasetManifest ds;
  for (int i = 0; i < images; ++i) {
    const int W = 200 + int(gen() % 300), H = 150 + int(gen() % 250);
    const std::string id = "img" + std::to_string(i);
    ds.images.push_back({id, W, H, std::nullopt});
    const int n = 1 + int(gen() % 6);
    for (int a = 0; a < n; ++a) {
      const double w = 10 + u(gen) * (W - 11), h = 10 + u(gen) * (H - 11);
      ds.annotations.push_back({id, gen() % 2 ? "cat" : "dog", {u(gen) * (W - w), u(gen) * (H - h), w, h}, false, false});
    }
  }
  return ds;
}

/// Each image's non-crowd annotations as an unscored proposal set.
inline propbench::ProposalMap gt_as_proposals(const propbench::DatasetManifest& ds) {
  propbench::ProposalMap m;
  for (const auto& img : ds.images) m[img.id] = {img.id, {}, false};
  for (const auto& a : ds.annotations)
    if (!a.crowd) m[a.image_id].items.push_back({a.box, std::nullopt, false});
  return m;
}

}  // namespace fixture
