#include "propbench/segmentation.hpp"

#include "propbench/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace propbench {

namespace {

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n), rank_(n, 0), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t v) {
    std::size_t root = v;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[v] != root) {
      const std::size_t next = parent_[v];
      parent_[v] = root;
      v = next;
    }
    return root;
  }

  std::size_t join(std::size_t a, std::size_t b) {
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    if (rank_[a] == rank_[b]) ++rank_[a];
    return a;
  }

  std::size_t size(std::size_t root) const { return size_[root]; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::uint8_t> rank_;
  std::vector<std::size_t> size_;
};

struct Edge {
  float w;
  std::uint32_t a, b;
};

int read_header_int(std::istream& in) {
  int c = in.peek();
  while (in && (std::isspace(c) || c == '#')) {
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else {
      in.get();
    }
    c = in.peek();
  }
  int v = -1;
  in >> v;
  if (!in) throw DataError("malformed PNM header");
  return v;
}

}  // namespace

void Raster::validate() const {
  if (width < 1 || height < 1) throw InvalidArgument("raster dimensions must be >= 1");
  if (channels != 1 && channels != 3) throw InvalidArgument("raster must have 1 or 3 channels");
  if (samples.size() != std::size_t(width) * height * channels)
    throw InvalidArgument("raster sample count does not match its dimensions");
}

Raster read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open raster '" + path.string() + "'");
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  Raster r;
  if (magic == "P5") {
    r.channels = 1;
  } else if (magic == "P6") {
    r.channels = 3;
  } else {
    throw DataError("'" + path.string() + "' is not a binary PGM/PPM file");
  }
  r.width = read_header_int(in);
  r.height = read_header_int(in);
  const int maxval = read_header_int(in);
  if (maxval != 255) throw DataError("'" + path.string() + "': only maxval 255 is supported");
  if (r.width < 1 || r.height < 1) throw DataError("'" + path.string() + "': bad dimensions");
  in.get();  // single whitespace before the payload
  r.samples.resize(std::size_t(r.width) * r.height * r.channels);
  in.read(reinterpret_cast<char*>(r.samples.data()), std::streamsize(r.samples.size()));
  if (in.gcount() != std::streamsize(r.samples.size())) throw DataError("'" + path.string() + "': truncated payload");
  return r;
}

void write_pnm(const Raster& raster, const std::filesystem::path& path) {
  raster.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write raster '" + path.string() + "'");
  out << (raster.channels == 3 ? "P6" : "P5") << '\n' << raster.width << ' ' << raster.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(raster.samples.data()), std::streamsize(raster.samples.size()));
}

std::vector<float> smooth(const Raster& raster, double sigma) {
  raster.validate();
  std::vector<float> img(raster.samples.begin(), raster.samples.end());
  if (sigma <= 0.0) return img;

  const int len = int(std::ceil(sigma * 4.0)) + 1;
  std::vector<float> mask(len);
  for (int i = 0; i < len; ++i) mask[i] = float(std::exp(-0.5 * (i / sigma) * (i / sigma)));
  float sum = 0.f;
  for (int i = 1; i < len; ++i) sum += 2.f * std::abs(mask[i]);
  sum += std::abs(mask[0]);
  for (auto& m : mask) m /= sum;

  const int W = raster.width, H = raster.height, C = raster.channels;
  auto idx = [&](int x, int y, int c) { return (std::size_t(y) * W + x) * C + c; };
  std::vector<float> tmp(img.size());
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < C; ++c) {
        float s = mask[0] * img[idx(x, y, c)];
        for (int i = 1; i < len; ++i)
          s += mask[i] * (img[idx(std::max(x - i, 0), y, c)] + img[idx(std::min(x + i, W - 1), y, c)]);
        tmp[idx(x, y, c)] = s;
      }
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < C; ++c) {
        float s = mask[0] * tmp[idx(x, y, c)];
        for (int i = 1; i < len; ++i)
          s += mask[i] * (tmp[idx(x, std::max(y - i, 0), c)] + tmp[idx(x, std::min(y + i, H - 1), c)]);
        img[idx(x, y, c)] = s;
      }
  return img;
}

LabelMap felzenszwalb_segment(const Raster& raster, const SegParams& params) {
  raster.validate();
  if (!(params.scale_k > 0.0)) throw InvalidArgument("scale_k must be > 0");
  if (params.presmooth_sigma < 0.0) throw InvalidArgument("presmooth_sigma must be >= 0");
  if (params.min_size < 1) throw InvalidArgument("min_size must be >= 1");

  const int W = raster.width, H = raster.height, C = raster.channels;
  const auto img = smooth(raster, params.presmooth_sigma);
  auto diff = [&](int x1, int y1, int x2, int y2) {
    float s = 0.f;
    for (int c = 0; c < C; ++c) {
      const float d = img[(std::size_t(y1) * W + x1) * C + c] - img[(std::size_t(y2) * W + x2) * C + c];
      s += d * d;
    }
    return std::sqrt(s);
  };

  std::vector<Edge> edges;
  edges.reserve(std::size_t(W) * H * 4);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const auto v = std::uint32_t(y * W + x);
      if (x + 1 < W) edges.push_back({diff(x, y, x + 1, y), v, v + 1});
      if (y + 1 < H) edges.push_back({diff(x, y, x, y + 1), v, std::uint32_t(v + W)});
      if (x + 1 < W && y + 1 < H) edges.push_back({diff(x, y, x + 1, y + 1), v, std::uint32_t(v + W + 1)});
      if (x + 1 < W && y > 0) edges.push_back({diff(x, y, x + 1, y - 1), v, std::uint32_t(v - W + 1)});
    }
  std::stable_sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.w < b.w; });

  const std::size_t n = std::size_t(W) * H;
  DisjointSet sets(n);
  std::vector<double> threshold(n, params.scale_k);
  for (const Edge& e : edges) {
    std::size_t a = sets.find(e.a);
    std::size_t b = sets.find(e.b);
    if (a == b) continue;
    if (e.w <= threshold[a] && e.w <= threshold[b]) {
      const std::size_t root = sets.join(a, b);
      threshold[root] = e.w + params.scale_k / double(sets.size(root));
    }
  }
  for (const Edge& e : edges) {
    const std::size_t a = sets.find(e.a);
    const std::size_t b = sets.find(e.b);
    if (a != b && (sets.size(a) < std::size_t(params.min_size) || sets.size(b) < std::size_t(params.min_size)))
      sets.join(a, b);
  }

  LabelMap labels(H, W);
  std::vector<std::int32_t> id(n, -1);
  std::int32_t next = 0;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const std::size_t root = sets.find(std::size_t(y) * W + x);
      if (id[root] < 0) id[root] = next++;
      labels(y, x) = id[root];
    }
  return labels;
}

std::size_t region_count(const LabelMap& labels) {
  return labels.size() == 0 ? 0 : std::size_t(labels.maxCoeff()) + 1;
}

ProposalSet superpixel_proposals(const LabelMap& labels, const std::string& image_id) {
  const std::size_t regions = region_count(labels);
  constexpr int kInf = std::numeric_limits<int>::max();
  std::vector<int> x0(regions, kInf), y0(regions, kInf), x1(regions, -1), y1(regions, -1);
  for (Eigen::Index y = 0; y < labels.rows(); ++y)
    for (Eigen::Index x = 0; x < labels.cols(); ++x) {
      const auto r = std::size_t(labels(y, x));
      x0[r] = std::min(x0[r], int(x));
      y0[r] = std::min(y0[r], int(y));
      x1[r] = std::max(x1[r], int(x));
      y1[r] = std::max(y1[r], int(y));
    }
  ProposalSet out;
  out.image_id = image_id;
  for (std::size_t r = 0; r < regions; ++r)
    out.items.push_back({{double(x0[r]), double(y0[r]), double(x1[r] - x0[r] + 1), double(y1[r] - y0[r] + 1)},
                         std::nullopt,
                         false});
  return out;
}

}  // namespace propbench
