#include "propbench/baselines.hpp"

#include "propbench/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace propbench {

namespace {

constexpr int kMaxRedraws = 1000;

template <typename Draw>
ProposalSet sample_clipped(const BoxStats& stats, const ImageInfo& img, std::size_t k, Rng& rng, Draw draw) {
  ProposalSet out;
  out.image_id = img.id;
  out.items.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    int attempt = 0;
    for (;; ++attempt) {
      if (attempt == kMaxRedraws)
        throw DataError("image '" + img.id + "': box statistics never produce a box inside the image");
      const BBox b = box_from_feature_row(draw(rng), img, stats.space);
      if (!b.valid()) continue;
      if (auto clipped = clip_to_image(b, img)) {
        out.items.push_back({*clipped, std::nullopt, false});
        break;
      }
    }
  }
  return out;
}

}  // namespace

double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw InvalidArgument("sorted_quantile: empty sample");
  const double pos = q * double(sorted.size() - 1);
  const auto i = std::size_t(std::floor(pos));
  if (i + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - double(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

FeatureMatrix box_feature_matrix(std::span<const Annotation> annotations, std::span<const ImageInfo> images,
                                 FeatureSpace space) {
  std::unordered_map<std::string, const ImageInfo*> by_id;
  for (const auto& img : images) by_id.emplace(img.id, &img);
  std::vector<Eigen::Vector4d> rows;
  rows.reserve(annotations.size());
  for (const auto& a : annotations) {
    if (a.crowd) continue;
    const auto it = by_id.find(a.image_id);
    if (it == by_id.end()) throw DataError("annotation refers to unknown image '" + a.image_id + "'");
    Eigen::Vector4d f = box_features(a.box);
    if (space == FeatureSpace::normalised) {
      const ImageInfo& img = *it->second;
      f[0] /= img.width;
      f[1] /= img.height;
      f[2] /= std::sqrt(double(img.width) * img.height);
    }
    rows.push_back(f);
  }
  FeatureMatrix m(Eigen::Index(rows.size()), 4);
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(Eigen::Index(i)) = rows[i].transpose();
  return m;
}

BoxStats fit_box_stats(std::span<const Annotation> annotations, std::span<const ImageInfo> images,
                       FeatureSpace space) {
  const FeatureMatrix x = box_feature_matrix(annotations, images, space);
  if (x.rows() < 2) throw InvalidArgument("fit_box_stats: at least two annotations required");

  BoxStats stats;
  stats.space = space;
  stats.sample_count = std::size_t(x.rows());
  for (int d = 0; d < 4; ++d) {
    std::vector<double> col(x.col(d).begin(), x.col(d).end());
    std::sort(col.begin(), col.end());
    stats.lo[d] = sorted_quantile(col, kTrimLow);
    stats.hi[d] = sorted_quantile(col, kTrimHigh);
  }
  stats.mean = x.colwise().mean().transpose();
  const FeatureMatrix centred = x.rowwise() - stats.mean.transpose();
  stats.cov = (centred.transpose() * centred) / double(x.rows() - 1);
  stats.cov = (0.5 * (stats.cov + stats.cov.transpose())).eval();
  return stats;
}

BBox box_from_feature_row(const Eigen::Vector4d& f, const ImageInfo& img, FeatureSpace space) {
  Eigen::Vector4d g = f;
  if (space == FeatureSpace::normalised) {
    g[0] *= img.width;
    g[1] *= img.height;
    g[2] *= std::sqrt(double(img.width) * img.height);
  }
  return box_from_features<double>(g);
}

FeatureMatrix draw_uniform_features(const BoxStats& stats, std::size_t n, Rng& rng) {
  if (stats.degenerate().any()) throw InvalidArgument("sample_uniform: degenerate feature range (lo >= hi)");
  FeatureMatrix out(Eigen::Index(n), 4);
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (int d = 0; d < 4; ++d) out(i, d) = rng.uniform(stats.lo[d], stats.hi[d]);
  return out;
}

Eigen::Matrix4d covariance_sqrt(const Eigen::Matrix4d& cov) {
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, cov.cwiseAbs().maxCoeff()))
    throw InvalidArgument("covariance is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(cov);
  const Eigen::Vector4d values = eig.eigenvalues();
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  if (values.minCoeff() < -1e-9 * scale) throw InvalidArgument("covariance is not positive semi-definite");
  const Eigen::Vector4d roots = values.cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

FeatureMatrix draw_gaussian_features(const BoxStats& stats, std::size_t n, Rng& rng) {
  const Eigen::Matrix4d root = covariance_sqrt(stats.cov);
  FeatureMatrix out(Eigen::Index(n), 4);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    Eigen::Vector4d z;
    for (int d = 0; d < 4; ++d) z[d] = rng.normal();
    out.row(i) = (stats.mean + root * z).transpose();
  }
  return out;
}

ProposalSet sample_uniform(const BoxStats& stats, const ImageInfo& img, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw InvalidArgument("sample_uniform: k must be >= 1");
  if (stats.degenerate().any()) throw InvalidArgument("sample_uniform: degenerate feature range (lo >= hi)");
  Rng rng(seed);
  return sample_clipped(stats, img, k, rng, [&](Rng& r) {
    Eigen::Vector4d f;
    for (int d = 0; d < 4; ++d) f[d] = r.uniform(stats.lo[d], stats.hi[d]);
    return f;
  });
}

ProposalSet sample_gaussian(const BoxStats& stats, const ImageInfo& img, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw InvalidArgument("sample_gaussian: k must be >= 1");
  const Eigen::Matrix4d root = covariance_sqrt(stats.cov);
  Rng rng(seed);
  return sample_clipped(stats, img, k, rng, [&](Rng& r) {
    Eigen::Vector4d z;
    for (int d = 0; d < 4; ++d) z[d] = r.normal();
    return Eigen::Vector4d(stats.mean + root * z);
  });
}

std::vector<double> window_ladder(int extent) {
  if (extent < 1) throw InvalidArgument("window_ladder: extent must be >= 1");
  std::vector<double> ladder;
  for (double side = 16.0; side < double(extent) * (1.0 - 1e-9); side *= std::sqrt(2.0)) ladder.push_back(side);
  ladder.push_back(double(extent));
  return ladder;
}

ProposalSet sliding_window(const ImageInfo& img, std::size_t k) {
  if (k == 0) throw InvalidArgument("sliding_window: k must be >= 1");
  const double W = img.width, H = img.height;
  const auto widths = window_ladder(img.width);
  const auto heights = window_ladder(img.height);

  struct Size {
    double w, h;
    std::size_t cap;
  };
  const long mi = long(widths.size() - 1) / 2;
  const long mj = long(heights.size() - 1) / 2;
  std::vector<std::pair<long, long>> ij;
  for (long i = 0; i < long(widths.size()); ++i)
    for (long j = 0; j < long(heights.size()); ++j) ij.emplace_back(i, j);
  std::stable_sort(ij.begin(), ij.end(), [&](const auto& a, const auto& b) {
    const long da = std::labs(a.first - mi) + std::labs(a.second - mj);
    const long db = std::labs(b.first - mi) + std::labs(b.second - mj);
    return da < db;
  });
  std::vector<Size> sizes;
  for (const auto& [i, j] : ij) {
    const double w = widths[i], h = heights[j];
    const auto nx = std::size_t(std::floor(W - w)) + 1;
    const auto ny = std::size_t(std::floor(H - h)) + 1;
    sizes.push_back({w, h, nx * ny});
  }

  // Even split with caps. Leftover budget goes to the least-filled unsaturated
  // sizes first (priority order among equals), so they differ by at most one.
  std::vector<std::size_t> alloc(sizes.size(), 0);
  std::size_t remaining = k;
  while (remaining > 0) {
    std::vector<std::size_t> active;
    for (std::size_t s = 0; s < sizes.size(); ++s)
      if (alloc[s] < sizes[s].cap) active.push_back(s);
    if (active.empty()) break;
    std::stable_sort(active.begin(), active.end(), [&](std::size_t a, std::size_t b) { return alloc[a] < alloc[b]; });
    const std::size_t share = remaining / active.size();
    const std::size_t extra = remaining % active.size();
    for (std::size_t a = 0; a < active.size(); ++a) {
      const std::size_t s = active[a];
      const std::size_t give = std::min(share + (a < extra ? 1 : 0), sizes[s].cap - alloc[s]);
      alloc[s] += give;
      remaining -= give;
    }
  }

  ProposalSet out;
  out.image_id = img.id;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    const std::size_t b = alloc[s];
    if (b == 0) continue;
    const double X = W - sizes[s].w, Y = H - sizes[s].h;
    const auto max_nx = std::size_t(std::floor(X)) + 1;
    const auto max_ny = std::size_t(std::floor(Y)) + 1;
    auto nx = std::size_t(std::lround(std::sqrt(double(b) * (X + 1.0) / (Y + 1.0))));
    nx = std::clamp<std::size_t>(nx, 1, max_nx);
    std::size_t ny = std::min(max_ny, (b + nx - 1) / nx);
    while (nx * ny < b) {
      if (nx < max_nx) ++nx;
      ny = std::min(max_ny, (b + nx - 1) / nx);
    }
    auto coord = [](double range, std::size_t n, std::size_t i) {
      return n == 1 ? range / 2.0 : range * double(i) / double(n - 1);
    };
    const std::size_t total = nx * ny;
    for (std::size_t t = 0; t < b; ++t) {
      const std::size_t g = t * total / b;
      const std::size_t gy = g / nx, gx = g % nx;
      out.items.push_back({{coord(X, nx, gx), coord(Y, ny, gy), sizes[s].w, sizes[s].h}, std::nullopt, false});
    }
  }
  return out;
}

}  // namespace propbench
