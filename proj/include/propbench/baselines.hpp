#pragma once

#include "propbench/box.hpp"
#include "propbench/rng.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>

namespace propbench {

/// Normalised: (cx/W, cy/H, sqrt(area)/sqrt(W*H), log aspect), so one fit
/// transfers across image sizes. Absolute keeps pixel units.
enum class FeatureSpace { normalised, absolute };

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, 4, Eigen::RowMajor>;

/// Trimmed ranges and Gaussian moments of box features over a training set.
struct BoxStats {
  Eigen::Vector4d lo = Eigen::Vector4d::Zero();
  Eigen::Vector4d hi = Eigen::Vector4d::Zero();
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();
  Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
  FeatureSpace space = FeatureSpace::normalised;
  std::size_t sample_count = 0;

  /// Per-dimension flag: true where lo >= hi.
  Eigen::Array<bool, 4, 1> degenerate() const { return lo.array() >= hi.array(); }
};

/// Lower and upper trim quantiles (0.5% each side, covering 99% of the data).
inline constexpr double kTrimLow = 0.005;
inline constexpr double kTrimHigh = 0.995;

/// Linear-interpolation quantile of an ascending-sorted sample.
double sorted_quantile(std::span<const double> sorted, double q);

FeatureMatrix box_feature_matrix(std::span<const Annotation> annotations, std::span<const ImageInfo> images,
                                 FeatureSpace space = FeatureSpace::normalised);

/// Fits BoxStats on non-crowd annotations. lo/hi are per-dimension 0.5% and
/// 99.5% quantiles; mean and (n-1) covariance use the untrimmed sample.
BoxStats fit_box_stats(std::span<const Annotation> annotations, std::span<const ImageInfo> images,
                       FeatureSpace space = FeatureSpace::normalised);

/// Maps a feature row back to a pixel box for `img`.
BBox box_from_feature_row(const Eigen::Vector4d& f, const ImageInfo& img, FeatureSpace space);

/// Raw feature draws (one row each) before de-normalisation and clipping.
FeatureMatrix draw_uniform_features(const BoxStats& stats, std::size_t n, Rng& rng);
FeatureMatrix draw_gaussian_features(const BoxStats& stats, std::size_t n, Rng& rng);

/// Symmetric square root of a PSD covariance; throws InvalidArgument when an
/// eigenvalue is below -1e-9 * max(1, largest |eigenvalue|).
Eigen::Matrix4d covariance_sqrt(const Eigen::Matrix4d& cov);

/// k boxes with features drawn independently and uniformly in [lo, hi], clipped
/// to the image. Draws whose clip is empty are redrawn.
ProposalSet sample_uniform(const BoxStats& stats, const ImageInfo& img, std::size_t k, std::uint64_t seed);

/// k boxes drawn from N(mean, cov) in feature space, clipped to the image.
ProposalSet sample_gaussian(const BoxStats& stats, const ImageInfo& img, std::size_t k, std::uint64_t seed);

/// Window side lengths from 16 px up to `extent` in sqrt(2) steps, with `extent`
/// itself as the last rung.
std::vector<double> window_ladder(int extent);

/// Deterministic regular-grid windows: the budget is spread as evenly as
/// possible over every (width, height) ladder pair, nearest-to-median sizes
/// first, and windows of one size sit on a uniform grid over the image.
/// Returns min(k, capacity) distinct boxes.
ProposalSet sliding_window(const ImageInfo& img, std::size_t k);

}  // namespace propbench
