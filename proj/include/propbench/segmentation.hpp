#pragma once

#include "propbench/box.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace propbench {

/// 8-bit raster, row-major, channels interleaved.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> samples;

  std::uint8_t at(int x, int y, int c = 0) const {
    return samples[(std::size_t(y) * width + x) * channels + c];
  }
  void validate() const;
};

/// Graph-segmentation parameters: merge constant k, Gaussian pre-smoothing
/// sigma (0 disables it), and minimum region size enforced after merging.
struct SegParams {
  double scale_k = 300.0;
  double presmooth_sigma = 0.8;
  int min_size = 20;
};

/// Per-pixel region id, rows = image height.
using LabelMap = Eigen::Array<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Reads binary PGM (P5) or PPM (P6) with maxval 255.
Raster read_pnm(const std::filesystem::path& path);
void write_pnm(const Raster& raster, const std::filesystem::path& path);

/// Separable Gaussian smoothing per channel with edge clamping; returns
/// width*height*channels floats in the raster's layout.
std::vector<float> smooth(const Raster& raster, double sigma);

/// Graph-based segmentation on the 8-connected pixel grid. Edge weight is the
/// Euclidean colour distance of the smoothed image. Edges are visited in
/// ascending weight (ties in generation order) and two regions merge when
///   w <= min(Int(C1) + k/|C1|, Int(C2) + k/|C2|)
/// with Int(C) the largest merged edge inside C. Regions below min_size are
/// then merged along the remaining edges in the same order. Region ids are
/// contiguous from 0 in raster order of first appearance.
LabelMap felzenszwalb_segment(const Raster& raster, const SegParams& params = {});

std::size_t region_count(const LabelMap& labels);

/// Tight bounding box of each region's pixels, in region-id order, unscored.
ProposalSet superpixel_proposals(const LabelMap& labels, const std::string& image_id = {});

}  // namespace propbench
