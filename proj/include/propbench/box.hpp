#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace propbench {

/// Axis-aligned rectangle in continuous, 0-indexed pixel coordinates.
/// (x, y) is the top-left corner; area is w*h with no "+1" convention.
template <typename Scalar>
struct Box {
  Scalar x{0};
  Scalar y{0};
  Scalar w{0};
  Scalar h{0};

  Scalar right() const { return x + w; }
  Scalar bottom() const { return y + h; }
  Scalar area() const { return w * h; }
  Eigen::Matrix<Scalar, 2, 1> centre() const {
    return {x + w / Scalar(2), y + h / Scalar(2)};
  }

  bool valid() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) &&
           w > Scalar(0) && h > Scalar(0);
  }

  template <typename Other>
  Box<Other> cast() const {
    return {Other(x), Other(y), Other(w), Other(h)};
  }

  friend bool operator==(const Box&, const Box&) = default;
};

using BBox = Box<double>;

struct ImageInfo {
  std::string id;
  int width = 0;
  int height = 0;
  std::optional<std::string> raster_path;

  friend bool operator==(const ImageInfo&, const ImageInfo&) = default;
};

struct Annotation {
  std::string image_id;
  std::string class_label;
  BBox box;
  bool difficult = false;
  bool crowd = false;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

/// A proposal. `oracle` marks ground truth injected by augment_with_gt;
/// such items outrank every scored item and carry no score.
struct ScoredBox {
  BBox box;
  std::optional<double> score;
  bool oracle = false;

  friend bool operator==(const ScoredBox&, const ScoredBox&) = default;
};

struct ProposalSet {
  std::string image_id;
  std::vector<ScoredBox> items;
  bool ordering_meaningful = false;

  bool scored() const;
  std::vector<BBox> boxes() const;

  friend bool operator==(const ProposalSet&, const ProposalSet&) = default;
};

/// Throws InvalidArgument when scores are mixed, non-finite, or increase
/// along a set whose ordering is declared meaningful.
void validate(const ProposalSet& ps);

/// Intersection over union. Identical rectangles give exactly 1.
template <typename Scalar>
Scalar iou(const Box<Scalar>& a, const Box<Scalar>& b) {
  if (a == b) return Scalar(1);
  const Scalar ax1 = a.right(), ay1 = a.bottom();
  const Scalar bx1 = b.right(), by1 = b.bottom();
  const Scalar iw = std::min(ax1, bx1) - std::max(a.x, b.x);
  const Scalar ih = std::min(ay1, by1) - std::max(a.y, b.y);
  if (iw <= Scalar(0) || ih <= Scalar(0)) return Scalar(0);
  const Scalar inter = iw * ih;
  const Scalar uni = (ax1 - a.x) * (ay1 - a.y) + (bx1 - b.x) * (by1 - b.y) - inter;
  return std::clamp(inter / uni, Scalar(0), Scalar(1));
}

/// Intersection with [0,width]x[0,height]; empty if nothing remains.
template <typename Scalar>
std::optional<Box<Scalar>> clip_to_image(const Box<Scalar>& b, const ImageInfo& img) {
  const Scalar W(img.width), H(img.height);
  if (b.x >= Scalar(0) && b.y >= Scalar(0) && b.right() <= W && b.bottom() <= H) return b;
  const Scalar x0 = std::max(b.x, Scalar(0));
  const Scalar y0 = std::max(b.y, Scalar(0));
  const Scalar x1 = std::min(b.right(), W);
  const Scalar y1 = std::min(b.bottom(), H);
  if (!(x1 > x0) || !(y1 > y0)) return std::nullopt;
  return Box<Scalar>{x0, y0, x1 - x0, y1 - y0};
}

/// (centre x, centre y, sqrt(area), log aspect w/h).
template <typename Scalar>
using BoxFeatures = Eigen::Matrix<Scalar, 4, 1>;

template <typename Scalar>
BoxFeatures<Scalar> box_features(const Box<Scalar>& b) {
  using std::log;
  using std::sqrt;
  return {b.x + b.w / Scalar(2), b.y + b.h / Scalar(2), sqrt(b.w * b.h), log(b.w / b.h)};
}

/// Inverse of box_features: w = s*exp(a/2), h = s*exp(-a/2).
template <typename Scalar>
Box<Scalar> box_from_features(const BoxFeatures<Scalar>& f) {
  using std::exp;
  const Scalar w = f[2] * exp(f[3] / Scalar(2));
  const Scalar h = f[2] * exp(-f[3] / Scalar(2));
  return {f[0] - w / Scalar(2), f[1] - h / Scalar(2), w, h};
}

}  // namespace propbench
