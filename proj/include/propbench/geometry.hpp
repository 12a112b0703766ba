#pragma once

#include "propbench/box.hpp"

#include <Eigen/Geometry>

#include <compare>
#include <optional>
#include <string>

namespace propbench {

enum class PerturbationKind { none, scale, rotation, blur, jpeg, illumination, saltpepper };

/// One image perturbation level. `param` is the scale factor, rotation angle in
/// degrees, blur sigma in pixels, JPEG quality in percent (kJpegLossless for the
/// lossless setting), brightness in percent, or salt-and-pepper pixel count.
struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::none;
  double param = 0.0;

  static constexpr double kJpegLossless = 0.0;

  bool geometric() const { return kind == PerturbationKind::scale || kind == PerturbationKind::rotation; }
  /// "{kind}-{param}", e.g. "scale-0.5", "rotation--20", "jpeg-lossless".
  std::string name() const;
  static PerturbationSpec parse(const std::string& name);

  friend auto operator<=>(const PerturbationSpec&, const PerturbationSpec&) = default;
};

std::string to_string(PerturbationKind kind);
PerturbationKind parse_perturbation_kind(const std::string& s);

/// Throws InvalidArgument when `param` lies outside the range allowed for `kind`.
void validate(const PerturbationSpec& spec);

/// Largest centred crop with the image's aspect ratio whose corners stay inside
/// the image under any rotation |theta| <= theta_max_deg about the image centre.
BBox inscribed_crop(double width, double height, double theta_max_deg);

/// Maps a point of the perturbed frame back into the reference frame.
/// Rotation is about the frame centre with x right and y down:
///   x' = cx + (x-cx)cos(t) - (y-cy)sin(t),  y' = cy + (x-cx)sin(t) + (y-cy)cos(t)
/// A rotation perturbation of +theta applies this with t = +theta; projection
/// applies t = -theta.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> rotate_about(const Eigen::Matrix<Scalar, 2, 1>& p,
                                         const Eigen::Matrix<Scalar, 2, 1>& centre, Scalar radians) {
  return centre + Eigen::Rotation2D<Scalar>(radians) * (p - centre);
}

/// Projects a box detected in the perturbed image back into the reference frame.
///
/// scale s: coordinates divided by s. rotation theta: the perturbed image is the
/// rotated image cropped to `crop` (the reference frame is the same crop of the
/// unrotated image, rendered at the same integer size). Corners are rotated by
/// -theta about the perturbed image centre and re-boxed by their AABB; theta = 0
/// returns the box unchanged. Other kinds are geometric identities. Throws
/// InvalidArgument for rotation without crop.
BBox project_box(const BBox& b, const PerturbationSpec& spec, const ImageInfo& perturbed_img,
                 const std::optional<BBox>& crop);

}  // namespace propbench
