#include "propbench/geometry.hpp"

#include "propbench/error.hpp"

#include <Eigen/Geometry>

#include <charconv>
#include <cmath>
#include <numbers>

namespace propbench {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::string format_shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string to_string(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::none: return "none";
    case PerturbationKind::scale: return "scale";
    case PerturbationKind::rotation: return "rotation";
    case PerturbationKind::blur: return "blur";
    case PerturbationKind::jpeg: return "jpeg";
    case PerturbationKind::illumination: return "illumination";
    case PerturbationKind::saltpepper: return "saltpepper";
  }
  return "none";
}

PerturbationKind parse_perturbation_kind(const std::string& s) {
  for (auto k : {PerturbationKind::none, PerturbationKind::scale, PerturbationKind::rotation,
                 PerturbationKind::blur, PerturbationKind::jpeg, PerturbationKind::illumination,
                 PerturbationKind::saltpepper}) {
    if (to_string(k) == s) return k;
  }
  throw InvalidArgument("unknown perturbation kind '" + s + "'");
}

std::string PerturbationSpec::name() const {
  if (kind == PerturbationKind::jpeg && param == kJpegLossless) return "jpeg-lossless";
  return to_string(kind) + "-" + format_shortest(param);
}

PerturbationSpec PerturbationSpec::parse(const std::string& name) {
  const auto dash = name.find('-');
  if (dash == std::string::npos) throw InvalidArgument("malformed perturbation name '" + name + "'");
  PerturbationSpec spec;
  spec.kind = parse_perturbation_kind(name.substr(0, dash));
  const std::string rest = name.substr(dash + 1);
  if (spec.kind == PerturbationKind::jpeg && rest == "lossless") {
    spec.param = kJpegLossless;
  } else {
    const char* first = rest.data();
    const char* last = rest.data() + rest.size();
    auto res = std::from_chars(first, last, spec.param);
    if (res.ec != std::errc() || res.ptr != last)
      throw InvalidArgument("malformed perturbation parameter in '" + name + "'");
  }
  validate(spec);
  return spec;
}

void validate(const PerturbationSpec& spec) {
  const double p = spec.param;
  auto fail = [&](const char* range) {
    throw InvalidArgument(to_string(spec.kind) + " parameter " + format_shortest(p) + " outside " + range);
  };
  if (!std::isfinite(p)) fail("finite values");
  switch (spec.kind) {
    case PerturbationKind::none:
      if (p != 0.0) fail("{0}");
      break;
    case PerturbationKind::scale:
      if (!(p > 0.0)) fail("(0, inf)");
      break;
    case PerturbationKind::rotation:
      if (p < -20.0 || p > 20.0) fail("[-20, 20]");
      break;
    case PerturbationKind::blur:
      if (p < 0.0 || p > 8.0) fail("[0, 8]");
      break;
    case PerturbationKind::jpeg:
      if (p != PerturbationSpec::kJpegLossless && (p < 5.0 || p > 100.0)) fail("[5, 100] or lossless");
      break;
    case PerturbationKind::illumination:
      if (p < 50.0 || p > 150.0) fail("[50, 150]");
      break;
    case PerturbationKind::saltpepper:
      if (p < 1.0 || p > 1000.0 || std::floor(p) != p) fail("integers in [1, 1000]");
      break;
  }
}

BBox inscribed_crop(double width, double height, double theta_max_deg) {
  if (!(width >= 1.0) || !(height >= 1.0))
    throw InvalidArgument("inscribed_crop: image dimensions must be >= 1");
  const double theta = std::abs(theta_max_deg);
  if (!(theta < 90.0)) throw InvalidArgument("inscribed_crop: theta_max must lie in [0, 90)");
  if (theta == 0.0) return {0.0, 0.0, width, height};
  const double c = std::cos(theta * kDegToRad);
  const double s = std::sin(theta * kDegToRad);
  // Corner (a*W/2, a*H/2) rotated by +-theta must satisfy |x| <= W/2 and |y| <= H/2.
  const double a = std::min({1.0, width / (width * c + height * s), height / (width * s + height * c)});
  const double cw = a * width;
  const double ch = a * height;
  return {(width - cw) / 2.0, (height - ch) / 2.0, cw, ch};
}

BBox project_box(const BBox& b, const PerturbationSpec& spec, const ImageInfo& perturbed_img,
                 const std::optional<BBox>& crop) {
  switch (spec.kind) {
    case PerturbationKind::scale: {
      const double s = spec.param;
      return {b.x / s, b.y / s, b.w / s, b.h / s};
    }
    case PerturbationKind::rotation: {
      if (!crop) throw InvalidArgument("project_box: rotation requires the crop rectangle");
      if (spec.param == 0.0) return b;
      // Both frames are the crop rendered at the perturbed image's integer size.
      const Eigen::Vector2d centre(perturbed_img.width / 2.0, perturbed_img.height / 2.0);
      const Eigen::Rotation2Dd rot(-spec.param * kDegToRad);
      Eigen::Matrix<double, 2, 4> corners;
      corners << b.x, b.right(), b.right(), b.x,
                 b.y, b.y, b.bottom(), b.bottom();
      const Eigen::Matrix<double, 2, 4> mapped =
          (rot.toRotationMatrix() * (corners.colwise() - centre)).colwise() + centre;
      const Eigen::Vector2d lo = mapped.rowwise().minCoeff();
      const Eigen::Vector2d hi = mapped.rowwise().maxCoeff();
      return {lo.x(), lo.y(), hi.x() - lo.x(), hi.y() - lo.y()};
    }
    default:
      return b;
  }
}

}  // namespace propbench
