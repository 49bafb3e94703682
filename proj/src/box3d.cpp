#include "topview/box3d.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>

namespace topview {

namespace {

constexpr std::array<std::pair<Orientation, const char*>, 4> kOrientationNames{{
    {Orientation::TurningLeft, "turning_left"},
    {Orientation::TurningRight, "turning_right"},
    {Orientation::MovingStraight, "moving_straight"},
    {Orientation::SideView, "side_view"},
}};

// Crossing of segment a->b with the closed horizontal segment y = y_edge, x in [x_lo, x_hi].
std::optional<double> crossing(const ImagePoint& a, const ImagePoint& b, double y_edge, double x_lo, double x_hi) {
  const double dy = b.y - a.y;
  if (dy == 0) {
    if (a.y != y_edge) return std::nullopt;
    // Runs along the edge: take the overlap end nearest b.
    const double lo = std::max(std::min(a.x, b.x), x_lo);
    const double hi = std::min(std::max(a.x, b.x), x_hi);
    if (lo > hi) return std::nullopt;
    return std::clamp(b.x, lo, hi);
  }
  const double t = (y_edge - a.y) / dy;
  if (t < 0 || t > 1) return std::nullopt;
  const double x = a.x + t * (b.x - a.x);
  if (x < x_lo || x > x_hi) return std::nullopt;
  return x;
}

ImagePoint clamp_into(const ImagePoint& p, const BBox& b) {
  return {std::clamp(p.x, b.x1, b.x2), std::clamp(p.y, b.y1, b.y2)};
}

}  // namespace

const char* to_string(Orientation o) {
  for (const auto& [v, name] : kOrientationNames)
    if (v == o) return name;
  return "unknown";
}

std::optional<Orientation> parse_orientation(std::string_view name) {
  for (const auto& [v, n] : kOrientationNames)
    if (name == n) return v;
  return std::nullopt;
}

Orientation classify_orientation(const TrajectoryLine& trajectory, const VanishingPoint& vp, double image_w,
                                 const BBox& bbox, const OrientationConfig& config) {
  const auto& pts = trajectory.points;
  std::optional<double> q;
  if (pts.size() == 1) {
    q = crossing(pts[0], pts[0], bbox.y1, bbox.x1, bbox.x2);
  } else {
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
      if (const auto x = crossing(pts[i], pts[i + 1], bbox.y1, bbox.x1, bbox.x2)) q = x;
  }
  if (!q) return Orientation::SideView;

  const double mid = (bbox.x1 + bbox.x2) / 2.0;
  const double offset = vp.x - image_w / 2.0;
  double reference = mid;
  if (std::abs(offset) > config.tie_px)
    reference = config.offset_rule == OffsetRule::Signed ? mid - offset : mid - std::abs(offset);

  if (std::abs(*q - reference) <= config.tie_px) return Orientation::MovingStraight;
  return *q < reference ? Orientation::TurningLeft : Orientation::TurningRight;
}

Box3D build_box3d(const BBox& bbox, Orientation orientation, const VanishingPoint& vp, const Box3dConfig& config) {
  const double rho = config.depth_ratio;
  const double sigma = config.foreshortening;
  if (!(rho >= 0 && rho <= 1) || !(sigma >= 0 && sigma <= 1))
    throw Error(ErrorCode::InvalidArgument, "depth ratio and foreshortening must lie in [0, 1]");

  const double wb = bbox.width();
  const double hb = bbox.height();
  const double lift = (1.0 - sigma * rho) * hb;

  std::array<ImagePoint, 4> bottom;
  bottom[0] = {bbox.x1, bbox.y2};
  bottom[1] = {bbox.x2, bbox.y2};

  if (orientation == Orientation::SideView) {
    const double y = bbox.y2 - sigma * rho * hb;
    const double inset = rho * wb * sigma;
    bottom[2] = {bbox.x2 - inset, y};
    bottom[3] = {bbox.x1 + inset, y};
  } else {
    const Eigen::Vector2d base = bbox.bottom_center().vec();
    Eigen::Vector2d dir = vp.point().vec() - base;
    dir = dir.norm() > 0 ? Eigen::Vector2d(dir.normalized()) : Eigen::Vector2d(0, -1);
    const double skew = config.turn_skew_deg * M_PI / 180.0;
    if (orientation == Orientation::TurningLeft) dir = Eigen::Rotation2Dd(-skew) * dir;
    if (orientation == Orientation::TurningRight) dir = Eigen::Rotation2Dd(skew) * dir;
    const Eigen::Vector2d step = rho * hb * dir;
    bottom[2] = clamp_into(ImagePoint::from(bottom[1].vec() + step), bbox);
    bottom[3] = clamp_into(ImagePoint::from(bottom[0].vec() + step), bbox);
  }

  Box3D box;
  box.orientation = orientation;
  box.source_bbox = bbox;
  for (int i = 0; i < 4; ++i) {
    box.corners[i] = clamp_into(bottom[i], bbox);
    box.corners[i + 4] = clamp_into({bottom[i].x, bottom[i].y - lift}, bbox);
  }
  return box;
}

std::vector<Orientation> orient_track(const Track& track, const TrajectoryLine& trajectory,
                                      const std::vector<bool>& stationary, const VanishingPoint& vp, double image_w,
                                      const OrientationConfig& config) {
  std::vector<Orientation> out;
  out.reserve(track.samples.size());
  std::optional<Orientation> last_moving;
  for (std::size_t i = 0; i < track.samples.size(); ++i) {
    const bool still = i < stationary.size() && stationary[i];
    if (still) {
      out.push_back(last_moving.value_or(Orientation::SideView));
      continue;
    }
    const Orientation o = classify_orientation(trajectory, vp, image_w, track.samples[i].bbox, config);
    last_moving = o;
    out.push_back(o);
  }
  return out;
}

}  // namespace topview
