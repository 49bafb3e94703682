#ifndef TOPVIEW_BOX3D_HPP
#define TOPVIEW_BOX3D_HPP

#include "topview/core.hpp"
#include "topview/ingest.hpp"
#include "topview/vp.hpp"

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace topview {

enum class Orientation { TurningLeft, TurningRight, MovingStraight, SideView };

const char* to_string(Orientation o);
std::optional<Orientation> parse_orientation(std::string_view name);

/// How the reference abscissa is formed when the VP is off the image center.
enum class OffsetRule {
  /// M - (vp_x - w/2). Mirror-consistent; agrees with the literal rule
  /// whenever vp_x >= w/2.
  Signed,
  /// M - |vp_x - w/2| on both sides of the image center.
  Literal,
};

struct OrientationConfig {
  double tie_px = 1.0;  // "approximately zero" and "equal" tolerance
  OffsetRule offset_rule = OffsetRule::Signed;
};

/// Trajectory-line orientation test against the top edge of the box.
///
/// Each trajectory segment crossing the top edge yields an intersection q; the
/// last one along the trajectory decides. With the VP horizontally centered
/// (within tie_px) q is compared against the edge midpoint M, otherwise
/// against the reference abscissa from `offset_rule`. No crossing means the
/// object is seen from the side.
Orientation classify_orientation(const TrajectoryLine& trajectory, const VanishingPoint& vp, double image_w,
                                 const BBox& bbox, const OrientationConfig& config = {});

struct Box3dConfig {
  double depth_ratio = 0.4;     // rho
  double foreshortening = 0.3;  // sigma
  double turn_skew_deg = 15.0;
};

/// Image-space 3D box. corners[0..3] is the bottom face, corners[4..7] the top
/// face directly above it. Each face starts with the two corners on the
/// bbox-bottom edge (left, right) and continues with the receding pair
/// (right, left).
struct Box3D {
  std::array<ImagePoint, 8> corners;
  Orientation orientation = Orientation::SideView;
  BBox source_bbox;
};

/// Every corner is clamped into the closed bbox as the last step.
Box3D build_box3d(const BBox& bbox, Orientation orientation, const VanishingPoint& vp, const Box3dConfig& config = {});

/// Per-sample labels for a whole track. Stationary samples keep the last label
/// produced while moving, or SideView when there was none.
std::vector<Orientation> orient_track(const Track& track, const TrajectoryLine& trajectory,
                                      const std::vector<bool>& stationary, const VanishingPoint& vp, double image_w,
                                      const OrientationConfig& config = {});

}  // namespace topview

#endif  // TOPVIEW_BOX3D_HPP
