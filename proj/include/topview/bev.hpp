#ifndef TOPVIEW_BEV_HPP
#define TOPVIEW_BEV_HPP

#include "topview/box3d.hpp"
#include "topview/core.hpp"
#include "topview/geometry.hpp"
#include "topview/ingest.hpp"

#include <Eigen/Core>

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace topview {

/// Manual calibration of the BEV map plus the geo anchor of the camera.
struct CalibrationParams {
  double z_value = 1.0;          // depth-scale multiplier
  double x_value = 0.0;          // lateral offset, BEV units
  double meters_per_unit = 1.0;
  std::optional<double> camera_lat;
  std::optional<double> camera_lon;
  double heading = 0.0;          // degrees clockwise from north of the BEV +v axis

  bool has_geo_anchor() const { return camera_lat.has_value() && camera_lon.has_value(); }

  /// Throws InvalidArgument naming the offending field.
  void validate() const;

  friend bool operator==(const CalibrationParams&, const CalibrationParams&) = default;
};

CalibrationParams parse_calibration(std::string_view text);
CalibrationParams load_calibration(const std::filesystem::path& path);
std::string dump_calibration(const CalibrationParams& cal);

struct GeoPoint {
  double lat = 0;
  double lon = 0;
};

struct BevObject {
  int track_id = 0;
  ObjectClass cls = ObjectClass::Person;
  BevPoint position;  // calibrated
  std::optional<GeoPoint> geo;
  bool stationary = false;
  Orientation orientation = Orientation::SideView;
  int frame = 0;
  double t = 0;
  std::array<ImagePoint, 8> box3d{};  // image space
};

/// One road user's states over the video interval, frames strictly increasing.
struct TokenStream {
  int track_id = 0;
  ObjectClass cls = ObjectClass::Person;
  std::vector<BevObject> states;
};

/// (u, v) -> (u + x_value, v * z_value).
BevPoint apply_calibration(const BevPoint& raw, const CalibrationParams& cal);

/// Projects a ground-contact point through the grid homography and calibrates
/// it. AboveHorizon unless the point lies more than 1 px below the VP row.
BevPoint to_bev(const ImagePoint& anchor, const PerspectiveGrid& grid, const CalibrationParams& cal);

/// Local tangent-plane (equirectangular) placement around the camera.
GeoPoint georeference(const BevPoint& p, const CalibrationParams& cal, double bev_width);
BevPoint inverse_georeference(const GeoPoint& g, const CalibrationParams& cal, double bev_width);

/// A BEV position (uncalibrated) with its known metric ground position in any
/// local planar frame.
struct GroundReference {
  BevPoint bev;
  Eigen::Vector2d ground;  // metres
};

/// Fits meters_per_unit (and z_value when three or more references constrain
/// it) from pairwise distances, which do not depend on the reference frame's
/// rotation or origin. Returns a copy of `cal` with the fitted values.
CalibrationParams fit_calibration_scale(std::span<const GroundReference> refs, const CalibrationParams& cal);

enum class GeoJsonMode { Points, LineStrings };

/// RFC 7946 FeatureCollection. Every state must carry a geo position.
std::string export_geojson(std::span<const TokenStream> streams, GeoJsonMode mode);

/// Newline-delimited token records ordered by (track_id, frame).
std::string export_tokens(std::span<const TokenStream> streams);

/// Token records for a single frame as a JSON array.
std::string export_frame(std::span<const BevObject> objects);

std::vector<TokenStream> parse_tokens(std::string_view text);
std::vector<TokenStream> load_tokens(const std::filesystem::path& path);

}  // namespace topview

#endif  // TOPVIEW_BEV_HPP
