#ifndef TOPVIEW_ANALYTICS_HPP
#define TOPVIEW_ANALYTICS_HPP

#include "topview/bev.hpp"

#include <Eigen/Core>

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace topview {

/// Metres between calibrated BEV positions. Symmetric with a zero diagonal.
Eigen::MatrixXd pairwise_distances(std::span<const BevObject> objects, const CalibrationParams& cal);

/// Per-object calibrations; MixedCalibration unless they are all equal.
Eigen::MatrixXd pairwise_distances(std::span<const BevObject> objects, std::span<const CalibrationParams> calibrations);

struct ViolationEvent {
  int frame = 0;      // first frame of the run
  int end_frame = 0;  // last frame of the run
  double t = 0;
  std::pair<int, int> pair;  // track ids, first < second
  double distance = 0;       // minimum over the run, metres

  int duration() const { return end_frame - frame + 1; }
};

struct ViolationReport {
  std::vector<ViolationEvent> events;  // ordered by (frame, pair)
  std::size_t contacts = 0;            // violating (pair, frame) instances, before min_duration filtering
};

/// Person-person pairs closer than `threshold` metres. Each run of consecutive
/// frames collapses into one event; runs shorter than `min_duration` frames are
/// dropped.
ViolationReport detect_violations(std::span<const TokenStream> streams, const CalibrationParams& cal,
                                  double threshold = 2.0, int min_duration = 1);

/// Visit counts per class on a metric grid covering the data plus one cell of
/// padding. Row index follows depth, column index follows the lateral axis.
struct OccupancyGrid {
  double cell_size = 1.0;  // metres
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();  // metric (lateral, depth) of cell (0, 0)'s corner
  int rows = 0;
  int cols = 0;
  std::map<ObjectClass, Eigen::MatrixXi> counts;

  long long total() const;
  /// Cell containing a metric position, or (-1, -1) outside the grid.
  std::pair<int, int> cell_of(const Eigen::Vector2d& metric) const;
};

OccupancyGrid occupancy(std::span<const TokenStream> streams, const CalibrationParams& cal, double cell_size);

std::string dump_occupancy(const OccupancyGrid& grid);

struct CameraInfo {
  std::string id;
  double lat = 0;
  double lon = 0;
  double heading = 0;
};

/// CSV "camera_id,lat,lon,heading"; a header row with those names is optional.
std::map<std::string, CameraInfo> parse_camera_registry(std::string_view text);

struct CameraResult {
  std::string camera_id;
  std::size_t violations = 0;
};

struct CitySummary {
  std::vector<std::pair<CameraInfo, std::size_t>> cameras;  // input order
  std::size_t total = 0;
};

/// Joins per-camera counts to the registry; UnknownCamera for unregistered ids.
CitySummary aggregate_scenes(std::span<const CameraResult> results, const std::map<std::string, CameraInfo>& registry);

/// GeoJSON point layer with a "violations" property per camera.
std::string summary_geojson(const CitySummary& summary);

}  // namespace topview

#endif  // TOPVIEW_ANALYTICS_HPP
