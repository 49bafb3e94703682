#ifndef TOPVIEW_INGEST_HPP
#define TOPVIEW_INGEST_HPP

#include "topview/core.hpp"

#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace topview {

enum class ObjectClass { Person, Car, Bus, Truck, Bicycle, Motorbike };

const char* to_string(ObjectClass cls);
std::optional<ObjectClass> parse_object_class(std::string_view name);

struct Detection {
  int frame = 0;
  double t = 0;  // seconds; derived from the frame rate when the record has none
  ObjectClass cls = ObjectClass::Person;
  BBox bbox;
  double confidence = 1.0;
  std::optional<int> track_id;
};

struct TrackSample {
  int frame = 0;
  double t = 0;
  BBox bbox;
  double confidence = 1.0;

  /// Ground-contact point: bottom-center of the box.
  ImagePoint anchor() const { return bbox.bottom_center(); }
};

struct Track {
  int id = 0;
  ObjectClass cls = ObjectClass::Person;
  std::vector<TrackSample> samples;  // frames strictly increasing

  std::vector<ImagePoint> anchors() const;
  int first_frame() const { return samples.front().frame; }
  int last_frame() const { return samples.back().frame; }
};

struct TrajectoryLine {
  std::vector<ImagePoint> points;
  int source_track = 0;
};

struct ParseOptions {
  double fps = 25.0;  // timebase for records without "t"
};

/// Newline-delimited JSON detections. Blank lines are skipped. The result is
/// stably sorted by frame. SchemaError messages name the 1-based line number.
std::vector<Detection> parse_detections(std::istream& in, const ParseOptions& options = {});
std::vector<Detection> parse_detections(std::string_view text, const ParseOptions& options = {});
std::vector<Detection> load_detections(const std::filesystem::path& path, const ParseOptions& options = {});

std::string dump_detection(const Detection& d);

struct TrackerConfig {
  double iou_min = 0.3;
  int max_age = 10;  // frames a track may go unmatched and still be extended
};

/// Groups by the given ids when every detection carries one; otherwise greedy
/// per-frame IoU matching against live tracks of the same class.
std::vector<Track> assemble_tracks(std::span<const Detection> detections, const TrackerConfig& config = {});

struct RepairConfig {
  int gap_max = 15;
  double slack = 0.5;
  double max_heading_deg = 45.0;
  int min_len = 3;
  int speed_window = 5;  // trailing samples used for terminal speed and heading
};

/// Joins fragments of one object split by occlusion, then drops short tracks.
std::vector<Track> repair_ids(std::vector<Track> tracks, const RepairConfig& config = {});

/// Centered moving average of the anchors; windows shrink symmetrically at the
/// ends. Same length as the track.
std::vector<ImagePoint> smooth_anchors(const Track& track, int window = 5);

/// Smoothed anchors with consecutive duplicates collapsed.
TrajectoryLine smooth_trajectory(const Track& track, int window = 5);

struct StationaryConfig {
  int window = 25;        // frames
  double epsilon = 0.05;  // fraction of the bbox diagonal
};

std::vector<bool> stationary_flags(const Track& track, const StationaryConfig& config = {});

}  // namespace topview

#endif  // TOPVIEW_INGEST_HPP
