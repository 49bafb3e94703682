#ifndef TOPVIEW_SYNTH_HPP
#define TOPVIEW_SYNTH_HPP

#include "topview/core.hpp"
#include "topview/ingest.hpp"
#include "topview/vp.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace topview::synth {

/// Rotation taking world vectors (x east, y north, z up) into the camera frame
/// (x right, y down, z forward). yaw is the viewing heading clockwise from
/// north, pitch tilts the view down, roll turns about the optical axis.
/// Angles in degrees.
Eigen::Matrix3d rotation_from_pose(double yaw_deg, double pitch_deg, double roll_deg);

/// Pinhole camera z_c (u, v, 1)^T = K [R T] (x_w, y_w, z_w, 1)^T.
struct CameraModel {
  double f = 1000.0;
  double m_x = 1.0;
  double m_y = 1.0;
  double skew = 0.0;
  double c_x = 0.0;
  double c_y = 0.0;
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d T = Eigen::Vector3d::Zero();

  Eigen::Matrix3d intrinsics() const;
  Eigen::Matrix<double, 3, 4> projection() const;
  Eigen::Vector3d center() const { return -R.transpose() * T; }

  /// Throws InvalidArgument unless R is a rotation and the focal scales are positive.
  void validate() const;

  static CameraModel from_pose(double f, double c_x, double c_y, const Eigen::Vector3d& position, double yaw_deg,
                               double pitch_deg, double roll_deg);
};

/// BehindCamera when the camera-frame depth is not above 1e-9.
ImagePoint project_world(const CameraModel& cam, const Eigen::Vector3d& p_world);

/// Image of the point at infinity in world direction `direction`.
ImagePoint true_vp(const CameraModel& cam, const Eigen::Vector3d& direction);

struct Stop {
  int frame = 0;     // absolute frame at which the agent halts
  int duration = 0;  // frames
};

struct AgentSpec {
  ObjectClass cls = ObjectClass::Person;
  std::vector<Eigen::Vector2d> waypoints;  // ground plane, metres
  double speed = 1.4;                      // m/s while moving
  Eigen::Vector3d footprint{0.5, 0.5, 1.7};  // length along heading, width, height
  int start_frame = 0;
  std::vector<Stop> stops;
};

struct NoiseSpec {
  double bbox_sigma = 0.0;  // px, per coordinate
  double dropout = 0.0;     // per-detection probability
  bool remove_ids = false;
};

struct Scenario {
  CameraModel camera;
  int image_width = 1280;
  int image_height = 720;
  double fps = 25.0;
  int frames = 100;
  Eigen::Vector2d road_axis{0.0, 1.0};
  std::vector<double> road_edges{-6.0, -3.0, 3.0, 6.0};  // lateral offsets of lane lines, metres
  std::vector<AgentSpec> agents;
  NoiseSpec noise;

  void validate() const;
};

Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

struct AgentPose {
  Eigen::Vector2d position;
  Eigen::Vector2d heading;  // unit
  bool active = false;      // false before start_frame
};

AgentPose agent_pose(const AgentSpec& agent, int frame, double fps);

/// Image bounding box of the agent's world box: hull of the 8 projected
/// corners clipped to the image. Empty when not visible.
std::optional<BBox> agent_bbox(const Scenario& s, const AgentSpec& agent, const AgentPose& pose);

struct TruthSample {
  int frame = 0;
  Eigen::Vector2d ground;  // footprint center, metres
  bool visible = false;
};

struct TruthTrack {
  int track_id = 0;
  ObjectClass cls = ObjectClass::Person;
  std::vector<TruthSample> samples;
};

struct Output {
  std::vector<Detection> detections;
  VanishingPoint vp;
  std::vector<TruthTrack> truth;
  std::vector<LineSegment> segments;
};

/// Noise is drawn from a generator seeded with `seed`; ground truth does not
/// depend on it.
Output emit_scenario(const Scenario& s, std::uint64_t seed = 0);

/// detections.ndjson, vp.json, ground_truth.json, segments.json, scene.json.
void write_outputs(const Scenario& s, const Output& out, const std::filesystem::path& dir);

std::string dump_truth(const std::vector<TruthTrack>& truth);

}  // namespace topview::synth

#endif  // TOPVIEW_SYNTH_HPP
