#ifndef TOPVIEW_PIPELINE_HPP
#define TOPVIEW_PIPELINE_HPP

#include "topview/bev.hpp"
#include "topview/box3d.hpp"
#include "topview/geometry.hpp"
#include "topview/ingest.hpp"
#include "topview/vp.hpp"

#include <set>
#include <span>
#include <vector>

namespace topview {

struct ImageSize {
  double width = 0;
  double height = 0;
};

struct PipelineConfig {
  TrackerConfig tracker;
  RepairConfig repair;
  int smooth_window = 5;
  StationaryConfig stationary;
  GridParams grid;
  OrientationConfig orientation;
  Box3dConfig box;
};

struct PreparedTrack {
  Track track;
  std::vector<ImagePoint> smoothed;  // one per sample
  TrajectoryLine line;
  std::vector<bool> stationary;
};

/// VP-independent part of the pipeline: tracking, id repair, smoothing,
/// stationary flags.
struct PreparedScene {
  std::vector<PreparedTrack> tracks;
  int min_frame = 0;
  int max_frame = -1;
  std::set<ObjectClass> classes;

  bool empty() const { return max_frame < min_frame; }
};

PreparedScene prepare_scene(std::span<const Detection> detections, const PipelineConfig& config = {});

struct SceneOutput {
  PerspectiveGrid grid;
  std::vector<TokenStream> tokens;
  std::size_t samples = 0;       // states emitted
  std::size_t above_horizon = 0; // samples dropped because their anchor is not below the horizon
};

/// Grid from the VP, orientation and 3D box per sample, BEV projection of the
/// smoothed anchors, georeferencing when the calibration has a geo anchor.
SceneOutput project_scene(const PreparedScene& scene, const VanishingPoint& vp, const ImageSize& image,
                          const CalibrationParams& cal, const PipelineConfig& config = {});

/// States of every token at one frame, ordered by track id.
std::vector<BevObject> frame_objects(std::span<const TokenStream> tokens, int frame);

}  // namespace topview

#endif  // TOPVIEW_PIPELINE_HPP
