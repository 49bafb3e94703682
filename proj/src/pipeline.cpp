#include "topview/pipeline.hpp"

#include <algorithm>

namespace topview {

PreparedScene prepare_scene(std::span<const Detection> detections, const PipelineConfig& config) {
  PreparedScene scene;
  for (const auto& d : detections) {
    if (scene.empty()) {
      scene.min_frame = scene.max_frame = d.frame;
    } else {
      scene.min_frame = std::min(scene.min_frame, d.frame);
      scene.max_frame = std::max(scene.max_frame, d.frame);
    }
    scene.classes.insert(d.cls);
  }

  auto tracks = repair_ids(assemble_tracks(detections, config.tracker), config.repair);
  for (auto& t : tracks) {
    PreparedTrack p;
    p.smoothed = smooth_anchors(t, config.smooth_window);
    p.line = smooth_trajectory(t, config.smooth_window);
    p.stationary = stationary_flags(t, config.stationary);
    p.track = std::move(t);
    scene.tracks.push_back(std::move(p));
  }
  return scene;
}

SceneOutput project_scene(const PreparedScene& scene, const VanishingPoint& vp, const ImageSize& image,
                          const CalibrationParams& cal, const PipelineConfig& config) {
  cal.validate();
  SceneOutput out{build_perspective_grid(vp.point(), image.width, image.height, config.grid), {}, 0, 0};
  const bool geo = cal.has_geo_anchor();

  for (const auto& p : scene.tracks) {
    const auto labels = orient_track(p.track, p.line, p.stationary, vp, image.width, config.orientation);
    TokenStream token;
    token.track_id = p.track.id;
    token.cls = p.track.cls;
    for (std::size_t i = 0; i < p.track.samples.size(); ++i) {
      const auto& s = p.track.samples[i];
      BevObject o;
      try {
        o.position = to_bev(p.smoothed[i], out.grid, cal);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::AboveHorizon && e.code() != ErrorCode::PointAtInfinity) throw;
        ++out.above_horizon;
        continue;
      }
      o.track_id = p.track.id;
      o.cls = p.track.cls;
      o.frame = s.frame;
      o.t = s.t;
      o.stationary = p.stationary[i];
      o.orientation = labels[i];
      o.box3d = build_box3d(s.bbox, labels[i], vp, config.box).corners;
      if (geo) o.geo = georeference(o.position, cal, out.grid.bev_width);
      token.states.push_back(o);
    }
    if (token.states.empty()) continue;
    out.samples += token.states.size();
    out.tokens.push_back(std::move(token));
  }
  std::sort(out.tokens.begin(), out.tokens.end(),
            [](const TokenStream& a, const TokenStream& b) { return a.track_id < b.track_id; });
  return out;
}

std::vector<BevObject> frame_objects(std::span<const TokenStream> tokens, int frame) {
  std::vector<BevObject> out;
  for (const auto& t : tokens) {
    const auto it = std::lower_bound(t.states.begin(), t.states.end(), frame,
                                     [](const BevObject& o, int f) { return o.frame < f; });
    if (it != t.states.end() && it->frame == frame) out.push_back(*it);
  }
  std::sort(out.begin(), out.end(), [](const BevObject& a, const BevObject& b) { return a.track_id < b.track_id; });
  return out;
}

}  // namespace topview
