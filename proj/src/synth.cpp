#include "topview/synth.hpp"

#include "topview/io.hpp"

#include <json.hpp>

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace topview::synth {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

double rad(double deg) { return deg * M_PI / 180.0; }

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::SchemaError, "scenario: " + what); }

double num(const json& obj, const char* key, double fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number()) bad(std::string("field '") + key + "' must be a number");
  return it->get<double>();
}

double num_required(const json& obj, const char* key) {
  if (!obj.contains(key)) bad(std::string("missing field '") + key + "'");
  return num(obj, key, 0.0);
}

Eigen::VectorXd vec(const json& v, std::size_t n, const char* what) {
  if (!v.is_array() || v.size() != n) bad(std::string(what) + " must be an array of " + std::to_string(n) + " numbers");
  Eigen::VectorXd out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!v[i].is_number()) bad(std::string(what) + " must contain numbers");
    out(i) = v[i].get<double>();
  }
  return out;
}

}  // namespace

Eigen::Matrix3d rotation_from_pose(double yaw_deg, double pitch_deg, double roll_deg) {
  // Level camera looking north: right = east, down = -up, forward = north.
  Eigen::Matrix3d base;
  base << 1, 0, 0,
          0, 0, -1,
          0, 1, 0;
  const Eigen::Matrix3d yaw = Eigen::AngleAxisd(rad(yaw_deg), Eigen::Vector3d::UnitZ()).toRotationMatrix();
  const Eigen::Matrix3d pitch = Eigen::AngleAxisd(rad(pitch_deg), Eigen::Vector3d::UnitX()).toRotationMatrix();
  const Eigen::Matrix3d roll = Eigen::AngleAxisd(rad(roll_deg), Eigen::Vector3d::UnitZ()).toRotationMatrix();
  return roll * pitch * base * yaw;
}

Eigen::Matrix3d CameraModel::intrinsics() const {
  Eigen::Matrix3d k;
  k << f * m_x, skew, c_x,
       0, f * m_y, c_y,
       0, 0, 1;
  return k;
}

Eigen::Matrix<double, 3, 4> CameraModel::projection() const {
  Eigen::Matrix<double, 3, 4> rt;
  rt << R, T;
  return intrinsics() * rt;
}

void CameraModel::validate() const {
  if (!(f * m_x > 0) || !(f * m_y > 0)) throw Error(ErrorCode::InvalidArgument, "focal scales must be positive");
  if (!(R.transpose() * R).isApprox(Eigen::Matrix3d::Identity(), 1e-9) || std::abs(R.determinant() - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidArgument, "R is not a rotation");
}

CameraModel CameraModel::from_pose(double f, double c_x, double c_y, const Eigen::Vector3d& position, double yaw_deg,
                                   double pitch_deg, double roll_deg) {
  CameraModel cam;
  cam.f = f;
  cam.c_x = c_x;
  cam.c_y = c_y;
  cam.R = rotation_from_pose(yaw_deg, pitch_deg, roll_deg);
  cam.T = -cam.R * position;
  return cam;
}

ImagePoint project_world(const CameraModel& cam, const Eigen::Vector3d& p_world) {
  const Eigen::Vector3d pc = cam.R * p_world + cam.T;
  if (!(pc.z() > Tolerances::kBehindCamera)) throw Error(ErrorCode::BehindCamera, "point is behind the camera");
  const Eigen::Vector3d uv = cam.intrinsics() * pc;
  return {uv.x() / uv.z(), uv.y() / uv.z()};
}

ImagePoint true_vp(const CameraModel& cam, const Eigen::Vector3d& direction) {
  if (direction.norm() == 0) throw Error(ErrorCode::InvalidArgument, "direction must be nonzero");
  const Eigen::Vector3d dc = cam.R * direction.normalized();
  if (std::abs(dc.z()) < 1e-12)
    throw Error(ErrorCode::DirectionAtInfinity, "direction is parallel to the image plane");
  const Eigen::Vector3d uv = cam.intrinsics() * dc;
  return {uv.x() / uv.z(), uv.y() / uv.z()};
}

void Scenario::validate() const {
  camera.validate();
  if (image_width <= 0 || image_height <= 0) bad("image size must be positive");
  if (!(fps > 0)) bad("fps must be positive");
  if (frames <= 0) bad("frames must be positive");
  if (road_axis.norm() == 0) bad("road_axis must be nonzero");
  if (noise.bbox_sigma < 0 || noise.dropout < 0 || noise.dropout > 1) bad("noise parameters out of range");
  for (const auto& a : agents) {
    if (a.waypoints.empty()) bad("agent needs at least one waypoint");
    if (!(a.speed >= 0)) bad("agent speed must be nonnegative");
    if (!(a.footprint.minCoeff() > 0)) bad("agent footprint must be positive");
  }
}

Scenario parse_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    bad(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) bad("must be a JSON object");

  Scenario s;
  if (const auto it = doc.find("image"); it != doc.end()) {
    s.image_width = static_cast<int>(num_required(*it, "width"));
    s.image_height = static_cast<int>(num_required(*it, "height"));
  }
  s.fps = num(doc, "fps", s.fps);
  s.frames = static_cast<int>(num(doc, "frames", s.frames));

  if (!doc.contains("camera") || !doc["camera"].is_object()) bad("missing object 'camera'");
  const json& c = doc["camera"];
  const Eigen::Vector3d position = c.contains("position") ? Eigen::Vector3d(vec(c["position"], 3, "camera.position"))
                                                          : Eigen::Vector3d(0, 0, 6);
  s.camera = CameraModel::from_pose(num_required(c, "f"), num(c, "c_x", s.image_width / 2.0),
                                    num(c, "c_y", s.image_height / 2.0), position, num(c, "yaw", 0),
                                    num(c, "pitch", 0), num(c, "roll", 0));
  s.camera.m_x = num(c, "m_x", 1.0);
  s.camera.m_y = num(c, "m_y", 1.0);
  s.camera.skew = num(c, "skew", 0.0);

  if (doc.contains("road_axis")) s.road_axis = vec(doc["road_axis"], 2, "road_axis");
  if (doc.contains("road_edges")) {
    const auto& e = doc["road_edges"];
    if (!e.is_array()) bad("road_edges must be an array");
    s.road_edges.clear();
    for (const auto& v : e) {
      if (!v.is_number()) bad("road_edges must contain numbers");
      s.road_edges.push_back(v.get<double>());
    }
  }

  if (doc.contains("agents")) {
    const auto& agents = doc["agents"];
    if (!agents.is_array()) bad("agents must be an array");
    for (const auto& a : agents) {
      if (!a.is_object()) bad("agent must be an object");
      AgentSpec spec;
      if (!a.contains("class") || !a["class"].is_string()) bad("agent needs a class");
      const auto cls = parse_object_class(a["class"].get<std::string>());
      if (!cls) bad("unknown agent class '" + a["class"].get<std::string>() + "'");
      spec.cls = *cls;
      if (!a.contains("waypoints") || !a["waypoints"].is_array()) bad("agent needs waypoints");
      for (const auto& w : a["waypoints"]) spec.waypoints.push_back(vec(w, 2, "waypoint"));
      spec.speed = num(a, "speed", spec.speed);
      if (a.contains("footprint")) spec.footprint = vec(a["footprint"], 3, "footprint");
      spec.start_frame = static_cast<int>(num(a, "start_frame", 0));
      if (a.contains("stops")) {
        for (const auto& st : a["stops"]) {
          const auto v = vec(st, 2, "stop");
          spec.stops.push_back({static_cast<int>(v(0)), static_cast<int>(v(1))});
        }
      }
      s.agents.push_back(std::move(spec));
    }
  }

  if (const auto it = doc.find("noise"); it != doc.end()) {
    s.noise.bbox_sigma = num(*it, "bbox_sigma", 0.0);
    s.noise.dropout = num(*it, "dropout", 0.0);
    if (it->contains("remove_ids")) {
      if (!(*it)["remove_ids"].is_boolean()) bad("noise.remove_ids must be a boolean");
      s.noise.remove_ids = (*it)["remove_ids"].get<bool>();
    }
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  try {
    return parse_scenario(text);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

AgentPose agent_pose(const AgentSpec& agent, int frame, double fps) {
  AgentPose pose;
  pose.active = frame >= agent.start_frame;
  int moving = 0;
  for (int f = agent.start_frame; f < frame; ++f) {
    const bool halted = std::any_of(agent.stops.begin(), agent.stops.end(),
                                    [f](const Stop& s) { return f >= s.frame && f < s.frame + s.duration; });
    if (!halted) ++moving;
  }
  double remaining = agent.speed / fps * moving;

  const auto& w = agent.waypoints;
  pose.position = w.front();
  pose.heading = Eigen::Vector2d(0, 1);
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    const Eigen::Vector2d seg = w[i + 1] - w[i];
    const double len = seg.norm();
    if (len == 0) continue;
    pose.heading = seg / len;
    if (remaining <= len) {
      pose.position = w[i] + pose.heading * remaining;
      return pose;
    }
    remaining -= len;
    pose.position = w[i + 1];
  }
  return pose;
}

std::optional<BBox> agent_bbox(const Scenario& s, const AgentSpec& agent, const AgentPose& pose) {
  const Eigen::Vector2d h = pose.heading;
  const Eigen::Vector2d n(h.y(), -h.x());
  const double half_l = agent.footprint.x() / 2.0;
  const double half_w = agent.footprint.y() / 2.0;
  BBox box{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (int sl : {-1, 1})
    for (int sw : {-1, 1})
      for (double z : {0.0, agent.footprint.z()}) {
        const Eigen::Vector2d g = pose.position + sl * half_l * h + sw * half_w * n;
        ImagePoint p;
        try {
          p = project_world(s.camera, {g.x(), g.y(), z});
        } catch (const Error&) {
          return std::nullopt;
        }
        box.x1 = std::min(box.x1, p.x);
        box.y1 = std::min(box.y1, p.y);
        box.x2 = std::max(box.x2, p.x);
        box.y2 = std::max(box.y2, p.y);
      }
  box.x1 = std::max(box.x1, 0.0);
  box.y1 = std::max(box.y1, 0.0);
  box.x2 = std::min(box.x2, static_cast<double>(s.image_width));
  box.y2 = std::min(box.y2, static_cast<double>(s.image_height));
  if (!box.valid()) return std::nullopt;
  return box;
}

Output emit_scenario(const Scenario& s, std::uint64_t seed) {
  s.validate();
  Output out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const Eigen::Vector2d axis = s.road_axis.normalized();
  out.vp = VanishingPoint{};
  const ImagePoint vp = true_vp(s.camera, {axis.x(), axis.y(), 0.0});
  out.vp = {vp.x, vp.y, 1.0};

  for (std::size_t a = 0; a < s.agents.size(); ++a)
    out.truth.push_back({static_cast<int>(a) + 1, s.agents[a].cls, {}});

  for (int frame = 0; frame < s.frames; ++frame) {
    for (std::size_t a = 0; a < s.agents.size(); ++a) {
      const AgentSpec& agent = s.agents[a];
      const AgentPose pose = agent_pose(agent, frame, s.fps);
      if (!pose.active) continue;
      const auto box = agent_bbox(s, agent, pose);
      out.truth[a].samples.push_back({frame, pose.position, box.has_value()});
      if (!box) continue;

      // Noise draws happen in a fixed order whether or not they are used.
      const double drop = unit(rng);
      std::array<double, 4> j{};
      for (double& v : j) v = jitter(rng);
      if (s.noise.dropout > 0 && drop < s.noise.dropout) continue;

      BBox b = *box;
      if (s.noise.bbox_sigma > 0) {
        b = {b.x1 + s.noise.bbox_sigma * j[0], b.y1 + s.noise.bbox_sigma * j[1], b.x2 + s.noise.bbox_sigma * j[2],
             b.y2 + s.noise.bbox_sigma * j[3]};
        if (b.x1 > b.x2) std::swap(b.x1, b.x2);
        if (b.y1 > b.y2) std::swap(b.y1, b.y2);
        if (b.x2 - b.x1 < 1.0) b.x2 = b.x1 + 1.0;
        if (b.y2 - b.y1 < 1.0) b.y2 = b.y1 + 1.0;
      }
      Detection d;
      d.frame = frame;
      d.t = frame / s.fps;
      d.cls = agent.cls;
      d.bbox = b;
      d.confidence = 1.0;
      if (!s.noise.remove_ids) d.track_id = static_cast<int>(a) + 1;
      out.detections.push_back(d);
    }
  }

  // Lane lines x_lateral = offset parallel to the road axis, 5 m to 80 m ahead of the camera.
  const Eigen::Vector2d lateral(axis.y(), -axis.x());
  const double along_cam = axis.dot(s.camera.center().head<2>());
  for (double offset : s.road_edges) {
    const Eigen::Vector2d g1 = lateral * offset + axis * (along_cam + 5.0);
    const Eigen::Vector2d g2 = lateral * offset + axis * (along_cam + 80.0);
    try {
      const ImagePoint p1 = project_world(s.camera, {g1.x(), g1.y(), 0.0});
      const ImagePoint p2 = project_world(s.camera, {g2.x(), g2.y(), 0.0});
      out.segments.push_back({p1, p2, 1.0});
    } catch (const Error&) {
      // lane line not in front of the camera
    }
  }
  return out;
}

std::string dump_truth(const std::vector<TruthTrack>& truth) {
  ojson agents = ojson::array();
  for (const auto& t : truth) {
    ojson samples = ojson::array();
    for (const auto& s : t.samples) {
      ojson rec;
      rec["frame"] = s.frame;
      rec["x"] = s.ground.x();
      rec["y"] = s.ground.y();
      rec["visible"] = s.visible;
      samples.push_back(std::move(rec));
    }
    ojson a;
    a["track_id"] = t.track_id;
    a["class"] = to_string(t.cls);
    a["samples"] = std::move(samples);
    agents.push_back(std::move(a));
  }
  ojson doc;
  doc["agents"] = std::move(agents);
  return doc.dump() + "\n";
}

void write_outputs(const Scenario& s, const Output& out, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string dets;
  for (const auto& d : out.detections) {
    dets += dump_detection(d);
    dets += '\n';
  }
  io::write_file(dir / "detections.ndjson", dets);
  io::write_file(dir / "vp.json", dump_vp_sidecar(out.vp));
  io::write_file(dir / "ground_truth.json", dump_truth(out.truth));
  io::write_file(dir / "segments.json", dump_segments(out.segments));
  ojson scene;
  scene["image_width"] = s.image_width;
  scene["image_height"] = s.image_height;
  scene["fps"] = s.fps;
  io::write_file(dir / "scene.json", scene.dump() + "\n");
}

}  // namespace topview::synth
