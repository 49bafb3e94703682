#include "topview/ingest.hpp"

#include "topview/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

namespace topview {

namespace {

using json = nlohmann::json;

constexpr std::array<std::pair<ObjectClass, const char*>, 6> kClassNames{{
    {ObjectClass::Person, "person"},
    {ObjectClass::Car, "car"},
    {ObjectClass::Bus, "bus"},
    {ObjectClass::Truck, "truck"},
    {ObjectClass::Bicycle, "bicycle"},
    {ObjectClass::Motorbike, "motorbike"},
}};

[[noreturn]] void schema_error(std::size_t line, const std::string& field, const std::string& why) {
  throw Error(ErrorCode::SchemaError, "line " + std::to_string(line) + ": field '" + field + "' " + why);
}

bool is_integral(const json& v) {
  if (v.is_number_integer()) return true;
  if (v.is_number_float()) {
    const double d = v.get<double>();
    return std::isfinite(d) && std::floor(d) == d;
  }
  return false;
}

Detection parse_record(const json& rec, std::size_t line, const ParseOptions& options) {
  if (!rec.is_object()) schema_error(line, "<record>", "must be a JSON object");
  Detection d;

  const auto frame = rec.find("frame");
  if (frame == rec.end()) schema_error(line, "frame", "is missing");
  if (!is_integral(*frame) || frame->get<double>() < 0) schema_error(line, "frame", "must be a nonnegative integer");
  d.frame = static_cast<int>(frame->get<double>());

  const auto cls = rec.find("class");
  if (cls == rec.end()) schema_error(line, "class", "is missing");
  if (!cls->is_string()) schema_error(line, "class", "must be a string");
  const auto parsed = parse_object_class(cls->get<std::string>());
  if (!parsed) schema_error(line, "class", "has unknown value '" + cls->get<std::string>() + "'");
  d.cls = *parsed;

  const auto bbox = rec.find("bbox");
  if (bbox == rec.end()) schema_error(line, "bbox", "is missing");
  if (!bbox->is_array() || bbox->size() != 4) schema_error(line, "bbox", "must be [x1, y1, x2, y2]");
  std::array<double, 4> b{};
  for (int i = 0; i < 4; ++i) {
    if (!(*bbox)[i].is_number()) schema_error(line, "bbox", "must contain numbers");
    b[i] = (*bbox)[i].get<double>();
    if (!std::isfinite(b[i])) schema_error(line, "bbox", "must be finite");
  }
  d.bbox = {b[0], b[1], b[2], b[3]};
  if (!(d.bbox.x1 < d.bbox.x2)) schema_error(line, "bbox", "requires x1 < x2");
  if (!(d.bbox.y1 < d.bbox.y2)) schema_error(line, "bbox", "requires y1 < y2");

  const auto conf = rec.find("confidence");
  if (conf == rec.end()) schema_error(line, "confidence", "is missing");
  if (!conf->is_number()) schema_error(line, "confidence", "must be a number");
  d.confidence = conf->get<double>();
  if (!(d.confidence >= 0 && d.confidence <= 1)) schema_error(line, "confidence", "must lie in [0, 1]");

  if (const auto id = rec.find("track_id"); id != rec.end() && !id->is_null()) {
    if (!is_integral(*id)) schema_error(line, "track_id", "must be an integer");
    d.track_id = static_cast<int>(id->get<double>());
  }

  if (const auto t = rec.find("t"); t != rec.end() && !t->is_null()) {
    if (!t->is_number() || !std::isfinite(t->get<double>())) schema_error(line, "t", "must be a finite number");
    d.t = t->get<double>();
  } else {
    d.t = d.frame / options.fps;
  }
  return d;
}

// Trailing (or leading) displacement over at most `k` samples, per frame.
Eigen::Vector2d velocity(const std::vector<TrackSample>& s, int k, bool terminal) {
  const int n = static_cast<int>(s.size());
  if (n < 2) return Eigen::Vector2d::Zero();
  const int m = std::min(k, n);
  const TrackSample& a = terminal ? s[n - m] : s[0];
  const TrackSample& b = terminal ? s[n - 1] : s[m - 1];
  const int df = b.frame - a.frame;
  if (df <= 0) return Eigen::Vector2d::Zero();
  return (b.anchor().vec() - a.anchor().vec()) / df;
}

double angle_between(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const double c = a.dot(b) / (a.norm() * b.norm());
  return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / M_PI;
}

bool can_join(const Track& a, const Track& b, const RepairConfig& cfg, double& distance) {
  if (a.cls != b.cls) return false;
  const int gap = b.first_frame() - a.last_frame();
  if (gap < 1 || gap > cfg.gap_max) return false;
  const Eigen::Vector2d va = velocity(a.samples, cfg.speed_window, true);
  const Eigen::Vector2d jump = b.samples.front().anchor().vec() - a.samples.back().anchor().vec();
  distance = jump.norm();
  if (distance > va.norm() * gap * (1.0 + cfg.slack)) return false;
  Eigen::Vector2d vb = velocity(b.samples, cfg.speed_window, false);
  if (vb.isZero()) vb = jump;
  if (va.isZero() || vb.isZero()) return true;
  return angle_between(va, vb) <= cfg.max_heading_deg;
}

}  // namespace

const char* to_string(ObjectClass cls) {
  for (const auto& [c, name] : kClassNames)
    if (c == cls) return name;
  return "unknown";
}

std::optional<ObjectClass> parse_object_class(std::string_view name) {
  for (const auto& [c, n] : kClassNames)
    if (name == n) return c;
  return std::nullopt;
}

std::vector<ImagePoint> Track::anchors() const {
  std::vector<ImagePoint> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.anchor());
  return out;
}

std::vector<Detection> parse_detections(std::istream& in, const ParseOptions& options) {
  if (!(options.fps > 0)) throw Error(ErrorCode::InvalidArgument, "fps must be positive");
  std::vector<Detection> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::SchemaError, "line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    out.push_back(parse_record(rec, line_no, options));
  }
  if (out.empty()) throw Error(ErrorCode::EmptyInput, "no detection records");
  std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) { return a.frame < b.frame; });
  return out;
}

std::vector<Detection> parse_detections(std::string_view text, const ParseOptions& options) {
  std::istringstream in{std::string(text)};
  return parse_detections(in, options);
}

std::vector<Detection> load_detections(const std::filesystem::path& path, const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  try {
    return parse_detections(in, options);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string dump_detection(const Detection& d) {
  nlohmann::ordered_json rec;
  rec["frame"] = d.frame;
  rec["t"] = d.t;
  rec["class"] = to_string(d.cls);
  rec["bbox"] = {d.bbox.x1, d.bbox.y1, d.bbox.x2, d.bbox.y2};
  rec["confidence"] = d.confidence;
  if (d.track_id) rec["track_id"] = *d.track_id;
  return rec.dump();
}

std::vector<Track> assemble_tracks(std::span<const Detection> detections, const TrackerConfig& config) {
  std::vector<Track> tracks;
  if (detections.empty()) return tracks;

  const bool pass_through =
      std::all_of(detections.begin(), detections.end(), [](const Detection& d) { return d.track_id.has_value(); });

  if (pass_through) {
    // Class is the most frequent one seen for the id; first seen wins ties.
    std::map<int, Track> by_id;
    std::map<int, std::vector<std::pair<ObjectClass, int>>> votes;
    for (const auto& d : detections) {
      Track& t = by_id[*d.track_id];
      t.id = *d.track_id;
      if (!t.samples.empty() && t.samples.back().frame == d.frame) {
        if (d.confidence > t.samples.back().confidence) t.samples.back() = {d.frame, d.t, d.bbox, d.confidence};
        continue;
      }
      t.samples.push_back({d.frame, d.t, d.bbox, d.confidence});
      auto& v = votes[t.id];
      auto it = std::find_if(v.begin(), v.end(), [&](const auto& p) { return p.first == d.cls; });
      if (it == v.end()) v.emplace_back(d.cls, 1);
      else ++it->second;
    }
    for (auto& [id, t] : by_id) {
      const auto& v = votes[id];
      t.cls = std::max_element(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second < b.second; })->first;
      tracks.push_back(std::move(t));
    }
    return tracks;
  }

  std::vector<std::size_t> live;  // indices into tracks
  std::size_t i = 0;
  while (i < detections.size()) {
    const int frame = detections[i].frame;
    std::size_t end = i;
    while (end < detections.size() && detections[end].frame == frame) ++end;

    std::erase_if(live, [&](std::size_t k) { return frame - tracks[k].last_frame() - 1 > config.max_age; });

    struct Candidate {
      double iou;
      std::size_t track;
      std::size_t det;
    };
    std::vector<Candidate> cands;
    for (std::size_t k : live)
      for (std::size_t d = i; d < end; ++d) {
        if (tracks[k].cls != detections[d].cls) continue;
        const double o = iou(tracks[k].samples.back().bbox, detections[d].bbox);
        if (o >= config.iou_min) cands.push_back({o, k, d});
      }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      return std::tie(b.iou, a.track, a.det) < std::tie(a.iou, b.track, b.det);
    });

    std::vector<bool> det_used(end - i, false);
    std::vector<std::size_t> matched_tracks;
    for (const auto& c : cands) {
      if (det_used[c.det - i]) continue;
      if (std::find(matched_tracks.begin(), matched_tracks.end(), c.track) != matched_tracks.end()) continue;
      det_used[c.det - i] = true;
      matched_tracks.push_back(c.track);
      const auto& d = detections[c.det];
      tracks[c.track].samples.push_back({d.frame, d.t, d.bbox, d.confidence});
    }
    for (std::size_t d = i; d < end; ++d) {
      if (det_used[d - i]) continue;
      const auto& det = detections[d];
      Track t;
      t.id = static_cast<int>(tracks.size()) + 1;
      t.cls = det.cls;
      t.samples.push_back({det.frame, det.t, det.bbox, det.confidence});
      tracks.push_back(std::move(t));
      live.push_back(tracks.size() - 1);
    }
    i = end;
  }
  return tracks;
}

std::vector<Track> repair_ids(std::vector<Track> tracks, const RepairConfig& config) {
  std::erase_if(tracks, [](const Track& t) { return t.samples.empty(); });
  bool merged = true;
  while (merged) {
    merged = false;
    std::sort(tracks.begin(), tracks.end(), [](const Track& a, const Track& b) {
      return std::tie(a.samples.back().frame, a.id) < std::tie(b.samples.back().frame, b.id);
    });
    for (std::size_t a = 0; a < tracks.size() && !merged; ++a) {
      std::optional<std::size_t> best;
      std::tuple<int, double, int> best_key{};
      for (std::size_t b = 0; b < tracks.size(); ++b) {
        if (a == b) continue;
        double dist = 0;
        if (!can_join(tracks[a], tracks[b], config, dist)) continue;
        const std::tuple<int, double, int> key{tracks[b].first_frame(), dist, tracks[b].id};
        if (!best || key < best_key) {
          best = b;
          best_key = key;
        }
      }
      if (!best) continue;
      auto& dst = tracks[a].samples;
      auto& src = tracks[*best].samples;
      dst.insert(dst.end(), src.begin(), src.end());
      tracks.erase(tracks.begin() + static_cast<std::ptrdiff_t>(*best));
      merged = true;
    }
  }
  std::erase_if(tracks, [&](const Track& t) { return static_cast<int>(t.samples.size()) < config.min_len; });
  std::sort(tracks.begin(), tracks.end(), [](const Track& a, const Track& b) { return a.id < b.id; });
  return tracks;
}

std::vector<ImagePoint> smooth_anchors(const Track& track, int window) {
  if (window < 1 || window % 2 == 0) throw Error(ErrorCode::InvalidArgument, "smoothing window must be a positive odd number");
  const auto anchors = track.anchors();
  const int n = static_cast<int>(anchors.size());
  const int half = window / 2;
  std::vector<ImagePoint> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int h = std::min({half, i, n - 1 - i});
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    for (int j = i - h; j <= i + h; ++j) sum += anchors[j].vec();
    out.push_back(ImagePoint::from(sum / (2 * h + 1)));
  }
  return out;
}

TrajectoryLine smooth_trajectory(const Track& track, int window) {
  TrajectoryLine line;
  line.source_track = track.id;
  for (const auto& p : smooth_anchors(track, window)) {
    if (!line.points.empty() && (line.points.back().vec() - p.vec()).norm() <= 1e-9) continue;
    line.points.push_back(p);
  }
  return line;
}

std::vector<bool> stationary_flags(const Track& track, const StationaryConfig& config) {
  if (config.window < 1 || !(config.epsilon > 0))
    throw Error(ErrorCode::InvalidArgument, "stationary window and epsilon must be positive");
  const auto& s = track.samples;
  const int n = static_cast<int>(s.size());
  std::vector<bool> flags(n, false);
  const int first = n > 0 ? s.front().frame : 0;
  for (int i = 0; i < n; ++i) {
    // Warm-up: until a full window of history exists, use the track's first window.
    int lo = s[i].frame - config.window + 1;
    int hi = s[i].frame;
    if (lo < first) {
      lo = first;
      hi = std::max(hi, first + config.window - 1);
    }
    double diameter = 0;
    for (int a = 0; a < n; ++a) {
      if (s[a].frame < lo || s[a].frame > hi) continue;
      for (int b = a + 1; b < n && s[b].frame <= hi; ++b)
        diameter = std::max(diameter, (s[a].anchor().vec() - s[b].anchor().vec()).norm());
    }
    flags[i] = diameter < config.epsilon * s[i].bbox.diagonal();
  }
  return flags;
}

}  // namespace topview
