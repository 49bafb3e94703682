#include "topview/bev.hpp"

#include "topview/io.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace topview {

namespace {

using ojson = nlohmann::ordered_json;
using json = nlohmann::json;

constexpr double kMetersPerDegree = 111320.0;

double deg2rad(double d) { return d * M_PI / 180.0; }

std::optional<double> optional_number(const json& doc, const char* key) {
  const auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw Error(ErrorCode::ParseError, std::string("calibration field ") + key + " is not a number");
  return it->get<double>();
}

ojson token_record(const BevObject& o) {
  ojson rec;
  rec["track_id"] = o.track_id;
  rec["frame"] = o.frame;
  rec["t"] = o.t;
  rec["class"] = to_string(o.cls);
  rec["u"] = o.position.u;
  rec["v"] = o.position.v;
  if (o.geo) {
    rec["lat"] = o.geo->lat;
    rec["lon"] = o.geo->lon;
  }
  rec["stationary"] = o.stationary;
  rec["orientation"] = to_string(o.orientation);
  ojson corners = ojson::array();
  for (const auto& c : o.box3d) corners.push_back({c.x, c.y});
  rec["box3d"] = std::move(corners);
  return rec;
}

const GeoPoint& require_geo(const BevObject& o) {
  if (!o.geo)
    throw Error(ErrorCode::MissingGeoAnchor,
                "track " + std::to_string(o.track_id) + " frame " + std::to_string(o.frame) + " has no geo position");
  return *o.geo;
}

[[noreturn]] void token_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::SchemaError, "line " + std::to_string(line) + ": " + what);
}

double token_number(const json& rec, const char* key, std::size_t line) {
  const auto it = rec.find(key);
  if (it == rec.end() || !it->is_number()) token_error(line, std::string("field '") + key + "' must be a number");
  return it->get<double>();
}

}  // namespace

void CalibrationParams::validate() const {
  if (!(z_value > 0) || !std::isfinite(z_value)) throw Error(ErrorCode::InvalidArgument, "z_value must be positive");
  if (!std::isfinite(x_value)) throw Error(ErrorCode::InvalidArgument, "x_value must be finite");
  if (!(meters_per_unit > 0) || !std::isfinite(meters_per_unit))
    throw Error(ErrorCode::InvalidArgument, "meters_per_unit must be positive");
  if (camera_lat && !(*camera_lat >= -90 && *camera_lat <= 90))
    throw Error(ErrorCode::InvalidArgument, "camera_lat must lie in [-90, 90]");
  if (camera_lon && !(*camera_lon >= -180 && *camera_lon <= 180))
    throw Error(ErrorCode::InvalidArgument, "camera_lon must lie in [-180, 180]");
  if (camera_lat.has_value() != camera_lon.has_value())
    throw Error(ErrorCode::InvalidArgument, "camera_lat and camera_lon must be given together");
  if (!(heading >= 0 && heading < 360)) throw Error(ErrorCode::InvalidArgument, "heading must lie in [0, 360)");
}

CalibrationParams parse_calibration(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("invalid calibration JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, "calibration must be a JSON object");
  CalibrationParams cal;
  if (auto v = optional_number(doc, "z_value")) cal.z_value = *v;
  if (auto v = optional_number(doc, "x_value")) cal.x_value = *v;
  if (auto v = optional_number(doc, "meters_per_unit")) cal.meters_per_unit = *v;
  cal.camera_lat = optional_number(doc, "camera_lat");
  cal.camera_lon = optional_number(doc, "camera_lon");
  if (auto v = optional_number(doc, "heading")) cal.heading = *v;
  cal.validate();
  return cal;
}

CalibrationParams load_calibration(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  try {
    return parse_calibration(text);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string dump_calibration(const CalibrationParams& cal) {
  ojson doc;
  doc["z_value"] = cal.z_value;
  doc["x_value"] = cal.x_value;
  doc["meters_per_unit"] = cal.meters_per_unit;
  doc["camera_lat"] = cal.camera_lat ? ojson(*cal.camera_lat) : ojson(nullptr);
  doc["camera_lon"] = cal.camera_lon ? ojson(*cal.camera_lon) : ojson(nullptr);
  doc["heading"] = cal.heading;
  return doc.dump() + "\n";
}

BevPoint apply_calibration(const BevPoint& raw, const CalibrationParams& cal) {
  return {raw.u + cal.x_value, raw.v * cal.z_value};
}

BevPoint to_bev(const ImagePoint& anchor, const PerspectiveGrid& grid, const CalibrationParams& cal) {
  if (!(anchor.y > horizon_line(grid.vp).y + Tolerances::kHorizonMarginPx))
    throw Error(ErrorCode::AboveHorizon, "anchor at y=" + std::to_string(anchor.y) + " is not below the horizon");
  return apply_calibration(project(grid.homography, anchor), cal);
}

GeoPoint georeference(const BevPoint& p, const CalibrationParams& cal, double bev_width) {
  if (!cal.has_geo_anchor()) throw Error(ErrorCode::MissingGeoAnchor, "calibration has no camera_lat/camera_lon");
  const double m = cal.meters_per_unit;
  const double th = deg2rad(cal.heading);
  const double lateral = p.u - bev_width / 2.0;
  const double north = m * p.v * std::cos(th) - m * lateral * std::sin(th);
  const double east = m * p.v * std::sin(th) + m * lateral * std::cos(th);
  const double lat0 = *cal.camera_lat;
  return {lat0 + north / kMetersPerDegree, *cal.camera_lon + east / (kMetersPerDegree * std::cos(deg2rad(lat0)))};
}

BevPoint inverse_georeference(const GeoPoint& g, const CalibrationParams& cal, double bev_width) {
  if (!cal.has_geo_anchor()) throw Error(ErrorCode::MissingGeoAnchor, "calibration has no camera_lat/camera_lon");
  const double lat0 = *cal.camera_lat;
  const double north = (g.lat - lat0) * kMetersPerDegree;
  const double east = (g.lon - *cal.camera_lon) * kMetersPerDegree * std::cos(deg2rad(lat0));
  const double th = deg2rad(cal.heading);
  // Inverse rotation of (v, lateral) -> (north, east).
  const double v = (north * std::cos(th) + east * std::sin(th)) / cal.meters_per_unit;
  const double lateral = (-north * std::sin(th) + east * std::cos(th)) / cal.meters_per_unit;
  return {lateral + bev_width / 2.0, v};
}

CalibrationParams fit_calibration_scale(std::span<const GroundReference> refs, const CalibrationParams& cal) {
  if (refs.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two ground references");
  // d^2 = m^2 du^2 + m^2 z^2 dv^2, linear in (m^2, m^2 z^2).
  std::vector<Eigen::Vector2d> rows;
  std::vector<double> rhs;
  for (std::size_t i = 0; i < refs.size(); ++i)
    for (std::size_t j = i + 1; j < refs.size(); ++j) {
      const double du = refs[i].bev.u - refs[j].bev.u;
      const double dv = refs[i].bev.v - refs[j].bev.v;
      rows.emplace_back(du * du, dv * dv);
      rhs.push_back((refs[i].ground - refs[j].ground).squaredNorm());
    }
  Eigen::MatrixXd a(rows.size(), 2);
  Eigen::VectorXd b(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    a.row(k) = rows[k].transpose();
    b(k) = rhs[k];
  }

  CalibrationParams out = cal;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const bool both = sv.size() == 2 && sv(1) > 1e-9 * sv(0);
  if (both) {
    const Eigen::Vector2d x = svd.solve(b);
    if (!(x(0) > 0) || !(x(1) > 0))
      throw Error(ErrorCode::DegenerateConfiguration, "ground references give a non-positive scale");
    out.meters_per_unit = std::sqrt(x(0));
    out.z_value = std::sqrt(x(1) / x(0));
  } else {
    // Only the overall scale is observable; keep z_value.
    const double z2 = cal.z_value * cal.z_value;
    double num = 0, den = 0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const double g = rows[k](0) + z2 * rows[k](1);
      num += g * rhs[k];
      den += g * g;
    }
    if (!(den > 0) || !(num > 0)) throw Error(ErrorCode::DegenerateConfiguration, "ground references coincide");
    out.meters_per_unit = std::sqrt(num / den);
  }
  out.validate();
  return out;
}

std::string export_geojson(std::span<const TokenStream> streams, GeoJsonMode mode) {
  ojson features = ojson::array();
  for (const auto& s : streams) {
    if (mode == GeoJsonMode::Points) {
      for (const auto& o : s.states) {
        const GeoPoint& g = require_geo(o);
        ojson f;
        f["type"] = "Feature";
        f["geometry"] = {{"type", "Point"}, {"coordinates", {g.lon, g.lat}}};
        ojson props;
        props["track_id"] = o.track_id;
        props["class"] = to_string(o.cls);
        props["frame"] = o.frame;
        props["t"] = o.t;
        props["stationary"] = o.stationary;
        props["orientation"] = to_string(o.orientation);
        f["properties"] = std::move(props);
        features.push_back(std::move(f));
      }
      continue;
    }
    if (s.states.empty()) continue;
    ojson coords = ojson::array();
    ojson frames = ojson::array(), times = ojson::array(), still = ojson::array(), orient = ojson::array();
    for (const auto& o : s.states) {
      const GeoPoint& g = require_geo(o);
      coords.push_back({g.lon, g.lat});
      frames.push_back(o.frame);
      times.push_back(o.t);
      still.push_back(o.stationary);
      orient.push_back(to_string(o.orientation));
    }
    ojson f;
    f["type"] = "Feature";
    // A LineString needs two positions; single-state tokens become a Point.
    if (coords.size() >= 2)
      f["geometry"] = {{"type", "LineString"}, {"coordinates", std::move(coords)}};
    else
      f["geometry"] = {{"type", "Point"}, {"coordinates", coords[0]}};
    ojson props;
    props["track_id"] = s.track_id;
    props["class"] = to_string(s.cls);
    props["frames"] = std::move(frames);
    props["timestamps"] = std::move(times);
    props["stationary"] = std::move(still);
    props["orientation"] = std::move(orient);
    f["properties"] = std::move(props);
    features.push_back(std::move(f));
  }
  ojson doc;
  doc["type"] = "FeatureCollection";
  doc["features"] = std::move(features);
  return doc.dump() + "\n";
}

std::string export_tokens(std::span<const TokenStream> streams) {
  std::vector<const BevObject*> all;
  for (const auto& s : streams)
    for (const auto& o : s.states) all.push_back(&o);
  std::stable_sort(all.begin(), all.end(), [](const BevObject* a, const BevObject* b) {
    return std::tie(a->track_id, a->frame) < std::tie(b->track_id, b->frame);
  });
  std::string out;
  for (const BevObject* o : all) {
    out += token_record(*o).dump();
    out += '\n';
  }
  return out;
}

std::string export_frame(std::span<const BevObject> objects) {
  ojson arr = ojson::array();
  for (const auto& o : objects) arr.push_back(token_record(o));
  return arr.dump() + "\n";
}

std::vector<TokenStream> parse_tokens(std::string_view text) {
  std::map<int, TokenStream> by_id;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      token_error(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!rec.is_object()) token_error(line_no, "record must be an object");
    BevObject o;
    o.track_id = static_cast<int>(token_number(rec, "track_id", line_no));
    o.frame = static_cast<int>(token_number(rec, "frame", line_no));
    o.t = token_number(rec, "t", line_no);
    const auto cls = rec.find("class");
    if (cls == rec.end() || !cls->is_string()) token_error(line_no, "field 'class' must be a string");
    const auto parsed_cls = parse_object_class(cls->get<std::string>());
    if (!parsed_cls) token_error(line_no, "unknown class");
    o.cls = *parsed_cls;
    o.position = {token_number(rec, "u", line_no), token_number(rec, "v", line_no)};
    if (rec.contains("lat") || rec.contains("lon"))
      o.geo = GeoPoint{token_number(rec, "lat", line_no), token_number(rec, "lon", line_no)};
    const auto st = rec.find("stationary");
    if (st == rec.end() || !st->is_boolean()) token_error(line_no, "field 'stationary' must be a boolean");
    o.stationary = st->get<bool>();
    const auto ori = rec.find("orientation");
    if (ori == rec.end() || !ori->is_string()) token_error(line_no, "field 'orientation' must be a string");
    const auto parsed_ori = parse_orientation(ori->get<std::string>());
    if (!parsed_ori) token_error(line_no, "unknown orientation");
    o.orientation = *parsed_ori;
    const auto box = rec.find("box3d");
    if (box == rec.end() || !box->is_array() || box->size() != 8) token_error(line_no, "field 'box3d' must hold 8 points");
    for (int i = 0; i < 8; ++i) {
      const auto& c = (*box)[i];
      if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number())
        token_error(line_no, "box3d corners must be [x, y]");
      o.box3d[i] = {c[0].get<double>(), c[1].get<double>()};
    }

    TokenStream& s = by_id[o.track_id];
    if (s.states.empty()) {
      s.track_id = o.track_id;
      s.cls = o.cls;
    }
    s.states.push_back(o);
  }
  std::vector<TokenStream> out;
  for (auto& [id, s] : by_id) {
    std::stable_sort(s.states.begin(), s.states.end(), [](const BevObject& a, const BevObject& b) { return a.frame < b.frame; });
    for (std::size_t i = 1; i < s.states.size(); ++i)
      if (s.states[i].frame == s.states[i - 1].frame)
        throw Error(ErrorCode::SchemaError, "token " + std::to_string(id) + " repeats frame " + std::to_string(s.states[i].frame));
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<TokenStream> load_tokens(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  try {
    return parse_tokens(text);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace topview
