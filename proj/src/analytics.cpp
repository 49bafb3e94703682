#include "topview/analytics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

namespace topview {

namespace {

Eigen::Vector2d metric(const BevObject& o, const CalibrationParams& cal) {
  return o.position.vec() * cal.meters_per_unit;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double csv_number(const std::string& field, std::size_t line, const char* name) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::SchemaError, "registry line " + std::to_string(line) + ": " + name + " is not a number");
  }
}

}  // namespace

Eigen::MatrixXd pairwise_distances(std::span<const BevObject> objects, const CalibrationParams& cal) {
  const Eigen::Index n = static_cast<Eigen::Index>(objects.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dist = cal.meters_per_unit * (objects[i].position.vec() - objects[j].position.vec()).norm();
      d(i, j) = dist;
      d(j, i) = dist;
    }
  return d;
}

Eigen::MatrixXd pairwise_distances(std::span<const BevObject> objects, std::span<const CalibrationParams> calibrations) {
  if (calibrations.empty()) throw Error(ErrorCode::InvalidArgument, "no calibration given");
  if (calibrations.size() != 1 && calibrations.size() != objects.size())
    throw Error(ErrorCode::InvalidArgument, "need one calibration or one per object");
  for (const auto& c : calibrations)
    if (!(c == calibrations.front())) throw Error(ErrorCode::MixedCalibration, "objects use different calibrations");
  return pairwise_distances(objects, calibrations.front());
}

ViolationReport detect_violations(std::span<const TokenStream> streams, const CalibrationParams& cal,
                                  double threshold, int min_duration) {
  // frame -> persons present (track id, metric position)
  std::map<int, std::vector<std::tuple<int, Eigen::Vector2d, double>>> frames;
  for (const auto& s : streams)
    for (const auto& o : s.states)
      if (o.cls == ObjectClass::Person) frames[o.frame].emplace_back(o.track_id, metric(o, cal), o.t);

  struct Run {
    int start = 0;
    int last = 0;
    double t = 0;
    double min_d = 0;
  };
  std::map<std::pair<int, int>, Run> open;
  ViolationReport report;

  const auto close = [&](const std::pair<int, int>& key, const Run& r) {
    if (r.last - r.start + 1 >= min_duration) report.events.push_back({r.start, r.last, r.t, key, r.min_d});
  };

  for (auto& [frame, people] : frames) {
    std::sort(people.begin(), people.end(), [](const auto& a, const auto& b) { return std::get<0>(a) < std::get<0>(b); });
    for (std::size_t i = 0; i < people.size(); ++i)
      for (std::size_t j = i + 1; j < people.size(); ++j) {
        const auto& [ia, pa, ta] = people[i];
        const auto& [ib, pb, tb] = people[j];
        if (ia == ib) continue;
        const double d = (pa - pb).norm();
        if (!(d < threshold)) continue;
        ++report.contacts;
        const std::pair<int, int> key{std::min(ia, ib), std::max(ia, ib)};
        auto it = open.find(key);
        if (it != open.end() && it->second.last == frame - 1) {
          it->second.last = frame;
          it->second.min_d = std::min(it->second.min_d, d);
          continue;
        }
        if (it != open.end()) {
          close(key, it->second);
          open.erase(it);
        }
        open.emplace(key, Run{frame, frame, std::min(ta, tb), d});
      }
    // Runs that did not continue into this frame are finished.
    for (auto it = open.begin(); it != open.end();) {
      if (it->second.last < frame) {
        close(it->first, it->second);
        it = open.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (const auto& [key, r] : open) close(key, r);

  std::sort(report.events.begin(), report.events.end(), [](const ViolationEvent& a, const ViolationEvent& b) {
    return std::tie(a.frame, a.pair) < std::tie(b.frame, b.pair);
  });
  return report;
}

long long OccupancyGrid::total() const {
  long long sum = 0;
  for (const auto& [cls, m] : counts) sum += m.cast<long long>().sum();
  return sum;
}

std::pair<int, int> OccupancyGrid::cell_of(const Eigen::Vector2d& p) const {
  const int col = static_cast<int>(std::floor((p.x() - origin.x()) / cell_size));
  const int row = static_cast<int>(std::floor((p.y() - origin.y()) / cell_size));
  if (row < 0 || row >= rows || col < 0 || col >= cols) return {-1, -1};
  return {row, col};
}

OccupancyGrid occupancy(std::span<const TokenStream> streams, const CalibrationParams& cal, double cell_size) {
  if (!(cell_size > 0)) throw Error(ErrorCode::InvalidArgument, "cell size must be positive");
  OccupancyGrid grid;
  grid.cell_size = cell_size;

  Eigen::Vector2d lo = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector2d hi = -lo;
  bool any = false;
  for (const auto& s : streams)
    for (const auto& o : s.states) {
      const Eigen::Vector2d p = metric(o, cal);
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
      any = true;
    }
  if (!any) return grid;

  grid.origin = lo.array() - cell_size;
  grid.cols = static_cast<int>(std::floor((hi.x() - grid.origin.x()) / cell_size)) + 2;
  grid.rows = static_cast<int>(std::floor((hi.y() - grid.origin.y()) / cell_size)) + 2;

  for (const auto& s : streams)
    for (const auto& o : s.states) {
      auto [row, col] = grid.cell_of(metric(o, cal));
      if (row < 0) continue;
      auto it = grid.counts.find(o.cls);
      if (it == grid.counts.end()) it = grid.counts.emplace(o.cls, Eigen::MatrixXi::Zero(grid.rows, grid.cols)).first;
      ++it->second(row, col);
    }
  return grid;
}

std::string dump_occupancy(const OccupancyGrid& grid) {
  nlohmann::ordered_json doc;
  doc["cell_size"] = grid.cell_size;
  doc["origin"] = {grid.origin.x(), grid.origin.y()};
  doc["rows"] = grid.rows;
  doc["cols"] = grid.cols;
  nlohmann::ordered_json layers = nlohmann::ordered_json::object();
  for (const auto& [cls, m] : grid.counts) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (int r = 0; r < m.rows(); ++r) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(std::move(row));
    }
    layers[to_string(cls)] = std::move(rows);
  }
  doc["counts"] = std::move(layers);
  doc["total"] = grid.total();
  return doc.dump() + "\n";
}

std::map<std::string, CameraInfo> parse_camera_registry(std::string_view text) {
  std::map<std::string, CameraInfo> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(trim(f));
    if (line_no == 1 && !fields.empty() && fields[0] == "camera_id") continue;
    if (fields.size() != 4)
      throw Error(ErrorCode::SchemaError, "registry line " + std::to_string(line_no) + ": expected 4 fields");
    CameraInfo cam{fields[0], csv_number(fields[1], line_no, "lat"), csv_number(fields[2], line_no, "lon"),
                   csv_number(fields[3], line_no, "heading")};
    if (cam.id.empty()) throw Error(ErrorCode::SchemaError, "registry line " + std::to_string(line_no) + ": empty id");
    out[cam.id] = cam;
  }
  return out;
}

CitySummary aggregate_scenes(std::span<const CameraResult> results, const std::map<std::string, CameraInfo>& registry) {
  CitySummary summary;
  for (const auto& r : results) {
    const auto it = registry.find(r.camera_id);
    if (it == registry.end()) throw Error(ErrorCode::UnknownCamera, "camera '" + r.camera_id + "' is not in the registry");
    summary.cameras.emplace_back(it->second, r.violations);
    summary.total += r.violations;
  }
  return summary;
}

std::string summary_geojson(const CitySummary& summary) {
  nlohmann::ordered_json features = nlohmann::ordered_json::array();
  for (const auto& [cam, count] : summary.cameras) {
    nlohmann::ordered_json f;
    f["type"] = "Feature";
    f["geometry"] = {{"type", "Point"}, {"coordinates", {cam.lon, cam.lat}}};
    f["properties"] = {{"camera_id", cam.id}, {"violations", count}};
    features.push_back(std::move(f));
  }
  nlohmann::ordered_json doc;
  doc["type"] = "FeatureCollection";
  doc["features"] = std::move(features);
  doc["total_violations"] = summary.total;
  return doc.dump() + "\n";
}

}  // namespace topview
