#include "topview/vp.hpp"

#include "topview/io.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <tuple>

namespace topview {

namespace {

using json = nlohmann::json;

// Unit-normal homogeneous line (a, b, c) with a^2 + b^2 = 1.
Eigen::Vector3d supporting_line(const LineSegment& s) {
  Eigen::Vector3d l = s.p1.vec().homogeneous().cross(s.p2.vec().homogeneous());
  return l / l.head<2>().norm();
}

double direction_angle(const LineSegment& s) {
  return std::atan2(s.p2.y - s.p1.y, s.p2.x - s.p1.x);
}

// Smallest angle between two undirected lines.
double line_angle(double a, double b) {
  double d = std::fmod(std::abs(a - b), M_PI);
  return std::min(d, M_PI - d);
}

struct Consensus {
  std::vector<int> inliers;
  double residual = 0;
};

Consensus score(const std::vector<Eigen::Vector3d>& lines, const Eigen::Vector2d& p, double threshold) {
  Consensus c;
  double total = 0;
  for (int i = 0; i < static_cast<int>(lines.size()); ++i) {
    const double d = std::abs(lines[i].dot(p.homogeneous()));
    if (d <= threshold) {
      c.inliers.push_back(i);
      total += d;
    }
  }
  c.residual = c.inliers.empty() ? 0.0 : total / c.inliers.size();
  return c;
}

// Minimizes sum_i w_i (n_i . p + c_i)^2 over the given lines.
bool weighted_intersection(const std::vector<Eigen::Vector3d>& lines, const std::vector<double>& weights,
                           const std::vector<int>& idx, Eigen::Vector2d& out) {
  Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
  for (int i : idx) {
    const Eigen::Vector2d n = lines[i].head<2>();
    a += weights[i] * n * n.transpose();
    b -= weights[i] * lines[i].z() * n;
  }
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(0) <= 0 || sv(1) / sv(0) < 1e-12) return false;
  out = svd.solve(b);
  return out.allFinite();
}

double number_field(const json& obj, const char* key, const char* context) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorCode::ParseError, std::string(context) + "missing field " + key);
  if (!it->is_number()) throw Error(ErrorCode::ParseError, std::string(context) + "field " + key + " is not a number");
  return it->get<double>();
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

VpEstimate estimate_vp_ransac(std::span<const LineSegment> segments, const RansacConfig& config) {
  if (config.iterations < 1 || !(config.threshold > 0))
    throw Error(ErrorCode::InvalidArgument, "RANSAC needs iterations >= 1 and a positive threshold");
  for (const auto& s : segments) {
    if ((s.p1.vec() - s.p2.vec()).norm() <= Tolerances::kMinSegmentLength)
      throw Error(ErrorCode::InvalidArgument, "line segment is shorter than 1e-6 px");
    if (!(s.weight >= 0)) throw Error(ErrorCode::InvalidArgument, "segment weight must be nonnegative");
  }
  if (segments.size() < 2) throw Error(ErrorCode::InsufficientSegments, "need at least two segments");

  std::vector<LineSegment> segs(segments.begin(), segments.end());
  std::sort(segs.begin(), segs.end(), [](const LineSegment& a, const LineSegment& b) {
    return std::tie(a.p1.x, a.p1.y, a.p2.x, a.p2.y, a.weight) < std::tie(b.p1.x, b.p1.y, b.p2.x, b.p2.y, b.weight);
  });

  const int n = static_cast<int>(segs.size());
  std::vector<Eigen::Vector3d> lines(n);
  std::vector<double> angles(n), weights(n);
  for (int i = 0; i < n; ++i) {
    lines[i] = supporting_line(segs[i]);
    angles[i] = direction_angle(segs[i]);
    weights[i] = segs[i].weight;
  }
  const bool any_pair = std::any_of(angles.begin() + 1, angles.end(), [&](double a) {
    return line_angle(a, angles[0]) > Tolerances::kParallelAngle;
  });
  if (!any_pair) throw Error(ErrorCode::InsufficientSegments, "all segments are parallel");

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<int> pick(0, n - 1);

  bool found = false;
  Consensus best;
  for (int round = 0; round < config.iterations; ++round) {
    const int i = pick(rng);
    int j = pick(rng);
    while (j == i) j = pick(rng);
    if (line_angle(angles[i], angles[j]) <= Tolerances::kParallelAngle) continue;
    const Eigen::Vector3d x = lines[i].cross(lines[j]);
    if (std::abs(x.z()) < 1e-300) continue;
    const Eigen::Vector2d candidate = x.head<2>() / x.z();
    if (!candidate.allFinite()) continue;
    Consensus c = score(lines, candidate, config.threshold);
    // Strict comparisons keep the earliest round on full ties.
    if (!found || c.inliers.size() > best.inliers.size() ||
        (c.inliers.size() == best.inliers.size() && c.residual < best.residual)) {
      best = std::move(c);
      found = true;
    }
  }
  if (!found || best.inliers.size() < 2) throw Error(ErrorCode::NoConsensus, "no intersecting segment pair found");

  Eigen::Vector2d p;
  if (!weighted_intersection(lines, weights, best.inliers, p))
    throw Error(ErrorCode::NoConsensus, "consensus set does not determine a point");
  for (int pass = 0; pass < 10; ++pass) {
    Consensus c = score(lines, p, config.threshold);
    if (c.inliers == best.inliers) break;
    Eigen::Vector2d q;
    if (c.inliers.size() < 2 || !weighted_intersection(lines, weights, c.inliers, q)) break;
    best = std::move(c);
    p = q;
  }
  best = score(lines, p, config.threshold);

  const double ratio = static_cast<double>(best.inliers.size()) / n;
  if (ratio < config.min_inlier_ratio)
    throw Error(ErrorCode::NoConsensus, "inlier ratio " + std::to_string(ratio) + " is below the minimum");

  return {{p.x(), p.y(), ratio}, static_cast<int>(best.inliers.size()), best.residual};
}

double logcosh(double d) {
  const double a = std::abs(d);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

LogCoshError logcosh_error(const VanishingPoint& pred, const VanishingPoint& truth) {
  LogCoshError e;
  e.x = logcosh(pred.x - truth.x);
  e.y = logcosh(pred.y - truth.y);
  e.sum = e.x + e.y;
  return e;
}

VanishingPoint normalize_vp(const VanishingPoint& vp, double image_w, double image_h) {
  if (!(image_w > 0) || !(image_h > 0)) throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  return {vp.x / image_w, vp.y / image_h, vp.confidence};
}

VanishingPoint parse_vp_sidecar(std::string_view text) {
  const json doc = parse_json(text);
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, "sidecar must be a JSON object");
  VanishingPoint vp;
  vp.x = number_field(doc, "x", "");
  vp.y = number_field(doc, "y", "");
  if (doc.contains("confidence")) vp.confidence = number_field(doc, "confidence", "");
  if (!std::isfinite(vp.x) || !std::isfinite(vp.y)) throw Error(ErrorCode::ParseError, "vanishing point must be finite");
  if (!(vp.confidence >= 0 && vp.confidence <= 1)) throw Error(ErrorCode::ParseError, "confidence must lie in [0, 1]");
  return vp;
}

VanishingPoint load_vp_sidecar(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  try {
    return parse_vp_sidecar(text);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string dump_vp_sidecar(const VanishingPoint& vp) {
  nlohmann::ordered_json doc;
  doc["x"] = vp.x;
  doc["y"] = vp.y;
  doc["confidence"] = vp.confidence;
  return doc.dump() + "\n";
}

std::vector<LineSegment> parse_segments(std::string_view text) {
  const json doc = parse_json(text);
  if (!doc.is_array()) throw Error(ErrorCode::ParseError, "segment file must be a JSON array");
  std::vector<LineSegment> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& item = doc[i];
    const std::string ctx = "segment " + std::to_string(i) + ": ";
    if (!item.is_object()) throw Error(ErrorCode::ParseError, ctx + "not an object");
    LineSegment s;
    s.p1 = {number_field(item, "x1", ctx.c_str()), number_field(item, "y1", ctx.c_str())};
    s.p2 = {number_field(item, "x2", ctx.c_str()), number_field(item, "y2", ctx.c_str())};
    if (item.contains("weight")) s.weight = number_field(item, "weight", ctx.c_str());
    out.push_back(s);
  }
  return out;
}

std::vector<LineSegment> load_segments(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  try {
    return parse_segments(text);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string dump_segments(std::span<const LineSegment> segments) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& s : segments) {
    nlohmann::ordered_json item;
    item["x1"] = s.p1.x;
    item["y1"] = s.p1.y;
    item["x2"] = s.p2.x;
    item["y2"] = s.p2.y;
    item["weight"] = s.weight;
    doc.push_back(item);
  }
  return doc.dump() + "\n";
}

}  // namespace topview
