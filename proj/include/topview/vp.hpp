#ifndef TOPVIEW_VP_HPP
#define TOPVIEW_VP_HPP

#include "topview/core.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace topview {

struct LineSegment {
  ImagePoint p1;
  ImagePoint p2;
  double weight = 1.0;
};

struct VanishingPoint {
  double x = 0;
  double y = 0;
  double confidence = 1.0;

  ImagePoint point() const { return {x, y}; }
};

struct VpEstimate {
  VanishingPoint vp;
  int inlier_count = 0;
  double residual = 0;  // mean perpendicular distance of inliers, pixels
};

struct RansacConfig {
  int iterations = 500;
  double threshold = 2.0;  // pixels
  double min_inlier_ratio = 0.3;
  std::uint64_t seed = 0;
};

/// Classical vanishing-point estimate: RANSAC over pairwise line intersections,
/// then weighted least squares on the consensus set.
///
/// Segments are put into a canonical order before sampling, so the result does
/// not depend on input order for a given seed.
VpEstimate estimate_vp_ransac(std::span<const LineSegment> segments, const RansacConfig& config = {});

struct LogCoshError {
  double x = 0;
  double y = 0;
  double sum = 0;
};

/// log(cosh(d)) evaluated as |d| + log1p(exp(-2|d|)) - log 2.
double logcosh(double d);

/// Expects coordinates already normalized to [0, 1] (see normalize_vp).
LogCoshError logcosh_error(const VanishingPoint& pred, const VanishingPoint& truth);

VanishingPoint normalize_vp(const VanishingPoint& vp, double image_w, double image_h);

/// Sidecar: {"x": number, "y": number, "confidence"?: number}.
VanishingPoint parse_vp_sidecar(std::string_view text);
VanishingPoint load_vp_sidecar(const std::filesystem::path& path);
std::string dump_vp_sidecar(const VanishingPoint& vp);

/// Segment file: [{"x1","y1","x2","y2","weight"?}, ...].
std::vector<LineSegment> parse_segments(std::string_view text);
std::vector<LineSegment> load_segments(const std::filesystem::path& path);
std::string dump_segments(std::span<const LineSegment> segments);

}  // namespace topview

#endif  // TOPVIEW_VP_HPP
