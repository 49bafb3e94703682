#ifndef TOPVIEW_CORE_HPP
#define TOPVIEW_CORE_HPP

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace topview {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

/// Every failure the library reports carries one of these codes. The CLI maps
/// them onto process exit codes.
enum class ErrorCode {
  DegenerateConfiguration,
  PointAtInfinity,
  VanishingPointBelowScene,
  DegenerateGrid,
  InsufficientSegments,
  NoConsensus,
  ParseError,
  MissingFile,
  SchemaError,
  EmptyInput,
  AboveHorizon,
  MissingGeoAnchor,
  MixedCalibration,
  UnknownCamera,
  BehindCamera,
  DirectionAtInfinity,
  InvalidArgument,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Tie and degeneracy tolerances shared by the geometry routines.
struct Tolerances {
  static constexpr double kHomographyScale = 1e-12;   // |h22| below this: Frobenius normalization
  static constexpr double kSingularDet = 1e-12;       // det of normalized H
  static constexpr double kMaxCondition = 1e12;       // DLT system condition number
  static constexpr double kCollinear = 1e-9;          // normalized cross product
  static constexpr double kHorizonW = 1e-12;          // projective denominator
  static constexpr double kHorizonMarginPx = 1.0;     // to_bev: anchor must sit this far below the VP
  static constexpr double kMinSegmentLength = 1e-6;
  static constexpr double kParallelAngle = 1e-4;      // radians
  static constexpr double kBehindCamera = 1e-9;
};

/// Pixel coordinates: x grows to the right, y grows downwards.
template <typename Scalar>
struct ImagePointT {
  Scalar x{};
  Scalar y{};

  Vector2<Scalar> vec() const { return {x, y}; }
  static ImagePointT from(const Vector2<Scalar>& v) { return {v.x(), v.y()}; }
  friend bool operator==(const ImagePointT&, const ImagePointT&) = default;
};

/// Bird's-eye-view coordinates: u lateral, v depth (growing away from the camera).
template <typename Scalar>
struct BevPointT {
  Scalar u{};
  Scalar v{};

  Vector2<Scalar> vec() const { return {u, v}; }
  static BevPointT from(const Vector2<Scalar>& p) { return {p.x(), p.y()}; }
  friend bool operator==(const BevPointT&, const BevPointT&) = default;
};

using ImagePoint = ImagePointT<double>;
using BevPoint = BevPointT<double>;

/// Axis-aligned 2D detection box in pixels.
struct BBox {
  double x1{}, y1{}, x2{}, y2{};

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double diagonal() const;
  ImagePoint bottom_center() const { return {(x1 + x2) / 2.0, y2}; }
  bool valid() const { return x1 < x2 && y1 < y2; }
  friend bool operator==(const BBox&, const BBox&) = default;
};

double iou(const BBox& a, const BBox& b);

}  // namespace topview

#endif  // TOPVIEW_CORE_HPP
