#ifndef TOPVIEW_GEOMETRY_HPP
#define TOPVIEW_GEOMETRY_HPP

#include "topview/core.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <array>
#include <cmath>
#include <concepts>
#include <string>
#include <vector>

namespace topview {

/// Projective map between the image ground plane and the BEV plane.
///
/// Stored normalized: h22 = 1 when |h22| > 1e-12, otherwise unit Frobenius
/// norm. Construction rejects singular matrices.
template <std::floating_point Scalar>
class HomographyT {
 public:
  using Matrix = Matrix3<Scalar>;

  HomographyT() : h_(Matrix::Identity()) {}

  explicit HomographyT(const Matrix& h) : h_(normalized(h)) {
    if (!h_.allFinite() || std::abs(h_.determinant()) <= Scalar(Tolerances::kSingularDet))
      throw Error(ErrorCode::DegenerateConfiguration, "homography is singular");
  }

  static HomographyT identity() { return HomographyT(); }

  const Matrix& matrix() const { return h_; }
  Scalar operator()(int r, int c) const { return h_(r, c); }

  HomographyT inverse() const { return HomographyT(h_.inverse()); }

  static Matrix normalized(const Matrix& h) {
    if (std::abs(h(2, 2)) > Scalar(Tolerances::kHomographyScale)) return h / h(2, 2);
    return h / h.norm();
  }

 private:
  Matrix h_;
};

using Homography = HomographyT<double>;

/// Dehomogenizes H·(p, 1). Throws PointAtInfinity on the projective horizon.
template <std::floating_point Scalar>
Vector2<Scalar> apply(const Matrix3<Scalar>& h, const Vector2<Scalar>& p) {
  const Vector3<Scalar> q = h * p.homogeneous();
  if (std::abs(q.z()) <= Scalar(Tolerances::kHorizonW))
    throw Error(ErrorCode::PointAtInfinity, "point lies on the projective horizon");
  return q.template head<2>() / q.z();
}

template <std::floating_point Scalar>
BevPointT<Scalar> project(const HomographyT<Scalar>& h, const ImagePointT<Scalar>& p) {
  return BevPointT<Scalar>::from(apply<Scalar>(h.matrix(), p.vec()));
}

/// Inverse direction: BEV plane back into the image.
template <std::floating_point Scalar>
ImagePointT<Scalar> unproject(const HomographyT<Scalar>& h, const BevPointT<Scalar>& p) {
  return ImagePointT<Scalar>::from(apply<Scalar>(h.matrix().inverse().eval(), p.vec()));
}

/// Sine of the angle at `a` in triangle (a, b, c); zero for coincident points.
template <std::floating_point Scalar>
Scalar normalized_cross(const Vector2<Scalar>& a, const Vector2<Scalar>& b, const Vector2<Scalar>& c) {
  const Vector2<Scalar> ab = b - a;
  const Vector2<Scalar> ac = c - a;
  const Scalar denom = ab.norm() * ac.norm();
  if (denom == Scalar(0)) return Scalar(0);
  return (ab.x() * ac.y() - ab.y() * ac.x()) / denom;
}

/// True when no three of the four points are collinear (or coincident).
template <std::floating_point Scalar>
bool in_general_position(const std::array<Vector2<Scalar>, 4>& pts) {
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      for (int k = j + 1; k < 4; ++k)
        if (std::abs(normalized_cross(pts[i], pts[j], pts[k])) <= Scalar(Tolerances::kCollinear))
          return false;
  return true;
}

/// Image quadrangle, corners ordered top-left, top-right, bottom-right, bottom-left.
template <std::floating_point Scalar>
struct QuadrangleT {
  std::array<ImagePointT<Scalar>, 4> corners;

  std::array<Vector2<Scalar>, 4> vecs() const {
    return {corners[0].vec(), corners[1].vec(), corners[2].vec(), corners[3].vec()};
  }
};

using Quadrangle = QuadrangleT<double>;

template <std::floating_point Scalar>
bool is_non_degenerate(const QuadrangleT<Scalar>& q) {
  return in_general_position<Scalar>(q.vecs());
}

/// Convex with consistent turn direction at every corner.
template <std::floating_point Scalar>
bool is_convex(const QuadrangleT<Scalar>& q) {
  const auto v = q.vecs();
  int sign = 0;
  for (int i = 0; i < 4; ++i) {
    const Scalar c = normalized_cross(v[i], v[(i + 1) % 4], v[(i + 3) % 4]);
    if (std::abs(c) <= Scalar(Tolerances::kCollinear)) return false;
    const int s = c > 0 ? 1 : -1;
    if (sign != 0 && s != sign) return false;
    sign = s;
  }
  return true;
}

template <std::floating_point Scalar>
struct CorrespondenceT {
  ImagePointT<Scalar> src;
  BevPointT<Scalar> dst;
};

using Correspondence = CorrespondenceT<double>;

namespace detail {

/// Similarity that moves the centroid to the origin and the mean distance to sqrt(2).
template <std::floating_point Scalar>
Matrix3<Scalar> conditioning(const std::array<Vector2<Scalar>, 4>& pts) {
  Vector2<Scalar> mean = Vector2<Scalar>::Zero();
  for (const auto& p : pts) mean += p;
  mean /= Scalar(4);
  Scalar dist = 0;
  for (const auto& p : pts) dist += (p - mean).norm();
  dist /= Scalar(4);
  const Scalar s = std::sqrt(Scalar(2)) / dist;
  Matrix3<Scalar> t;
  t << s, 0, -s * mean.x(),
       0, s, -s * mean.y(),
       0, 0, 1;
  return t;
}

}  // namespace detail

/// Four-point normalized DLT. Exact for four correspondences in general position.
template <std::floating_point Scalar>
HomographyT<Scalar> solve_homography(const std::array<CorrespondenceT<Scalar>, 4>& pairs) {
  std::array<Vector2<Scalar>, 4> src, dst;
  for (int i = 0; i < 4; ++i) {
    src[i] = pairs[i].src.vec();
    dst[i] = pairs[i].dst.vec();
  }
  if (!in_general_position(src) || !in_general_position(dst))
    throw Error(ErrorCode::DegenerateConfiguration, "three or more correspondences are collinear");

  const Matrix3<Scalar> t_src = detail::conditioning(src);
  const Matrix3<Scalar> t_dst = detail::conditioning(dst);

  Eigen::Matrix<Scalar, 9, 9> a = Eigen::Matrix<Scalar, 9, 9>::Zero();
  for (int i = 0; i < 4; ++i) {
    const Vector2<Scalar> p = (t_src * src[i].homogeneous()).template head<2>();
    const Vector2<Scalar> q = (t_dst * dst[i].homogeneous()).template head<2>();
    a.row(2 * i) << -p.x(), -p.y(), -1, 0, 0, 0, q.x() * p.x(), q.x() * p.y(), q.x();
    a.row(2 * i + 1) << 0, 0, 0, -p.x(), -p.y(), -1, q.y() * p.x(), q.y() * p.y(), q.y();
  }

  Eigen::JacobiSVD<Eigen::Matrix<Scalar, 9, 9>> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(7) <= Scalar(0) || sv(0) / sv(7) > Scalar(Tolerances::kMaxCondition))
    throw Error(ErrorCode::DegenerateConfiguration, "homography system is rank-deficient");

  const Eigen::Matrix<Scalar, 9, 1> h = svd.matrixV().col(8);
  Matrix3<Scalar> hn;
  hn << h(0), h(1), h(2),
        h(3), h(4), h(5),
        h(6), h(7), h(8);
  return HomographyT<Scalar>(t_dst.inverse() * hn * t_src);
}

template <std::floating_point Scalar>
struct HorizonLineT {
  Scalar y;
};

using HorizonLine = HorizonLineT<double>;

/// Zero camera roll: the horizon is the image row through the vanishing point.
template <std::floating_point Scalar>
HorizonLineT<Scalar> horizon_line(const ImagePointT<Scalar>& vp) {
  return {vp.y};
}

template <std::floating_point Scalar>
struct GridParamsT {
  Scalar alpha = Scalar(0.25);  // upper line at vp.y + alpha * (image_h - vp.y)
  int subdivisions = 8;
  Scalar bev_width = Scalar(20);
  Scalar bev_depth = Scalar(40);
};

using GridParams = GridParamsT<double>;

/// Image quadrangle built from the VP radials plus the BEV rectangle it maps onto.
template <std::floating_point Scalar>
struct PerspectiveGridT {
  QuadrangleT<Scalar> src;
  Scalar bev_width;
  Scalar bev_depth;
  ImagePointT<Scalar> vp;
  int subdivisions;
  Scalar upper_y;
  std::vector<ImagePointT<Scalar>> bottom_points;
  HomographyT<Scalar> homography;
};

using PerspectiveGrid = PerspectiveGridT<double>;

/// Bottom edge y = image_h split into `subdivisions` equal intervals; radials from
/// the VP through the outermost pair of subdivision points, cut by the bottom edge
/// and by the upper line, give the source quadrangle. The destination is
/// [0, bev_width] x [0, bev_depth] with v = 0 on the bottom edge.
template <std::floating_point Scalar>
PerspectiveGridT<Scalar> build_perspective_grid(const ImagePointT<Scalar>& vp, Scalar image_w, Scalar image_h,
                                                const GridParamsT<Scalar>& params = {}) {
  if (!(image_w > 0) || !(image_h > 0))
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  if (!std::isfinite(vp.x) || !std::isfinite(vp.y))
    throw Error(ErrorCode::InvalidArgument, "vanishing point must be finite");
  if (vp.y >= image_h)
    throw Error(ErrorCode::VanishingPointBelowScene, "vanishing point is at or below the bottom image edge");
  if (!(params.alpha > 0) || !(params.alpha < 1))
    throw Error(ErrorCode::DegenerateGrid, "alpha must lie in (0, 1)");
  if (params.subdivisions < 1)
    throw Error(ErrorCode::DegenerateGrid, "need at least one subdivision");
  if (!(params.bev_width > 0) || !(params.bev_depth > 0))
    throw Error(ErrorCode::DegenerateGrid, "BEV rectangle must have positive size");

  std::vector<ImagePointT<Scalar>> bottom;
  bottom.reserve(params.subdivisions + 1);
  for (int k = 0; k <= params.subdivisions; ++k)
    bottom.push_back({image_w * Scalar(k) / Scalar(params.subdivisions), image_h});

  const Scalar upper_y = vp.y + params.alpha * (image_h - vp.y);
  // Radial vp -> b reaches upper_y at parameter alpha.
  const auto on_upper = [&](const ImagePointT<Scalar>& b) {
    return ImagePointT<Scalar>{vp.x + params.alpha * (b.x - vp.x), upper_y};
  };
  const auto& left = bottom.front();
  const auto& right = bottom.back();

  QuadrangleT<Scalar> src{{on_upper(left), on_upper(right), right, left}};
  if (!is_non_degenerate(src) || !is_convex(src))
    throw Error(ErrorCode::DegenerateGrid, "perspective grid quadrangle is degenerate");

  const Scalar w = params.bev_width;
  const Scalar d = params.bev_depth;
  const std::array<CorrespondenceT<Scalar>, 4> pairs{{
      {src.corners[0], {0, d}},
      {src.corners[1], {w, d}},
      {src.corners[2], {w, 0}},
      {src.corners[3], {0, 0}},
  }};
  return {src, w, d, vp, params.subdivisions, upper_y, std::move(bottom), solve_homography(pairs)};
}

}  // namespace topview

#endif  // TOPVIEW_GEOMETRY_HPP
