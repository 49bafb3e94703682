#include "support/orientation_table.hpp"
#include "topview/box3d.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace topview;

namespace {

TrajectoryLine line_of(std::vector<ImagePoint> pts) { return {std::move(pts), 1}; }

using table::mirror;
using table::mirrored;
using table::random_case;
using table::RandomCase;

}  // namespace

TEST(Orientation, Names) {
  for (auto o : {Orientation::TurningLeft, Orientation::TurningRight, Orientation::MovingStraight, Orientation::SideView})
    EXPECT_EQ(parse_orientation(to_string(o)), o);
  EXPECT_FALSE(parse_orientation("sideways"));
}

TEST(Orientation, BranchTable) {
  for (const auto& c : table::orientation_cases()) {
    const VanishingPoint vp{c.vp_x, 100, 1};
    EXPECT_EQ(classify_orientation(line_of(c.trajectory), vp, table::kWidth, table::kBox), c.expected) << c.name;
    OrientationConfig literal;
    literal.offset_rule = OffsetRule::Literal;
    EXPECT_EQ(classify_orientation(line_of(c.trajectory), vp, table::kWidth, table::kBox, literal),
              c.expected_literal.value_or(c.expected))
        << c.name << " (|offset| reading)";
  }
}

TEST(Orientation, MirrorSymmetry) {
  std::mt19937_64 rng(101);
  int crossing = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const RandomCase c = random_case(rng);
    TrajectoryLine m = c.line;
    for (auto& p : m.points) p.x = c.w - p.x;
    const VanishingPoint mvp{c.w - c.vp.x, c.vp.y, 1};
    const Orientation a = classify_orientation(c.line, c.vp, c.w, c.box);
    const Orientation b = classify_orientation(m, mvp, c.w, mirror(c.box, c.w));
    EXPECT_EQ(b, mirrored(a)) << "trial " << trial;
    crossing += a != Orientation::SideView;
  }
  EXPECT_GT(crossing, 300);
}

TEST(Orientation, LiteralOffsetReadingBreaksMirrorSymmetry) {
  OrientationConfig literal;
  literal.offset_rule = OffsetRule::Literal;
  const auto c = table::orientation_cases()[13];  // offset_left_straight
  ASSERT_EQ(c.name, "offset_left_straight");
  const VanishingPoint vp{c.vp_x, 100, 1};
  TrajectoryLine m = line_of(c.trajectory);
  for (auto& p : m.points) p.x = table::kWidth - p.x;
  const Orientation a = classify_orientation(line_of(c.trajectory), vp, table::kWidth, table::kBox, literal);
  const Orientation b = classify_orientation(m, {table::kWidth - vp.x, 100, 1}, table::kWidth,
                                             mirror(table::kBox, table::kWidth), literal);
  EXPECT_NE(b, mirrored(a));
}

TEST(Orientation, ScaleEquivariance) {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> scale(0.25, 4.0);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const RandomCase c = random_case(rng);
    const double s = scale(rng);
    // The tie band is absolute, so keep away from it at both scales.
    const Orientation a = classify_orientation(c.line, c.vp, c.w, c.box);
    OrientationConfig wide;
    wide.tie_px = 8.0 * std::max(s, 1.0 / s);
    if (classify_orientation(c.line, c.vp, c.w, c.box, wide) != a) continue;
    if (std::abs(c.vp.x - c.w / 2) <= wide.tie_px) continue;
    TrajectoryLine scaled = c.line;
    for (auto& p : scaled.points) p = {p.x * s, p.y * s};
    const BBox b{c.box.x1 * s, c.box.y1 * s, c.box.x2 * s, c.box.y2 * s};
    EXPECT_EQ(classify_orientation(scaled, {c.vp.x * s, c.vp.y * s, 1}, c.w * s, b), a) << "trial " << trial;
    ++checked;
  }
  EXPECT_GT(checked, 500);
}

TEST(Orientation, HorizontalInsideIsSideView) {
  std::mt19937_64 rng(107);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const BBox b{100, 100, 300, 400};
    const double y = 100.5 + 299 * unit(rng);
    TrajectoryLine line;
    for (int i = 0; i < 5; ++i) line.points.push_back({100.5 + 199 * unit(rng), y});
    EXPECT_EQ(classify_orientation(line, {640 * unit(rng) * 2, 50, 1}, 1280, b), Orientation::SideView);
  }
}

TEST(OrientTrack, StationaryKeepsLastMovingLabel) {
  Track t;
  t.id = 1;
  for (int f = 0; f < 6; ++f) t.samples.push_back({f, 0, {500, 300, 600, 400}, 1});
  const TrajectoryLine line = line_of(table::through(540));
  const std::vector<bool> still{true, false, false, true, true, false};
  const auto labels = orient_track(t, line, still, {640, 100, 1}, 1280);
  ASSERT_EQ(labels.size(), 6u);
  EXPECT_EQ(labels[0], Orientation::SideView);
  for (int i = 1; i < 6; ++i) EXPECT_EQ(labels[i], Orientation::TurningLeft);
}

TEST(Box3d, ContainmentRandomized) {
  std::mt19937_64 rng(109);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::array<Orientation, 4> all{Orientation::TurningLeft, Orientation::TurningRight,
                                       Orientation::MovingStraight, Orientation::SideView};
  for (int trial = 0; trial < 10000; ++trial) {
    const double x1 = 2000 * unit(rng) - 500, y1 = 1200 * unit(rng) - 200;
    const BBox b{x1, y1, x1 + 400 * unit(rng), y1 + 400 * unit(rng)};
    const VanishingPoint vp{5000 * unit(rng) - 2000, 3000 * unit(rng) - 1500, 1};
    Box3dConfig cfg;
    cfg.depth_ratio = unit(rng);
    cfg.foreshortening = unit(rng);
    const Box3D box = build_box3d(b, all[trial % 4], vp, cfg);
    for (const auto& p : box.corners) {
      ASSERT_TRUE(p.x >= b.x1 && p.x <= b.x2 && p.y >= b.y1 && p.y <= b.y2) << "trial " << trial;
    }
  }
}

TEST(Box3d, VpAtAnchorIsStillTotal) {
  const BBox b{100, 100, 200, 300};
  const Box3D box = build_box3d(b, Orientation::MovingStraight, {150, 300, 1});
  for (const auto& p : box.corners) EXPECT_TRUE(std::isfinite(p.x) && std::isfinite(p.y));
}

TEST(Box3d, ZeroDepthCollapsesToBoxEdges) {
  Box3dConfig cfg;
  cfg.depth_ratio = 0.0;
  const BBox b{100, 100, 200, 300};
  for (auto o : {Orientation::TurningLeft, Orientation::MovingStraight, Orientation::SideView}) {
    const Box3D box = build_box3d(b, o, {400, 20, 1}, cfg);
    for (int i = 0; i < 4; ++i) {
      EXPECT_DOUBLE_EQ(box.corners[i].y, b.y2);
      EXPECT_DOUBLE_EQ(box.corners[i + 4].y, b.y1);
    }
    EXPECT_EQ(box.corners[2], box.corners[1]);
    EXPECT_EQ(box.corners[3], box.corners[0]);
  }
}

TEST(Box3d, SymmetricUnderCentredVp) {
  const BBox b{400, 300, 520, 460};
  const Box3D box = build_box3d(b, Orientation::MovingStraight, {460, 50, 1});
  const double c = 460;
  const std::array<std::pair<int, int>, 4> pairs{{{0, 1}, {3, 2}, {4, 5}, {7, 6}}};
  for (auto [l, r] : pairs) {
    EXPECT_NEAR(c - box.corners[l].x, box.corners[r].x - c, 1e-9);
    EXPECT_NEAR(box.corners[l].y, box.corners[r].y, 1e-9);
  }
}

TEST(Box3d, TurnsSkewOppositeWays) {
  const BBox b{400, 300, 520, 460};
  const VanishingPoint vp{460, 50, 1};
  const Box3D left = build_box3d(b, Orientation::TurningLeft, vp);
  const Box3D right = build_box3d(b, Orientation::TurningRight, vp);
  EXPECT_NEAR(left.corners[2].x - 460, 460 - right.corners[3].x, 1e-9);
  EXPECT_NE(left.corners[2].x, right.corners[2].x);
}

TEST(Box3d, RejectsBadRatios) {
  Box3dConfig cfg;
  cfg.depth_ratio = 1.5;
  EXPECT_THROW(build_box3d({0, 0, 10, 10}, Orientation::SideView, {5, -100, 1}, cfg), Error);
}

TEST(Orientation, OffsetExampleWithWideBox) {
  // vp_x = w/2 + 40, q = M - 60: left of the M - 40 reference.
  const BBox b{400, 300, 600, 400};
  EXPECT_EQ(classify_orientation(line_of(table::through(440)), {680, 100, 1}, 1280, b), Orientation::TurningLeft);
}
