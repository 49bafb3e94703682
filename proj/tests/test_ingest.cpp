#include "topview/ingest.hpp"
#include "topview/synth.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>
#include <sstream>

using namespace topview;

namespace {

Detection det(int frame, ObjectClass cls, BBox box, std::optional<int> id = std::nullopt) {
  Detection d;
  d.frame = frame;
  d.t = frame / 25.0;
  d.cls = cls;
  d.bbox = box;
  d.track_id = id;
  return d;
}

Track line_track(int id, int first, int count, Eigen::Vector2d start, Eigen::Vector2d step,
                 ObjectClass cls = ObjectClass::Person) {
  Track t;
  t.id = id;
  t.cls = cls;
  for (int i = 0; i < count; ++i) {
    const Eigen::Vector2d c = start + i * step;
    t.samples.push_back({first + i, (first + i) / 25.0, {c.x() - 20, c.y() - 80, c.x() + 20, c.y()}, 1.0});
  }
  return t;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

synth::Scenario walkers(int agents, int frames) {
  synth::Scenario s;
  s.camera = synth::CameraModel::from_pose(1000, 640, 360, {0, 0, 6}, 0, 10, 0);
  s.frames = frames;
  for (int i = 0; i < agents; ++i) {
    synth::AgentSpec a;
    a.waypoints = {{-4.0 + 2.0 * i, 10.0 + i}, {-4.0 + 2.0 * i, 40.0 + i}};
    s.agents.push_back(a);
  }
  return s;
}

}  // namespace

TEST(Detections, ParseOneLine) {
  const auto d = parse_detections(
      R"({"frame":3,"t":0.12,"class":"person","bbox":[10,20,30,60],"confidence":0.9,"track_id":4})" "\n");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].frame, 3);
  EXPECT_EQ(d[0].cls, ObjectClass::Person);
  EXPECT_EQ(d[0].bbox.x2, 30);
  EXPECT_EQ(d[0].track_id, 4);
  EXPECT_DOUBLE_EQ(d[0].confidence, 0.9);
}

TEST(Detections, TimeFromFrameRate) {
  const auto d = parse_detections(R"({"frame":50,"class":"car","bbox":[0,0,1,1],"confidence":1})", {10.0});
  EXPECT_DOUBLE_EQ(d[0].t, 5.0);
  EXPECT_FALSE(d[0].track_id);
}

TEST(Detections, SchemaErrors) {
  EXPECT_EQ(code_of([] { parse_detections(R"({"frame":1,"class":"person","bbox":[30,0,10,10],"confidence":1})"); }),
            ErrorCode::SchemaError);
  EXPECT_EQ(code_of([] { parse_detections(R"({"frame":1,"class":"zebra","bbox":[0,0,10,10],"confidence":1})"); }),
            ErrorCode::SchemaError);
  EXPECT_EQ(code_of([] { parse_detections(R"({"frame":1,"class":"person","bbox":[0,0,10],"confidence":1})"); }),
            ErrorCode::SchemaError);
  EXPECT_EQ(code_of([] { parse_detections("\n\n"); }), ErrorCode::EmptyInput);
  try {
    parse_detections(std::string(R"({"frame":1,"class":"person","bbox":[0,0,10,10],"confidence":1})") + "\n{\"frame\":2}\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(Detections, SynthFileCountAndOrder) {
  auto s = walkers(5, 200);
  const auto out = synth::emit_scenario(s);
  ASSERT_GE(out.detections.size(), 1000u);
  std::ostringstream file;
  for (const auto& d : out.detections) file << dump_detection(d) << '\n';
  const auto parsed = parse_detections(file.str());
  ASSERT_EQ(parsed.size(), out.detections.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    EXPECT_EQ(parsed[i].frame, out.detections[i].frame);
    EXPECT_EQ(parsed[i].track_id, out.detections[i].track_id);
    EXPECT_EQ(parsed[i].bbox.x1, out.detections[i].bbox.x1);
    EXPECT_EQ(parsed[i].bbox.y2, out.detections[i].bbox.y2);
  }
}

TEST(Tracker, PassThroughIds) {
  const std::vector<Detection> d{det(0, ObjectClass::Person, {0, 0, 10, 10}, 1),
                                 det(1, ObjectClass::Person, {1, 0, 11, 10}, 1),
                                 det(0, ObjectClass::Person, {50, 0, 60, 10}, 2)};
  const auto tracks = assemble_tracks(d);
  ASSERT_EQ(tracks.size(), 2u);
  EXPECT_EQ(tracks[0].id, 1);
  EXPECT_EQ(tracks[0].samples.size(), 2u);
  EXPECT_EQ(tracks[1].samples.size(), 1u);
}

TEST(Tracker, PassThroughMatchesOracleGrouping) {
  const auto out = synth::emit_scenario(walkers(4, 120));
  const auto tracks = assemble_tracks(out.detections);
  std::map<int, std::size_t> oracle;
  for (const auto& d : out.detections) ++oracle[*d.track_id];
  ASSERT_EQ(tracks.size(), oracle.size());
  for (const auto& t : tracks) EXPECT_EQ(t.samples.size(), oracle[t.id]);
}

TEST(Tracker, TwoBoxesMovingApart) {
  std::vector<Detection> d;
  for (int f = 0; f < 50; ++f) {
    d.push_back(det(f, ObjectClass::Person, {300.0 - 3 * f, 200, 340.0 - 3 * f, 300}));
    d.push_back(det(f, ObjectClass::Person, {345.0 + 3 * f, 200, 385.0 + 3 * f, 300}));
  }
  const auto tracks = assemble_tracks(d);
  ASSERT_EQ(tracks.size(), 2u);
  for (const auto& t : tracks) {
    EXPECT_EQ(t.samples.size(), 50u);
    // No switches: each track stays on one side.
    const bool left = t.samples.front().bbox.x1 < 342;
    for (const auto& s : t.samples) EXPECT_EQ(s.bbox.x1 < 342, left);
  }
}

TEST(Tracker, ExpiryAfterMaxAge) {
  TrackerConfig cfg;
  std::vector<Detection> d{det(0, ObjectClass::Car, {0, 0, 50, 50})};
  d.push_back(det(cfg.max_age + 2, ObjectClass::Car, {0, 0, 50, 50}));  // absent for max_age + 1 frames
  EXPECT_EQ(assemble_tracks(d, cfg).size(), 2u);
  d.back().frame = cfg.max_age + 1;  // absent for exactly max_age frames
  EXPECT_EQ(assemble_tracks(d, cfg).size(), 1u);
}

TEST(Tracker, ConservesDetections) {
  auto s = walkers(6, 150);
  s.noise.remove_ids = true;
  s.noise.bbox_sigma = 1.0;
  s.noise.dropout = 0.1;
  const auto out = synth::emit_scenario(s, 5);
  const auto tracks = assemble_tracks(out.detections);
  std::multiset<std::tuple<int, double, double>> in, got;
  for (const auto& d : out.detections) in.insert({d.frame, d.bbox.x1, d.bbox.y1});
  for (const auto& t : tracks)
    for (const auto& x : t.samples) got.insert({x.frame, x.bbox.x1, x.bbox.y1});
  EXPECT_EQ(in, got);
  for (const auto& t : tracks)
    for (std::size_t i = 1; i < t.samples.size(); ++i) EXPECT_LT(t.samples[i - 1].frame, t.samples[i].frame);
}

TEST(Repair, JoinsOcclusionSplit) {
  const auto out = synth::emit_scenario(walkers(1, 100));
  std::vector<Detection> d;
  for (auto x : out.detections) {
    if (x.frame >= 40 && x.frame < 45) continue;
    if (x.frame >= 45) x.track_id = 2;
    d.push_back(x);
  }
  auto tracks = assemble_tracks(d);
  ASSERT_EQ(tracks.size(), 2u);
  const auto repaired = repair_ids(tracks);
  ASSERT_EQ(repaired.size(), 1u);
  EXPECT_EQ(repaired[0].id, 1);
  EXPECT_EQ(repaired[0].samples.size(), 95u);
}

TEST(Repair, ClassGuard) {
  std::vector<Track> tracks{line_track(1, 0, 20, {100, 300}, {4, 0}, ObjectClass::Person),
                            line_track(2, 22, 20, {100 + 22 * 4, 300}, {4, 0}, ObjectClass::Bicycle)};
  EXPECT_EQ(repair_ids(tracks).size(), 2u);
  tracks[1].cls = ObjectClass::Person;
  EXPECT_EQ(repair_ids(tracks).size(), 1u);
}

TEST(Repair, DropsShortTracks) {
  std::vector<Track> tracks{line_track(1, 0, 20, {100, 300}, {4, 0}), line_track(2, 5, 2, {600, 300}, {1, 1})};
  const auto out = repair_ids(tracks);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].id, 1);
}

TEST(Repair, NeverMergesOverlappingTracksAndConservesSamples) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> first(0, 60), len(1, 40);
  std::uniform_real_distribution<double> pos(0, 1000), step(-6, 6);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Track> tracks;
    for (int i = 0; i < 8; ++i)
      tracks.push_back(line_track(i + 1, first(rng), len(rng), {pos(rng), pos(rng)}, {step(rng), step(rng)},
                                  i % 3 == 0 ? ObjectClass::Car : ObjectClass::Person));
    std::size_t kept = 0;
    for (const auto& t : tracks) kept += t.samples.size() >= 3 ? t.samples.size() : 0;
    const auto out = repair_ids(tracks);
    std::size_t total = 0;
    for (const auto& t : out) {
      total += t.samples.size();
      for (std::size_t i = 1; i < t.samples.size(); ++i) ASSERT_LT(t.samples[i - 1].frame, t.samples[i].frame);
    }
    // Merging can only lift fragments over min_len, never lose samples from long tracks.
    EXPECT_GE(total, kept);
    std::size_t all = 0;
    for (const auto& t : tracks) all += t.samples.size();
    EXPECT_LE(total, all);
  }
}

TEST(Smoothing, ConstantPositionCollapses) {
  const Track t = line_track(1, 0, 30, {200, 400}, {0, 0});
  const TrajectoryLine line = smooth_trajectory(t, 5);
  ASSERT_EQ(line.points.size(), 1u);
  EXPECT_EQ(line.points[0], (ImagePoint{200, 400}));
}

TEST(Smoothing, LinePreserved) {
  Track t;
  for (int i = 0; i < 40; ++i) {
    const double x = 3.0 * i + (i % 3) * 0.7;
    t.samples.push_back({i, 0, {x - 10, 2 * x - 30, x + 10, 2 * x}, 1});
  }
  for (int w : {1, 3, 5, 9})
    for (const auto& p : smooth_trajectory(t, w).points) EXPECT_NEAR(p.y, 2 * p.x, 1e-9);
  EXPECT_THROW(smooth_anchors(t, 4), Error);
}

TEST(Smoothing, ReducesNoise) {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> noise(0.0, 2.0);
  double raw = 0, smooth = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Track t;
    for (int i = 0; i < 60; ++i) {
      const double x = 100 + 4.0 * i, y = 600 - 2.0 * i + noise(rng);
      t.samples.push_back({i, 0, {x - 10, y - 50, x + 10, y}, 1});
    }
    const auto s = smooth_anchors(t, 5);
    for (int i = 0; i < 60; ++i) {
      const double truth = 600 - 2.0 * i;
      raw += std::pow(t.samples[i].bbox.y2 - truth, 2);
      smooth += std::pow(s[i].y - truth, 2);
    }
  }
  EXPECT_LT(smooth, raw);
}

TEST(Smoothing, CommutesWithTranslation) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> jitter(-5, 5);
  Track t = line_track(1, 0, 30, {100, 500}, {3, -2});
  for (auto& s : t.samples) {
    const double dx = jitter(rng), dy = jitter(rng);
    s.bbox = {s.bbox.x1 + dx, s.bbox.y1 + dy, s.bbox.x2 + dx, s.bbox.y2 + dy};
  }
  Track moved = t;
  for (auto& s : moved.samples) s.bbox = {s.bbox.x1 + 37.5, s.bbox.y1 - 12.25, s.bbox.x2 + 37.5, s.bbox.y2 - 12.25};
  const auto a = smooth_anchors(t, 7);
  const auto b = smooth_anchors(moved, 7);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(b[i].x - a[i].x, 37.5, 1e-9);
    EXPECT_NEAR(b[i].y - a[i].y, -12.25, 1e-9);
  }
}

TEST(Stationary, FixedBoxAllTrue) {
  const auto flags = stationary_flags(line_track(1, 0, 100, {300, 300}, {0, 0}));
  ASSERT_EQ(flags.size(), 100u);
  for (bool f : flags) EXPECT_TRUE(f);
}

TEST(Stationary, ConstantVelocityAllFalse) {
  const auto flags = stationary_flags(line_track(1, 0, 100, {100, 300}, {5, 0}));
  for (bool f : flags) EXPECT_FALSE(f);
}

TEST(Stationary, StopAndGo) {
  StationaryConfig cfg;
  Track t;
  Eigen::Vector2d c(100, 400);
  const int stop_begin = 60, stop_end = 140;
  for (int f = 0; f < 220; ++f) {
    if (f < stop_begin || f >= stop_end) c.x() += 5;
    t.samples.push_back({f, f / 25.0, {c.x() - 20, c.y() - 80, c.x() + 20, c.y()}, 1});
  }
  const auto flags = stationary_flags(t, cfg);
  for (int f = 1; f < 220; ++f) {
    if (flags[f] == flags[f - 1]) continue;
    const int boundary = flags[f] ? stop_begin : stop_end;
    EXPECT_LE(std::abs(f - boundary), cfg.window) << "transition at " << f;
  }
  EXPECT_TRUE(flags[(stop_begin + stop_end) / 2]);
  EXPECT_FALSE(flags[30]);
  EXPECT_FALSE(flags[200]);
}
