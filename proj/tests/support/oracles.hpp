// Independent reference computations shared by the unit and acceptance tests.
#ifndef TOPVIEW_TESTS_ORACLES_HPP
#define TOPVIEW_TESTS_ORACLES_HPP

#include "topview/analytics.hpp"
#include "topview/geometry.hpp"
#include "topview/synth.hpp"

#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <random>
#include <set>
#include <tuple>
#include <vector>

namespace topview::oracle {

/// Random H with entries in [-1, 1], h22 = 1, together with four source points in
/// the unit square plus a fifth one, all kept well away from its horizon.
struct RandomHomography {
  Eigen::Matrix3d h;
  std::array<Eigen::Vector2d, 5> points;
};

inline Eigen::Vector2d apply_h(const Eigen::Matrix3d& h, const Eigen::Vector2d& p) {
  const Eigen::Vector3d q = h * Eigen::Vector3d(p.x(), p.y(), 1.0);
  return q.head<2>() / q.z();
}

inline bool general_position(const std::array<Eigen::Vector2d, 4>& p, double tol) {
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      for (int k = j + 1; k < 4; ++k) {
        const Eigen::Vector2d a = p[j] - p[i];
        const Eigen::Vector2d b = p[k] - p[i];
        if (std::abs(a.x() * b.y() - a.y() * b.x()) < tol * a.norm() * b.norm()) return false;
      }
  return true;
}

inline RandomHomography random_homography(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (;;) {
    RandomHomography r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.h(i, j) = entry(rng);
    r.h(2, 2) = 1.0;
    if (std::abs(r.h.determinant()) < 0.1) continue;
    for (auto& p : r.points) p = {unit(rng), unit(rng)};
    bool ok = true;
    for (const auto& p : r.points) ok = ok && std::abs(r.h.row(2).dot(Eigen::Vector3d(p.x(), p.y(), 1))) > 0.25;
    if (!ok) continue;
    std::array<Eigen::Vector2d, 4> src{r.points[0], r.points[1], r.points[2], r.points[3]};
    std::array<Eigen::Vector2d, 4> dst;
    for (int i = 0; i < 4; ++i) dst[i] = apply_h(r.h, src[i]);
    if (!general_position(src, 0.05) || !general_position(dst, 0.05)) continue;
    return r;
  }
}

inline double cross_ratio(const std::array<Eigen::Vector2d, 4>& p) {
  const Eigen::Vector2d dir = (p[3] - p[0]).normalized();
  std::array<double, 4> t;
  for (int i = 0; i < 4; ++i) t[i] = (p[i] - p[0]).dot(dir);
  return ((t[2] - t[0]) * (t[3] - t[1])) / ((t[2] - t[1]) * (t[3] - t[0]));
}

/// Least-squares similarity (rotation, uniform scale, translation) taking `from`
/// onto `to`; returns the RMS residual.
inline double similarity_rms(const std::vector<Eigen::Vector2d>& from, const std::vector<Eigen::Vector2d>& to) {
  Eigen::Matrix2Xd a(2, from.size());
  Eigen::Matrix2Xd b(2, to.size());
  for (std::size_t i = 0; i < from.size(); ++i) {
    a.col(i) = from[i];
    b.col(i) = to[i];
  }
  const Eigen::Matrix3d t = Eigen::umeyama(a, b, true);
  const Eigen::Matrix2Xd mapped = (t.topLeftCorner<2, 2>() * a).colwise() + t.topRightCorner<2, 1>();
  return std::sqrt((mapped - b).colwise().squaredNorm().mean());
}

/// Brute-force violation scan: every frame, every person pair, double loop.
struct BruteEvent {
  int frame, end_frame, a, b;
  double distance;
  auto key() const { return std::tie(frame, end_frame, a, b); }
  friend bool operator<(const BruteEvent& x, const BruteEvent& y) { return x.key() < y.key(); }
};

inline std::vector<BruteEvent> brute_force_violations(const std::vector<TokenStream>& streams, double m,
                                                      double threshold, int min_duration) {
  int lo = 1 << 30, hi = -(1 << 30);
  for (const auto& s : streams)
    for (const auto& o : s.states) {
      lo = std::min(lo, o.frame);
      hi = std::max(hi, o.frame);
    }
  const auto state_at = [](const TokenStream& s, int f) -> const BevObject* {
    for (const auto& o : s.states)
      if (o.frame == f) return &o;
    return nullptr;
  };
  std::vector<BruteEvent> events;
  for (std::size_t i = 0; i < streams.size(); ++i)
    for (std::size_t j = 0; j < streams.size(); ++j) {
      const auto& si = streams[i];
      const auto& sj = streams[j];
      if (si.track_id >= sj.track_id) continue;
      if (si.cls != ObjectClass::Person || sj.cls != ObjectClass::Person) continue;
      bool open = false;
      BruteEvent cur{};
      for (int f = lo; f <= hi + 1; ++f) {
        const BevObject* p = f <= hi ? state_at(si, f) : nullptr;
        const BevObject* q = f <= hi ? state_at(sj, f) : nullptr;
        double d = 1e300;
        if (p && q) d = m * std::hypot(p->position.u - q->position.u, p->position.v - q->position.v);
        if (d < threshold) {
          if (!open) cur = {f, f, si.track_id, sj.track_id, d};
          cur.end_frame = f;
          cur.distance = std::min(cur.distance, d);
          open = true;
        } else if (open) {
          if (cur.end_frame - cur.frame + 1 >= min_duration) events.push_back(cur);
          open = false;
        }
      }
    }
  std::sort(events.begin(), events.end());
  return events;
}


/// Twenty walkers on straight lines through a shared plaza, with a few dropped
/// frames and two cyclists mixed in. Positions are BEV units (2 units per metre).
inline std::vector<TokenStream> scripted_crowd(std::uint64_t seed = 2024) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0, 2 * M_PI), speed(0.02, 0.12), jitter(-4, 4);
  std::uniform_int_distribution<int> start(0, 60), drop(0, 19);
  std::vector<TokenStream> crowd;
  for (int id = 1; id <= 22; ++id) {
    TokenStream s;
    s.track_id = id;
    s.cls = id > 20 ? ObjectClass::Bicycle : ObjectClass::Person;
    const double a = angle(rng), v = speed(rng);
    const Eigen::Vector2d centre(20 + jitter(rng), 20 + jitter(rng));
    const Eigen::Vector2d dir(std::cos(a), std::sin(a));
    const int first = start(rng);
    const int len = 80 + start(rng);
    for (int f = first; f < first + len; ++f) {
      if (drop(rng) == 0) continue;
      BevObject o;
      o.track_id = id;
      o.cls = s.cls;
      o.frame = f;
      o.t = f / 25.0;
      const Eigen::Vector2d p = centre + (f - first - len / 2.0) * v * dir;
      o.position = {p.x(), p.y()};
      s.states.push_back(o);
    }
    crowd.push_back(std::move(s));
  }
  return crowd;
}

}  // namespace topview::oracle

#endif  // TOPVIEW_TESTS_ORACLES_HPP
