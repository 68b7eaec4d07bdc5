#include "g2sfusion/synth.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "g2sfusion/error.h"

namespace g2sfusion {

namespace {

constexpr int kLoopSpacingFrames = 10;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kConfigInvalid, "scenario: " + what);
}

using Polyline = std::vector<Vec2>;

double polyline_length(const Polyline& pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += (pts[i] - pts[i - 1]).norm();
  return len;
}

Polyline straight_path(double length) { return {Vec2(0.0, 0.0), Vec2(length, 0.0)}; }

// Overshoots by 1 m so the chord polyline is never shorter than the request.
Polyline arc_path(double length, double radius) {
  Polyline pts;
  const double total = length + 1.0;
  const int n = std::max(2, static_cast<int>(std::ceil(total / 0.1)) + 1);
  for (int i = 0; i < n; ++i) {
    const double s = total * i / (n - 1);
    pts.emplace_back(radius * std::sin(s / radius), radius * (1.0 - std::cos(s / radius)));
  }
  return pts;
}

// Lemniscate of Gerono, repeated until long enough; starts heading along +x.
Polyline figure_eight_path(double length, double radius) {
  Polyline pts;
  const double du = 1e-3;
  double len = 0.0;
  for (double u = 0.0;; u += du) {
    const Vec2 p(radius * std::sin(u), radius * std::sin(u) * std::cos(u));
    if (!pts.empty()) len += (p - pts.back()).norm();
    pts.push_back(p);
    if (len > length + 1.0) break;
  }
  return pts;
}

Vec2 catmull_rom(const Vec2& p0, const Vec2& p1, const Vec2& p2, const Vec2& p3, double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  return 0.5 * ((2.0 * p1) + (-p0 + p2) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3);
}

Polyline spline_path(const ScenarioConfig& c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> turn(-c.waypoint_turn, c.waypoint_turn);
  std::uniform_real_distribution<double> stretch(0.75, 1.25);
  Polyline way{Vec2(-c.waypoint_spacing, 0.0), Vec2(0.0, 0.0)};
  double heading = 0.0;
  double reach = 0.0;
  while (reach < c.length + 3.0 * c.waypoint_spacing) {
    heading += turn(rng);
    const double step = c.waypoint_spacing * stretch(rng);
    way.push_back(way.back() + step * Vec2(std::cos(heading), std::sin(heading)));
    reach += step;
  }
  way.push_back(way.back() + (way.back() - way[way.size() - 2]));

  Polyline pts;
  for (std::size_t i = 1; i + 2 < way.size(); ++i) {
    const int samples = std::max(8, static_cast<int>((way[i + 1] - way[i]).norm() / 0.1));
    for (int s = 0; s < samples; ++s) {
      pts.push_back(catmull_rom(way[i - 1], way[i], way[i + 1], way[i + 2], static_cast<double>(s) / samples));
    }
  }
  return pts;
}

// Points at arclength 0, spacing, 2 spacing, ... along the polyline.
Polyline resample(const Polyline& pts, double spacing, int count) {
  Polyline out;
  out.reserve(static_cast<std::size_t>(count));
  std::size_t seg = 1;
  double seg_start = 0.0;
  for (int k = 0; k < count; ++k) {
    const double s = k * spacing;
    while (seg + 1 < pts.size() && seg_start + (pts[seg] - pts[seg - 1]).norm() < s) {
      seg_start += (pts[seg] - pts[seg - 1]).norm();
      ++seg;
    }
    const Vec2 d = pts[seg] - pts[seg - 1];
    const double len = d.norm();
    const double f = len > 0.0 ? (s - seg_start) / len : 0.0;
    out.push_back(pts[seg - 1] + f * d);
  }
  return out;
}

std::vector<Pose> ground_truth(const ScenarioConfig& c, std::mt19937_64& rng) {
  Polyline dense;
  switch (c.shape) {
    case PathShape::kStraight: dense = straight_path(c.length); break;
    case PathShape::kArc: dense = arc_path(c.length, c.arc_radius); break;
    case PathShape::kFigureEight: dense = figure_eight_path(c.length, c.arc_radius); break;
    case PathShape::kRandomWaypointSpline: dense = spline_path(c, rng); break;
  }
  const int count = static_cast<int>(std::floor(c.length / c.spacing + 1e-9)) + 1;
  require(polyline_length(dense) + 1e-9 >= (count - 1) * c.spacing, "path shorter than requested length");
  const Polyline xy = resample(dense, c.spacing, count);

  std::vector<Pose> poses(xy.size());
  double z = 0.0;
  for (std::size_t k = 0; k < xy.size(); ++k) {
    const std::size_t a = k == 0 ? 0 : k - 1;
    const std::size_t b = std::min(k + 1, xy.size() - 1);
    const Vec2 t = xy[b] - xy[a];
    const double yaw = std::atan2(t.y(), t.x());
    const double s = static_cast<double>(k) * c.spacing;
    const double pitch = c.pitch_amplitude * std::sin(2.0 * kPi * s / c.pitch_period);
    if (k > 0) z -= c.spacing * std::sin(pitch);
    poses[k].rotation = from_yaw_pitch_roll(yaw, pitch, 0.0);
    poses[k].translation = Vec3(xy[k].x(), xy[k].y(), z);
  }
  return poses;
}

Pose perturb(const Pose& rel, double scale, double rot_std, double trans_std, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  const Vec3 dr(rot_std * g(rng), rot_std * g(rng), rot_std * g(rng));
  const Vec3 dt(trans_std * g(rng), trans_std * g(rng), trans_std * g(rng));
  return {rel.rotation * so3_exp(dr), scale * rel.translation + dt};
}

}  // namespace

PathShape parse_path_shape(std::string_view name) {
  if (name == "straight") return PathShape::kStraight;
  if (name == "arc") return PathShape::kArc;
  if (name == "figure_eight") return PathShape::kFigureEight;
  if (name == "random_waypoint_spline") return PathShape::kRandomWaypointSpline;
  throw Error(ErrorCode::kConfigInvalid, "unknown path shape '" + std::string(name) + "'");
}

std::string_view to_string(PathShape shape) {
  switch (shape) {
    case PathShape::kStraight: return "straight";
    case PathShape::kArc: return "arc";
    case PathShape::kFigureEight: return "figure_eight";
    case PathShape::kRandomWaypointSpline: return "random_waypoint_spline";
  }
  return "unknown";
}

ScaleDrift parse_scale_drift(std::string_view name) {
  if (name == "constant") return ScaleDrift::kConstant;
  if (name == "random_walk") return ScaleDrift::kRandomWalk;
  throw Error(ErrorCode::kConfigInvalid, "unknown scale drift model '" + std::string(name) + "'");
}

std::string_view to_string(ScaleDrift drift) {
  return drift == ScaleDrift::kConstant ? "constant" : "random_walk";
}

void ScenarioConfig::validate() const {
  require(std::isfinite(length) && length > 0.0, "length must be > 0");
  require(std::isfinite(spacing) && spacing > 0.0, "spacing must be > 0");
  require(length / spacing >= 1.0, "length must cover at least two frames");
  require(odom_rot_noise >= 0.0 && odom_trans_noise >= 0.0, "noise stds must be >= 0");
  require(scale_walk_std >= 0.0, "scale_walk_std must be >= 0");
  require(std::isfinite(scale_constant) && scale_constant > 0.0, "scale_constant must be > 0");
  require(loop_radius > 0.0 && loop_min_gap >= 2, "loop_radius > 0 and loop_min_gap >= 2 required");
  require(covis_base >= 1 && covis_decay >= 0.0, "covis_base >= 1 and covis_decay >= 0 required");
  require(arc_radius > 0.0 && waypoint_spacing > 0.0 && waypoint_turn >= 0.0, "path shape parameters invalid");
  require(pitch_period > 0.0 && std::abs(pitch_amplitude) < kPi / 4.0, "pitch profile invalid");
}

Scenario generate_scenario(const ScenarioConfig& c) {
  c.validate();
  std::mt19937_64 path_rng(c.seed);
  std::mt19937_64 noise_rng(c.seed ^ 0x9e3779b97f4a7c15ULL);

  Scenario out;
  const std::vector<Pose> gt = ground_truth(c, path_rng);
  const std::size_t n = gt.size();

  out.scale_factors.assign(n, c.scale_drift == ScaleDrift::kConstant ? c.scale_constant : 1.0);
  if (c.scale_drift == ScaleDrift::kRandomWalk) {
    std::normal_distribution<double> walk(0.0, c.scale_walk_std);
    for (std::size_t k = 1; k < n; ++k) out.scale_factors[k] = out.scale_factors[k - 1] + walk(noise_rng);
  }

  std::vector<Pose> slam(n);
  slam[0] = gt[0];
  for (std::size_t k = 1; k < n; ++k) {
    const Pose rel = relative_pose(gt[k - 1], gt[k]);
    slam[k] = slam[k - 1] * perturb(rel, out.scale_factors[k], c.odom_rot_noise, c.odom_trans_noise, noise_rng);
    slam[k].rotation = nearest_rotation(slam[k].rotation);
  }

  std::uniform_real_distribution<double> jitter(0.9, 1.1);
  auto covis_count = [&](const Pose& a, const Pose& b) {
    const double angle = rad2deg(so3_log(relative_pose(a, b).rotation).norm());
    const double expected = c.covis_base * std::exp(-c.covis_decay * angle) * jitter(noise_rng);
    return std::max(1, static_cast<int>(std::lround(expected)));
  };
  for (std::size_t k = 1; k < n; ++k) {
    out.covis.push_back({static_cast<int>(k - 1), static_cast<int>(k), covis_count(gt[k - 1], gt[k])});
  }

  if (c.loop_closure) {
    int last = -kLoopSpacingFrames;
    for (int j = c.loop_min_gap; j < static_cast<int>(n); ++j) {
      if (j - last < kLoopSpacingFrames) continue;
      int best = -1;
      double best_dist = c.loop_radius;
      for (int i = 0; i + c.loop_min_gap <= j; ++i) {
        const double d = (gt[static_cast<std::size_t>(i)].translation - gt[static_cast<std::size_t>(j)].translation)
                             .head<2>()
                             .norm();
        if (d < best_dist) {
          best_dist = d;
          best = i;
        }
      }
      if (best < 0) continue;
      const Pose rel = relative_pose(gt[static_cast<std::size_t>(best)], gt[static_cast<std::size_t>(j)]);
      Pose meas = perturb(rel, out.scale_factors[static_cast<std::size_t>(j)], c.odom_rot_noise,
                          c.odom_trans_noise, noise_rng);
      meas.rotation = nearest_rotation(meas.rotation);
      out.loops.push_back({best, j, meas});
      out.covis.push_back({best, j, std::max(1, c.covis_base / 2)});
      last = j;
    }
  }

  out.gt = Trajectory(gt);
  out.slam = Trajectory(slam);
  out.edges = build_edges(out.slam, out.covis, out.loops);
  return out;
}

}  // namespace g2sfusion
