#pragma once

// Synthetic driving scenarios: a ground-truth path, a drifting odometry
// trajectory obtained by chaining perturbed relative poses, covisibility
// counts and optional loop closures.

#include <cstdint>
#include <string_view>
#include <vector>

#include "g2sfusion/geometry.h"
#include "g2sfusion/trajectory.h"

namespace g2sfusion {

enum class PathShape { kStraight, kArc, kFigureEight, kRandomWaypointSpline };
PathShape parse_path_shape(std::string_view name);
std::string_view to_string(PathShape shape);

enum class ScaleDrift { kConstant, kRandomWalk };
ScaleDrift parse_scale_drift(std::string_view name);
std::string_view to_string(ScaleDrift drift);

/// Defaults describe the kitti-like acceptance scenario.
struct ScenarioConfig {
  PathShape shape = PathShape::kRandomWaypointSpline;
  double length = 1000.0;                // m
  double spacing = 1.0;                  // m between frames
  double odom_rot_noise = deg2rad(0.05); // rad per frame and axis
  double odom_trans_noise = 0.01;        // m per frame and axis
  ScaleDrift scale_drift = ScaleDrift::kRandomWalk;
  double scale_constant = 1.0;           // factor for kConstant
  double scale_walk_std = 3e-4;          // per frame for kRandomWalk
  bool loop_closure = false;
  double loop_radius = 10.0;             // m
  int loop_min_gap = 50;                 // frames between loop endpoints
  int covis_base = 200;
  double covis_decay = 0.2;              // per degree of inter-frame rotation
  double arc_radius = 150.0;             // m
  double waypoint_spacing = 120.0;       // m
  double waypoint_turn = deg2rad(60.0);  // max heading change per waypoint
  double pitch_amplitude = 0.0;          // rad, sinusoidal pitch profile
  double pitch_period = 200.0;           // m
  std::uint64_t seed = 0;

  void validate() const;
};

struct Scenario {
  Trajectory gt;
  Trajectory slam;
  std::vector<double> scale_factors;  // per frame, applied to odometry translations
  std::vector<CovisRecord> covis;     // consecutive edges first, then loops
  std::vector<EdgePoseRecord> loops;
  std::vector<OdometryEdge> edges;    // as build_edges() reconstructs them from the files
};

Scenario generate_scenario(const ScenarioConfig& config);

}  // namespace g2sfusion
