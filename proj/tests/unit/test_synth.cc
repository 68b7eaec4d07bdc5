#include <gtest/gtest.h>

#include <sstream>

#include "g2sfusion/error.h"
#include "g2sfusion/metrics.h"
#include "g2sfusion/synth.h"
#include "test_support.h"

using namespace g2sfusion;
using namespace g2sfusion::testing;

namespace {

ScenarioConfig quiet(double length) {
  ScenarioConfig c;
  c.length = length;
  c.odom_rot_noise = 0.0;
  c.odom_trans_noise = 0.0;
  c.scale_drift = ScaleDrift::kConstant;
  c.scale_constant = 1.0;
  return c;
}

}  // namespace

TEST(Synth, NoiselessSlamEqualsGroundTruth) {
  for (auto shape : {PathShape::kStraight, PathShape::kArc, PathShape::kFigureEight, PathShape::kRandomWaypointSpline}) {
    ScenarioConfig c = quiet(200);
    c.shape = shape;
    const Scenario s = generate_scenario(c);
    ASSERT_EQ(s.slam.size(), s.gt.size());
    for (std::size_t k = 0; k < s.gt.size(); ++k) EXPECT_LT(pose_distance(s.slam.pose(k), s.gt.pose(k)), 1e-9);
  }
}

TEST(Synth, ConstantDriftScalesEverySegment) {
  ScenarioConfig c = quiet(300);
  c.scale_constant = 1.05;
  const Scenario s = generate_scenario(c);
  for (std::size_t k = 1; k < s.gt.size(); ++k) {
    const double g = (s.gt.pose(k).translation - s.gt.pose(k - 1).translation).norm();
    const double m = (s.slam.pose(k).translation - s.slam.pose(k - 1).translation).norm();
    EXPECT_NEAR(m, 1.05 * g, 1e-12 * std::max(1.0, g));
    EXPECT_DOUBLE_EQ(s.scale_factors[k], 1.05);
  }
}

TEST(Synth, SameSeedBitIdentical) {
  ScenarioConfig c;
  c.length = 300;
  c.seed = 17;
  c.loop_closure = true;
  const Scenario a = generate_scenario(c), b = generate_scenario(c);
  std::ostringstream sa, sb;
  write_trajectory(sa, a.slam, PoseFormat::kKitti);
  write_covisibility(sa, a.covis);
  write_edge_poses(sa, a.loops);
  write_trajectory(sb, b.slam, PoseFormat::kKitti);
  write_covisibility(sb, b.covis);
  write_edge_poses(sb, b.loops);
  EXPECT_EQ(sa.str(), sb.str());
  c.seed = 18;
  std::ostringstream sc;
  write_trajectory(sc, generate_scenario(c).slam, PoseFormat::kKitti);
  EXPECT_NE(sc.str().substr(0, 2000), sa.str().substr(0, 2000));
}

TEST(Synth, FirstPoseSharedAndCovisPositive) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ScenarioConfig c;
    c.length = 200;
    c.seed = seed;
    const Scenario s = generate_scenario(c);
    EXPECT_LT(pose_distance(s.slam.pose(0), s.gt.pose(0)), 0.0 + 1e-15);
    for (const auto& r : s.covis) EXPECT_GT(r.count, 0);
    EXPECT_EQ(s.edges.size(), s.gt.size() - 1 + s.loops.size());
  }
}

TEST(Synth, FrameCountFollowsSpacing) {
  ScenarioConfig c = quiet(100);
  c.spacing = 2.0;
  const Scenario s = generate_scenario(c);
  EXPECT_EQ(s.gt.size(), 51u);
  const double total = [&] {
    double d = 0;
    for (std::size_t k = 1; k < s.gt.size(); ++k) d += (s.gt.pose(k).translation - s.gt.pose(k - 1).translation).norm();
    return d;
  }();
  EXPECT_NEAR(total, 100.0, 1.0);
}

TEST(Synth, DriftGrowsWithLength) {
  double short_err = 0, long_err = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    ScenarioConfig c;
    c.seed = seed;
    c.shape = PathShape::kStraight;
    c.length = 100;
    const Scenario a = generate_scenario(c);
    c.length = 1000;
    const Scenario b = generate_scenario(c);
    short_err += pose_errors(a.slam, a.gt, align_origin(a.slam, a.gt)).back().t2d;
    long_err += pose_errors(b.slam, b.gt, align_origin(b.slam, b.gt)).back().t2d;
  }
  EXPECT_GT(long_err, short_err);
}

TEST(Synth, LoopClosuresRespectGapAndRadius) {
  ScenarioConfig c = quiet(1200);
  c.shape = PathShape::kFigureEight;
  c.loop_closure = true;
  const Scenario s = generate_scenario(c);
  ASSERT_FALSE(s.loops.empty());
  for (const auto& l : s.loops) {
    EXPECT_GE(l.j - l.i, c.loop_min_gap);
    EXPECT_LE((s.gt.pose(l.i).translation - s.gt.pose(l.j).translation).norm(), c.loop_radius);
    EXPECT_LT(pose_distance(l.relative, relative_pose(s.gt.pose(l.i), s.gt.pose(l.j))), 1e-9);
  }
}

TEST(Synth, PitchProfileLeavesAzimuthWellDefined) {
  ScenarioConfig c = quiet(400);
  c.pitch_amplitude = deg2rad(3.0);
  const Scenario s = generate_scenario(c);
  double zmax = 0;
  for (const auto& n : s.gt.nodes()) {
    zmax = std::max(zmax, std::abs(n.pose.translation.z()));
    EXPECT_NO_THROW(azimuth(n.pose.rotation));
  }
  EXPECT_GT(zmax, 0.1);
}

TEST(Synth, Validate) {
  ScenarioConfig c;
  c.length = -1;
  EXPECT_THROW(generate_scenario(c), Error);
  EXPECT_EQ(parse_path_shape(to_string(PathShape::kArc)), PathShape::kArc);
  EXPECT_EQ(parse_scale_drift(to_string(ScaleDrift::kConstant)), ScaleDrift::kConstant);
}
