#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "g2sfusion/error.h"
#include "g2sfusion/trajectory.h"
#include "test_support.h"

using namespace g2sfusion;
using namespace g2sfusion::testing;

namespace {

Trajectory random_trajectory(std::mt19937_64& rng, int n) {
  std::vector<Pose> poses;
  std::vector<double> stamps;
  for (int k = 0; k < n; ++k) {
    poses.push_back(random_pose(rng));
    stamps.push_back(0.1 * k);
  }
  return Trajectory(poses, stamps);
}

}  // namespace

TEST(TrajectoryIo, KittiIdentityLine) {
  std::istringstream is("1 0 0 0 0 1 0 0 0 0 1 0\n");
  const Trajectory t = read_trajectory(is, PoseFormat::kKitti);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_LT(pose_distance(t.pose(0), Pose::identity()), 1e-15);
}

TEST(TrajectoryIo, TumLine) {
  std::istringstream is("0.0 1 2 3 0 0 0 1\n");
  const Trajectory t = read_trajectory(is, PoseFormat::kTum);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.pose(0).translation, Vec3(1, 2, 3));
  EXPECT_LT((t.pose(0).rotation - Mat3::Identity()).norm(), 1e-15);
  EXPECT_EQ(t.node(0).timestamp.value(), 0.0);
}

TEST(TrajectoryIo, KittiIsCameraConvention) {
  // camera moving along its z axis is the vehicle moving forward
  std::istringstream is("1 0 0 0 0 1 0 0 0 0 1 5\n");
  const Trajectory t = read_trajectory(is, PoseFormat::kKitti);
  EXPECT_LT((t.pose(0).translation - Vec3(5, 0, 0)).norm(), 1e-15);
  EXPECT_LT(pose_distance(canonical_to_kitti(kitti_to_canonical(t.pose(0))), t.pose(0)), 1e-15);
}

TEST(TrajectoryIo, RoundtripBothFormats) {
  std::mt19937_64 rng(11);
  const Trajectory t = random_trajectory(rng, 100);
  for (auto fmt : {PoseFormat::kKitti, PoseFormat::kTum}) {
    std::stringstream ss;
    write_trajectory(ss, t, fmt);
    const Trajectory back = read_trajectory(ss, fmt);
    ASSERT_EQ(back.size(), t.size());
    for (std::size_t k = 0; k < t.size(); ++k) EXPECT_LT(pose_distance(back.pose(k), t.pose(k)), 1e-9);
  }
}

TEST(TrajectoryIo, ParseErrorsCarryLine) {
  std::istringstream is("1 0 0 0 0 1 0 0 0 0 1 0\n1 0 0 0 0 1 0 0 0 0 1\n");
  try {
    read_trajectory(is, PoseFormat::kKitti, "bad.txt");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
  }
  std::istringstream nan("1 0 0 0 0 1 0 0 0 0 1 abc\n");
  EXPECT_THROW(read_trajectory(nan, PoseFormat::kKitti), ParseError);
}

TEST(TrajectoryIo, NonRigidRejectedAndSlightDriftRepaired) {
  std::istringstream far("2 0 0 0 0 1 0 0 0 0 1 0\n");
  try {
    read_trajectory(far, PoseFormat::kKitti);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonRigidPose);
  }
  std::istringstream near("1.00001 0 0 0 0 1 0 0 0 0 1 0\n");
  const Trajectory t = read_trajectory(near, PoseFormat::kKitti);
  EXPECT_LT(orthonormality_error(t.pose(0).rotation), 1e-14);
}

TEST(Trajectory, FromNodesRequiresContiguousIndices) {
  std::vector<TrajectoryNode> nodes(3);
  nodes[0].index = 0;
  nodes[1].index = 2;
  nodes[2].index = 1;
  EXPECT_THROW(Trajectory::from_nodes(nodes), Error);
  nodes[1].index = 1;
  nodes[2].index = 2;
  EXPECT_EQ(Trajectory::from_nodes(nodes).size(), 3u);
}

TEST(RelativePose, Examples) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 100; ++i) {
    const Pose a = random_pose(rng), b = random_pose(rng);
    EXPECT_LT(pose_distance(relative_pose(a, a), Pose::identity()), 1e-12);
    EXPECT_LT(pose_distance(relative_pose(Pose::identity(), a), a), 1e-12);
    EXPECT_LT(pose_distance(pose_compose(a, relative_pose(a, b)), b), 1e-12);
  }
}

TEST(RelativePose, ChainingReconstructsTrajectory) {
  std::mt19937_64 rng(13);
  std::vector<Pose> poses{random_pose(rng)};
  for (int k = 1; k < 200; ++k) poses.push_back(poses.back() * random_pose(rng, 0.1, 1.0));
  std::stringstream ss;
  write_trajectory(ss, Trajectory(poses), PoseFormat::kKitti);
  const Trajectory t = read_trajectory(ss, PoseFormat::kKitti);
  Pose acc = t.pose(0);
  for (std::size_t k = 1; k < t.size(); ++k) {
    acc = acc * relative_pose(t.pose(k - 1), t.pose(k));
    EXPECT_LT(pose_distance(acc, t.pose(k)), 1e-8);
  }
}

namespace {

std::vector<OdometryEdge> edges_with_counts(const std::vector<int>& counts) {
  std::vector<OdometryEdge> edges;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    OdometryEdge e;
    e.i = static_cast<int>(i);
    e.j = e.i + 1;
    e.covis_count = counts[i];
    edges.push_back(e);
  }
  return edges;
}

}  // namespace

TEST(VoWeights, Examples) {
  for (const auto& e : vo_weights(edges_with_counts({100, 100, 100}))) EXPECT_DOUBLE_EQ(e.weight, 1.0);
  const auto w = vo_weights(edges_with_counts({4, 16}));
  EXPECT_NEAR(w[0].weight, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(w[1].weight, 4.0 / 3.0, 1e-15);
}

TEST(VoWeights, MeanIsOneAndScaleInvariant) {
  std::mt19937_64 rng(14);
  std::uniform_int_distribution<int> n(0, 500);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> counts(20);
    for (auto& c : counts) c = n(rng);
    counts[0] = 1 + n(rng);
    const auto w = vo_weights(edges_with_counts(counts));
    double mean = 0.0;
    for (const auto& e : w) mean += e.weight / static_cast<double>(w.size());
    EXPECT_NEAR(mean, 1.0, 1e-12);

    auto scaled = counts;
    for (auto& c : scaled) c *= 7;
    const auto w7 = vo_weights(edges_with_counts(scaled));
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(w7[i].weight, w[i].weight, 1e-12);
  }
}

TEST(VoWeights, Errors) {
  try {
    vo_weights({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyEdgeSet);
  }
  try {
    vo_weights(edges_with_counts({0, 0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAllZeroCovisibility);
  }
}

TEST(BuildEdges, ConsecutiveLoopsAndFallbacks) {
  std::mt19937_64 rng(15);
  std::vector<Pose> poses;
  for (int k = 0; k < 6; ++k) poses.push_back(random_pose(rng));
  const Trajectory t(poses);

  const auto plain = build_edges(t, std::nullopt);
  ASSERT_EQ(plain.size(), 5u);
  for (const auto& e : plain) {
    EXPECT_EQ(e.j, e.i + 1);
    EXPECT_EQ(e.weight, 1.0);
    EXPECT_LT(pose_distance(e.relative, relative_pose(t.pose(e.i), t.pose(e.j))), 1e-15);
  }

  // edge (2,3) missing: gets the median count
  std::vector<CovisRecord> covis{{0, 1, 4}, {1, 2, 16}, {3, 4, 9}, {4, 5, 100}, {0, 5, 25}};
  const Pose loop = random_pose(rng);
  const auto edges = build_edges(t, covis, {{0, 5, loop}});
  ASSERT_EQ(edges.size(), 6u);
  EXPECT_EQ(edges[2].covis_count, 16);
  EXPECT_TRUE(edges.back().is_loop());
  EXPECT_LT(pose_distance(edges.back().relative, loop), 1e-15);
  EXPECT_EQ(edges.back().covis_count, 25);
  double mean = 0.0;
  for (const auto& e : edges) mean += e.weight / 6.0;
  EXPECT_NEAR(mean, 1.0, 1e-12);
}

TEST(CovisIo, Roundtrip) {
  const std::vector<CovisRecord> recs{{0, 1, 10}, {1, 2, 20}, {0, 2, 3}};
  std::stringstream ss;
  write_covisibility(ss, recs);
  const auto back = read_covisibility(ss);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].i, recs[i].i);
    EXPECT_EQ(back[i].j, recs[i].j);
    EXPECT_EQ(back[i].count, recs[i].count);
  }
}

TEST(EdgePoseIo, Roundtrip) {
  std::mt19937_64 rng(16);
  const std::vector<EdgePoseRecord> recs{{0, 10, random_pose(rng)}, {3, 40, random_pose(rng)}};
  std::stringstream ss;
  write_edge_poses(ss, recs);
  const auto back = read_edge_poses(ss);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].i, recs[i].i);
    EXPECT_EQ(back[i].j, recs[i].j);
    EXPECT_LT(pose_distance(back[i].relative, recs[i].relative), 1e-9);
  }
}
