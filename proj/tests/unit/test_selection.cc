#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "g2sfusion/error.h"
#include "g2sfusion/g2s.h"
#include "g2sfusion/selection.h"
#include "test_support.h"

using namespace g2sfusion;
using namespace g2sfusion::testing;

namespace {

Mat2 random_spd(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat2 a;
  a << n(rng), n(rng), n(rng), n(rng);
  return a * a.transpose() + 0.01 * Mat2::Identity();
}

}  // namespace

TEST(ScaleFactor, Examples) {
  const Mat2 phi = Vec2(0.02 * 0.02, 0.02 * 0.02).asDiagonal();
  EXPECT_NEAR(scale_factor(phi, 0.01), 2.0, 1e-12);
  const Mat2 phi2 = Vec2(0.03 * 0.03, 0.01 * 0.01).asDiagonal();
  EXPECT_NEAR(scale_factor(phi2, 0.01), 2.0, 1e-12);
  EXPECT_EQ(SelectionParams{}.r, 0.01);
  EXPECT_EQ(SelectionParams{}.th_theta_deg, 0.25);
  EXPECT_EQ(SelectionParams{}.th_t, 0.5);
}

TEST(ScaleFactor, DegenerateThrows) {
  try {
    scale_factor(Mat2::Zero(), 0.01);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateCovariance);
  }
}

TEST(SpatialBound, IsotropicCircle) {
  const double sigma = 0.3, n = 1.5;
  const auto b = spatial_bound(sigma * sigma * Mat2::Identity(), rot_z(1.1), n);
  for (int i = 0; i < 36; ++i) EXPECT_NEAR(bound_point(b, deg2rad(10 * i)).norm(), 3 * sigma / n, 1e-12);
}

TEST(SpatialBound, AxisAlignedEllipse) {
  const double a = 0.2, c = 0.05, n = 2.0;
  const auto b = spatial_bound(Vec2(a * a, c * c).asDiagonal(), Mat3::Identity(), n);
  EXPECT_LT((bound_point(b, 0.0) - Vec2(3 * a / n, 0)).norm(), 1e-12);
  EXPECT_LT((bound_point(b, kPi / 2) - Vec2(0, 3 * c / n)).norm(), 1e-12);
}

TEST(SpatialBound, MatchesDirectFormula) {
  std::mt19937_64 rng(31);
  const Mat2 phi = random_spd(rng);
  const double n = 0.7;
  const auto b = spatial_bound(phi, rot_z(deg2rad(40)), n);
  // direct: sqrt via eigendecomposition, rotation by 40 degrees
  Eigen::SelfAdjointEigenSolver<Mat2> es(phi);
  const Mat2 root = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  const double c = std::cos(deg2rad(40)), s = std::sin(deg2rad(40));
  Mat2 rot;
  rot << c, -s, s, c;
  for (int i = 0; i < 360; ++i) {
    const double al = deg2rad(i);
    const Vec2 direct = (3.0 / n) * rot * root * Vec2(std::cos(al), std::sin(al));
    EXPECT_LT((bound_point(b, al) - direct).norm(), 1e-12);
  }
}

TEST(BoundContains, CenterAndBoundarySamples) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const auto b = spatial_bound(random_spd(rng), random_planar_pose(rng).rotation, 0.5 + trial * 0.1);
    EXPECT_TRUE(bound_contains(b, Vec2::Zero()));
    for (int i = 0; i < 360; ++i) {
      const Vec2 p = bound_point(b, deg2rad(i));
      EXPECT_TRUE(bound_contains(b, 0.99 * p));
      EXPECT_FALSE(bound_contains(b, 1.01 * p));
    }
  }
}

TEST(BoundContains, CircleJustOutside) {
  const double rho = 0.5;
  const auto b = spatial_bound((rho / 3.0) * (rho / 3.0) * Mat2::Identity(), Mat3::Identity(), 1.0);
  EXPECT_TRUE(bound_contains(b, Vec2(rho - 1e-6, 0)));
  EXPECT_FALSE(bound_contains(b, Vec2(rho + 1e-6, 0)));
}

TEST(BoundContains, SingularThrowsOffCenter) {
  const auto b = spatial_bound(Vec2(1.0, 0.0).asDiagonal(), Mat3::Identity(), 1.0);
  EXPECT_TRUE(bound_contains(b, Vec2::Zero()));
  try {
    bound_contains(b, Vec2(0.1, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSingularBound);
  }
}

TEST(BoundContains, IsotropicIndependentOfHeading) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(-1, 1);
  const Mat2 phi = 0.04 * Mat2::Identity();
  for (int i = 0; i < 500; ++i) {
    const Vec2 p(u(rng), u(rng));
    const bool ref = bound_contains(spatial_bound(phi, Mat3::Identity(), 1.0), p);
    EXPECT_EQ(bound_contains(spatial_bound(phi, random_planar_pose(rng).rotation, 1.0), p), ref);
  }
}

TEST(BoundContains, MonotoneInCovarianceGrowth) {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> u(-2, 2), g(1.0, 4.0);
  for (int i = 0; i < 500; ++i) {
    const Mat2 phi = random_spd(rng);
    const Rotation r = random_planar_pose(rng).rotation;
    const Vec2 p(u(rng), u(rng));
    if (bound_contains(spatial_bound(phi, r, 1.0), p)) {
      EXPECT_TRUE(bound_contains(spatial_bound(g(rng) * phi, r, 1.0), p));
    }
  }
}

namespace {

struct VocFixture {
  Pose prev{rot_z(0.3), Vec3(10, 5, 0)};
  Pose curr = prev * Pose(rot_z(0.01), Vec3(1.0, 0.02, 0));
  SelectionParams params;
};

}  // namespace

TEST(VocCheck, ExactDeltasPass) {
  VocFixture f;
  // noiseless predictions of a trajectory rigidly offset from the estimate
  const Pose offset(rot_z(0.02), Vec3(0.3, -0.2, 0));
  const G2SDelta dp = extract_delta(f.prev, offset * f.prev);
  const G2SDelta dc = extract_delta(f.curr, offset * f.curr);
  const auto r = voc_check(dp, dc, f.prev, f.curr, f.params);
  EXPECT_TRUE(r.rot_ok);
  EXPECT_TRUE(r.trans_ok);
  EXPECT_NEAR(r.rot_diff_deg, 0.0, 1e-9);
  EXPECT_NEAR(r.dx, 0.0, 1e-9);
  EXPECT_NEAR(r.dy, 0.0, 1e-9);
}

TEST(VocCheck, RotationDiscrepancyRejected) {
  VocFixture f;
  const auto r = voc_check({}, {0, 0, 0, deg2rad(0.3)}, f.prev, f.curr, f.params);
  EXPECT_FALSE(r.rot_ok);
  EXPECT_NEAR(r.rot_diff_deg, 0.3, 1e-9);
  EXPECT_TRUE(r.trans_ok);
}

TEST(VocCheck, LongitudinalDiscrepancyRejected) {
  SelectionParams p;
  const Pose prev = Pose::identity();
  const Pose curr(Mat3::Identity(), Vec3(1, 0, 0));
  const auto r = voc_check({}, {0, 0.6, 0, 0}, prev, curr, p);
  EXPECT_FALSE(r.trans_ok);
  EXPECT_TRUE(r.rot_ok);
  EXPECT_NEAR(r.dx, 0.6, 1e-12);
  EXPECT_TRUE(voc_check({}, {0, 0.4, 0, 0}, prev, curr, p).trans_ok);
  EXPECT_FALSE(voc_check({}, {0, 0, -0.6, 0}, prev, curr, p).trans_ok);
}

namespace {

SelectionInputs inputs_with(const G2SDelta& prev, const G2SDelta& curr, double radius) {
  SelectionInputs in;
  in.frame = 5;
  in.predecessor = 4;
  in.delta_prev = prev;
  in.delta_curr = curr;
  const Mat2 phi = (radius / 3.0) * (radius / 3.0) * Mat2::Identity();
  in.bound_prev = spatial_bound(phi, Mat3::Identity(), 1.0, 4);
  in.bound_curr = spatial_bound(phi, Mat3::Identity(), 1.0, 5);
  in.pose_prev = Pose::identity();
  in.pose_curr = Pose(Mat3::Identity(), Vec3(1, 0, 0));
  return in;
}

}  // namespace

TEST(SelectFrame, OutsideBoundNeverSelected) {
  const auto d = select_frame(inputs_with({}, {5, 2.0, 0, 0}, 1.0), {});
  EXPECT_FALSE(d.in_bound);
  EXPECT_FALSE(d.voc_evaluated);
  EXPECT_FALSE(d.in_cr);
  EXPECT_FALSE(d.in_ct);
}

TEST(SelectFrame, ConsistentPairSelected) {
  const auto d = select_frame(inputs_with({4, 0.1, 0.1, 0}, {5, 0.1, 0.1, 0}, 1.0), {});
  EXPECT_TRUE(d.in_bound);
  EXPECT_TRUE(d.in_cr);
  EXPECT_TRUE(d.in_ct);
  SelectionResult res;
  res.add(d);
  EXPECT_EQ(res.c_r.count(5), 1u);
  EXPECT_EQ(res.c_t.count(5), 1u);
}

TEST(SelectFrame, GateSwitches) {
  const auto in = inputs_with({}, {5, 2.0, 0, 0}, 1.0);
  const auto no_bound = select_frame(in, {}, {false, true});
  EXPECT_TRUE(no_bound.in_bound);
  EXPECT_FALSE(no_bound.in_ct);  // 2 m jump fails the consistency check
  const auto bound_only = select_frame(inputs_with({}, {5, 0.5, 0, 0}, 1.0), {}, {true, false});
  EXPECT_TRUE(bound_only.in_ct);  // 0.5 >= th_t but the check is off
}

TEST(SelectFrame, MissingPredictionThrows) {
  auto in = inputs_with({}, {}, 1.0);
  in.delta_prev.reset();
  try {
    select_frame(in, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingPrediction);
  }
}

TEST(SelectFrame, GateSoundnessOnRandomInputs) {
  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> u(-1.5, 1.5), t(-0.02, 0.02);
  for (int i = 0; i < 2000; ++i) {
    const auto d = select_frame(inputs_with({4, u(rng), u(rng), t(rng)}, {5, u(rng), u(rng), t(rng)}, 1.0), {});
    if (d.in_cr || d.in_ct) {
      EXPECT_TRUE(d.in_bound_prev);
      EXPECT_TRUE(d.in_bound_curr);
    }
  }
}

TEST(SelectionParams, Validate) {
  SelectionParams p;
  EXPECT_NO_THROW(p.validate());
  p.r = 0.0;
  EXPECT_THROW(p.validate(), Error);
}
