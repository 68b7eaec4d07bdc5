#pragma once

// Rigid-body primitives shared by every module.
//
// Canonical frame: world z is vertical (up). Azimuth is the yaw of the z-y-x
// (yaw-pitch-roll) decomposition of a rotation, i.e. rotation about world z.
// Dataset loaders convert foreign conventions at the file boundary.

#include <numbers>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace g2sfusion {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// 3x3 special orthogonal matrix. Kept as a plain Eigen matrix so that it
/// composes with the rest of the linear algebra without conversions.
using Rotation = Mat3;

constexpr double kPi = std::numbers::pi;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Rigid transform with homogeneous-matrix semantics: p_world = R * p_body + t.
struct Pose {
  Rotation rotation = Rotation::Identity();
  Vec3 translation = Vec3::Zero();

  Pose() = default;
  Pose(const Rotation& r, const Vec3& t) : rotation(r), translation(t) {}

  static Pose identity() { return {}; }
  static Pose from_matrix(const Mat4& m);

  Mat4 matrix() const;
  Pose inverse() const;

  Pose operator*(const Pose& rhs) const;
  Vec3 operator*(const Vec3& point) const { return rotation * point + translation; }
};

Pose pose_compose(const Pose& a, const Pose& b);
Pose pose_inverse(const Pose& a);

/// Planar reduction of a pose: horizontal position and azimuth.
struct Pose3Dof {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

Mat3 skew(const Vec3& v);
Vec3 vee(const Mat3& m);

/// Rodrigues exponential. Total function.
Rotation so3_exp(const Vec3& omega);

/// Rotation vector of R. Throws kAngleNearPi when trace(R) <= -1 + 1e-9.
Vec3 so3_log(const Rotation& r);

/// Inverse right Jacobian of SO(3): log(A * exp(d)) ~= log(A) + Jr^-1(log A) d.
Mat3 so3_right_jacobian_inverse(const Vec3& phi);

/// Inverse left Jacobian of SO(3): log(exp(d) * A) ~= log(A) + Jl^-1(log A) d.
Mat3 so3_left_jacobian_inverse(const Vec3& phi);

Rotation rot_x(double angle);
Rotation rot_y(double angle);
Rotation rot_z(double angle);

/// Rz(yaw) * Ry(pitch) * Rx(roll).
Rotation from_yaw_pitch_roll(double yaw, double pitch, double roll);

/// Yaw in (-pi, pi]: atan2(R10, R00). Throws kGimbalDegenerate at pitch +-90 deg.
double azimuth(const Rotation& r);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

Mat2 rot2(double angle);

/// Principal square root of a symmetric PSD 2x2 matrix. Eigenvalues in
/// [-1e-8, 0) are clamped to zero; anything more negative throws kNotPsd.
Mat2 psd_sqrt(const Mat2& m);

/// (x, y, azimuth); z, roll and pitch are discarded.
Pose3Dof project_3dof(const Pose& pose);

/// Max-abs deviation of R^T R from identity.
double orthonormality_error(const Mat3& m);

/// Closest rotation in the Frobenius sense (polar decomposition via SVD).
Rotation nearest_rotation(const Mat3& m);

}  // namespace g2sfusion
