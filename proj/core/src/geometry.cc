#include "g2sfusion/geometry.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "g2sfusion/error.h"

namespace g2sfusion {

Pose Pose::from_matrix(const Mat4& m) {
  return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Pose Pose::inverse() const {
  const Rotation rt = rotation.transpose();
  return {rt, -(rt * translation)};
}

Pose Pose::operator*(const Pose& rhs) const {
  return {rotation * rhs.rotation, rotation * rhs.translation + translation};
}

Pose pose_compose(const Pose& a, const Pose& b) { return a * b; }

Pose pose_inverse(const Pose& a) { return a.inverse(); }

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

Vec3 vee(const Mat3& m) { return {m(2, 1), m(0, 2), m(1, 0)}; }

Rotation so3_exp(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const Mat3 k = skew(omega);
  double a;  // sin(t)/t
  double b;  // (1 - cos(t))/t^2
  if (theta2 < 1e-10) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    const double theta = std::sqrt(theta2);
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  return Mat3::Identity() + a * k + b * k * k;
}

Vec3 so3_log(const Rotation& r) {
  const double trace = r.trace();
  if (!(trace > -1.0 + 1e-9)) {
    throw Error(ErrorCode::kAngleNearPi, "rotation angle too close to pi for a stable logarithm");
  }
  const double cos_theta = std::clamp(0.5 * (trace - 1.0), -1.0, 1.0);
  const Vec3 w = 0.5 * vee(r - r.transpose());  // sin(theta) * axis
  const double sin_theta = w.norm();
  const double theta = std::atan2(sin_theta, cos_theta);

  if (theta < 1e-4) {
    const double t2 = theta * theta;
    return w * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0);
  }
  if (cos_theta > -0.9) {
    return w * (theta / sin_theta);
  }

  // Near pi the antisymmetric part vanishes; recover the axis from the
  // symmetric part, (R + R^T)/2 - cos(t) I = (1 - cos(t)) a a^T.
  const Mat3 b = 0.5 * (r + r.transpose()) - cos_theta * Mat3::Identity();
  int i = 0;
  b.diagonal().maxCoeff(&i);
  const double one_minus_cos = 1.0 - cos_theta;
  const double ai = std::sqrt(std::max(b(i, i) / one_minus_cos, 0.0));
  Vec3 axis = b.col(i) / (one_minus_cos * ai);
  axis.normalize();
  if (axis.dot(w) < 0.0) {
    axis = -axis;
  }
  return theta * axis;
}

namespace {

// 1/t^2 - (1 + cos t) / (2 t sin t)
double jacobian_inverse_coefficient(double theta) {
  if (theta < 1e-4) {
    const double t2 = theta * theta;
    return 1.0 / 12.0 + t2 / 720.0;
  }
  return 1.0 / (theta * theta) - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
}

}  // namespace

Mat3 so3_right_jacobian_inverse(const Vec3& phi) {
  const Mat3 k = skew(phi);
  return Mat3::Identity() + 0.5 * k + jacobian_inverse_coefficient(phi.norm()) * k * k;
}

Mat3 so3_left_jacobian_inverse(const Vec3& phi) {
  const Mat3 k = skew(phi);
  return Mat3::Identity() - 0.5 * k + jacobian_inverse_coefficient(phi.norm()) * k * k;
}

Rotation rot_x(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Rotation r;
  r << 1.0, 0.0, 0.0,
       0.0, c, -s,
       0.0, s, c;
  return r;
}

Rotation rot_y(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Rotation r;
  r << c, 0.0, s,
       0.0, 1.0, 0.0,
       -s, 0.0, c;
  return r;
}

Rotation rot_z(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Rotation r;
  r << c, -s, 0.0,
       s, c, 0.0,
       0.0, 0.0, 1.0;
  return r;
}

Rotation from_yaw_pitch_roll(double yaw, double pitch, double roll) {
  return rot_z(yaw) * rot_y(pitch) * rot_x(roll);
}

double azimuth(const Rotation& r) {
  if (std::abs(r(2, 0)) > 1.0 - 1e-9) {
    throw Error(ErrorCode::kGimbalDegenerate, "pitch at +-90 deg, azimuth undefined");
  }
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  return yaw == -kPi ? kPi : yaw;
}

double wrap_angle(double angle) {
  double wrapped = std::remainder(angle, 2.0 * kPi);
  if (wrapped <= -kPi) {
    wrapped += 2.0 * kPi;
  }
  return wrapped;
}

Mat2 rot2(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Mat2 r;
  r << c, -s,
       s, c;
  return r;
}

Mat2 psd_sqrt(const Mat2& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (std::abs(m(0, 1) - m(1, 0)) > 1e-10 * scale) {
    throw Error(ErrorCode::kNotPsd, "matrix is not symmetric");
  }
  const Mat2 sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat2> eig(sym);
  Vec2 lambda = eig.eigenvalues();
  if (lambda.minCoeff() < -1e-8) {
    throw Error(ErrorCode::kNotPsd, "negative eigenvalue " + std::to_string(lambda.minCoeff()));
  }
  lambda = lambda.cwiseMax(0.0).cwiseSqrt();
  const Mat2& v = eig.eigenvectors();
  return v * lambda.asDiagonal() * v.transpose();
}

Pose3Dof project_3dof(const Pose& pose) {
  return {pose.translation.x(), pose.translation.y(), azimuth(pose.rotation)};
}

double orthonormality_error(const Mat3& m) {
  return (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
}

Rotation nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) {
    u.col(2) = -u.col(2);
  }
  return u * v.transpose();
}

}  // namespace g2sfusion
