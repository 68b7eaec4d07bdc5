#include "g2sfusion/selection.h"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "g2sfusion/error.h"

namespace g2sfusion {

BoundFrame parse_bound_frame(std::string_view name) {
  if (name == "as_written") return BoundFrame::kAsWritten;
  if (name == "body") return BoundFrame::kBody;
  throw Error(ErrorCode::kConfigInvalid, "unknown bound_frame '" + std::string(name) + "'");
}

std::string_view to_string(BoundFrame frame) {
  return frame == BoundFrame::kAsWritten ? "as_written" : "body";
}

void SelectionParams::validate() const {
  if (!(r > 0.0) || !(th_theta_deg > 0.0) || !(th_t > 0.0) || !(bound_sigma_multiplier > 0.0)) {
    throw Error(ErrorCode::kConfigInvalid, "selection parameters must be positive");
  }
}

double scale_factor(const Mat2& phi_1, double r) {
  if (!(r > 0.0)) {
    throw Error(ErrorCode::kConfigInvalid, "bound radius r must be positive");
  }
  Eigen::SelfAdjointEigenSolver<Mat2> eig(psd_sqrt(phi_1));
  const Vec2 lambda = eig.eigenvalues();
  if (lambda.maxCoeff() < 1e-15) {
    throw Error(ErrorCode::kDegenerateCovariance, "first-frame covariance is zero; cannot scale the bound");
  }
  return lambda.mean() / r;
}

SpatialBound spatial_bound(const Mat2& phi_k, const Rotation& r_k, double n, int frame, double sigma_multiplier,
                           BoundFrame bound_frame) {
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorCode::kDegenerateCovariance, "bound scale factor must be positive");
  }
  Mat2 rot = rot2(azimuth(r_k));
  if (bound_frame == BoundFrame::kBody) rot.transposeInPlace();
  return {frame, (sigma_multiplier / n) * rot * psd_sqrt(phi_k)};
}

Vec2 bound_point(const SpatialBound& bound, double alpha) {
  return bound.m * Vec2(std::cos(alpha), std::sin(alpha));
}

bool bound_contains(const SpatialBound& bound, const Vec2& shift) {
  if (shift.isZero(0.0)) return true;
  const Eigen::JacobiSVD<Mat2> svd(bound.m);
  const Vec2 sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= 1e-14 * sv(0)) {
    throw Error(ErrorCode::kSingularBound, "spatial bound of frame " + std::to_string(bound.frame) + " is singular");
  }
  return (bound.m.inverse() * shift).norm() <= 1.0;
}

VocResult voc_check(const G2SDelta& delta_prev, const G2SDelta& delta_curr, const Pose& t_prev,
                    const Pose& t_curr, const SelectionParams& params) {
  const Pose odom = relative_pose(t_prev, t_curr);
  const Pose corrected = delta_pose(delta_prev).inverse() * odom * delta_pose(delta_curr);

  VocResult out;
  out.rot_diff_deg = rad2deg(azimuth(corrected.rotation * odom.rotation.transpose()));
  const Vec3 diff = corrected.translation - odom.translation;
  out.dx = diff.x();
  out.dy = diff.y();
  out.rot_ok = std::abs(out.rot_diff_deg) < params.th_theta_deg;
  out.trans_ok = std::abs(out.dx) < params.th_t && std::abs(out.dy) < params.th_t;
  return out;
}

FrameDiagnostics select_frame(const SelectionInputs& in, const SelectionParams& params, GateMode gates) {
  if (!in.delta_prev || !in.delta_curr) {
    throw Error(ErrorCode::kMissingPrediction, "frame " + std::to_string(in.frame) + " lacks a prediction pair");
  }
  FrameDiagnostics d;
  d.frame = in.frame;
  d.predecessor = in.predecessor;
  if (gates.spatial_bound) {
    d.in_bound_prev = bound_contains(in.bound_prev, in.delta_prev->shift());
    d.in_bound_curr = bound_contains(in.bound_curr, in.delta_curr->shift());
    d.in_bound = d.in_bound_prev && d.in_bound_curr;
  } else {
    d.in_bound_prev = d.in_bound_curr = d.in_bound = true;
  }
  if (!d.in_bound) return d;

  const VocResult voc = voc_check(*in.delta_prev, *in.delta_curr, in.pose_prev, in.pose_curr, params);
  d.voc_evaluated = true;
  d.rot_diff_deg = voc.rot_diff_deg;
  d.dx = voc.dx;
  d.dy = voc.dy;
  d.in_cr = !gates.odometry_consistency || voc.rot_ok;
  d.in_ct = !gates.odometry_consistency || voc.trans_ok;
  return d;
}

void SelectionResult::add(const FrameDiagnostics& d) {
  if (d.in_cr) c_r.insert(d.frame);
  if (d.in_ct) c_t.insert(d.frame);
  diagnostics.push_back(d);
}

}  // namespace g2sfusion
