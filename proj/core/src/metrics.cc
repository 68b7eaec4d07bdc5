#include "g2sfusion/metrics.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

#include <Eigen/SVD>

#include "g2sfusion/error.h"

namespace g2sfusion {

namespace {

constexpr double kCollinearTolerance = 1e-9;

void check_lengths(const Trajectory& est, const Trajectory& gt) {
  if (est.size() != gt.size() || est.empty()) {
    throw Error(ErrorCode::kLengthMismatch, "estimate has " + std::to_string(est.size()) +
                                                " poses, ground truth " + std::to_string(gt.size()));
  }
}

double percent_below(const std::vector<FrameError>& frames, double FrameError::*field, double threshold) {
  if (frames.empty()) return 0.0;
  const auto count = std::count_if(frames.begin(), frames.end(),
                                   [&](const FrameError& e) { return e.*field < threshold; });
  return 100.0 * static_cast<double>(count) / static_cast<double>(frames.size());
}

double mean_of(const std::vector<FrameError>& frames, double FrameError::*field) {
  if (frames.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& e : frames) sum += e.*field;
  return sum / static_cast<double>(frames.size());
}

}  // namespace

AlignMethod parse_align_method(std::string_view name) {
  if (name == "origin") return AlignMethod::kOrigin;
  if (name == "horn") return AlignMethod::kHorn;
  throw Error(ErrorCode::kConfigInvalid, "unknown alignment '" + std::string(name) + "'");
}

std::string_view to_string(AlignMethod method) { return method == AlignMethod::kOrigin ? "origin" : "horn"; }

Alignment align_origin(const Trajectory& est, const Trajectory& gt) {
  check_lengths(est, gt);
  return {gt.pose(0) * est.pose(0).inverse(), AlignMethod::kOrigin};
}

Alignment align_horn(const Trajectory& est, const Trajectory& gt) {
  check_lengths(est, gt);
  const std::size_t n = est.size();
  if (n < 3) throw Error(ErrorCode::kDegenerateGeometry, "rigid alignment needs at least 3 positions");

  Vec3 ce = Vec3::Zero();
  Vec3 cg = Vec3::Zero();
  for (std::size_t k = 0; k < n; ++k) {
    ce += est.pose(k).translation;
    cg += gt.pose(k).translation;
  }
  ce /= static_cast<double>(n);
  cg /= static_cast<double>(n);

  Mat3 h = Mat3::Zero();
  Mat3 scatter = Mat3::Zero();
  for (std::size_t k = 0; k < n; ++k) {
    const Vec3 a = est.pose(k).translation - ce;
    h += a * (gt.pose(k).translation - cg).transpose();
    scatter += a * a.transpose();
  }
  const Eigen::JacobiSVD<Mat3> spread(scatter);
  const Vec3 sv = spread.singularValues().cwiseSqrt();
  if (!(sv(0) > 0.0) || sv(1) <= kCollinearTolerance * std::max(1.0, sv(0))) {
    throw Error(ErrorCode::kDegenerateGeometry, "positions are collinear; rotation about the line is unobservable");
  }

  const Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  Pose s;
  s.rotation = v * d * u.transpose();
  s.translation = cg - s.rotation * ce;
  return {s, AlignMethod::kHorn};
}

Alignment align(const Trajectory& est, const Trajectory& gt, AlignMethod method) {
  return method == AlignMethod::kOrigin ? align_origin(est, gt) : align_horn(est, gt);
}

std::vector<FrameError> pose_errors(const Trajectory& est, const Trajectory& gt, const Alignment& alignment) {
  check_lengths(est, gt);
  std::vector<FrameError> out;
  out.reserve(est.size());
  for (std::size_t k = 0; k < est.size(); ++k) {
    const Pose dt = gt.pose(k).inverse() * (alignment.s * est.pose(k));
    FrameError e;
    e.theta_deg = std::abs(rad2deg(azimuth(dt.rotation)));
    e.t2d = dt.translation.head<2>().norm();
    e.longitudinal = std::abs(dt.translation.x());
    e.lateral = std::abs(dt.translation.y());
    out.push_back(e);
  }
  return out;
}

ErrorSummary summarize(const std::vector<double>& values) {
  ErrorSummary s;
  if (values.empty()) return s;
  double sum = 0.0;
  double sq = 0.0;
  for (double v : values) {
    sum += v;
    sq += v * v;
  }
  const double n = static_cast<double>(values.size());
  s.mean = sum / n;
  s.rmse = std::sqrt(sq / n);
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  s.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return s;
}

BodyFrameStats body_frame_stats(const Trajectory& est, const Trajectory& gt, const Alignment& alignment,
                                double angle_threshold_deg, double distance_threshold) {
  const auto frames = pose_errors(est, gt, alignment);
  BodyFrameStats b;
  b.azimuth_mean = mean_of(frames, &FrameError::theta_deg);
  b.azimuth_below_pct = percent_below(frames, &FrameError::theta_deg, angle_threshold_deg);
  b.longitudinal_mean = mean_of(frames, &FrameError::longitudinal);
  b.longitudinal_below_pct = percent_below(frames, &FrameError::longitudinal, distance_threshold);
  b.lateral_mean = mean_of(frames, &FrameError::lateral);
  b.lateral_below_pct = percent_below(frames, &FrameError::lateral, distance_threshold);
  return b;
}

MetricsReport evaluate(const Trajectory& est, const Trajectory& gt, AlignMethod method) {
  MetricsReport r;
  r.alignment = align(est, gt, method);
  r.frames = pose_errors(est, gt, r.alignment);
  std::vector<double> theta;
  std::vector<double> t2d;
  theta.reserve(r.frames.size());
  t2d.reserve(r.frames.size());
  for (const auto& e : r.frames) {
    theta.push_back(e.theta_deg);
    t2d.push_back(e.t2d);
  }
  r.theta = summarize(theta);
  r.t2d = summarize(t2d);
  r.body = body_frame_stats(est, gt, r.alignment);
  return r;
}

void write_report(std::ostream& os, const MetricsReport& r) {
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << std::fixed << std::setprecision(6);
  os << "alignment " << to_string(r.alignment.method) << '\n'
     << "frames " << r.frames.size() << '\n'
     << "theta_deg mean " << r.theta.mean << " median " << r.theta.median << " rmse " << r.theta.rmse << '\n'
     << "t2d_m mean " << r.t2d.mean << " median " << r.t2d.median << " rmse " << r.t2d.rmse << '\n'
     << "azimuth_deg mean " << r.body.azimuth_mean << " below_1deg_pct " << r.body.azimuth_below_pct << '\n'
     << "longitudinal_m mean " << r.body.longitudinal_mean << " below_1m_pct " << r.body.longitudinal_below_pct
     << '\n'
     << "lateral_m mean " << r.body.lateral_mean << " below_1m_pct " << r.body.lateral_below_pct << '\n';
  os.flags(flags);
  os.precision(precision);
}

void write_frame_errors_csv(std::ostream& os, const MetricsReport& r) {
  const auto precision = os.precision();
  os << std::setprecision(17);
  os << "k,theta_err_deg,t2d_err_m,longitudinal_m,lateral_m\n";
  for (std::size_t k = 0; k < r.frames.size(); ++k) {
    const auto& e = r.frames[k];
    os << k << ',' << e.theta_deg << ',' << e.t2d << ',' << e.longitudinal << ',' << e.lateral << '\n';
  }
  os.precision(precision);
}

}  // namespace g2sfusion
