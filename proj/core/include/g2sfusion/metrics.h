#pragma once

// Absolute trajectory errors after a rigid alignment of the estimate to the
// ground truth: dT_k = gt_k^-1 * S * est_k.

#include <iosfwd>
#include <string_view>
#include <vector>

#include "g2sfusion/geometry.h"
#include "g2sfusion/trajectory.h"

namespace g2sfusion {

enum class AlignMethod { kOrigin, kHorn };
AlignMethod parse_align_method(std::string_view name);
std::string_view to_string(AlignMethod method);

struct Alignment {
  Pose s;  // maps the estimate into the ground-truth frame
  AlignMethod method = AlignMethod::kOrigin;
};

/// S = gt[0] * est[0]^-1. Throws kLengthMismatch.
Alignment align_origin(const Trajectory& est, const Trajectory& gt);

/// Least-squares rigid alignment of all positions (no scale). Throws
/// kLengthMismatch, or kDegenerateGeometry for fewer than 3 or collinear
/// positions.
Alignment align_horn(const Trajectory& est, const Trajectory& gt);

Alignment align(const Trajectory& est, const Trajectory& gt, AlignMethod method);

struct FrameError {
  double theta_deg = 0.0;     // |azimuth(dR)|
  double t2d = 0.0;           // m
  double longitudinal = 0.0;  // m, |e_x| in the ground-truth body frame
  double lateral = 0.0;       // m, |e_y|
};

std::vector<FrameError> pose_errors(const Trajectory& est, const Trajectory& gt, const Alignment& alignment);

struct ErrorSummary {
  double mean = 0.0;
  double median = 0.0;
  double rmse = 0.0;
};

ErrorSummary summarize(const std::vector<double>& values);

struct BodyFrameStats {
  double azimuth_mean = 0.0;        // deg
  double azimuth_below_pct = 0.0;   // % of frames under the angle threshold
  double longitudinal_mean = 0.0;   // m
  double longitudinal_below_pct = 0.0;
  double lateral_mean = 0.0;        // m
  double lateral_below_pct = 0.0;
};

BodyFrameStats body_frame_stats(const Trajectory& est, const Trajectory& gt, const Alignment& alignment,
                                double angle_threshold_deg = 1.0, double distance_threshold = 1.0);

struct MetricsReport {
  Alignment alignment;
  std::vector<FrameError> frames;
  ErrorSummary theta;
  ErrorSummary t2d;
  BodyFrameStats body;
};

MetricsReport evaluate(const Trajectory& est, const Trajectory& gt, AlignMethod method);

/// Human-readable summary block.
void write_report(std::ostream& os, const MetricsReport& report);

/// "k,theta_err_deg,t2d_err_m,longitudinal_m,lateral_m" with a header row.
void write_frame_errors_csv(std::ostream& os, const MetricsReport& report);

}  // namespace g2sfusion
