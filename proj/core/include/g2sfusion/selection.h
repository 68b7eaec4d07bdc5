#pragma once

// Coarse-to-fine validity gate for G2S predictions.
//
// Coarse: the body-frame shift of a prediction must lie inside an ellipse
// built from the marginal x-y covariance of the current trajectory estimate,
//   M = (k / n) * Rot(azimuth(R)) * Phi^(1/2),  contained iff |M^-1 p| <= 1,
// with k the sigma multiplier (3) and n a scale fixed from the first frame.
// Fine: the relative pose between two consecutive corrected poses must agree
// with the odometry relative pose in azimuth and in both horizontal axes.

#include <optional>
#include <set>
#include <string_view>
#include <vector>

#include "g2sfusion/g2s.h"
#include "g2sfusion/geometry.h"

namespace g2sfusion {

/// How the world-frame covariance ellipse is rotated before testing a
/// body-frame shift: kAsWritten applies Rot(azimuth), kBody its transpose.
enum class BoundFrame { kAsWritten, kBody };

BoundFrame parse_bound_frame(std::string_view name);
std::string_view to_string(BoundFrame frame);

struct SelectionParams {
  double r = 0.01;               // m, first-frame bound radius
  double th_theta_deg = 0.25;    // deg
  double th_t = 0.5;             // m
  double bound_sigma_multiplier = 3.0;
  BoundFrame bound_frame = BoundFrame::kAsWritten;

  void validate() const;
};

struct SpatialBound {
  int frame = 0;
  Mat2 m = Mat2::Zero();
};

/// n = mean(eigenvalues of Phi_1^(1/2)) / r. Throws kDegenerateCovariance
/// when both eigenvalues are below 1e-15.
double scale_factor(const Mat2& phi_1, double r);

SpatialBound spatial_bound(const Mat2& phi_k, const Rotation& r_k, double n, int frame = 0,
                           double sigma_multiplier = 3.0, BoundFrame bound_frame = BoundFrame::kAsWritten);

/// Boundary point M * (cos a, sin a).
Vec2 bound_point(const SpatialBound& bound, double alpha);

/// Closed membership test. The origin is inside every bound, degenerate or
/// not; any other point against a singular M throws kSingularBound.
bool bound_contains(const SpatialBound& bound, const Vec2& shift);

struct VocResult {
  bool rot_ok = false;
  bool trans_ok = false;
  double rot_diff_deg = 0.0;
  double dx = 0.0;  // m
  double dy = 0.0;  // m
};

VocResult voc_check(const G2SDelta& delta_prev, const G2SDelta& delta_curr, const Pose& t_prev,
                    const Pose& t_curr, const SelectionParams& params);

/// Which gates are active (ablation switches).
struct GateMode {
  bool spatial_bound = true;
  bool odometry_consistency = true;
};

struct FrameDiagnostics {
  int frame = 0;
  int predecessor = -1;
  bool in_bound_prev = false;
  bool in_bound_curr = false;
  bool in_bound = false;   // both bound checks passed (or the gate is off)
  bool voc_evaluated = false;
  double rot_diff_deg = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  bool in_cr = false;
  bool in_ct = false;
};

struct SelectionInputs {
  int frame = 0;
  int predecessor = 0;
  std::optional<G2SDelta> delta_prev;
  std::optional<G2SDelta> delta_curr;
  SpatialBound bound_prev;
  SpatialBound bound_curr;
  Pose pose_prev;
  Pose pose_curr;
};

/// Gate for one frame: C_r / C_t membership requires both bound checks and
/// the respective consistency check. Throws kMissingPrediction when either
/// delta is absent.
FrameDiagnostics select_frame(const SelectionInputs& in, const SelectionParams& params, GateMode gates = {});

struct SelectionResult {
  std::set<int> c_r;
  std::set<int> c_t;
  std::vector<FrameDiagnostics> diagnostics;

  void add(const FrameDiagnostics& d);
};

}  // namespace g2sfusion
