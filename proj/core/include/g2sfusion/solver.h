#pragma once

// Scaled pose-graph fusion of odometry and G2S constraints.
//
// Objective over poses (R_k, t_k) and per-pose scales s_k:
//
//   sum_odom  | w_ij log(R~_ij R_j^T R_i) |^2_{sr}
// + sum_odom  | w_ij (t~_ij - s_j R_i^T (t_j - t_i)) |^2_{st}
// + sum_C_r   | log(R_l^T R~_l R^_l) |^2_{gr}
// + sum_C_t   rho( | t^_l - R~_l^T (t_l - t~_l) |_{diag(gx, gy, 0)} )
// + sum_k     | s_k - s_{k-1} |^2_{ss}
//
// where |e|^2_S = e^T S e: the configured sigmas act directly as weights.
// R~_l, t~_l are the pose a G2S correction (R^_l, t^_l) is expressed about.
// rho is a Huber kernel on the weighted residual norm, applied through
// iteratively reweighted Gauss-Newton.

#include <array>
#include <memory>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "g2sfusion/geometry.h"
#include "g2sfusion/trajectory.h"

namespace g2sfusion {

struct Hyperparams {
  double sigma_r_slam = 0.85 * 0.85;
  double sigma_t_slam = 0.9 * 0.9;
  double sigma_r_g2s = 1.0;
  double sigma_tx_g2s = 0.003 * 0.003;
  double sigma_ty_g2s = 0.005 * 0.005;
  double sigma_s = 10.0 * 10.0;
  double huber_c = 1.0;
  bool huber_on_squared = false;  // rho(|e|^2) instead of rho(|e|)
  int max_iterations = 50;
  double step_tolerance = 1e-9;
  double cost_tolerance = 1e-12;
  double lm_damping_init = 0.0;   // 0 disables damping
  int dense_node_limit = 64;      // free nodes up to which a dense factorization is used

  void validate() const;
};

struct ScaledNode {
  Pose pose;
  double scale = 1.0;
  bool fixed = false;
};

/// G2S orientation constraint: R_l should equal query_rotation * correction.
struct G2SRotationConstraint {
  int frame = 0;
  Rotation query_rotation = Rotation::Identity();
  Rotation correction = Rotation::Identity();  // azimuth-only
};

/// G2S translation constraint: R~^T (t_l - t~) should equal shift in x and y.
struct G2STranslationConstraint {
  int frame = 0;
  Pose query_pose;
  Vec3 shift = Vec3::Zero();  // z ignored (zero weight)
};

struct FusionProblem {
  std::vector<ScaledNode> nodes;
  std::vector<OdometryEdge> slam_edges;
  std::vector<G2SRotationConstraint> g2s_rotations;
  std::vector<G2STranslationConstraint> g2s_translations;
  Hyperparams params;
  bool estimate_scale = true;  // false freezes every scale and drops the smoothness term

  /// Nodes at the trajectory poses, scales 1, node 0 fixed.
  static FusionProblem from_trajectory(const Trajectory& trajectory, std::vector<OdometryEdge> edges,
                                       const Hyperparams& params);

  void validate() const;
};

struct FusionState {
  std::vector<Pose> poses;
  std::vector<double> scales;

  static FusionState from_problem(const FusionProblem& problem);
};

enum class Term { kSlamRotation = 0, kSlamTranslation, kG2SRotation, kG2STranslation, kScaleSmoothness };
constexpr int kNumTerms = 5;
std::string_view to_string(Term term);

/// Tangent coordinates per node: [d_rot(3), d_t(3), d_s(1)]. Rotations are
/// perturbed on the left, R <- exp(d_rot) R.
constexpr int kNodeTangentDim = 7;

struct ResidualSlice {
  int offset = 0;
  int length = 0;
};

struct Residuals {
  Eigen::VectorXd stacked;                      // weighted, no Huber
  std::array<ResidualSlice, kNumTerms> slices;  // indexed by Term
};

Residuals evaluate_residuals(const FusionProblem& problem, const FusionState& state);

/// Jacobian of evaluate_residuals().stacked w.r.t. the tangent coordinates
/// of every node (fixed ones included), kNodeTangentDim columns per node.
Eigen::MatrixXd dense_jacobian(const FusionProblem& problem, const FusionState& state);

/// 1 below c, c / norm above.
double huber_irls_weight(double residual_norm, double c);
double huber_rho(double x, double c);

using TermCosts = std::array<double, kNumTerms>;

/// Robust objective split by term: 0.5 |e|^2 per least-squares block and
/// rho(.) per G2S translation block.
TermCosts term_costs(const FusionProblem& problem, const FusionState& state);
double robust_cost(const FusionProblem& problem, const FusionState& state);

enum class TerminationReason { kStepTolerance, kCostTolerance, kMaxIterations, kDampingExhausted };
std::string_view to_string(TerminationReason reason);

struct SolverReport {
  int iterations = 0;
  std::vector<double> cost_history;  // initial cost first
  TermCosts final_terms{};
  bool converged = false;
  TerminationReason termination_reason = TerminationReason::kMaxIterations;
};

struct SolveResult {
  FusionState state;
  SolverReport report;
};

/// Symbolic structures (block pattern, fill-reducing ordering) kept between
/// calls on problems sharing one graph: same node count, fixed flags, edges
/// and scale switch. A mismatching problem rebuilds them. Not thread-safe.
class SolverWorkspace {
 public:
  SolverWorkspace();
  ~SolverWorkspace();
  SolverWorkspace(SolverWorkspace&&) noexcept;
  SolverWorkspace& operator=(SolverWorkspace&&) noexcept;

  struct Impl;
  Impl& impl() { return *impl_; }

 private:
  std::unique_ptr<Impl> impl_;
};

/// Iteratively reweighted Gauss-Newton from the node values in `problem`.
/// Throws kSingularSystem or kNonFiniteCost.
SolveResult gauss_newton_solve(const FusionProblem& problem, SolverWorkspace* workspace = nullptr);

/// Per-node 2x2 world x-y block of (J^T W J)^-1 at `state`, with Huber
/// weights evaluated there. Fixed nodes report zero.
std::vector<Mat2> marginal_xy_covariances(const FusionProblem& problem, const FusionState& state,
                                          SolverWorkspace* workspace = nullptr);

/// Marginals of the odometry-only problem (terms 1, 2, 5) at the input
/// trajectory with unit scales and node 0 fixed.
std::vector<Mat2> slam_only_covariances(const Trajectory& trajectory, const std::vector<OdometryEdge>& edges,
                                        const Hyperparams& params);

}  // namespace g2sfusion
