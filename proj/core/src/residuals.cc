#include <cmath>

#include "g2sfusion/error.h"
#include "g2sfusion/solver.h"
#include "residual_blocks.h"

namespace g2sfusion {

namespace detail {

namespace {

constexpr int kRot = 0;
constexpr int kTrans = 3;
constexpr int kScale = 6;

void add_slam_rotation(const OdometryEdge& e, const FusionState& s, double w, bool jac,
                       std::vector<ResidualBlock>& out) {
  const Rotation& ri = s.poses[static_cast<std::size_t>(e.i)].rotation;
  const Rotation& rj = s.poses[static_cast<std::size_t>(e.j)].rotation;
  const Vec3 phi = so3_log(e.relative.rotation * rj.transpose() * ri);

  ResidualBlock b;
  b.term = Term::kSlamRotation;
  b.node_a = e.i;
  b.node_b = e.j;
  b.residual = w * phi;
  if (jac) {
    const Mat3 d = w * so3_right_jacobian_inverse(phi) * ri.transpose();
    b.jac_a.block<3, 3>(0, kRot) = d;
    b.jac_b.block<3, 3>(0, kRot) = -d;
  }
  out.push_back(b);
}

void add_slam_translation(const OdometryEdge& e, const FusionState& s, double w, bool jac,
                          std::vector<ResidualBlock>& out) {
  const Pose& pi = s.poses[static_cast<std::size_t>(e.i)];
  const Pose& pj = s.poses[static_cast<std::size_t>(e.j)];
  const double sj = s.scales[static_cast<std::size_t>(e.j)];
  const Vec3 d = pj.translation - pi.translation;
  const Mat3 rit = pi.rotation.transpose();
  const Vec3 local = rit * d;

  ResidualBlock b;
  b.term = Term::kSlamTranslation;
  b.node_a = e.i;
  b.node_b = e.j;
  b.residual = w * (e.relative.translation - sj * local);
  if (jac) {
    b.jac_a.block<3, 3>(0, kRot) = -w * sj * rit * skew(d);
    b.jac_a.block<3, 3>(0, kTrans) = w * sj * rit;
    b.jac_b.block<3, 3>(0, kTrans) = -w * sj * rit;
    b.jac_b.block<3, 1>(0, kScale) = -w * local;
  }
  out.push_back(b);
}

void add_g2s_rotation(const G2SRotationConstraint& c, const FusionState& s, double w, bool jac,
                      std::vector<ResidualBlock>& out) {
  const Rotation& rl = s.poses[static_cast<std::size_t>(c.frame)].rotation;
  const Vec3 phi = so3_log(rl.transpose() * c.query_rotation * c.correction);

  ResidualBlock b;
  b.term = Term::kG2SRotation;
  b.node_a = c.frame;
  b.residual = w * phi;
  if (jac) {
    b.jac_a.block<3, 3>(0, kRot) = -w * so3_left_jacobian_inverse(phi) * rl.transpose();
  }
  out.push_back(b);
}

void add_g2s_translation(const G2STranslationConstraint& c, const FusionState& s, const Vec3& w, bool jac,
                         std::vector<ResidualBlock>& out) {
  const Vec3& tl = s.poses[static_cast<std::size_t>(c.frame)].translation;
  const Mat3 qt = c.query_pose.rotation.transpose();
  const Vec3 raw = c.shift - qt * (tl - c.query_pose.translation);

  ResidualBlock b;
  b.term = Term::kG2STranslation;
  b.node_a = c.frame;
  b.residual = w.asDiagonal() * raw;
  if (jac) {
    b.jac_a.block<3, 3>(0, kTrans) = -(w.asDiagonal() * qt);
  }
  out.push_back(b);
}

}  // namespace

std::vector<ResidualBlock> evaluate_blocks(const FusionProblem& problem, const FusionState& state,
                                           bool with_jacobians) {
  const Hyperparams& p = problem.params;
  std::vector<ResidualBlock> out;
  out.reserve(2 * problem.slam_edges.size() + problem.g2s_rotations.size() + problem.g2s_translations.size() +
              problem.nodes.size());

  const double sr = std::sqrt(p.sigma_r_slam);
  for (const auto& e : problem.slam_edges) add_slam_rotation(e, state, e.weight * sr, with_jacobians, out);
  const double st = std::sqrt(p.sigma_t_slam);
  for (const auto& e : problem.slam_edges) add_slam_translation(e, state, e.weight * st, with_jacobians, out);
  const double gr = std::sqrt(p.sigma_r_g2s);
  for (const auto& c : problem.g2s_rotations) add_g2s_rotation(c, state, gr, with_jacobians, out);
  const Vec3 gt(std::sqrt(p.sigma_tx_g2s), std::sqrt(p.sigma_ty_g2s), 0.0);
  for (const auto& c : problem.g2s_translations) add_g2s_translation(c, state, gt, with_jacobians, out);

  if (problem.estimate_scale) {
    const double ss = std::sqrt(p.sigma_s);
    for (std::size_t k = 1; k < problem.nodes.size(); ++k) {
      ResidualBlock b;
      b.term = Term::kScaleSmoothness;
      b.dim = 1;
      b.node_a = static_cast<int>(k);
      b.node_b = static_cast<int>(k - 1);
      b.residual(0) = ss * (state.scales[k] - state.scales[k - 1]);
      if (with_jacobians) {
        b.jac_a(0, kScale) = ss;
        b.jac_b(0, kScale) = -ss;
      }
      out.push_back(b);
    }
  }
  return out;
}

double robust_weight(const ResidualBlock& block, const Hyperparams& params) {
  if (block.term != Term::kG2STranslation) return 1.0;
  const double sq = block.residual.head(block.dim).squaredNorm();
  if (params.huber_on_squared) {
    // d/de rho(|e|^2) = 2 rho'(|e|^2) e, matched by 0.5 w |e|^2.
    return 2.0 * (sq < params.huber_c ? sq : params.huber_c);
  }
  return huber_irls_weight(std::sqrt(sq), params.huber_c);
}

double block_cost(const ResidualBlock& block, const Hyperparams& params) {
  const double sq = block.residual.head(block.dim).squaredNorm();
  if (block.term != Term::kG2STranslation) return 0.5 * sq;
  return params.huber_on_squared ? huber_rho(sq, params.huber_c) : huber_rho(std::sqrt(sq), params.huber_c);
}

}  // namespace detail

double huber_irls_weight(double residual_norm, double c) {
  return residual_norm < c ? 1.0 : c / residual_norm;
}

double huber_rho(double x, double c) {
  const double ax = std::abs(x);
  return ax < c ? 0.5 * x * x : c * (ax - 0.5 * c);
}

std::string_view to_string(Term term) {
  switch (term) {
    case Term::kSlamRotation: return "slam_rotation";
    case Term::kSlamTranslation: return "slam_translation";
    case Term::kG2SRotation: return "g2s_rotation";
    case Term::kG2STranslation: return "g2s_translation";
    case Term::kScaleSmoothness: return "scale_smoothness";
  }
  return "unknown";
}

Residuals evaluate_residuals(const FusionProblem& problem, const FusionState& state) {
  const auto blocks = detail::evaluate_blocks(problem, state, false);
  Residuals out;
  int total = 0;
  for (const auto& b : blocks) total += b.dim;
  out.stacked.resize(total);
  out.slices.fill({});
  int offset = 0;
  for (const auto& b : blocks) {
    auto& slice = out.slices[static_cast<std::size_t>(b.term)];
    if (slice.length == 0) slice.offset = offset;
    slice.length += b.dim;
    out.stacked.segment(offset, b.dim) = b.residual.head(b.dim);
    offset += b.dim;
  }
  // Empty terms point at the end of the preceding term.
  int cursor = 0;
  for (auto& slice : out.slices) {
    if (slice.length == 0) slice.offset = cursor;
    cursor = slice.offset + slice.length;
  }
  return out;
}

Eigen::MatrixXd dense_jacobian(const FusionProblem& problem, const FusionState& state) {
  const auto blocks = detail::evaluate_blocks(problem, state, true);
  int rows = 0;
  for (const auto& b : blocks) rows += b.dim;
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(rows, kNodeTangentDim * static_cast<int>(problem.nodes.size()));
  int row = 0;
  for (const auto& b : blocks) {
    if (b.node_a >= 0) j.block(row, kNodeTangentDim * b.node_a, b.dim, kNodeTangentDim) += b.jac_a.topRows(b.dim);
    if (b.node_b >= 0) j.block(row, kNodeTangentDim * b.node_b, b.dim, kNodeTangentDim) += b.jac_b.topRows(b.dim);
    row += b.dim;
  }
  return j;
}

TermCosts term_costs(const FusionProblem& problem, const FusionState& state) {
  TermCosts costs{};
  for (const auto& b : detail::evaluate_blocks(problem, state, false)) {
    costs[static_cast<std::size_t>(b.term)] += detail::block_cost(b, problem.params);
  }
  return costs;
}

double robust_cost(const FusionProblem& problem, const FusionState& state) {
  double total = 0.0;
  for (double c : term_costs(problem, state)) total += c;
  return total;
}

}  // namespace g2sfusion
