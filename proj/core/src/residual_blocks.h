#pragma once

#include <vector>

#include <Eigen/Core>

#include "g2sfusion/solver.h"

namespace g2sfusion::detail {

using NodeJacobian = Eigen::Matrix<double, 3, kNodeTangentDim>;

/// One weighted residual block touching at most two nodes. Rows beyond
/// `dim` are unused.
struct ResidualBlock {
  Term term = Term::kSlamRotation;
  int dim = 3;
  int node_a = -1;
  int node_b = -1;
  Eigen::Vector3d residual = Eigen::Vector3d::Zero();
  NodeJacobian jac_a = NodeJacobian::Zero();
  NodeJacobian jac_b = NodeJacobian::Zero();
};

/// Blocks ordered by term, then by edge/constraint/node order.
std::vector<ResidualBlock> evaluate_blocks(const FusionProblem& problem, const FusionState& state,
                                           bool with_jacobians);

/// IRLS weight of a block under the problem's robust kernel (1 for
/// non-robust terms).
double robust_weight(const ResidualBlock& block, const Hyperparams& params);

/// Robust cost contribution of a block.
double block_cost(const ResidualBlock& block, const Hyperparams& params);

}  // namespace g2sfusion::detail
