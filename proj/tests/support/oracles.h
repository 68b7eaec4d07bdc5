#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <functional>
#include <random>
#include <vector>

#include "g2sfusion/solver.h"

namespace g2sfusion::testing {

struct RandomProblemOptions {
  int min_nodes = 3;
  int max_nodes = 10;
  bool loop = true;
  double g2s_fraction = 0.6;  // chance a free node carries each G2S constraint
  double outlier_shift = 0.0; // extra displacement on G2S translations, metres
};

/// Random scaled pose graph exercising all five terms, state perturbed away
/// from consistency so every residual is non-zero.
FusionProblem random_problem(std::mt19937_64& rng, const RandomProblemOptions& opts = {});

/// Moves every node by the tangent vector xi (kNodeTangentDim per node):
/// R <- exp(d_rot) R, t <- t + d_t, s <- s + d_s.
FusionState retract(const FusionState& state, const Eigen::VectorXd& xi);

/// Central differences of evaluate_residuals().stacked over retract().
Eigen::MatrixXd finite_difference_jacobian(const FusionProblem& problem, const FusionState& state, double h = 1e-6);

/// Free-node columns of the tangent vector: node 0 and fixed nodes dropped,
/// scale columns dropped when scales are frozen.
std::vector<int> free_columns(const FusionProblem& problem);

/// (J^T W J)^-1 over the free columns by full dense inversion, with W the
/// Huber IRLS weights at `state`. Returns each node's world x-y block.
std::vector<Mat2> dense_inverse_covariances(const FusionProblem& problem, const FusionState& state);

/// Coordinate-wise grid search with successive step refinement over the
/// free tangent coordinates, minimising robust_cost. Starts from `start`.
FusionState grid_refinement_minimize(const FusionProblem& problem, const FusionState& start, double initial_step,
                                     double final_step);

}  // namespace g2sfusion::testing
