#include "g2sfusion/solver.h"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include <spdlog/spdlog.h>

#include "g2sfusion/error.h"
#include "linear_system.h"
#include "residual_blocks.h"

namespace g2sfusion {

namespace {

constexpr double kTinyCost = 1e-24;
constexpr int kMaxDampingRetries = 12;

void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) throw Error(code, what);
}

using Block = Eigen::Matrix<double, kNodeTangentDim, kNodeTangentDim>;

/// Normal equations H = J^T W J, g = J^T W r over the free nodes with a
/// sparsity pattern fixed by the problem's graph, so every assembly writes
/// into the same compressed matrix.
class Assembler {
 public:
  explicit Assembler(const FusionProblem& problem)
      : dim_(problem.estimate_scale ? kNodeTangentDim : kNodeTangentDim - 1), offset_(problem.nodes.size(), -1) {
    const std::size_t n = problem.nodes.size();
    for (std::size_t k = 0; k < n; ++k) {
      if (problem.nodes[k].fixed) continue;
      offset_[k] = size_;
      size_ += dim_;
    }

    std::vector<std::vector<int>> nbr(n);
    auto link = [&](int a, int b) {
      if (offset_[static_cast<std::size_t>(a)] < 0 || offset_[static_cast<std::size_t>(b)] < 0) return;
      nbr[static_cast<std::size_t>(a)].push_back(b);
      if (a != b) nbr[static_cast<std::size_t>(b)].push_back(a);
    };
    for (std::size_t k = 0; k < n; ++k) link(static_cast<int>(k), static_cast<int>(k));
    for (const auto& e : problem.slam_edges) link(e.i, e.j);
    if (problem.estimate_scale) {
      for (std::size_t k = 1; k < n; ++k) link(static_cast<int>(k - 1), static_cast<int>(k));
    }

    upper_.resize(n);
    for (std::size_t a = 0; a < n; ++a) {
      auto& list = nbr[a];
      std::sort(list.begin(), list.end());
      list.erase(std::unique(list.begin(), list.end()), list.end());
      for (int b : list) {
        if (b < static_cast<int>(a)) continue;
        upper_[a].push_back({b, static_cast<int>(blocks_.size())});
        blocks_.push_back(Block::Zero());
      }
    }

    std::size_t nnz = 0;
    for (std::size_t c = 0; c < n; ++c) nnz += nbr[c].size() * static_cast<std::size_t>(dim_ * dim_);
    h_.resize(size_, size_);
    h_.resizeNonZeros(static_cast<Eigen::Index>(nnz));
    plan_.reserve(nnz);
    diag_.reserve(static_cast<std::size_t>(size_));
    int* outer = h_.outerIndexPtr();
    int* inner = h_.innerIndexPtr();
    int col = 0;
    for (std::size_t c = 0; c < n; ++c) {
      if (offset_[c] < 0) continue;
      for (int q = 0; q < dim_; ++q, ++col) {
        outer[col] = static_cast<int>(plan_.size());
        for (int r : nbr[c]) {
          const int cc = static_cast<int>(c);
          const int idx = r <= cc ? pair_index(r, cc) : pair_index(cc, r);
          for (int p = 0; p < dim_; ++p) {
            const int row = offset_[static_cast<std::size_t>(r)] + p;
            if (row == col) diag_.push_back(static_cast<int>(plan_.size()));
            inner[plan_.size()] = row;
            plan_.push_back(r <= cc ? Source{idx, p, q} : Source{idx, q, p});
          }
        }
      }
    }
    outer[size_] = static_cast<int>(plan_.size());
    g_.resize(size_);
  }

  int size() const { return size_; }
  int dim() const { return dim_; }
  int offset(std::size_t node) const { return offset_[node]; }
  const detail::SparseMatrix& h() const { return h_; }
  const Eigen::VectorXd& g() const { return g_; }

  void assemble(const std::vector<detail::ResidualBlock>& blocks, const Hyperparams& params) {
    for (auto& b : blocks_) b.setZero();
    g_.setZero();
    Eigen::Matrix<double, kNodeTangentDim, 1> grad;
    for (const auto& b : blocks) {
      const double w = detail::robust_weight(b, params);
      const int a = b.node_a;
      const int c = b.node_b;
      const bool fa = a >= 0 && offset_[static_cast<std::size_t>(a)] >= 0;
      const bool fc = c >= 0 && offset_[static_cast<std::size_t>(c)] >= 0;
      if (fa) {
        blocks_[static_cast<std::size_t>(pair_index(a, a))].noalias() += w * b.jac_a.transpose() * b.jac_a;
        grad.noalias() = w * b.jac_a.transpose() * b.residual;
        g_.segment(offset_[static_cast<std::size_t>(a)], dim_) += grad.head(dim_);
      }
      if (fc) {
        blocks_[static_cast<std::size_t>(pair_index(c, c))].noalias() += w * b.jac_b.transpose() * b.jac_b;
        grad.noalias() = w * b.jac_b.transpose() * b.residual;
        g_.segment(offset_[static_cast<std::size_t>(c)], dim_) += grad.head(dim_);
      }
      if (fa && fc) {
        if (a < c) {
          blocks_[static_cast<std::size_t>(pair_index(a, c))].noalias() += w * b.jac_a.transpose() * b.jac_b;
        } else {
          blocks_[static_cast<std::size_t>(pair_index(c, a))].noalias() += w * b.jac_b.transpose() * b.jac_a;
        }
      }
    }
    double* values = h_.valuePtr();
    for (std::size_t i = 0; i < plan_.size(); ++i) {
      const Source& s = plan_[i];
      values[i] = blocks_[static_cast<std::size_t>(s.block)](s.row, s.col);
    }
  }

  /// H + lambda * diag(H), same pattern.
  detail::SparseMatrix damped(double lambda) const {
    detail::SparseMatrix out = h_;
    double* values = out.valuePtr();
    for (int d : diag_) values[d] += lambda * std::max(values[d], 1e-12);
    return out;
  }

 private:
  struct Source {
    int block;
    int row;
    int col;
  };

  int pair_index(int a, int b) const {
    const auto& list = upper_[static_cast<std::size_t>(a)];
    const auto it = std::lower_bound(list.begin(), list.end(), b,
                                     [](const std::pair<int, int>& e, int v) { return e.first < v; });
    return it->second;
  }

  int dim_;
  int size_ = 0;
  std::vector<int> offset_;
  std::vector<std::vector<std::pair<int, int>>> upper_;  // (b >= a, block index) per node a
  std::vector<Block> blocks_;
  std::vector<Source> plan_;  // source of every stored value of h_
  std::vector<int> diag_;
  detail::SparseMatrix h_;
  Eigen::VectorXd g_;
};

int free_node_count(const FusionProblem& problem) {
  return static_cast<int>(std::count_if(problem.nodes.begin(), problem.nodes.end(),
                                        [](const ScaledNode& n) { return !n.fixed; }));
}

FusionState apply_step(const FusionState& state, const Assembler& layout, const Eigen::VectorXd& step) {
  FusionState next = state;
  for (std::size_t k = 0; k < next.poses.size(); ++k) {
    const int o = layout.offset(k);
    if (o < 0) continue;
    Pose& p = next.poses[k];
    p.rotation = so3_exp(step.segment<3>(o)) * p.rotation;
    p.translation += step.segment<3>(o + 3);
    if (layout.dim() == kNodeTangentDim) next.scales[k] += step(o + 6);
  }
  return next;
}

double checked_cost(const FusionProblem& problem, const FusionState& state) {
  const double cost = robust_cost(problem, state);
  if (!std::isfinite(cost)) throw Error(ErrorCode::kNonFiniteCost, "objective became non-finite");
  return cost;
}

/// Identity of a problem's graph for workspace reuse.
struct GraphKey {
  std::vector<bool> fixed;
  std::vector<std::pair<int, int>> edges;
  bool estimate_scale = true;
  bool dense = false;

  static GraphKey of(const FusionProblem& problem, bool dense) {
    GraphKey k;
    k.fixed.reserve(problem.nodes.size());
    for (const auto& n : problem.nodes) k.fixed.push_back(n.fixed);
    k.edges.reserve(problem.slam_edges.size());
    for (const auto& e : problem.slam_edges) k.edges.emplace_back(e.i, e.j);
    k.estimate_scale = problem.estimate_scale;
    k.dense = dense;
    return k;
  }

  bool operator==(const GraphKey&) const = default;
};

}  // namespace

struct SolverWorkspace::Impl {
  std::optional<GraphKey> key;
  std::optional<Assembler> assembler;
  std::optional<detail::NormalEquations> equations;

  /// Assembler for `problem`, rebuilt when the graph changed.
  Assembler& prepare(const FusionProblem& problem, bool dense) {
    GraphKey k = GraphKey::of(problem, dense);
    if (!key || !(*key == k)) {
      key = std::move(k);
      assembler.emplace(problem);
      equations.reset();
    }
    return *assembler;
  }

  /// Factorizes `h`, reusing the symbolic analysis when one exists.
  detail::NormalEquations& factorize(const detail::SparseMatrix& h, bool dense) {
    if (equations) {
      equations->refactorize(h);
    } else {
      equations.emplace(h, dense);
    }
    return *equations;
  }
};

SolverWorkspace::SolverWorkspace() : impl_(std::make_unique<Impl>()) {}
SolverWorkspace::~SolverWorkspace() = default;
SolverWorkspace::SolverWorkspace(SolverWorkspace&&) noexcept = default;
SolverWorkspace& SolverWorkspace::operator=(SolverWorkspace&&) noexcept = default;

void Hyperparams::validate() const {
  for (double w : {sigma_r_slam, sigma_t_slam, sigma_r_g2s, sigma_tx_g2s, sigma_ty_g2s, sigma_s}) {
    require(std::isfinite(w) && w >= 0.0, ErrorCode::kConfigInvalid, "term weights must be finite and >= 0");
  }
  require(std::isfinite(huber_c) && huber_c > 0.0, ErrorCode::kConfigInvalid, "huber_c must be > 0");
  require(max_iterations >= 1, ErrorCode::kConfigInvalid, "max_iterations must be >= 1");
  require(step_tolerance >= 0.0 && cost_tolerance >= 0.0, ErrorCode::kConfigInvalid, "tolerances must be >= 0");
  require(std::isfinite(lm_damping_init) && lm_damping_init >= 0.0, ErrorCode::kConfigInvalid,
          "lm_damping_init must be >= 0");
  require(dense_node_limit >= 0, ErrorCode::kConfigInvalid, "dense_node_limit must be >= 0");
}

FusionProblem FusionProblem::from_trajectory(const Trajectory& trajectory, std::vector<OdometryEdge> edges,
                                             const Hyperparams& params) {
  FusionProblem p;
  p.nodes.reserve(trajectory.size());
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    p.nodes.push_back({trajectory.pose(static_cast<int>(k)), 1.0, k == 0});
  }
  p.slam_edges = std::move(edges);
  p.params = params;
  return p;
}

void FusionProblem::validate() const {
  params.validate();
  const int n = static_cast<int>(nodes.size());
  require(n > 0, ErrorCode::kInvalidProblem, "problem has no nodes");
  for (const auto& node : nodes) {
    require(node.pose.translation.allFinite() && node.pose.rotation.allFinite(), ErrorCode::kInvalidProblem,
            "node pose is not finite");
    require(std::isfinite(node.scale), ErrorCode::kInvalidProblem, "node scale is not finite");
  }
  for (const auto& e : slam_edges) {
    require(e.i >= 0 && e.j >= 0 && e.i < n && e.j < n && e.i != e.j, ErrorCode::kInvalidProblem,
            "odometry edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) + ") references a missing node");
    require(std::isfinite(e.weight) && e.weight >= 0.0, ErrorCode::kInvalidProblem, "edge weight must be >= 0");
  }
  for (const auto& c : g2s_rotations) {
    require(c.frame >= 0 && c.frame < n, ErrorCode::kInvalidProblem,
            "G2S rotation constraint on missing frame " + std::to_string(c.frame));
  }
  for (const auto& c : g2s_translations) {
    require(c.frame >= 0 && c.frame < n, ErrorCode::kInvalidProblem,
            "G2S translation constraint on missing frame " + std::to_string(c.frame));
  }
}

FusionState FusionState::from_problem(const FusionProblem& problem) {
  FusionState s;
  s.poses.reserve(problem.nodes.size());
  s.scales.reserve(problem.nodes.size());
  for (const auto& n : problem.nodes) {
    s.poses.push_back(n.pose);
    s.scales.push_back(n.scale);
  }
  return s;
}

std::string_view to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::kStepTolerance: return "step_tolerance";
    case TerminationReason::kCostTolerance: return "cost_tolerance";
    case TerminationReason::kMaxIterations: return "max_iterations";
    case TerminationReason::kDampingExhausted: return "damping_exhausted";
  }
  return "unknown";
}

SolveResult gauss_newton_solve(const FusionProblem& problem, SolverWorkspace* workspace) {
  problem.validate();
  require(free_node_count(problem) > 0, ErrorCode::kInvalidProblem, "problem has no free node");

  const Hyperparams& hp = problem.params;
  const bool dense = free_node_count(problem) <= hp.dense_node_limit;
  SolverWorkspace local;
  SolverWorkspace::Impl& ws = (workspace ? *workspace : local).impl();
  Assembler& layout = ws.prepare(problem, dense);

  SolveResult result;
  result.state = FusionState::from_problem(problem);
  SolverReport& report = result.report;
  double cost = checked_cost(problem, result.state);
  report.cost_history.push_back(cost);

  double lambda = 0.0;
  bool done = false;
  for (int it = 0; it < hp.max_iterations && !done; ++it) {
    if (cost < kTinyCost) {
      report.converged = true;
      report.termination_reason = TerminationReason::kCostTolerance;
      break;
    }
    layout.assemble(detail::evaluate_blocks(problem, result.state, true), hp);

    FusionState next;
    Eigen::VectorXd step;
    double next_cost = 0.0;
    int retries = 0;
    for (;;) {
      const detail::SparseMatrix h = lambda > 0.0 ? layout.damped(lambda) : layout.h();
      step = -ws.factorize(h, dense).solve(layout.g());
      if (!step.allFinite()) throw Error(ErrorCode::kSingularSystem, "normal equations produced a non-finite step");
      next = apply_step(result.state, layout, step);
      next_cost = checked_cost(problem, next);

      if (hp.lm_damping_init <= 0.0 || next_cost <= cost) break;
      if (retries == kMaxDampingRetries) {
        report.termination_reason = TerminationReason::kDampingExhausted;
        done = true;
        break;
      }
      lambda = lambda == 0.0 ? hp.lm_damping_init : lambda * 10.0;
      ++retries;
      spdlog::debug("solver: cost rose to {:.6g}, damping {:.3g}", next_cost, lambda);
    }
    if (done) break;

    if (lambda > 0.0) {
      lambda /= 10.0;
      if (lambda < hp.lm_damping_init * 1e-3) lambda = 0.0;
    }
    const double previous = cost;
    result.state = std::move(next);
    cost = next_cost;
    report.cost_history.push_back(cost);
    report.iterations = it + 1;
    spdlog::trace("solver: iteration {} cost {:.9g}", it + 1, cost);

    const double step_norm = step.size() == 0 ? 0.0 : step.lpNorm<Eigen::Infinity>();
    if (step_norm < hp.step_tolerance) {
      report.converged = true;
      report.termination_reason = TerminationReason::kStepTolerance;
      done = true;
    } else if (std::abs(previous - cost) <= hp.cost_tolerance * std::max(previous, kTinyCost) ||
               cost < kTinyCost) {
      report.converged = true;
      report.termination_reason = TerminationReason::kCostTolerance;
      done = true;
    }
  }
  report.final_terms = term_costs(problem, result.state);
  return result;
}

std::vector<Mat2> marginal_xy_covariances(const FusionProblem& problem, const FusionState& state,
                                          SolverWorkspace* workspace) {
  problem.validate();
  const bool dense = free_node_count(problem) <= problem.params.dense_node_limit;
  SolverWorkspace local;
  SolverWorkspace::Impl& ws = (workspace ? *workspace : local).impl();
  Assembler& layout = ws.prepare(problem, dense);
  std::vector<Mat2> out(problem.nodes.size(), Mat2::Zero());
  if (layout.size() == 0) return out;

  layout.assemble(detail::evaluate_blocks(problem, state, true), problem.params);
  const detail::NormalEquations& ne = ws.factorize(layout.h(), dense);

  std::vector<int> offsets;
  std::vector<std::size_t> owners;
  for (std::size_t k = 0; k < problem.nodes.size(); ++k) {
    if (layout.offset(k) < 0) continue;
    offsets.push_back(layout.offset(k) + 3);
    owners.push_back(k);
  }
  const auto inv = ne.inverse_blocks_2x2(offsets);
  for (std::size_t i = 0; i < owners.size(); ++i) out[owners[i]] = inv[i];
  return out;
}

std::vector<Mat2> slam_only_covariances(const Trajectory& trajectory, const std::vector<OdometryEdge>& edges,
                                        const Hyperparams& params) {
  const FusionProblem problem = FusionProblem::from_trajectory(trajectory, edges, params);
  return marginal_xy_covariances(problem, FusionState::from_problem(problem));
}

}  // namespace g2sfusion
