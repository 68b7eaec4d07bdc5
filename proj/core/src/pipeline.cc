#include "g2sfusion/pipeline.h"

#include <iomanip>
#include <map>
#include <ostream>
#include <string>

#include <spdlog/spdlog.h>

#include "g2sfusion/error.h"

namespace g2sfusion {

namespace {

constexpr std::pair<FusionMode, std::string_view> kModeNames[] = {
    {FusionMode::kFull, "full"},           {FusionMode::kAllG2S, "all_g2s"},
    {FusionMode::kSpbOnly, "spb_only"},    {FusionMode::kVocOnly, "voc_only"},
    {FusionMode::kNoScale, "no_scale"},    {FusionMode::kNonIterative, "non_iterative"},
    {FusionMode::kSelectOnly, "select_only"},
};

bool refines_per_frame(FusionMode mode) {
  return mode == FusionMode::kFull || mode == FusionMode::kSpbOnly || mode == FusionMode::kVocOnly ||
         mode == FusionMode::kNoScale;
}

GateMode gates_for(FusionMode mode) {
  switch (mode) {
    case FusionMode::kAllG2S: return {false, false};
    case FusionMode::kSpbOnly: return {true, false};
    case FusionMode::kVocOnly: return {false, true};
    default: return {true, true};
  }
}

class FusionRun {
 public:
  FusionRun(const Trajectory& slam, const std::vector<OdometryEdge>& edges, const G2SProvider& provider,
            const PipelineConfig& config)
      : slam_(slam), edges_(edges), provider_(provider), config_(config), poses_(slam.poses()),
        scales_(slam.size(), 1.0) {
    log_.mode = config.mode;
  }

  FusionOutput run() {
    const int frames = static_cast<int>(slam_.size());
    if (frames < 2) throw Error(ErrorCode::kInvalidTrajectory, "fusion needs at least two frames");

    const auto phi = slam_only_covariances(slam_, edges_, config_.solver);
    log_.n = scale_factor(phi[1], config_.selection.r);
    bounds_.resize(poses_.size());
    for (int k = 0; k < frames; ++k) update_bound(k, phi[static_cast<std::size_t>(k)]);

    cache_[0] = {G2SDelta{0, 0.0, 0.0, 0.0}, poses_[0]};
    FrameRecord first;
    first.query_pose = poses_[0];
    first.delta = cache_[0].delta;
    log_.frames.push_back(first);

    const bool iterative = refines_per_frame(config_.mode);
    bool pending = false;
    int last_solve = 0;
    for (int k = 1; k < frames && !log_.abort_reason; ++k) {
      FrameRecord rec = process_frame(k);
      const bool accepted = rec.gates.in_cr || rec.gates.in_ct;
      pending = pending || accepted;
      if (iterative && pending && k - last_solve >= config_.min_frames_between_solves) {
        refine(k, rec);
        pending = false;
        last_solve = k;
      }
      log_.frames.push_back(std::move(rec));
    }

    const bool batch = config_.mode == FusionMode::kAllG2S || config_.mode == FusionMode::kNonIterative;
    if (!log_.abort_reason && (batch || (iterative && pending))) {
      FrameRecord& last = log_.frames.back();
      refine(last.frame, last);
    }

    FusionOutput out;
    std::vector<TrajectoryNode> nodes = slam_.nodes();
    for (std::size_t k = 0; k < nodes.size(); ++k) nodes[k].pose = poses_[k];
    out.trajectory = Trajectory::from_nodes(std::move(nodes));
    out.scales = scales_;
    out.log = std::move(log_);
    return out;
  }

 private:
  void update_bound(int k, const Mat2& phi) {
    const SelectionParams& sp = config_.selection;
    bounds_[static_cast<std::size_t>(k)] = spatial_bound(phi, poses_[static_cast<std::size_t>(k)].rotation, log_.n, k,
                                                         sp.bound_sigma_multiplier, sp.bound_frame);
  }

  FrameRecord process_frame(int k) {
    FrameRecord rec;
    rec.frame = k;
    rec.query_pose = poses_[static_cast<std::size_t>(k)];
    rec.gates.frame = k;
    rec.delta = provider_.query(k, rec.query_pose);
    if (!rec.delta) return rec;
    rec.delta->frame = k;

    const int pred = std::prev(cache_.lower_bound(k))->first;
    cache_[k] = {*rec.delta, rec.query_pose};

    SelectionInputs in;
    in.frame = k;
    in.predecessor = pred;
    in.delta_prev = cache_[pred].delta;
    in.delta_curr = *rec.delta;
    in.bound_prev = bounds_[static_cast<std::size_t>(pred)];
    in.bound_curr = bounds_[static_cast<std::size_t>(k)];
    in.pose_prev = poses_[static_cast<std::size_t>(pred)];
    in.pose_curr = poses_[static_cast<std::size_t>(k)];
    rec.gates = select_frame(in, config_.selection, gates_for(config_.mode));
    if (rec.gates.in_cr) log_.c_r.insert(k);
    if (rec.gates.in_ct) log_.c_t.insert(k);
    return rec;
  }

  FusionProblem build_problem() const {
    FusionProblem p;
    p.nodes.reserve(poses_.size());
    for (std::size_t k = 0; k < poses_.size(); ++k) p.nodes.push_back({poses_[k], scales_[k], k == 0});
    p.slam_edges = edges_;
    p.params = config_.solver;
    p.estimate_scale = config_.mode != FusionMode::kNoScale;
    for (int f : log_.c_r) {
      const G2SRecord& r = cache_.at(f);
      p.g2s_rotations.push_back({f, r.query_pose.rotation, rot_z(r.delta.theta)});
    }
    for (int f : log_.c_t) {
      const G2SRecord& r = cache_.at(f);
      p.g2s_translations.push_back({f, r.query_pose, Vec3(r.delta.x, r.delta.y, 0.0)});
    }
    return p;
  }

  void refine(int k, FrameRecord& rec) {
    if (log_.c_r.empty() && log_.c_t.empty()) return;
    const FusionProblem problem = build_problem();
    try {
      const SolveResult res = gauss_newton_solve(problem, &workspace_);
      rec.refined = true;
      rec.cost_before = res.report.cost_history.front();
      rec.cost_after = res.report.cost_history.back();
      rec.solver_iterations = res.report.iterations;
      poses_ = res.state.poses;
      scales_ = res.state.scales;
      ++log_.refinements;

      for (auto& [f, cached] : cache_) {
        const Pose& now = poses_[static_cast<std::size_t>(f)];
        cached.delta = reexpress(cached.delta, cached.query_pose, now);
        cached.delta.frame = f;
        cached.query_pose = now;
      }

      const int frames = static_cast<int>(poses_.size());
      if (k + 1 < frames && config_.mode != FusionMode::kNonIterative && config_.mode != FusionMode::kAllG2S) {
        const auto phi = marginal_xy_covariances(problem, res.state, &workspace_);
        for (int f = k + 1; f < frames; ++f) update_bound(f, phi[static_cast<std::size_t>(f)]);
      }
    } catch (const Error& e) {
      if (!is_solver_error(e.code())) throw;
      log_.abort_reason = "frame " + std::to_string(k) + ": " + e.what();
      spdlog::warn("fusion aborted at {}", *log_.abort_reason);
    }
  }

  const Trajectory& slam_;
  const std::vector<OdometryEdge>& edges_;
  const G2SProvider& provider_;
  const PipelineConfig& config_;

  std::vector<Pose> poses_;
  std::vector<double> scales_;
  std::vector<SpatialBound> bounds_;
  std::map<int, G2SRecord> cache_;
  PipelineLog log_;
  SolverWorkspace workspace_;
};

}  // namespace

FusionMode parse_fusion_mode(std::string_view name) {
  for (const auto& [mode, label] : kModeNames) {
    if (label == name) return mode;
  }
  throw Error(ErrorCode::kConfigInvalid, "unknown fusion mode '" + std::string(name) + "'");
}

std::string_view to_string(FusionMode mode) {
  for (const auto& [m, label] : kModeNames) {
    if (m == mode) return label;
  }
  return "unknown";
}

std::vector<FusionMode> ablation_modes() {
  return {FusionMode::kAllG2S, FusionMode::kSpbOnly,      FusionMode::kVocOnly,
          FusionMode::kNoScale, FusionMode::kNonIterative, FusionMode::kFull};
}

void PipelineConfig::validate() const {
  selection.validate();
  solver.validate();
  if (min_frames_between_solves < 1) {
    throw Error(ErrorCode::kConfigInvalid, "min_frames_between_solves must be >= 1");
  }
}

FusionOutput run_iterative_fusion(const Trajectory& slam, const std::vector<OdometryEdge>& edges,
                                  const G2SProvider& provider, const PipelineConfig& config) {
  config.validate();
  return FusionRun(slam, edges, provider, config).run();
}

FusionOutput run_mode_variant(const Trajectory& slam, const std::vector<OdometryEdge>& edges,
                              const G2SProvider& provider, PipelineConfig config, FusionMode mode) {
  config.mode = mode;
  return run_iterative_fusion(slam, edges, provider, config);
}

void write_pipeline_log(std::ostream& os, const PipelineLog& log) {
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << std::setprecision(17);
  for (const auto& r : log.frames) {
    os << "frame=" << r.frame << " has_delta=" << (r.delta ? 1 : 0);
    if (r.delta) os << " x=" << r.delta->x << " y=" << r.delta->y << " theta=" << r.delta->theta;
    os << " in_bound=" << r.gates.in_bound << " voc=" << r.gates.voc_evaluated
       << " rot_diff_deg=" << r.gates.rot_diff_deg << " dx=" << r.gates.dx << " dy=" << r.gates.dy
       << " in_cr=" << r.gates.in_cr << " in_ct=" << r.gates.in_ct << " refined=" << r.refined;
    if (r.refined) {
      os << " cost_before=" << r.cost_before << " cost_after=" << r.cost_after
         << " iterations=" << r.solver_iterations;
    }
    os << '\n';
  }
  os << "summary mode=" << to_string(log.mode) << " n=" << log.n << " frames=" << log.frames.size()
     << " refinements=" << log.refinements << " c_r=" << log.c_r.size() << " c_t=" << log.c_t.size()
     << " aborted=" << (log.abort_reason ? 1 : 0);
  if (log.abort_reason) os << " reason=\"" << *log.abort_reason << '"';
  os << '\n';
  os.flags(flags);
  os.precision(precision);
}

}  // namespace g2sfusion
