#pragma once

// Iterative G2S-SLAM fusion: walk the frames once, gate each G2S prediction
// against the current trajectory estimate, and re-solve the scaled pose
// graph whenever a frame is newly accepted. After each solve the bounds of
// the frames ahead and every cached prediction are refreshed against the new
// trajectory.

#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "g2sfusion/g2s.h"
#include "g2sfusion/selection.h"
#include "g2sfusion/solver.h"
#include "g2sfusion/trajectory.h"

namespace g2sfusion {

enum class FusionMode {
  kFull,
  kAllG2S,        // no gating, one batch solve with every prediction
  kSpbOnly,       // spatial bound gate only
  kVocOnly,       // odometry consistency gate only
  kNoScale,       // scales frozen at 1, smoothness term dropped
  kNonIterative,  // gate against the initial trajectory, solve once at the end
  kSelectOnly,    // gate against the initial trajectory, never solve
};

FusionMode parse_fusion_mode(std::string_view name);
std::string_view to_string(FusionMode mode);

/// The six ablation modes in reporting order.
std::vector<FusionMode> ablation_modes();

struct PipelineConfig {
  SelectionParams selection;
  Hyperparams solver;
  FusionMode mode = FusionMode::kFull;
  int min_frames_between_solves = 1;  // 1 solves on every acceptance

  void validate() const;
};

struct FrameRecord {
  int frame = 0;
  Pose query_pose;
  std::optional<G2SDelta> delta;  // as returned by the provider
  FrameDiagnostics gates;
  bool refined = false;
  double cost_before = 0.0;
  double cost_after = 0.0;
  int solver_iterations = 0;
};

struct PipelineLog {
  FusionMode mode = FusionMode::kFull;
  double n = 0.0;  // bound scale factor from frame 1
  std::vector<FrameRecord> frames;
  std::set<int> c_r;
  std::set<int> c_t;
  int refinements = 0;
  std::optional<std::string> abort_reason;
};

struct FusionOutput {
  Trajectory trajectory;
  std::vector<double> scales;
  PipelineLog log;
};

/// Runs the mode in `config.mode`. A solver failure stops the pass and
/// returns the last solved trajectory with `log.abort_reason` set.
FusionOutput run_iterative_fusion(const Trajectory& slam, const std::vector<OdometryEdge>& edges,
                                  const G2SProvider& provider, const PipelineConfig& config);

FusionOutput run_mode_variant(const Trajectory& slam, const std::vector<OdometryEdge>& edges,
                              const G2SProvider& provider, PipelineConfig config, FusionMode mode);

/// One "key=value" record per frame plus a trailing summary line.
void write_pipeline_log(std::ostream& os, const PipelineLog& log);

}  // namespace g2sfusion
