#include <gtest/gtest.h>

#include <limits>
#include <sstream>

#include "g2sfusion/config.h"
#include "g2sfusion/error.h"
#include "g2sfusion/metrics.h"
#include "g2sfusion/pipeline.h"
#include "g2sfusion/synth.h"
#include "test_support.h"

using namespace g2sfusion;
using namespace g2sfusion::testing;

namespace {

class NoMeasurement final : public G2SProvider {
 public:
  std::optional<G2SDelta> query(int, const Pose&) const override { return std::nullopt; }
};

class NonFinite final : public G2SProvider {
 public:
  std::optional<G2SDelta> query(int k, const Pose&) const override {
    return G2SDelta{k, std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0};
  }
};

ScenarioConfig noiseless_scenario(double length) {
  ScenarioConfig sc;
  sc.length = length;
  sc.odom_rot_noise = 0.0;
  sc.odom_trans_noise = 0.0;
  sc.scale_drift = ScaleDrift::kConstant;
  sc.scale_constant = 1.0;
  return sc;
}

OracleNoise noiseless_oracle() {
  OracleNoise n;
  n.sigma_x = n.sigma_y = n.sigma_theta = 0.0;
  return n;
}

RunConfig small_synthetic(std::uint64_t seed, double length) {
  RunConfig c = preset("synthetic");
  c.scenario.length = length;
  c.scenario.seed = seed;
  c.oracle.seed = seed + 1000;
  return c;
}

}  // namespace

TEST(FusionMode, NamesRoundtrip) {
  for (auto m : {FusionMode::kFull, FusionMode::kAllG2S, FusionMode::kSpbOnly, FusionMode::kVocOnly,
                 FusionMode::kNoScale, FusionMode::kNonIterative, FusionMode::kSelectOnly}) {
    EXPECT_EQ(parse_fusion_mode(to_string(m)), m);
  }
  EXPECT_EQ(ablation_modes().size(), 6u);
  EXPECT_THROW(parse_fusion_mode("bogus"), Error);
}

TEST(Pipeline, NoMeasurementLeavesTrajectoryUntouched) {
  const Scenario s = generate_scenario(small_synthetic(1, 150).scenario);
  const auto out = run_iterative_fusion(s.slam, s.edges, NoMeasurement{}, preset("synthetic").pipeline);
  ASSERT_EQ(out.trajectory.size(), s.slam.size());
  for (std::size_t k = 0; k < s.slam.size(); ++k) {
    EXPECT_EQ(out.trajectory.pose(k).translation, s.slam.pose(k).translation);
    EXPECT_EQ(out.trajectory.pose(k).rotation, s.slam.pose(k).rotation);
  }
  EXPECT_EQ(out.log.refinements, 0);
  EXPECT_TRUE(out.log.c_r.empty());
}

TEST(Pipeline, NoiselessInputsReachGroundTruth) {
  ScenarioConfig sc = noiseless_scenario(150);
  sc.scale_drift = ScaleDrift::kConstant;
  const Scenario s = generate_scenario(sc);
  const SyntheticOracle oracle(s.gt, noiseless_oracle());
  const auto out = run_iterative_fusion(s.slam, s.edges, oracle, preset("synthetic").pipeline);
  for (std::size_t k = 0; k < s.gt.size(); ++k) {
    EXPECT_LT(pose_distance(out.trajectory.pose(k), s.gt.pose(k)), 1e-6);
    EXPECT_NEAR(out.scales[k], 1.0, 1e-6);
  }
}

TEST(Pipeline, IdempotentOnConsistentTrajectory) {
  const Scenario s = generate_scenario(noiseless_scenario(120));
  const SyntheticOracle oracle(s.gt, noiseless_oracle());
  const PipelineConfig cfg = preset("synthetic").pipeline;
  const auto once = run_iterative_fusion(s.slam, s.edges, oracle, cfg);
  const auto twice = run_iterative_fusion(once.trajectory, build_edges(once.trajectory, s.covis, s.loops), oracle, cfg);
  for (std::size_t k = 0; k < s.gt.size(); ++k) {
    EXPECT_LT(pose_distance(twice.trajectory.pose(k), once.trajectory.pose(k)), 1e-8);
  }
}

TEST(Pipeline, ImprovesDriftingTrajectoryAndLogIsConsistent) {
  const RunConfig c = small_synthetic(2, 300);
  const Scenario s = generate_scenario(c.scenario);
  const SyntheticOracle oracle(s.gt, c.oracle);
  const auto out = run_iterative_fusion(s.slam, s.edges, oracle, c.pipeline);
  EXPECT_FALSE(out.log.abort_reason.has_value());
  const double before = evaluate(s.slam, s.gt, AlignMethod::kOrigin).t2d.rmse;
  const double after = evaluate(out.trajectory, s.gt, AlignMethod::kOrigin).t2d.rmse;
  EXPECT_LT(after, before);

  ASSERT_EQ(out.log.frames.size(), s.slam.size());
  int refined = 0;
  for (const auto& r : out.log.frames) {
    // gate soundness and frame 0 handling
    if (out.log.c_r.count(r.frame) || out.log.c_t.count(r.frame)) {
      EXPECT_TRUE(r.gates.in_bound_prev && r.gates.in_bound_curr);
    }
    refined += r.refined ? 1 : 0;
    if (r.refined) EXPECT_LE(r.cost_after, r.cost_before);
  }
  EXPECT_EQ(out.log.c_r.count(0), 0u);
  EXPECT_EQ(refined, out.log.refinements);
  EXPECT_GT(out.log.n, 0.0);
}

TEST(Pipeline, SelectedSetsOnlyGrow) {
  // Refinements happen exactly on newly accepted frames, in frame order.
  const RunConfig c = small_synthetic(4, 200);
  const Scenario s = generate_scenario(c.scenario);
  const SyntheticOracle oracle(s.gt, c.oracle);
  const auto out = run_iterative_fusion(s.slam, s.edges, oracle, c.pipeline);
  std::set<int> seen;
  for (const auto& r : out.log.frames) {
    const bool accepted = r.gates.in_cr || r.gates.in_ct;
    if (accepted) seen.insert(r.frame);
    EXPECT_EQ(r.refined, accepted);
  }
  std::set<int> all = out.log.c_r;
  all.insert(out.log.c_t.begin(), out.log.c_t.end());
  EXPECT_EQ(all, seen);
}

TEST(Pipeline, Deterministic) {
  const RunConfig c = small_synthetic(5, 150);
  const Scenario s = generate_scenario(c.scenario);
  const SyntheticOracle oracle(s.gt, c.oracle);
  const auto a = run_iterative_fusion(s.slam, s.edges, oracle, c.pipeline);
  const auto b = run_iterative_fusion(s.slam, s.edges, oracle, c.pipeline);
  std::ostringstream la, lb;
  write_pipeline_log(la, a.log);
  write_pipeline_log(lb, b.log);
  EXPECT_EQ(la.str(), lb.str());
  for (std::size_t k = 0; k < s.slam.size(); ++k) {
    EXPECT_EQ(a.trajectory.pose(k).translation, b.trajectory.pose(k).translation);
    EXPECT_EQ(a.scales[k], b.scales[k]);
  }
}

TEST(ModeVariants, Semantics) {
  const RunConfig c = small_synthetic(6, 150);
  const Scenario s = generate_scenario(c.scenario);
  const SyntheticOracle oracle(s.gt, c.oracle);

  const auto sel = run_mode_variant(s.slam, s.edges, oracle, c.pipeline, FusionMode::kSelectOnly);
  EXPECT_EQ(sel.log.refinements, 0);
  for (std::size_t k = 0; k < s.slam.size(); ++k) EXPECT_EQ(sel.trajectory.pose(k).translation, s.slam.pose(k).translation);

  const auto all = run_mode_variant(s.slam, s.edges, oracle, c.pipeline, FusionMode::kAllG2S);
  EXPECT_EQ(all.log.refinements, 1);
  EXPECT_EQ(all.log.c_t.size(), s.slam.size() - 1);

  const auto ni = run_mode_variant(s.slam, s.edges, oracle, c.pipeline, FusionMode::kNonIterative);
  EXPECT_EQ(ni.log.c_r, sel.log.c_r);  // same gates against the initial trajectory
  EXPECT_EQ(ni.log.c_t, sel.log.c_t);
  EXPECT_LE(ni.log.refinements, 1);

  const auto ns = run_mode_variant(s.slam, s.edges, oracle, c.pipeline, FusionMode::kNoScale);
  for (double v : ns.scales) EXPECT_EQ(v, 1.0);

  const auto spb = run_mode_variant(s.slam, s.edges, oracle, c.pipeline, FusionMode::kSpbOnly);
  for (const auto& r : spb.log.frames) {
    if (r.frame > 0 && r.gates.in_bound) EXPECT_TRUE(r.gates.in_cr && r.gates.in_ct);
  }
  const auto voc = run_mode_variant(s.slam, s.edges, oracle, c.pipeline, FusionMode::kVocOnly);
  for (const auto& r : voc.log.frames) {
    if (r.frame > 0) EXPECT_TRUE(r.gates.in_bound);
  }
}

TEST(Pipeline, SolverFailureAbortsWithReason) {
  const RunConfig c = small_synthetic(7, 60);
  const Scenario s = generate_scenario(c.scenario);
  PipelineConfig cfg = c.pipeline;
  cfg.mode = FusionMode::kAllG2S;
  const auto out = run_iterative_fusion(s.slam, s.edges, NonFinite{}, cfg);
  ASSERT_TRUE(out.log.abort_reason.has_value());
  EXPECT_EQ(out.trajectory.size(), s.slam.size());
}

TEST(Pipeline, DisconnectedGraphFailsUpFront) {
  const RunConfig c = small_synthetic(7, 60);
  const Scenario s = generate_scenario(c.scenario);
  auto edges = s.edges;
  edges.erase(edges.begin() + 30);  // the tail is unconstrained
  try {
    run_iterative_fusion(s.slam, edges, SyntheticOracle(s.gt, noiseless_oracle()), c.pipeline);
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(is_solver_error(e.code()));
  }
}

TEST(PipelineLog, FormatHasRecordPerFrameAndSummary) {
  PipelineLog log;
  log.frames.resize(3);
  for (int k = 0; k < 3; ++k) log.frames[k].frame = k;
  log.frames[1].delta = G2SDelta{1, 0.5, 0.25, 0.0};
  std::ostringstream os;
  write_pipeline_log(os, log);
  std::istringstream is(os.str());
  std::string line;
  int n = 0;
  while (std::getline(is, line)) ++n;
  EXPECT_EQ(n, 4);
  EXPECT_NE(os.str().find("frame=1 has_delta=1 x=0.5"), std::string::npos);
  EXPECT_NE(os.str().find("summary mode=full"), std::string::npos);
}
