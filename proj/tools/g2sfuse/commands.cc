#include "commands.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "g2sfusion/config.h"
#include "g2sfusion/error.h"
#include "g2sfusion/g2s.h"
#include "g2sfusion/metrics.h"
#include "g2sfusion/pipeline.h"
#include "g2sfusion/synth.h"
#include "g2sfusion/trajectory.h"
#include "manifest.h"
#include "svg.h"

#ifndef G2SFUSION_VERSION
#define G2SFUSION_VERSION "unknown"
#endif

namespace g2sfuse {
namespace {

namespace fs = std::filesystem;
using namespace g2sfusion;

/// Options shared by every subcommand that builds a RunConfig.
struct ConfigOptions {
  std::string preset = "kitti";
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;  // section.key=value

  void attach(CLI::App& app) {
    app.add_option("--preset", preset, "Parameter preset")
        ->check(CLI::IsMember(preset_names()))
        ->capture_default_str();
    app.add_option("--config", config_file, "INI file applied over the preset")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Seed for the scenario generator and the synthetic oracle");
    app.add_option("--set", overrides, "Override one field, e.g. --set selection.r=0.2 (applied last)");
  }

  RunConfig build() const {
    RunConfig config = g2sfusion::preset(preset);
    if (!config_file.empty()) apply_ini_file(config_file, config);
    if (seed) {
      config.scenario.seed = *seed;
      config.oracle.seed = *seed;
    }
    for (const auto& o : overrides) {
      const auto dot = o.find('.');
      const auto eq = o.find('=');
      if (dot == std::string::npos || eq == std::string::npos || dot > eq) {
        throw Error(ErrorCode::kConfigInvalid, "--set expects section.key=value, got '" + o + "'");
      }
      std::istringstream ini("[" + o.substr(0, dot) + "]\n" + o.substr(dot + 1, eq - dot - 1) + " = " +
                             o.substr(eq + 1) + "\n");
      apply_ini(ini, config, "--set " + o);
    }
    config.validate();
    return config;
  }
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  os << std::setprecision(17);
  return os;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());
}

std::vector<std::string> args_of(int argc, char** argv) { return {argv, argv + argc}; }

// ---------------------------------------------------------------- simulate

struct SimulateCmd {
  ConfigOptions cfg;
  std::string out;
  std::string format = "kitti";
  bool predictions = false;

  void attach(CLI::App& app) {
    cfg.attach(app);
    app.add_option("--out", out, "Output directory")->required();
    app.add_option("--format", format, "Pose file format")->check(CLI::IsMember({"kitti", "tum"}));
    app.add_flag("--predictions", predictions,
                 "Also write oracle predictions queried at the SLAM poses (predictions.txt)");
  }

  int run(const std::vector<std::string>& argv) const {
    RunManifest manifest("simulate", argv);
    const RunConfig config = cfg.build();
    const PoseFormat fmt = parse_pose_format(format);
    const fs::path dir(out);
    ensure_dir(dir);

    const Scenario sc = generate_scenario(config.scenario);
    spdlog::info("simulated {} frames (seed {})", sc.gt.size(), config.scenario.seed);

    save_trajectory(dir / "gt.txt", sc.gt, fmt);
    save_trajectory(dir / "slam.txt", sc.slam, fmt);
    {
      auto os = open_out(dir / "covis.txt");
      write_covisibility(os, sc.covis);
    }
    {
      auto os = open_out(dir / "loops.txt");
      write_edge_poses(os, sc.loops);
    }
    {
      auto os = open_out(dir / "config.ini");
      write_ini(os, config);
    }
    std::vector<fs::path> outputs = {"gt.txt", "slam.txt", "covis.txt", "loops.txt", "config.ini"};
    if (predictions) {
      const SyntheticOracle oracle(sc.gt, config.oracle);
      std::vector<G2SDelta> deltas;
      for (std::size_t k = 0; k < sc.slam.size(); ++k) {
        deltas.push_back(*oracle.query(static_cast<int>(k), sc.slam.pose(k)));
      }
      auto os = open_out(dir / "predictions.txt");
      write_predictions(os, deltas);
      outputs.emplace_back("predictions.txt");
    }

    manifest.set_config(config);
    manifest.set_seed(config.scenario.seed);
    for (const auto& f : outputs) manifest.add_output(dir / f);
    manifest.write(dir / "manifest.json");
    return kExitOk;
  }
};

// ---------------------------------------------------------------- fuse / select

struct GraphInputs {
  std::string slam;
  std::string covis;
  std::string loops;
  std::string format = "kitti";
  std::string gt;
  std::string predictions;
  std::string query_poses;

  void attach(CLI::App& app) {
    app.add_option("--slam", slam, "SLAM trajectory")->required()->check(CLI::ExistingFile);
    app.add_option("--covis", covis, "Covisibility file (i j N per line)")->check(CLI::ExistingFile);
    app.add_option("--loops", loops, "Loop-closure edge-pose file")->check(CLI::ExistingFile);
    app.add_option("--format", format, "Pose file format")->check(CLI::IsMember({"kitti", "tum"}));
    auto* gt_opt = app.add_option("--gt", gt, "Ground truth for the synthetic oracle provider")
                       ->check(CLI::ExistingFile);
    auto* pred_opt = app.add_option("--predictions", predictions, "Precomputed predictions (k x y theta)")
                         ->check(CLI::ExistingFile);
    auto* query_opt = app.add_option("--query-poses", query_poses, "KITTI poses the predictions were computed at")
                          ->check(CLI::ExistingFile);
    gt_opt->excludes(pred_opt);
    pred_opt->needs(query_opt);
    query_opt->needs(pred_opt);
  }

  struct Loaded {
    Trajectory slam;
    std::vector<OdometryEdge> edges;
    std::unique_ptr<G2SProvider> provider;
  };

  Loaded load(const RunConfig& config, RunManifest& manifest) const {
    if (gt.empty() && predictions.empty()) {
      throw CLI::RequiredError("a provider: --gt or --predictions with --query-poses");
    }
    const PoseFormat fmt = parse_pose_format(format);
    Loaded in;
    in.slam = load_trajectory(slam, fmt);
    manifest.add_input(slam);

    std::optional<std::vector<CovisRecord>> covis_records;
    if (!covis.empty()) {
      covis_records = load_covisibility(covis);
      manifest.add_input(covis);
    }
    std::vector<EdgePoseRecord> loop_records;
    if (!loops.empty()) {
      loop_records = load_edge_poses(loops);
      manifest.add_input(loops);
    }
    in.edges = build_edges(in.slam, covis_records, loop_records);

    if (!gt.empty()) {
      Trajectory truth = load_trajectory(gt, fmt);
      if (truth.size() != in.slam.size()) {
        throw Error(ErrorCode::kLengthMismatch, "ground truth has " + std::to_string(truth.size()) +
                                                    " poses, SLAM trajectory " + std::to_string(in.slam.size()));
      }
      manifest.add_input(gt);
      in.provider = std::make_unique<SyntheticOracle>(std::move(truth), config.oracle);
    } else {
      in.provider = std::make_unique<FileProvider>(FileProvider::load(predictions, query_poses));
      manifest.add_input(predictions);
      manifest.add_input(query_poses);
    }
    return in;
  }
};

struct FuseCmd {
  ConfigOptions cfg;
  GraphInputs inputs;
  std::string mode;
  std::string out;

  void attach(CLI::App& app) {
    cfg.attach(app);
    inputs.attach(app);
    std::vector<std::string> names;
    for (auto m : {FusionMode::kFull, FusionMode::kAllG2S, FusionMode::kSpbOnly, FusionMode::kVocOnly,
                   FusionMode::kNoScale, FusionMode::kNonIterative, FusionMode::kSelectOnly}) {
      names.emplace_back(to_string(m));
    }
    app.add_option("--mode", mode, "Fusion mode (default from config: full)")->check(CLI::IsMember(names));
    app.add_option("--out", out, "Output directory")->required();
  }

  int run(const std::vector<std::string>& argv) const {
    RunManifest manifest("fuse", argv);
    RunConfig config = cfg.build();
    if (!mode.empty()) config.pipeline.mode = parse_fusion_mode(mode);
    const auto in = inputs.load(config, manifest);
    const fs::path dir(out);
    ensure_dir(dir);

    spdlog::info("fusing {} frames, {} edges, mode {}", in.slam.size(), in.edges.size(),
                 to_string(config.pipeline.mode));
    const FusionOutput result = run_iterative_fusion(in.slam, in.edges, *in.provider, config.pipeline);
    spdlog::info("accepted |C_r|={} |C_t|={} after {} refinements", result.log.c_r.size(), result.log.c_t.size(),
                 result.log.refinements);

    save_trajectory(dir / "fused.txt", result.trajectory, parse_pose_format(inputs.format));
    {
      auto os = open_out(dir / "scales.txt");
      for (std::size_t k = 0; k < result.scales.size(); ++k) os << k << ' ' << result.scales[k] << '\n';
    }
    {
      auto os = open_out(dir / "run.log");
      write_pipeline_log(os, result.log);
    }
    manifest.set_config(config);
    manifest.set_seed(config.oracle.seed);
    for (const char* f : {"fused.txt", "scales.txt", "run.log"}) manifest.add_output(dir / f);
    manifest.write(dir / "manifest.json");

    if (result.log.abort_reason) {
      spdlog::error("solver failure, pass aborted: {}", *result.log.abort_reason);
      return kExitSolver;
    }
    return kExitOk;
  }
};

struct SelectCmd {
  ConfigOptions cfg;
  GraphInputs inputs;
  std::string out;

  void attach(CLI::App& app) {
    cfg.attach(app);
    inputs.attach(app);
    app.add_option("--out", out, "Output directory")->required();
  }

  int run(const std::vector<std::string>& argv) const {
    RunManifest manifest("select", argv);
    RunConfig config = cfg.build();
    const auto in = inputs.load(config, manifest);
    const fs::path dir(out);
    ensure_dir(dir);

    const FusionOutput result =
        run_mode_variant(in.slam, in.edges, *in.provider, config.pipeline, FusionMode::kSelectOnly);
    {
      auto os = open_out(dir / "selection.csv");
      os << "k,in_bound,rot_diff_deg,dx,dy,in_Cr,in_Ct\n";
      // frame 0 anchors the gauge and is never gated
      for (const auto& r : result.log.frames) {
        if (r.frame == 0) continue;
        const auto& g = r.gates;
        os << r.frame << ',' << int{g.in_bound} << ',' << g.rot_diff_deg << ',' << g.dx << ',' << g.dy << ','
           << int{g.in_cr} << ',' << int{g.in_ct} << '\n';
      }
    }
    spdlog::info("selected |C_r|={} |C_t|={} of {} frames", result.log.c_r.size(), result.log.c_t.size(),
                 in.slam.size());
    manifest.set_config(config);
    manifest.set_seed(config.oracle.seed);
    manifest.add_output(dir / "selection.csv");
    manifest.write(dir / "manifest.json");
    return kExitOk;
  }
};

// ---------------------------------------------------------------- evaluate / plot

struct EvaluateCmd {
  std::string est;
  std::string gt;
  std::string format = "kitti";
  std::string align_name = "origin";
  std::string out;

  void attach(CLI::App& app) {
    app.add_option("--est", est, "Estimated trajectory")->required()->check(CLI::ExistingFile);
    app.add_option("--gt", gt, "Ground-truth trajectory")->required()->check(CLI::ExistingFile);
    app.add_option("--format", format, "Pose file format")->check(CLI::IsMember({"kitti", "tum"}));
    app.add_option("--align", align_name, "Alignment")->check(CLI::IsMember({"origin", "horn"}))->capture_default_str();
    app.add_option("--out", out, "Directory for report.txt, errors.csv and manifest.json");
  }

  int run(const std::vector<std::string>& argv) const {
    RunManifest manifest("evaluate", argv);
    const PoseFormat fmt = parse_pose_format(format);
    const Trajectory e = load_trajectory(est, fmt);
    const Trajectory g = load_trajectory(gt, fmt);
    manifest.add_input(est);
    manifest.add_input(gt);
    const MetricsReport report = evaluate(e, g, parse_align_method(align_name));
    write_report(std::cout, report);

    if (!out.empty()) {
      const fs::path dir(out);
      ensure_dir(dir);
      {
        auto os = open_out(dir / "report.txt");
        write_report(os, report);
      }
      {
        auto os = open_out(dir / "errors.csv");
        write_frame_errors_csv(os, report);
      }
      manifest.add_output(dir / "report.txt");
      manifest.add_output(dir / "errors.csv");
      manifest.write(dir / "manifest.json");
    }
    return kExitOk;
  }
};

struct PlotCmd {
  std::string gt;
  std::vector<std::string> est;
  std::string format = "kitti";
  std::string align_name = "origin";
  int bins = 20;
  std::string out;

  void attach(CLI::App& app) {
    app.add_option("--gt", gt, "Ground-truth trajectory")->required()->check(CLI::ExistingFile);
    app.add_option("--est", est, "Estimated trajectories, one series each")->required()->check(CLI::ExistingFile);
    app.add_option("--format", format, "Pose file format")->check(CLI::IsMember({"kitti", "tum"}));
    app.add_option("--align", align_name, "Alignment")->check(CLI::IsMember({"origin", "horn"}))->capture_default_str();
    app.add_option("--bins", bins, "Histogram bins")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--out", out, "Output directory")->required();
  }

  static std::string series_name(const std::string& path, std::map<std::string, int>& seen) {
    const std::string stem = fs::path(path).stem().string();
    const int n = seen[stem]++;
    return n == 0 ? stem : stem + "_" + std::to_string(n);
  }

  int run(const std::vector<std::string>& argv) const {
    RunManifest manifest("plot", argv);
    const PoseFormat fmt = parse_pose_format(format);
    const AlignMethod method = parse_align_method(align_name);
    const Trajectory truth = load_trajectory(gt, fmt);
    manifest.add_input(gt);
    const fs::path dir(out);
    ensure_dir(dir);

    std::vector<Series> tracks;
    std::vector<Series> errors;
    auto add_track = [&](const std::string& name, const Trajectory& t, const Pose& s) {
      Series sr{name, {}, {}};
      for (const auto& node : t.nodes()) {
        const Vec3 p = (s * node.pose).translation;
        sr.x.push_back(p.x());
        sr.y.push_back(p.y());
      }
      tracks.push_back(std::move(sr));
    };
    add_track("gt", truth, Pose::identity());

    std::map<std::string, int> seen{{"gt", 1}};
    for (const auto& path : est) {
      const Trajectory e = load_trajectory(path, fmt);
      manifest.add_input(path);
      const MetricsReport report = evaluate(e, truth, method);
      const std::string name = series_name(path, seen);
      add_track(name, e, report.alignment.s);
      Series err{name, {}, {}};
      for (std::size_t k = 0; k < report.frames.size(); ++k) {
        err.x.push_back(static_cast<double>(k));
        err.y.push_back(report.frames[k].t2d);
      }
      errors.push_back(std::move(err));
    }

    {
      auto os = open_out(dir / "trajectories.csv");
      os << "series,k,x,y\n";
      for (const auto& s : tracks) {
        for (std::size_t k = 0; k < s.x.size(); ++k) os << s.name << ',' << k << ',' << s.x[k] << ',' << s.y[k] << '\n';
      }
    }
    {
      double hi = 0.0;
      for (const auto& s : errors) {
        for (double v : s.y) hi = std::max(hi, v);
      }
      if (hi <= 0.0) hi = 1.0;
      const double width = hi / bins;
      auto os = open_out(dir / "error_hist.csv");
      os << "series,bin_lo_m,bin_hi_m,count\n";
      for (const auto& s : errors) {
        std::vector<int> counts(static_cast<std::size_t>(bins), 0);
        for (double v : s.y) {
          const int b = std::min(bins - 1, static_cast<int>(std::floor(v / width)));
          ++counts[static_cast<std::size_t>(b)];
        }
        for (int b = 0; b < bins; ++b) {
          os << s.name << ',' << b * width << ',' << (b + 1) * width << ',' << counts[static_cast<std::size_t>(b)]
             << '\n';
        }
      }
    }
    {
      auto os = open_out(dir / "trajectories.svg");
      write_line_plot(os, tracks, "Trajectories (aligned)", "x [m]", "y [m]", true);
    }
    {
      auto os = open_out(dir / "errors.svg");
      write_line_plot(os, errors, "2D translation error", "frame", "error [m]", false);
    }
    for (const char* f : {"trajectories.csv", "error_hist.csv", "trajectories.svg", "errors.svg"}) {
      manifest.add_output(dir / f);
    }
    manifest.write(dir / "manifest.json");
    return kExitOk;
  }
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("g2sfuse");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  spdlog::cfg::load_env_levels();  // SPDLOG_LEVEL=info, debug, ...
}

}  // namespace

int dispatch(int argc, char** argv) {
  if (!spdlog::get("g2sfuse")) setup_logging();

  CLI::App app("Fuse drifting SLAM trajectories with ground-to-satellite pose predictions", "g2sfuse");
  app.set_version_flag("--version", G2SFUSION_VERSION);
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  SimulateCmd simulate;
  FuseCmd fuse;
  SelectCmd select;
  EvaluateCmd eval;
  PlotCmd plot;
  auto* sim_app = app.add_subcommand("simulate", "Generate a synthetic scenario");
  auto* fuse_app = app.add_subcommand("fuse", "Run iterative fusion");
  auto* select_app = app.add_subcommand("select", "Gate predictions against the SLAM trajectory, no refinement");
  auto* eval_app = app.add_subcommand("evaluate", "Absolute trajectory errors against ground truth");
  auto* plot_app = app.add_subcommand("plot", "CSV series and SVG plots of trajectories and errors");
  simulate.attach(*sim_app);
  fuse.attach(*fuse_app);
  select.attach(*select_app);
  eval.attach(*eval_app);
  plot.attach(*plot_app);

  const auto args = args_of(argc, argv);
  try {
    app.parse(argc, argv);
    if (sim_app->parsed()) return simulate.run(args);
    if (fuse_app->parsed()) return fuse.run(args);
    if (select_app->parsed()) return select.run(args);
    if (eval_app->parsed()) return eval.run(args);
    return plot.run(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const Error& e) {
    spdlog::error("{} ({})", e.what(), to_string(e.code()));
    return is_solver_error(e.code()) ? kExitSolver : kExitData;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  }
}

}  // namespace g2sfuse
