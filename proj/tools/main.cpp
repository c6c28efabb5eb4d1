// Batch pipeline front end: every subcommand reads and writes files only, so
// stages compose through the filesystem and rerun reproducibly from
// (config, seed).

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "ttkit/config.hpp"
#include "ttkit/errors.hpp"
#include "ttkit/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  int jobs = 1;
};

ttkit::Config load_or_default(const CommonArgs& args) {
  if (args.config_path.empty()) return ttkit::default_config();
  return ttkit::load_config(args.config_path);
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Flat JSON config; absent keys keep defaults");
  cmd->add_option("--seed", args.seed, "Random seed");
  cmd->add_option("--jobs", args.jobs, "Worker threads for batch commands")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Table-tennis flight simulation, fitting and dataset tooling"};
  app.require_subcommand(1);

  CommonArgs common;

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Integrate sampled flights to files");
  ttkit::SimulateOptions sim_opt;
  std::string sim_out = "out";
  add_common(simulate, common);
  simulate->add_option("-n,--count", sim_opt.count, "Trajectories to simulate");
  simulate->add_option("--duration", sim_opt.duration, "Seconds per flight");
  simulate->add_option("--rate", sim_opt.rate, "Sample rate, Hz");
  simulate->add_option("--out", sim_out, "Output directory")->required();

  // gen
  auto* gen = app.add_subcommand("gen", "Generate stitched rallies with ground truth");
  ttkit::GenerateOptions gen_opt;
  std::string gen_out = "dataset";
  double gen_rate = 0.0, gen_broadcast = 0.0;
  add_common(gen, common);
  gen->add_option("-n,--count", gen_opt.count, "Rallies to emit");
  gen->add_option("--pool-size", gen_opt.pool_size, "Validated entries per pool");
  gen->add_option("--rate", gen_rate, "Sample rate override, Hz");
  gen->add_option("--broadcast-rate", gen_broadcast, "Extra decimated stream, Hz");
  gen->add_flag("--cut", gen_opt.cut_subsequence, "Keep a random 20-250 frame window");
  gen->add_option("--out", gen_out, "Output directory")->required();

  // segment
  auto* segment = app.add_subcommand("segment", "Detect hits/bounces and build annotations");
  std::string seg_in, seg_out;
  add_common(segment, common);
  segment->add_option("--in", seg_in, "Directory of .traj.jsonl files")->required();
  segment->add_option("--out", seg_out, "Output directory")->required();
  double opt_min_peak_gap = -1, opt_min_abs_x = -1;
  segment->add_option("--min-peak-gap", opt_min_peak_gap, "Same-type extremum spacing, s");
  segment->add_option("--min-abs-x", opt_min_abs_x, "Minimum |x| of a hit, m");

  // fit
  auto* fit = app.add_subcommand("fit", "Physics-constrained trajectory fits per segment");
  std::string fit_in, fit_out;
  add_common(fit, common);
  fit->add_option("--in", fit_in, "Directory of .traj.jsonl (+ .ann.json) files")->required();
  fit->add_option("--out", fit_out, "Output directory")->required();
  double opt_huber = -1;
  int opt_multistart = -1;
  fit->add_option("--huber-delta", opt_huber, "Robust loss scale, m");
  fit->add_option("--multistart", opt_multistart, "Fit starts");

  // racket
  auto* racket = app.add_subcommand("racket", "Solve stroke problems from a JSONL file");
  std::string racket_in, racket_out;
  add_common(racket, common);
  racket->add_option("--in", racket_in, "StrokeProblem records")->required();
  racket->add_option("--out", racket_out, "Output stroke records")->required();

  // curate
  auto* curate = app.add_subcommand("curate", "Apply the filter stack and emit verdicts");
  std::string cur_in, cur_out, cur_cam, cur_humans;
  add_common(curate, common);
  curate->add_option("--in", cur_in, "Directory with traj/ann/fit files")->required();
  curate->add_option("--out", cur_out, "Output directory")->required();
  curate->add_option("--camera", cur_cam, "Camera JSON for the reprojection check");
  curate->add_option("--humans", cur_humans, "Per-rally human centroids JSON");
  double opt_reproj = -1, opt_ode = -1, opt_vis = -1;
  int opt_min_segments = -1;
  curate->add_option("--max-norm-reproj", opt_reproj, "Reprojection threshold");
  curate->add_option("--max-ode-rmse", opt_ode, "ODE fit threshold, m");
  curate->add_option("--min-ball-visibility", opt_vis, "Visibility fraction");
  curate->add_option("--min-segments", opt_min_segments, "Required segments");

  // calib
  auto* calib = app.add_subcommand("calib", "Camera pose and focal from table corners");
  std::string calib_in, calib_out;
  add_common(calib, common);
  calib->add_option("--corners", calib_in, "Corner observation JSON")->required();
  calib->add_option("--out", calib_out, "Camera JSON output")->required();

  // stats
  auto* stats = app.add_subcommand("stats", "Emit histogram records for plotting");
  std::string stats_in, stats_out;
  add_common(stats, common);
  stats->add_option("--in", stats_in, "Directory with traj/ann files")->required();
  stats->add_option("--out", stats_out, "Output JSONL file")->required();

  // mc-racket
  auto* mc = app.add_subcommand("mc-racket", "Monte-Carlo stroke recovery summary");
  std::string mc_out;
  int mc_trials = 500;
  add_common(mc, common);
  mc->add_option("-n,--trials", mc_trials, "Trials");
  mc->add_option("--out", mc_out, "Summary JSON output")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    ttkit::Config cfg = load_or_default(common);
    if (opt_min_peak_gap > 0) cfg.heuristics.min_peak_gap = opt_min_peak_gap;
    if (opt_min_abs_x > 0) cfg.heuristics.min_abs_x = opt_min_abs_x;
    if (opt_huber > 0) cfg.fit.huber_delta = opt_huber;
    if (opt_multistart > 0) cfg.fit.multistart_count = opt_multistart;
    if (opt_reproj > 0) cfg.curation.max_norm_reproj = opt_reproj;
    if (opt_ode > 0) cfg.curation.max_ode_rmse = opt_ode;
    if (opt_vis > 0) cfg.curation.min_ball_visibility = opt_vis;
    if (opt_min_segments > 0) cfg.curation.min_segments = opt_min_segments;
    cfg.validate();

    if (*simulate) {
      run_simulate(cfg, common.seed, sim_opt, sim_out);
    } else if (*gen) {
      gen_opt.jobs = common.jobs;
      if (gen_rate > 0) gen_opt.rate = gen_rate;
      if (gen_broadcast > 0) gen_opt.broadcast_rate = gen_broadcast;
      const ttkit::Manifest m = run_generate(cfg, common.seed, gen_opt, gen_out);
      std::printf("emitted %lld rallies (%.1f/s)\n",
                  static_cast<long long>(m.counts.at("emitted")),
                  m.scalars.at("rallies_per_s"));
    } else if (*segment) {
      run_segment(cfg, seg_in, seg_out, common.jobs);
    } else if (*fit) {
      run_fit(cfg, fit_in, fit_out, common.jobs);
    } else if (*racket) {
      run_solve_strokes(cfg, racket_in, racket_out, common.jobs);
    } else if (*curate) {
      ttkit::CurateOptions opt;
      if (!cur_cam.empty()) opt.camera = cur_cam;
      if (!cur_humans.empty()) opt.humans = cur_humans;
      run_curate(cfg, cur_in, cur_out, opt);
    } else if (*calib) {
      run_calibrate(cfg, calib_in, calib_out);
    } else if (*stats) {
      run_stats(cfg, stats_in, stats_out);
    } else if (*mc) {
      const ttkit::Manifest m = run_mc_racket(cfg, mc_trials, common.seed, mc_out);
      std::printf("success rate %.4f over %lld trials\n", m.scalars.at("success_rate"),
                  static_cast<long long>(m.counts.at("trials")));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
