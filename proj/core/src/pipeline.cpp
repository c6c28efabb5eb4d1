#include "ttkit/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <map>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "ttkit/errors.hpp"

namespace ttkit {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<fs::path> list_with_suffix(const fs::path& dir, const std::string& suffix) {
  std::vector<fs::path> out;
  if (!fs::exists(dir)) throw IoError("no such directory: " + dir.string());
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string stem_of(const fs::path& file, const std::string& suffix) {
  const std::string name = file.filename().string();
  return name.substr(0, name.size() - suffix.size());
}

std::uint64_t rally_seed(std::uint64_t run_seed, std::uint64_t index) {
  return run_seed ^ (0x9e3779b97f4a7c15ULL * (index + 1));
}

Trajectory decimate(const Trajectory& dense, double from_rate, double to_rate) {
  Trajectory out;
  const double step = from_rate / to_rate;
  double next = 0.0;
  for (std::size_t i = 0; i < dense.samples.size(); ++i) {
    if (static_cast<double>(i) + 1e-9 >= next) {
      out.samples.push_back(dense.samples[i]);
      next += step;
    }
  }
  return out;
}

}  // namespace

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  std::mutex error_mutex;
  std::exception_ptr error;
  const int count = std::min<int>(jobs, static_cast<int>(n));
  for (int t = 0; t < count; ++t) {
    workers.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

std::string rally_stem(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "rally_%06d", index);
  return buf;
}

Manifest run_simulate(const Config& cfg, std::uint64_t seed, const SimulateOptions& opt,
                      const fs::path& out_dir) {
  const auto t0 = Clock::now();
  fs::create_directories(out_dir);

  Manifest m;
  m.command = "simulate";
  m.config_fingerprint = cfg.fingerprint();
  m.seed = seed;

  for (int i = 0; i < opt.count; ++i) {
    RandomSource rng(rally_seed(seed, static_cast<std::uint64_t>(i)));
    const double side = rng.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    BallState s0;
    s0.p = Vec3(side * (cfg.world.half_length() + rng.uniform(0.0, 0.6)),
                rng.uniform(-0.5, 0.5), cfg.world.table_height + rng.uniform(0.2, 0.5));
    Vec3 dir(-side, rng.uniform(-0.25, 0.25), rng.uniform(-0.1, 0.1));
    dir.normalize();
    s0.v = rng.uniform(2.0, 8.0) * dir;
    s0.omega = hz_to_rad(rng.uniform(0.0, 30.0)) * rng.unit_vector();

    std::vector<double> times;
    const auto n = static_cast<std::size_t>(opt.duration * opt.rate);
    times.reserve(n + 1);
    for (std::size_t k = 0; k <= n; ++k) times.push_back(static_cast<double>(k) / opt.rate);

    const FlightResult res = simulate_at_times(s0, times, cfg.fit.rk4_dt, cfg.world, cfg.aero,
                                               cfg.bounce, cfg.fit.max_bounces);
    char name[32];
    std::snprintf(name, sizeof(name), "sim_%06d", i);
    const fs::path out = out_dir / (std::string(name) + ".traj.jsonl");
    save_trajectory(res.trajectory, out);
    m.outputs.push_back(out.filename().string());
  }

  m.counts["trajectories"] = opt.count;
  m.wall_time_s = seconds_since(t0);
  save_manifest(m, out_dir / "manifest.json");
  return m;
}

Manifest run_generate(const Config& cfg, std::uint64_t seed, const GenerateOptions& opt,
                      const fs::path& out_dir) {
  const auto t0 = Clock::now();
  fs::create_directories(out_dir);

  GenParams gp = cfg.gen;
  if (opt.rate) gp.sample_rate = *opt.rate;

  const Pools pools =
      build_pools(opt.pool_size, gp, cfg.world, cfg.aero, cfg.bounce, seed ^ 0x706f6f6cULL);
  const double pool_time = seconds_since(t0);

  Manifest m;
  m.command = "gen";
  m.config_fingerprint = cfg.fingerprint();
  m.seed = seed;

  struct RallyOut {
    StitchedRally rally;
    std::uint64_t seed = 0;
    std::uint64_t attempts = 0;
  };
  std::vector<std::optional<RallyOut>> produced(static_cast<std::size_t>(opt.count));

  const auto gen_t0 = Clock::now();
  parallel_for(static_cast<std::size_t>(opt.count), opt.jobs, [&](std::size_t i) {
    // Attempts advance the per-rally seed, so results do not depend on how
    // rallies are spread over workers.
    for (std::uint64_t attempt = 0; attempt < 2000; ++attempt) {
      const std::uint64_t s = rally_seed(seed, i * 4096 + attempt);
      RandomSource rng(s);
      const int n_returns =
          static_cast<int>(rng.uniform_int(gp.min_segments, gp.max_segments));
      auto rally = build_stitched_rally(pools, n_returns, rng, gp, cfg.world, cfg.aero,
                                        cfg.bounce);
      if (rally) {
        produced[i] = RallyOut{std::move(*rally), s, attempt + 1};
        return;
      }
    }
  });
  const double gen_time = seconds_since(gen_t0);

  std::int64_t emitted = 0, failed_attempts = 0;
  for (int i = 0; i < opt.count; ++i) {
    const auto& out = produced[static_cast<std::size_t>(i)];
    if (!out) continue;
    failed_attempts += static_cast<std::int64_t>(out->attempts) - 1;

    Trajectory traj = out->rally.flatten();
    if (opt.cut_subsequence) {
      RandomSource rng(out->seed ^ 0x637574ULL);
      traj = cut_random_subsequence(traj, rng);
    }
    const std::string stem = rally_stem(i);
    save_trajectory(traj, out_dir / (stem + ".traj.jsonl"));
    m.outputs.push_back(stem + ".traj.jsonl");

    if (opt.broadcast_rate) {
      save_trajectory(decimate(traj, gp.sample_rate, *opt.broadcast_rate),
                      out_dir / (stem + ".broadcast.jsonl"));
      m.outputs.push_back(stem + ".broadcast.jsonl");
    }

    RallyTruth truth;
    truth.hits = out->rally.true_hits;
    truth.bounces = out->rally.all_bounces();
    for (const auto& seg : out->rally.segments) {
      truth.segment_starts.emplace_back(seg.kind, seg.start.t);
    }
    truth.sample_rate = gp.sample_rate;
    truth.seed = out->seed;
    save_truth(truth, out_dir / (stem + ".truth.json"));
    m.outputs.push_back(stem + ".truth.json");
    ++emitted;
  }

  m.counts["requested"] = opt.count;
  m.counts["emitted"] = emitted;
  m.counts["failed_attempts"] = failed_attempts;
  m.counts["pool_size_per_kind"] = opt.pool_size;
  m.scalars["pool_build_s"] = pool_time;
  m.scalars["generation_s"] = gen_time;
  m.scalars["rallies_per_s"] = gen_time > 0 ? static_cast<double>(emitted) / gen_time : 0.0;
  m.scalars["pool_fingerprint_toss"] = static_cast<double>(pools.toss.fingerprint() >> 11);
  m.scalars["pool_fingerprint_serve"] = static_cast<double>(pools.serve.fingerprint() >> 11);
  m.scalars["pool_fingerprint_return"] = static_cast<double>(pools.returns.fingerprint() >> 11);
  m.wall_time_s = seconds_since(t0);
  save_manifest(m, out_dir / "manifest.json");
  return m;
}

Manifest run_segment(const Config& cfg, const fs::path& in_dir, const fs::path& out_dir,
                     int jobs) {
  const auto t0 = Clock::now();
  fs::create_directories(out_dir);
  const auto files = list_with_suffix(in_dir, ".traj.jsonl");

  Manifest m;
  m.command = "segment";
  m.config_fingerprint = cfg.fingerprint();

  std::vector<std::string> outputs(files.size());
  std::atomic<std::int64_t> valid_count{0};
  parallel_for(files.size(), jobs, [&](std::size_t i) {
    const Trajectory traj = load_trajectory(files[i]);
    const RallyAnnotation ann =
        annotate(traj, cfg.world, cfg.heuristics, cfg.no_spin_threshold_hz);
    const std::string stem = stem_of(files[i], ".traj.jsonl");
    save_annotation(ann, out_dir / (stem + ".ann.json"));
    outputs[i] = stem + ".ann.json";
    if (ann.valid) ++valid_count;
  });

  for (const auto& f : files) m.inputs.push_back(f.filename().string());
  m.outputs = outputs;
  m.counts["rallies"] = static_cast<std::int64_t>(files.size());
  m.counts["valid"] = valid_count;
  m.wall_time_s = seconds_since(t0);
  save_manifest(m, out_dir / "segment_manifest.json");
  return m;
}

Manifest run_fit(const Config& cfg, const fs::path& in_dir, const fs::path& out_dir, int jobs) {
  const auto t0 = Clock::now();
  fs::create_directories(out_dir);
  const auto files = list_with_suffix(in_dir, ".traj.jsonl");

  Manifest m;
  m.command = "fit";
  m.config_fingerprint = cfg.fingerprint();

  std::vector<std::string> outputs(files.size());
  std::atomic<std::int64_t> segments_fit{0};
  parallel_for(files.size(), jobs, [&](std::size_t i) {
    const Trajectory traj = load_trajectory(files[i]);
    const std::string stem = stem_of(files[i], ".traj.jsonl");

    // Segment windows come from the annotation when present; otherwise the
    // whole trajectory is fit as one segment.
    std::vector<std::pair<double, double>> windows;
    const fs::path ann_path = in_dir / (stem + ".ann.json");
    if (fs::exists(ann_path)) {
      const RallyAnnotation ann = load_annotation(ann_path);
      for (const auto& seg : ann.segments) windows.emplace_back(seg.t_start, seg.t_end);
    }
    if (windows.empty() && !traj.samples.empty()) {
      windows.emplace_back(traj.samples.front().t, traj.samples.back().t);
    }

    std::vector<FitResult> fits;
    for (const auto& [t_start, t_end] : windows) {
      Trajectory piece;
      for (const auto& s : traj.samples) {
        if (s.t >= t_start - 1e-9 && s.t <= t_end + 1e-9) piece.samples.push_back(s);
      }
      try {
        fits.push_back(ode_fit(piece, cfg.world, cfg.aero, cfg.bounce, cfg.fit));
      } catch (const TooFewSamples&) {
        FitResult empty;
        empty.converged = false;
        empty.max_error = std::numeric_limits<double>::infinity();
        fits.push_back(empty);
      }
      ++segments_fit;
    }
    save_fits(fits, out_dir / (stem + ".fit.jsonl"));
    outputs[i] = stem + ".fit.jsonl";
  });

  for (const auto& f : files) m.inputs.push_back(f.filename().string());
  m.outputs = outputs;
  m.counts["rallies"] = static_cast<std::int64_t>(files.size());
  m.counts["segments_fit"] = segments_fit;
  m.wall_time_s = seconds_since(t0);
  save_manifest(m, out_dir / "fit_manifest.json");
  return m;
}

Manifest run_curate(const Config& cfg, const fs::path& in_dir, const fs::path& out_dir,
                    const CurateOptions& opt) {
  const auto t0 = Clock::now();
  fs::create_directories(out_dir);
  const auto files = list_with_suffix(in_dir, ".traj.jsonl");

  std::optional<CameraModel> cam;
  if (opt.camera) cam = load_camera(*opt.camera);

  std::map<std::string, std::vector<Vec2>> humans;
  if (opt.humans) {
    const json j = json::parse(read_file(*opt.humans));
    for (const auto& [rally, list] : j.items()) {
      std::vector<Vec2> centroids;
      for (const auto& c : list) centroids.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
      humans[rally] = centroids;
    }
  }

  Manifest m;
  m.command = "curate";
  m.config_fingerprint = cfg.fingerprint();

  std::vector<VerdictRecord> verdicts;
  std::map<std::string, std::int64_t> table{
      {"success", 0},          {"invalid human pos", 0}, {"not enough segments", 0},
      {"high reproj errors", 0}, {"high ODE fit", 0},      {"low ball vis", 0},
  };

  for (const auto& file : files) {
    const std::string stem = stem_of(file, ".traj.jsonl");
    const Trajectory traj = load_trajectory(file);
    const fs::path ann_path = in_dir / (stem + ".ann.json");
    const fs::path fit_path = in_dir / (stem + ".fit.jsonl");
    if (!fs::exists(ann_path) || !fs::exists(fit_path)) {
      throw InconsistentInputs("missing annotation or fits for " + stem);
    }
    const RallyAnnotation ann = load_annotation(ann_path);
    const auto records = load_fits(fit_path);
    std::vector<FitResult> fits(records.size());
    for (std::size_t k = 0; k < records.size(); ++k) {
      fits[k].x0 = records[k].x0;
      fits[k].rmse = records[k].rmse;
      fits[k].max_error = records[k].max_error;
      fits[k].n_bounces = records[k].n_bounces;
      fits[k].converged = records[k].converged;
    }

    std::optional<std::vector<Vec2>> rally_humans;
    if (const auto it = humans.find(stem); it != humans.end()) rally_humans = it->second;

    const CurationVerdict verdict =
        curate(traj, ann, cam, fits, rally_humans, cfg.curation, cfg.world);
    verdicts.push_back({stem, verdict});

    // Tally rows follow the reporting labels; event-implausible rallies land
    // under "not enough segments".
    switch (verdict.reason) {
      case CurationReason::none: ++table["success"]; break;
      case CurationReason::invalid_human_pos: ++table["invalid human pos"]; break;
      case CurationReason::event_implausible:
      case CurationReason::not_enough_segments: ++table["not enough segments"]; break;
      case CurationReason::high_reproj: ++table["high reproj errors"]; break;
      case CurationReason::high_ode_fit: ++table["high ODE fit"]; break;
      case CurationReason::low_ball_visibility: ++table["low ball vis"]; break;
    }
  }

  save_verdicts(verdicts, out_dir / "verdicts.jsonl");
  atomic_write(out_dir / "rejection_table.json", json(table).dump(2) + "\n");

  for (const auto& f : files) m.inputs.push_back(f.filename().string());
  m.outputs = {"verdicts.jsonl", "rejection_table.json"};
  m.counts["rallies"] = static_cast<std::int64_t>(files.size());
  for (const auto& [row, count] : table) m.counts["table: " + row] = count;
  m.wall_time_s = seconds_since(t0);
  save_manifest(m, out_dir / "curate_manifest.json");
  return m;
}

Manifest run_calibrate(const Config& cfg, const fs::path& corners_file,
                       const fs::path& out_file) {
  const auto t0 = Clock::now();
  const CornerObservation obs = load_corners(corners_file);
  const CalibrationResult result =
      calibrate_from_corners(obs.corners, obs.width, obs.height, cfg.world, cfg.calib);
  save_camera(result.cam, out_file);

  Manifest m;
  m.command = "calib";
  m.config_fingerprint = cfg.fingerprint();
  m.inputs = {corners_file.filename().string()};
  m.outputs = {out_file.filename().string()};
  m.scalars["residual_px"] = result.residual_px;
  m.scalars["f"] = result.cam.f;
  m.counts["converged"] = result.converged ? 1 : 0;
  m.wall_time_s = seconds_since(t0);
  save_manifest(m, out_file.parent_path() / "calib_manifest.json");
  return m;
}

Manifest run_stats(const Config& cfg, const fs::path& in_dir, const fs::path& out_file) {
  const auto t0 = Clock::now();
  const auto files = list_with_suffix(in_dir, ".traj.jsonl");

  std::vector<RallyRecord> rallies;
  for (const auto& file : files) {
    const std::string stem = stem_of(file, ".traj.jsonl");
    const fs::path ann_path = in_dir / (stem + ".ann.json");
    if (!fs::exists(ann_path)) continue;
    rallies.push_back({load_trajectory(file), load_annotation(ann_path)});
  }
  const StatisticsBundle stats = emit_statistics(rallies);
  save_statistics(stats, out_file);

  Manifest m;
  m.command = "stats";
  m.config_fingerprint = cfg.fingerprint();
  for (const auto& f : files) m.inputs.push_back(f.filename().string());
  m.outputs = {out_file.filename().string()};
  m.counts["rallies"] = static_cast<std::int64_t>(rallies.size());
  m.wall_time_s = seconds_since(t0);
  save_manifest(m, out_file.parent_path() / "stats_manifest.json");
  return m;
}

Manifest run_solve_strokes(const Config& cfg, const fs::path& problems_file,
                           const fs::path& out_file, int jobs) {
  const auto t0 = Clock::now();
  const auto problems = load_stroke_problems(problems_file);

  std::vector<RacketStroke> strokes(problems.size());
  parallel_for(problems.size(), jobs, [&](std::size_t i) {
    StrokeSolverConfig solver = cfg.stroke;
    solver.seed ^= i;
    strokes[i] = solve_stroke(problems[i], cfg.racket, cfg.aero, cfg.world, solver);
  });
  save_strokes(strokes, out_file);

  Manifest m;
  m.command = "racket";
  m.config_fingerprint = cfg.fingerprint();
  m.inputs = {problems_file.filename().string()};
  m.outputs = {out_file.filename().string()};
  m.counts["problems"] = static_cast<std::int64_t>(problems.size());
  m.counts["converged"] =
      std::count_if(strokes.begin(), strokes.end(), [](const auto& s) { return s.converged; });
  m.wall_time_s = seconds_since(t0);
  save_manifest(m, out_file.parent_path() / "racket_manifest.json");
  return m;
}

Manifest run_mc_racket(const Config& cfg, int trials, std::uint64_t seed,
                       const fs::path& out_file) {
  const auto t0 = Clock::now();
  StrokeMonteCarloConfig mc = cfg.mc;
  mc.trials = trials;
  mc.seed = seed;
  mc.solver = cfg.stroke;
  const StrokeMonteCarloSummary summary =
      run_stroke_monte_carlo(mc, cfg.racket, cfg.aero, cfg.world);
  save_mc_summary(summary, out_file);

  Manifest m;
  m.command = "mc-racket";
  m.config_fingerprint = cfg.fingerprint();
  m.seed = seed;
  m.outputs = {out_file.filename().string()};
  m.counts["trials"] = summary.trials;
  m.counts["converged"] = summary.converged;
  m.counts["succeeded"] = summary.succeeded;
  m.scalars["success_rate"] = summary.success_rate;
  m.wall_time_s = seconds_since(t0);
  save_manifest(m, out_file.parent_path() / "mc_manifest.json");
  return m;
}

}  // namespace ttkit
