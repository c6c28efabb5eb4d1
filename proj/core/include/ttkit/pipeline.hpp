#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "ttkit/config.hpp"
#include "ttkit/io.hpp"

namespace ttkit {

/// Index-parallel loop used by the batch commands; jobs <= 1 runs inline.
/// Work items must be independent, so outputs do not depend on scheduling.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

struct SimulateOptions {
  int count = 10;
  double duration = 2.0;
  double rate = 120.0;
};
Manifest run_simulate(const Config& cfg, std::uint64_t seed, const SimulateOptions& opt,
                      const fs::path& out_dir);

struct GenerateOptions {
  int count = 100;
  int pool_size = 400;
  int jobs = 1;
  std::optional<double> rate;            // overrides gen.sample_rate
  std::optional<double> broadcast_rate;  // extra decimated stream per rally
  bool cut_subsequence = false;          // training-style random window
};
Manifest run_generate(const Config& cfg, std::uint64_t seed, const GenerateOptions& opt,
                      const fs::path& out_dir);

Manifest run_segment(const Config& cfg, const fs::path& in_dir, const fs::path& out_dir,
                     int jobs);

Manifest run_fit(const Config& cfg, const fs::path& in_dir, const fs::path& out_dir, int jobs);

struct CurateOptions {
  std::optional<fs::path> camera;   // camera JSON applied to every rally
  std::optional<fs::path> humans;   // JSON {rally: [[x, y], ...]}
};
Manifest run_curate(const Config& cfg, const fs::path& in_dir, const fs::path& out_dir,
                    const CurateOptions& opt);

Manifest run_calibrate(const Config& cfg, const fs::path& corners_file, const fs::path& out_file);

Manifest run_stats(const Config& cfg, const fs::path& in_dir, const fs::path& out_file);

Manifest run_solve_strokes(const Config& cfg, const fs::path& problems_file,
                           const fs::path& out_file, int jobs);

Manifest run_mc_racket(const Config& cfg, int trials, std::uint64_t seed,
                       const fs::path& out_file);

std::string rally_stem(int index);

}  // namespace ttkit
