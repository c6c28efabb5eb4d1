#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ttkit/ballistics.hpp"
#include "ttkit/camera.hpp"
#include "ttkit/curation.hpp"
#include "ttkit/racket_solver.hpp"
#include "ttkit/rally_gen.hpp"
#include "ttkit/segmentation.hpp"
#include "ttkit/trajectory_fit.hpp"

namespace ttkit {

namespace fs = std::filesystem;

/// Write-then-rename so readers never observe a partial file.
void atomic_write(const fs::path& path, const std::string& content);
std::string read_file(const fs::path& path);

// Trajectories: one JSON record per line, {t, p3d?, omega_hz?, p2d?, visible},
// missing fields null. Spin crosses this boundary in Hz.
void save_trajectory(const Trajectory& traj, const fs::path& path);
Trajectory load_trajectory(const fs::path& path);
std::string trajectory_to_jsonl(const Trajectory& traj);
Trajectory trajectory_from_jsonl(const std::string& text);

void save_annotation(const RallyAnnotation& ann, const fs::path& path);
RallyAnnotation load_annotation(const fs::path& path);

/// Generator ground truth: exact hit and bounce events plus per-segment kind.
struct RallyTruth {
  std::vector<HitEvent> hits;
  std::vector<BounceEvent> bounces;
  std::vector<std::pair<SegmentKind, double>> segment_starts;
  double sample_rate = 0.0;
  std::uint64_t seed = 0;
};
void save_truth(const RallyTruth& truth, const fs::path& path);
RallyTruth load_truth(const fs::path& path);

void save_fits(const std::vector<FitResult>& fits, const fs::path& path);
/// Fit records hold the initial state and quality numbers, not the fitted
/// samples; re-simulation reproduces those bit-exactly.
struct FitRecord {
  BallState x0;
  double rmse = 0.0;
  double max_error = 0.0;
  int n_bounces = 0;
  bool converged = false;
  int iterations = 0;
};
std::vector<FitRecord> load_fits(const fs::path& path);

void save_camera(const CameraModel& cam, const fs::path& path);
CameraModel load_camera(const fs::path& path);

/// Ordered corner pixels (near-left, near-right, far-right, far-left) and the
/// image size.
struct CornerObservation {
  std::array<Vec2, 4> corners;
  int width = 0;
  int height = 0;
};
void save_corners(const CornerObservation& c, const fs::path& path);
CornerObservation load_corners(const fs::path& path);

void save_stroke_problems(const std::vector<StrokeProblem>& problems, const fs::path& path);
std::vector<StrokeProblem> load_stroke_problems(const fs::path& path);
void save_strokes(const std::vector<RacketStroke>& strokes, const fs::path& path);
std::vector<RacketStroke> load_strokes(const fs::path& path);

void save_mc_summary(const StrokeMonteCarloSummary& s, const fs::path& path);

struct VerdictRecord {
  std::string rally;
  CurationVerdict verdict;
};
void save_verdicts(const std::vector<VerdictRecord>& verdicts, const fs::path& path);

void save_statistics(const StatisticsBundle& stats, const fs::path& path);

struct Manifest {
  std::string command;
  std::string config_fingerprint;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::map<std::string, std::int64_t> counts;
  std::map<std::string, double> scalars;
  double wall_time_s = 0.0;
};
void save_manifest(const Manifest& m, const fs::path& path);
Manifest load_manifest(const fs::path& path);

}  // namespace ttkit
