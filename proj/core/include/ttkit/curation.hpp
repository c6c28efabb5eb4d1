#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ttkit/camera.hpp"
#include "ttkit/segmentation.hpp"
#include "ttkit/trajectory.hpp"
#include "ttkit/trajectory_fit.hpp"

namespace ttkit {

struct CurationThresholds {
  double max_norm_reproj = 0.2;      // fraction of the table diagonal
  double max_ode_rmse = 0.30;        // m, against the fit's max pointwise error
  int min_hits = 2;
  double min_ball_visibility = 0.5;  // fraction of visible samples
  double min_peak_gap = 0.2;         // s
  double min_abs_x = 0.3;            // m
  int min_segments = 2;
  double human_x_min = 0.5, human_x_max = 8.22;    // m, |mean x| per player
  double human_y_min = 0.5, human_y_max = 1.525;   // m, |mean y| per player
};

enum class CurationReason {
  none,
  high_reproj,
  high_ode_fit,
  not_enough_segments,
  low_ball_visibility,
  invalid_human_pos,
  event_implausible,
};
const char* to_string(CurationReason r);

struct CurationMetrics {
  std::optional<double> max_norm_reproj;  // absent without camera/2D data
  std::optional<double> ode_max_error;    // m, worst segment
  std::optional<double> ode_rmse;         // m, worst segment
  double visibility = 0.0;
  int n_segments = 0;
  int n_hits = 0;
  bool events_valid = false;
  std::optional<bool> humans_ok;
};

struct CurationVerdict {
  bool accepted = false;
  CurationReason reason = CurationReason::none;
  CurationMetrics metrics;
};

/// Applies the filter stack in order: reprojection, event plausibility, ODE
/// fit, ball visibility, segment count, human centroid bounds. The first
/// failure decides the reason; all metrics are computed regardless. Checks
/// whose inputs are absent (no camera, no humans) pass vacuously.
CurationVerdict curate(const Trajectory& traj, const RallyAnnotation& annotation,
                       const std::optional<CameraModel>& cam,
                       std::span<const FitResult> segment_fits,
                       const std::optional<std::vector<Vec2>>& human_centroids,
                       const CurationThresholds& thresholds, const WorldGeometry& w);

/// Mean Euclidean 3D distance over aligned valid samples, in centimeters.
double metric_delta_r3d(const Trajectory& pred, const Trajectory& gt);
/// Multi-trajectory form: mean over trajectories of per-trajectory means.
double metric_delta_r3d_batch(std::span<const std::pair<Trajectory, Trajectory>> pairs);

/// Mean Euclidean spin distance, Hz.
double metric_delta_omega(std::span<const Vec3> pred_hz, std::span<const Vec3> gt_hz);

/// Mean pixel distance between projected predictions and 2D ground truth.
double metric_delta_r2d(const Trajectory& pred, const Trajectory& gt2d, const CameraModel& cam);

/// Unweighted mean of the topspin and backspin F1 scores. A class absent
/// from both prediction and ground truth counts as F1 = 1.
double macro_f1(std::span<const SpinClass> pred, std::span<const SpinClass> gt);

struct Histogram1D {
  std::string name;
  double lo = 0.0, hi = 1.0;
  std::vector<std::uint64_t> counts;
  std::uint64_t underflow = 0, overflow = 0;

  Histogram1D() = default;
  Histogram1D(std::string name_, double lo_, double hi_, int nbins);
  void add(double x);
  void merge(const Histogram1D& other);
  std::vector<double> edges() const;
  std::uint64_t total() const;
};

struct Histogram2D {
  std::string name;
  double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
  int nx = 0, ny = 0;
  std::vector<std::uint64_t> counts;  // row-major, y outer
  std::uint64_t outside = 0;

  Histogram2D() = default;
  Histogram2D(std::string name_, double x_lo_, double x_hi_, int nx_, double y_lo_,
              double y_hi_, int ny_);
  void add(double x, double y);
  void merge(const Histogram2D& other);
  std::uint64_t in_region(double x0, double x1, double y0, double y1) const;
};

struct RallyRecord {
  Trajectory traj;
  RallyAnnotation annotation;
};

struct StatisticsBundle {
  std::vector<Histogram1D> spin_by_class;  // one per spin class, Hz magnitude
  Histogram2D ball_xy;
  Histogram2D ball_xz;
  Histogram2D bounce_xy;
  Histogram1D inter_hit;  // seconds

  void merge(const StatisticsBundle& other);
};

/// Fixed-bin dataset statistics: per-class spin strength (1 Hz bins, 0-50),
/// ball and bounce densities (5 cm bins), inter-hit times (20 ms bins).
StatisticsBundle emit_statistics(std::span<const RallyRecord> rallies);

}  // namespace ttkit
