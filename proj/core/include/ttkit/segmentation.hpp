#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ttkit/geometry.hpp"
#include "ttkit/trajectory.hpp"

namespace ttkit {

struct HitHeuristics {
  double min_peak_gap = 0.2;  // s, between same-type extrema
  double min_abs_x = 0.3;     // m, extremum distance from the net plane
  int min_hits = 2;
  // Extrema are not declared across sample gaps longer than this multiple of
  // the median frame interval (occlusion boundaries produce phantom events).
  double max_gap_factor = 3.0;
};

struct HitEvent {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  Side side = Side::left;
};

enum class Half { left, right, off };

struct BounceObservation {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  bool on_table = false;
  Half half = Half::off;
};

enum class SpinClass { topspin, backspin, side_left, side_right, no_spin };
const char* to_string(SpinClass c);

enum class RejectReason { none, missing_bounce, too_few_hits, extra_bounce, non_alternating };
const char* to_string(RejectReason r);

struct Segment {
  double t_start = 0.0;
  double t_end = 0.0;
  Side hitter_side = Side::left;
  int bounce_count = 0;
  std::optional<SpinClass> spin_class;
};

struct RallyAnnotation {
  std::vector<HitEvent> hits;
  std::vector<BounceObservation> bounces;
  std::vector<Segment> segments;
  std::optional<std::size_t> serve_index;  // always 0 when present
  bool valid = false;
  RejectReason reason = RejectReason::none;
};

/// Hit events are local extrema of x(t) over valid samples, kept when
/// |x| >= min_abs_x and same-type spacing >= min_peak_gap. Side is sign(x).
std::vector<HitEvent> detect_hits(const Trajectory& traj, const HitHeuristics& h);

/// Table bounces are local minima of z(t) within z_window of the table plane;
/// on_table requires the footprint, half is sign(x).
std::vector<BounceObservation> detect_bounces(const Trajectory& traj, const WorldGeometry& w,
                                              const HitHeuristics& h, double z_window = 0.05);

/// Segments span consecutive hits (plus a final one up to the last event).
/// Implausible event sequences yield valid = false with a reason, never a throw.
RallyAnnotation build_segments(std::span<const HitEvent> hits,
                               std::span<const BounceObservation> bounces,
                               const HitHeuristics& h);

/// Full 3D-domain annotation: hits, bounces, segments, and a per-segment spin
/// class from the first in-segment spin sample.
RallyAnnotation annotate(const Trajectory& traj, const WorldGeometry& w,
                         const HitHeuristics& h, double no_spin_threshold_hz = 5.0);

/// Ball-frame spin classification. The frame has y orthogonal to the velocity
/// and parallel to the table plane, z up. Takes spin in Hz.
SpinClass classify_spin(const Vec3& omega_hz, const Vec3& v, double no_spin_threshold_hz = 5.0);

enum class DuplicationKind { none, aperiodic, periodic };

struct DuplicationEstimate {
  DuplicationKind kind = DuplicationKind::none;
  long long period = 0;  // modal spacing f
  long long offset = 0;  // modal residue s mod f
};

/// Periodic-duplication estimator over sorted duplicate frame indices.
/// Spacings of 1 are ignored; fewer than three duplicates or no nontrivial
/// spacing means periodicity cannot be estimated and the case is aperiodic.
DuplicationEstimate estimate_frame_duplication(std::span<const long long> dup_indices);

}  // namespace ttkit
