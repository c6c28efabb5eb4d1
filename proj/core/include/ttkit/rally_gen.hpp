#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ttkit/ballistics.hpp"
#include "ttkit/rng.hpp"
#include "ttkit/segmentation.hpp"

namespace ttkit {

enum class SegmentKind { toss, serve, rally_return };
const char* to_string(SegmentKind k);

struct PoolEntry {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 omega = Vec3::Zero();  // rad/s
};

struct ConditionPool {
  SegmentKind kind = SegmentKind::serve;
  std::vector<PoolEntry> entries;

  std::uint64_t fingerprint() const;
};

struct GenParams {
  double rk4_dt = 2e-3;
  double sample_rate = 120.0;  // Hz of emitted samples
  int max_attempts = 10;       // stitch retries per segment
  int min_segments = 1;        // return segments per rally, drawn uniformly
  int max_segments = 10;
  double max_segment_duration = 3.0;

  // Rejection-sampling ranges for the pools.
  double toss_behind_min = 0.1, toss_behind_max = 0.5;
  double toss_y = 0.5;
  double toss_above_min = 0.1, toss_above_max = 0.35;
  double toss_vx_out_max = 0.4, toss_vy = 0.15;
  double toss_vz_min = 1.0, toss_vz_max = 3.0;

  double serve_behind_min = 0.0, serve_behind_max = 0.6;
  double serve_y = 0.5;
  double serve_above_min = 0.2, serve_above_max = 0.5;
  double serve_speed_min = 2.0, serve_speed_max = 8.0;
  double serve_spin_max_hz = 50.0;
  double serve_dir_y = 0.25;
  double serve_dir_z_min = -0.12, serve_dir_z_max = 0.05;

  double return_behind_min = 0.1, return_behind_max = 1.0;
  double return_y = 0.7;
  double return_z_min = 0.85, return_z_max = 1.35;
  double return_speed_min = 3.0, return_speed_max = 12.0;
  double return_spin_max_hz = 50.0;
  double return_dir_y = 0.3;
  double return_dir_z_min = 0.02, return_dir_z_max = 0.3;
};

struct SimulatedSegment {
  SegmentKind kind = SegmentKind::serve;
  Trajectory trajectory;               // samples on the rally grid
  std::vector<BounceEvent> bounces;    // exact impact events
  BallState start;
  BallState end;
};

enum class SegmentFault {
  none,
  too_short,
  bounce_count,
  net_fault,
  out_of_bounds,
  wrong_half,
  side_exit,
  not_rising,
  reversed,
  no_apex,
};
const char* to_string(SegmentFault f);

struct Validity {
  bool valid = false;
  SegmentFault fault = SegmentFault::none;
};

/// Game-logic check per kind: a serve bounces once on each half and clears
/// the net in between; a return clears the net and bounces exactly once on
/// the opposite half inside the footprint; a toss rises above its release
/// point and stays over the server side.
Validity is_valid_trajectory(const SimulatedSegment& seg, const WorldGeometry& w);

/// Rolls one segment forward from `start` on the shared sample grid. A serve
/// or return ends at the post-bounce apex (the next hit instant); a toss ends
/// at its own apex. Early x-direction reversals, bounce-budget violations and
/// timeouts end the segment in a state that fails validation.
SimulatedSegment simulate_segment(SegmentKind kind, const BallState& start,
                                  const GenParams& gp, const WorldGeometry& w,
                                  const AeroParams& aero, const TableBounceParams& bp);

struct Pools {
  ConditionPool toss;
  ConditionPool serve;
  ConditionPool returns;
};

/// Rejection-samples initial conditions per kind until n_per_kind entries
/// pass validation. Deterministic given the seed. Throws PoolExhausted when
/// the acceptance rate falls below 0.1% over the sampling budget.
Pools build_pools(int n_per_kind, const GenParams& gp, const WorldGeometry& w,
                  const AeroParams& aero, const TableBounceParams& bp, std::uint64_t seed);

/// One stitching step: repeatedly takes the pool entry whose start position
/// is nearest to r_start (removing it from the working pool), rolls the
/// segment out from r_start with that entry's velocity and spin, and returns
/// the first valid result. Failure after max_attempts is a value, not an error.
std::optional<SimulatedSegment> stitch_next_segment(const BallState& r_start,
                                                    ConditionPool& working_pool,
                                                    int max_attempts, const GenParams& gp,
                                                    const WorldGeometry& w,
                                                    const AeroParams& aero,
                                                    const TableBounceParams& bp);

struct StitchedRally {
  std::vector<SimulatedSegment> segments;  // toss, serve, returns...
  std::vector<HitEvent> true_hits;         // stitch instants (serve + returns)
  double sample_rate = 0.0;
  double total_duration = 0.0;

  Trajectory flatten() const;  // stitch samples deduplicated
  std::vector<BounceEvent> all_bounces() const;
};

/// Builds toss + serve + `return_segments` returns per the stitching scheme;
/// any failed stitch makes the whole rally a failure value.
std::optional<StitchedRally> build_stitched_rally(const Pools& pools, int return_segments,
                                                  RandomSource& rng, const GenParams& gp,
                                                  const WorldGeometry& w, const AeroParams& aero,
                                                  const TableBounceParams& bp);

/// Training-style augmentation: keeps a random contiguous window of
/// min_frames..max_frames samples.
Trajectory cut_random_subsequence(const Trajectory& traj, RandomSource& rng,
                                  std::size_t min_frames = 20, std::size_t max_frames = 250);

}  // namespace ttkit
