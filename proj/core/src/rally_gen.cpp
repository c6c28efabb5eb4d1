#include "ttkit/rally_gen.hpp"

#include <algorithm>
#include <cmath>

#include "ttkit/errors.hpp"

namespace ttkit {

const char* to_string(SegmentKind k) {
  switch (k) {
    case SegmentKind::toss: return "toss";
    case SegmentKind::serve: return "serve";
    case SegmentKind::rally_return: return "return";
  }
  return "?";
}

const char* to_string(SegmentFault f) {
  switch (f) {
    case SegmentFault::none: return "None";
    case SegmentFault::too_short: return "TooShort";
    case SegmentFault::bounce_count: return "BounceCount";
    case SegmentFault::net_fault: return "NetFault";
    case SegmentFault::out_of_bounds: return "OutOfBounds";
    case SegmentFault::wrong_half: return "WrongHalf";
    case SegmentFault::side_exit: return "SideExit";
    case SegmentFault::not_rising: return "NotRising";
    case SegmentFault::reversed: return "Reversed";
    case SegmentFault::no_apex: return "NoApex";
  }
  return "?";
}

std::uint64_t ConditionPool::fingerprint() const {
  // FNV-1a over the raw entry bytes.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](double v) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& e : entries) {
    for (int i = 0; i < 3; ++i) mix(e.p[i]);
    for (int i = 0; i < 3; ++i) mix(e.v[i]);
    for (int i = 0; i < 3; ++i) mix(e.omega[i]);
  }
  return h;
}

namespace {

int required_bounces(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::toss: return 0;
    case SegmentKind::serve: return 2;
    case SegmentKind::rally_return: return 1;
  }
  return 0;
}

// z at the first x = 0 crossing between samples, or nullopt.
std::optional<double> net_crossing_height(const Trajectory& traj, double t_from, double t_to) {
  for (std::size_t i = 1; i < traj.samples.size(); ++i) {
    const auto& a = traj.samples[i - 1];
    const auto& b = traj.samples[i];
    if (a.t < t_from || b.t > t_to) continue;
    const double x0 = a.p3d->x(), x1 = b.p3d->x();
    if ((x0 <= 0.0) == (x1 <= 0.0)) continue;
    const double u = x0 / (x0 - x1);
    return a.p3d->z() + u * (b.p3d->z() - a.p3d->z());
  }
  return std::nullopt;
}

}  // namespace

Validity is_valid_trajectory(const SimulatedSegment& seg, const WorldGeometry& w) {
  const Trajectory& traj = seg.trajectory;
  if (traj.size() < 2) return {false, SegmentFault::too_short};

  const Side start_side = w.side_of(seg.start.p.x());

  if (seg.kind == SegmentKind::toss) {
    if (!seg.bounces.empty()) return {false, SegmentFault::bounce_count};
    double zmax = -1.0;
    for (const auto& s : traj.samples) {
      zmax = std::max(zmax, s.p3d->z());
      if (w.side_of(s.p3d->x()) != start_side) return {false, SegmentFault::side_exit};
    }
    if (!(zmax > seg.start.p.z())) return {false, SegmentFault::not_rising};
    return {true, SegmentFault::none};
  }

  const int need = required_bounces(seg.kind);
  if (static_cast<int>(seg.bounces.size()) != need) return {false, SegmentFault::bounce_count};
  if (seg.end.v.z() > 1e-9) return {false, SegmentFault::no_apex};

  for (const auto& b : seg.bounces) {
    if (!w.on_footprint(b.p.x(), b.p.y())) return {false, SegmentFault::out_of_bounds};
  }

  if (seg.kind == SegmentKind::serve) {
    if (w.side_of(seg.bounces[0].p.x()) != start_side) return {false, SegmentFault::wrong_half};
    if (w.side_of(seg.bounces[1].p.x()) != opposite(start_side)) {
      return {false, SegmentFault::wrong_half};
    }
    const auto z_net = net_crossing_height(traj, seg.bounces[0].t, seg.bounces[1].t);
    if (!z_net || !(*z_net > w.net_top())) return {false, SegmentFault::net_fault};
  } else {
    if (w.side_of(seg.bounces[0].p.x()) != opposite(start_side)) {
      return {false, SegmentFault::wrong_half};
    }
    const auto z_net = net_crossing_height(traj, seg.start.t, seg.bounces[0].t);
    if (!z_net || !(*z_net > w.net_top())) return {false, SegmentFault::net_fault};
  }
  return {true, SegmentFault::none};
}

SimulatedSegment simulate_segment(SegmentKind kind, const BallState& start,
                                  const GenParams& gp, const WorldGeometry& w,
                                  const AeroParams& aero, const TableBounceParams& bp) {
  SimulatedSegment seg;
  seg.kind = kind;
  seg.start = start;

  const int need = required_bounces(kind);
  FlightSimulator sim(start, gp.rk4_dt, need, w, aero, bp);

  TrajectorySample first;
  first.t = start.t;
  first.p3d = start.p;
  first.omega = start.omega;
  seg.trajectory.samples.push_back(first);

  const double frame = 1.0 / gp.sample_rate;
  const double vx_sign = start.v.x();
  const bool watch_reversal = kind != SegmentKind::toss;

  long long k = 1;
  while (true) {
    const double t_next = start.t + static_cast<double>(k) * frame;
    const bool alive = sim.advance_to(t_next);
    const BallState& s = sim.state();

    TrajectorySample ts;
    ts.t = s.t;
    ts.p3d = s.p;
    ts.omega = s.omega;
    seg.trajectory.samples.push_back(ts);

    if (!alive) break;  // floor contact or bounce budget exceeded
    if (watch_reversal && vx_sign * s.v.x() <= 0.0) break;  // direction reversed; invalid
    if (static_cast<int>(sim.bounces().size()) == need && s.v.z() <= 0.0) break;  // apex
    if (s.t - start.t > gp.max_segment_duration) break;
    ++k;
  }

  seg.bounces = sim.bounces();
  seg.end = sim.state();
  return seg;
}

namespace {

PoolEntry sample_candidate(SegmentKind kind, const GenParams& gp, const WorldGeometry& w,
                           RandomSource& rng) {
  const double side = rng.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0;
  PoolEntry e;
  switch (kind) {
    case SegmentKind::toss: {
      e.p = Vec3(side * (w.half_length() + rng.uniform(gp.toss_behind_min, gp.toss_behind_max)),
                 rng.uniform(-gp.toss_y, gp.toss_y),
                 w.table_height + rng.uniform(gp.toss_above_min, gp.toss_above_max));
      e.v = Vec3(side * rng.uniform(0.0, gp.toss_vx_out_max), rng.uniform(-gp.toss_vy, gp.toss_vy),
                 rng.uniform(gp.toss_vz_min, gp.toss_vz_max));
      e.omega = hz_to_rad(rng.uniform(0.0, 2.0)) * rng.unit_vector();
      break;
    }
    case SegmentKind::serve: {
      e.p = Vec3(side * (w.half_length() + rng.uniform(gp.serve_behind_min, gp.serve_behind_max)),
                 rng.uniform(-gp.serve_y, gp.serve_y),
                 w.table_height + rng.uniform(gp.serve_above_min, gp.serve_above_max));
      Vec3 dir(-side, rng.uniform(-gp.serve_dir_y, gp.serve_dir_y),
               rng.uniform(gp.serve_dir_z_min, gp.serve_dir_z_max));
      dir.normalize();
      e.v = rng.uniform(gp.serve_speed_min, gp.serve_speed_max) * dir;
      e.omega = hz_to_rad(rng.uniform(0.0, gp.serve_spin_max_hz)) * rng.unit_vector();
      break;
    }
    case SegmentKind::rally_return: {
      e.p = Vec3(side * (w.half_length() + rng.uniform(gp.return_behind_min, gp.return_behind_max)),
                 rng.uniform(-gp.return_y, gp.return_y),
                 rng.uniform(gp.return_z_min, gp.return_z_max));
      Vec3 dir(-side, rng.uniform(-gp.return_dir_y, gp.return_dir_y),
               rng.uniform(gp.return_dir_z_min, gp.return_dir_z_max));
      dir.normalize();
      e.v = rng.uniform(gp.return_speed_min, gp.return_speed_max) * dir;
      e.omega = hz_to_rad(rng.uniform(0.0, gp.return_spin_max_hz)) * rng.unit_vector();
      break;
    }
  }
  return e;
}

ConditionPool build_pool(SegmentKind kind, int n, const GenParams& gp, const WorldGeometry& w,
                         const AeroParams& aero, const TableBounceParams& bp,
                         RandomSource& rng) {
  ConditionPool pool;
  pool.kind = kind;
  pool.entries.reserve(n);

  const long long budget = std::max<long long>(20000, 1000LL * n);
  long long tried = 0;
  while (static_cast<int>(pool.entries.size()) < n) {
    if (tried++ >= budget) {
      throw PoolExhausted(std::string("pool acceptance below 0.1% for ") + to_string(kind));
    }
    const PoolEntry cand = sample_candidate(kind, gp, w, rng);
    BallState s0;
    s0.t = 0.0;
    s0.p = cand.p;
    s0.v = cand.v;
    s0.omega = cand.omega;
    const SimulatedSegment seg = simulate_segment(kind, s0, gp, w, aero, bp);
    if (is_valid_trajectory(seg, w).valid) pool.entries.push_back(cand);
  }
  return pool;
}

}  // namespace

Pools build_pools(int n_per_kind, const GenParams& gp, const WorldGeometry& w,
                  const AeroParams& aero, const TableBounceParams& bp, std::uint64_t seed) {
  if (n_per_kind < 1) throw BadProblem("n_per_kind must be >= 1");
  RandomSource rng_toss(seed ^ 0x746f7373ULL);
  RandomSource rng_serve(seed ^ 0x7365727665ULL);
  RandomSource rng_return(seed ^ 0x72657475726eULL);
  Pools pools;
  pools.toss = build_pool(SegmentKind::toss, n_per_kind, gp, w, aero, bp, rng_toss);
  pools.serve = build_pool(SegmentKind::serve, n_per_kind, gp, w, aero, bp, rng_serve);
  pools.returns = build_pool(SegmentKind::rally_return, n_per_kind, gp, w, aero, bp, rng_return);
  return pools;
}

std::optional<SimulatedSegment> stitch_next_segment(const BallState& r_start,
                                                    ConditionPool& working_pool,
                                                    int max_attempts, const GenParams& gp,
                                                    const WorldGeometry& w,
                                                    const AeroParams& aero,
                                                    const TableBounceParams& bp) {
  for (int attempt = 0; attempt < max_attempts && !working_pool.entries.empty(); ++attempt) {
    std::size_t nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < working_pool.entries.size(); ++i) {
      const double d = (working_pool.entries[i].p - r_start.p).squaredNorm();
      if (d < best) {
        best = d;
        nearest = i;
      }
    }
    const PoolEntry entry = working_pool.entries[nearest];
    working_pool.entries.erase(working_pool.entries.begin() +
                               static_cast<std::ptrdiff_t>(nearest));

    BallState s0 = r_start;
    s0.v = entry.v;
    s0.omega = entry.omega;
    SimulatedSegment seg = simulate_segment(working_pool.kind, s0, gp, w, aero, bp);
    if (is_valid_trajectory(seg, w).valid) return seg;
  }
  return std::nullopt;
}

std::optional<StitchedRally> build_stitched_rally(const Pools& pools, int return_segments,
                                                  RandomSource& rng, const GenParams& gp,
                                                  const WorldGeometry& w, const AeroParams& aero,
                                                  const TableBounceParams& bp) {
  if (pools.toss.entries.empty() || pools.serve.entries.empty() ||
      pools.returns.entries.empty()) {
    return std::nullopt;
  }

  StitchedRally rally;
  rally.sample_rate = gp.sample_rate;

  // Toss straight from a sampled pool entry; entries were validated from
  // their own start states.
  const auto& toss_entry = pools.toss.entries[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(pools.toss.entries.size()) - 1))];
  BallState s0;
  s0.t = 0.0;
  s0.p = toss_entry.p;
  s0.v = toss_entry.v;
  s0.omega = toss_entry.omega;
  SimulatedSegment toss = simulate_segment(SegmentKind::toss, s0, gp, w, aero, bp);
  if (!is_valid_trajectory(toss, w).valid) return std::nullopt;
  rally.segments.push_back(std::move(toss));

  // Serve from the toss apex, then the returns; removal is rally-local.
  ConditionPool serve_pool = pools.serve;
  ConditionPool return_pool = pools.returns;

  auto serve = stitch_next_segment(rally.segments.back().end, serve_pool, gp.max_attempts, gp,
                                   w, aero, bp);
  if (!serve) return std::nullopt;
  rally.true_hits.push_back(
      {serve->start.t, serve->start.p, w.side_of(serve->start.p.x())});
  rally.segments.push_back(std::move(*serve));

  for (int i = 0; i < return_segments; ++i) {
    auto ret = stitch_next_segment(rally.segments.back().end, return_pool, gp.max_attempts, gp,
                                   w, aero, bp);
    if (!ret) return std::nullopt;
    rally.true_hits.push_back({ret->start.t, ret->start.p, w.side_of(ret->start.p.x())});
    rally.segments.push_back(std::move(*ret));
  }

  rally.total_duration = rally.segments.back().end.t;
  return rally;
}

Trajectory StitchedRally::flatten() const {
  Trajectory out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& samples = segments[i].trajectory.samples;
    // The stitch instant belongs to the incoming segment, so the shared
    // sample carries the post-hit spin.
    const std::size_t until = i + 1 < segments.size() ? samples.size() - 1 : samples.size();
    for (std::size_t j = 0; j < until; ++j) out.samples.push_back(samples[j]);
  }
  return out;
}

std::vector<BounceEvent> StitchedRally::all_bounces() const {
  std::vector<BounceEvent> out;
  for (const auto& seg : segments) {
    out.insert(out.end(), seg.bounces.begin(), seg.bounces.end());
  }
  return out;
}

Trajectory cut_random_subsequence(const Trajectory& traj, RandomSource& rng,
                                  std::size_t min_frames, std::size_t max_frames) {
  if (traj.size() <= min_frames) return traj;
  const std::size_t len = static_cast<std::size_t>(rng.uniform_int(
      static_cast<std::int64_t>(min_frames),
      static_cast<std::int64_t>(std::min(max_frames, traj.size()))));
  const std::size_t start = static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(traj.size() - len)));
  Trajectory out;
  out.samples.assign(traj.samples.begin() + static_cast<std::ptrdiff_t>(start),
                     traj.samples.begin() + static_cast<std::ptrdiff_t>(start + len));
  return out;
}

}  // namespace ttkit
