#include <doctest.h>

#include <cmath>

#include "ttkit/ballistics.hpp"
#include "ttkit/errors.hpp"
#include "ttkit/rng.hpp"
#include "ttkit/segmentation.hpp"

using namespace ttkit;

namespace {

const WorldGeometry world{};
const HitHeuristics heur{};

Trajectory series_from_x(const std::vector<double>& xs, double dt = 1.0 / 30.0) {
  Trajectory t;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    TrajectorySample s;
    s.t = static_cast<double>(i) * dt;
    s.p3d = Vec3(xs[i], 0.0, 1.0);
    t.samples.push_back(s);
  }
  return t;
}

// Triangle wave between +-amp with the requested half-period.
Trajectory triangle_x(double amp, double half_period, int cycles, double dt) {
  std::vector<double> xs;
  const int steps = static_cast<int>(half_period / dt);
  double x = -amp;
  for (int c = 0; c < 2 * cycles; ++c) {
    const double dir = c % 2 == 0 ? 1.0 : -1.0;
    for (int i = 0; i < steps; ++i) xs.push_back(x + dir * 2.0 * amp * i / steps);
    x = -x;
  }
  return series_from_x(xs, dt);
}

}  // namespace

TEST_CASE("monotone x produces no hits") {
  std::vector<double> xs;
  for (int i = 0; i < 60; ++i) xs.push_back(-1.5 + 0.05 * i);
  CHECK(detect_hits(series_from_x(xs), heur).empty());
}

TEST_CASE("small-amplitude extrema are rejected") {
  Trajectory t = triangle_x(0.1, 0.5, 3, 1.0 / 30.0);
  CHECK(detect_hits(t, heur).empty());
}

TEST_CASE("triangle wave hits alternate sides at the turning points") {
  Trajectory t = triangle_x(1.5, 0.5, 4, 1.0 / 30.0);
  const auto hits = detect_hits(t, heur);
  REQUIRE(hits.size() >= 6);
  for (std::size_t i = 1; i < hits.size(); ++i) {
    CHECK(hits[i].side != hits[i - 1].side);
  }
  for (const auto& h : hits) CHECK(std::abs(h.p.x()) >= heur.min_abs_x);
}

TEST_CASE("hits are invariant to time shifts and mirror up to side relabeling") {
  Trajectory t = triangle_x(1.4, 0.4, 4, 1.0 / 30.0);
  const auto base = detect_hits(t, heur);

  Trajectory shifted = t;
  for (auto& s : shifted.samples) s.t += 17.3;
  const auto hits_shifted = detect_hits(shifted, heur);
  REQUIRE(hits_shifted.size() == base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(hits_shifted[i].t == doctest::Approx(base[i].t + 17.3));
    CHECK(hits_shifted[i].side == base[i].side);
  }

  Trajectory mirrored = t;
  for (auto& s : mirrored.samples) s.p3d->x() = -s.p3d->x();
  const auto hits_mirrored = detect_hits(mirrored, heur);
  REQUIRE(hits_mirrored.size() == base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(hits_mirrored[i].t == doctest::Approx(base[i].t));
    CHECK(hits_mirrored[i].side == opposite(base[i].side));
  }
}

TEST_CASE("same-type spacing filter drops rapid repeats") {
  // Two peaks 0.1 s apart; the trough between them is below min_abs_x.
  std::vector<double> xs = {0.5, 1.0, 0.25, 1.0, 0.5, 0.2, 0.1, 0.05, 0.0};
  Trajectory t = series_from_x(xs, 0.05);
  const auto hits = detect_hits(t, heur);
  CHECK(hits.size() == 1);
  CHECK(hits[0].t == doctest::Approx(0.05));
}

TEST_CASE("detect_hits needs three valid samples") {
  std::vector<double> xs = {0.0, 1.0};
  CHECK_THROWS_AS(detect_hits(series_from_x(xs), heur), TooFewSamples);
}

TEST_CASE("bounce detection finds the simulated bounce") {
  const AeroParams aero{};
  const TableBounceParams bp{};
  BallState s0;
  s0.p = {1.2, 0.1, 1.1};
  s0.v = {-4.0, 0.0, 0.0};
  const FlightResult sim = integrate_flight(s0, 0.8, 1.0 / 120.0, world, aero, bp, 1);
  REQUIRE(sim.bounces.size() == 1);
  const auto bounces = detect_bounces(sim.trajectory, world, heur);
  REQUIRE(bounces.size() == 1);
  CHECK(std::abs(bounces[0].t - sim.bounces[0].t) <= 1.0 / 120.0 + 1e-9);
  CHECK(bounces[0].on_table);
  CHECK((bounces[0].half == Half::left) == (sim.bounces[0].p.x() < 0.0));
}

TEST_CASE("trajectories away from the table plane have no bounces") {
  std::vector<double> xs;
  for (int i = 0; i < 40; ++i) xs.push_back(0.01 * i);
  Trajectory t = series_from_x(xs);  // z fixed at 1.0
  CHECK(detect_bounces(t, world, heur).empty());
}

TEST_CASE("segment construction on a minimal valid rally") {
  std::vector<HitEvent> hits = {{0.0, {1.5, 0, 1.0}, Side::right},
                                {0.6, {-1.5, 0, 1.0}, Side::left},
                                {1.2, {1.6, 0, 1.0}, Side::right}};
  std::vector<BounceObservation> bounces = {
      {0.3, {-0.5, 0, world.table_height}, true, Half::left},
      {0.9, {0.5, 0, world.table_height}, true, Half::right}};
  const RallyAnnotation ann = build_segments(hits, bounces, heur);
  CHECK(ann.valid);
  REQUIRE(ann.segments.size() == 2);
  CHECK(ann.segments[0].bounce_count == 1);
  CHECK(ann.segments[1].bounce_count == 1);
  CHECK(!ann.serve_index.has_value());
}

TEST_CASE("segment with no bounce invalidates the rally") {
  std::vector<HitEvent> hits = {{0.0, {1.5, 0, 1.0}, Side::right},
                                {0.6, {-1.5, 0, 1.0}, Side::left},
                                {1.2, {1.6, 0, 1.0}, Side::right}};
  std::vector<BounceObservation> bounces = {
      {0.9, {0.5, 0, world.table_height}, true, Half::right}};
  const RallyAnnotation ann = build_segments(hits, bounces, heur);
  CHECK(!ann.valid);
  CHECK(ann.reason == RejectReason::missing_bounce);
}

TEST_CASE("two bounces mark the serve, but only in the first segment") {
  std::vector<HitEvent> hits = {{0.0, {1.5, 0, 1.0}, Side::right},
                                {0.8, {-1.5, 0, 1.0}, Side::left}};
  std::vector<BounceObservation> bounces = {
      {0.2, {0.7, 0, world.table_height}, true, Half::right},
      {0.5, {-0.7, 0, world.table_height}, true, Half::left},
      {1.1, {0.6, 0, world.table_height}, true, Half::right}};
  const RallyAnnotation serve = build_segments(hits, bounces, heur);
  CHECK(serve.valid);
  REQUIRE(serve.serve_index.has_value());
  CHECK(*serve.serve_index == 0);

  // The same double bounce later in the rally is a fault.
  std::vector<HitEvent> hits3 = {{0.0, {1.5, 0, 1.0}, Side::right},
                                 {0.8, {-1.5, 0, 1.0}, Side::left},
                                 {1.6, {1.5, 0, 1.0}, Side::right}};
  std::vector<BounceObservation> bounces3 = {
      {0.4, {-0.7, 0, world.table_height}, true, Half::left},
      {1.0, {0.3, 0, world.table_height}, true, Half::right},
      {1.2, {0.9, 0, world.table_height}, true, Half::right}};
  const RallyAnnotation fault = build_segments(hits3, bounces3, heur);
  CHECK(!fault.valid);
  CHECK(fault.reason == RejectReason::extra_bounce);
}

TEST_CASE("hitter sides must alternate") {
  std::vector<HitEvent> hits = {{0.0, {1.5, 0, 1.0}, Side::right},
                                {0.6, {1.4, 0, 1.0}, Side::right},
                                {1.2, {-1.6, 0, 1.0}, Side::left}};
  std::vector<BounceObservation> bounces = {
      {0.3, {-0.5, 0, world.table_height}, true, Half::left},
      {0.9, {-0.6, 0, world.table_height}, true, Half::left},
      {1.5, {0.6, 0, world.table_height}, true, Half::right}};
  const RallyAnnotation ann = build_segments(hits, bounces, heur);
  CHECK(!ann.valid);
  CHECK(ann.reason == RejectReason::non_alternating);
}

TEST_CASE("fewer hits than the minimum is flagged") {
  std::vector<HitEvent> hits = {{0.0, {1.5, 0, 1.0}, Side::right}};
  const RallyAnnotation ann = build_segments(hits, {}, heur);
  CHECK(!ann.valid);
  CHECK(ann.reason == RejectReason::too_few_hits);
}

TEST_CASE("segments are disjoint and ordered on random event soups") {
  RandomSource rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<HitEvent> hits;
    std::vector<BounceObservation> bounces;
    const int nh = static_cast<int>(rng.uniform_int(0, 8));
    const int nb = static_cast<int>(rng.uniform_int(0, 10));
    for (int i = 0; i < nh; ++i) {
      hits.push_back({rng.uniform(0, 5), {rng.uniform(-2, 2), 0, 1.0},
                      rng.uniform(0, 1) < 0.5 ? Side::left : Side::right});
    }
    for (int i = 0; i < nb; ++i) {
      bounces.push_back({rng.uniform(0, 5), {rng.uniform(-2, 2), 0, world.table_height}, true,
                         Half::left});
    }
    const RallyAnnotation ann = build_segments(hits, bounces, heur);
    for (std::size_t i = 0; i < ann.segments.size(); ++i) {
      CHECK(ann.segments[i].t_start < ann.segments[i].t_end);
      if (i > 0) CHECK(ann.segments[i].t_start == ann.segments[i - 1].t_end);
    }
  }
}

TEST_CASE("spin classification matches the stated examples") {
  CHECK(classify_spin({0, 0, 3}, {5, 0, 0}) == SpinClass::no_spin);
  CHECK(classify_spin({0, 8, 0}, {5, 0, 0}) == SpinClass::topspin);
  CHECK(classify_spin({0, -8, 0}, {5, 0, 0}) == SpinClass::backspin);
  CHECK(classify_spin({0, 0, 12}, {5, 0, 0}) == SpinClass::side_left);
  CHECK(classify_spin({0, 0, -12}, {5, 0, 0}) == SpinClass::side_right);
}

TEST_CASE("spin classification agrees with an independent frame construction") {
  RandomSource rng(17);
  for (int i = 0; i < 10000; ++i) {
    const Vec3 omega_hz = rng.uniform(0.0, 30.0) * rng.unit_vector();
    Vec3 v = rng.uniform(0.5, 10.0) * rng.unit_vector();
    if (v.head<2>().norm() < 1e-6) continue;

    // Reference: rotate the spin into a heading-aligned frame.
    const double heading = std::atan2(v.y(), v.x());
    const double wy = -omega_hz.x() * std::sin(heading) + omega_hz.y() * std::cos(heading);
    const double wz = omega_hz.z();
    SpinClass expect;
    if (omega_hz.lpNorm<Eigen::Infinity>() <= 5.0) {
      expect = SpinClass::no_spin;
    } else if (std::abs(wy) >= std::abs(wz)) {
      expect = wy > 0 ? SpinClass::topspin : SpinClass::backspin;
    } else {
      expect = wz > 0 ? SpinClass::side_left : SpinClass::side_right;
    }
    CHECK(classify_spin(omega_hz, v) == expect);
  }
}

TEST_CASE("spin classification is scale invariant") {
  RandomSource rng(19);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 omega_hz = rng.uniform(6.0, 40.0) * rng.unit_vector();
    Vec3 v = rng.uniform(0.5, 10.0) * rng.unit_vector();
    if (v.head<2>().norm() < 1e-6) continue;
    const SpinClass base = classify_spin(omega_hz, v);
    CHECK(classify_spin(omega_hz, 3.7 * v) == base);
    CHECK(classify_spin(2.5 * omega_hz, v) == base);
  }
}

TEST_CASE("spin classification rejects degenerate velocities") {
  CHECK_THROWS_AS(classify_spin({10, 0, 0}, {0, 0, 0}), DegenerateVelocity);
  CHECK_THROWS_AS(classify_spin({10, 0, 0}, {0, 0, 3.0}), DegenerateVelocity);
}

TEST_CASE("duplication estimator on the stated examples") {
  {
    const long long idx[] = {5, 10, 15, 20, 25};
    const auto est = estimate_frame_duplication(idx);
    CHECK(est.kind == DuplicationKind::periodic);
    CHECK(est.period == 5);
    CHECK(est.offset == 0);
  }
  {
    const long long idx[] = {5, 10, 15, 17, 20, 25};
    const auto est = estimate_frame_duplication(idx);
    CHECK(est.kind == DuplicationKind::periodic);
    CHECK(est.period == 5);
    CHECK(est.offset == 0);
  }
  {
    const long long idx[] = {3, 7};
    CHECK(estimate_frame_duplication(idx).kind == DuplicationKind::aperiodic);
  }
  CHECK(estimate_frame_duplication({}).kind == DuplicationKind::none);
  {
    const long long idx[] = {4, 5, 6, 7};  // only trivial spacings
    CHECK(estimate_frame_duplication(idx).kind == DuplicationKind::aperiodic);
  }
  {
    const long long bad[] = {5, 5, 10};
    CHECK_THROWS_AS(estimate_frame_duplication(bad), UnsortedInput);
  }
}

TEST_CASE("duplication estimator recovers exact periodic trains") {
  for (long long f = 2; f <= 12; ++f) {
    for (long long s = 0; s < f; ++s) {
      for (int k_max = 2; k_max <= 6; ++k_max) {
        std::vector<long long> idx;
        for (long long k = 0; k <= k_max; ++k) idx.push_back(s + k * f);
        const auto est = estimate_frame_duplication(idx);
        CHECK(est.kind == DuplicationKind::periodic);
        CHECK(est.period == f);
        CHECK(est.offset == s % f);
      }
    }
  }
}
