#include <doctest.h>

#include <cmath>

#include "test_helpers.hpp"
#include "ttkit/curation.hpp"
#include "ttkit/errors.hpp"
#include "ttkit/rng.hpp"

using namespace ttkit;
using namespace ttkit::testing;

namespace {

const WorldGeometry world{};

Trajectory line_trajectory(int n, double rate = 100.0) {
  Trajectory t;
  for (int i = 0; i < n; ++i) {
    TrajectorySample s;
    s.t = i / rate;
    s.p3d = Vec3(0.01 * i, 0.3, 1.0);
    t.samples.push_back(s);
  }
  return t;
}

RallyAnnotation plausible_annotation() {
  RallyAnnotation ann;
  ann.valid = true;
  ann.hits = {{0.0, {1.5, 0, 1}, Side::right}, {0.6, {-1.5, 0, 1}, Side::left},
              {1.2, {1.5, 0, 1}, Side::right}};
  ann.segments = {{0.0, 0.6, Side::right, 1, SpinClass::topspin},
                  {0.6, 1.2, Side::left, 1, SpinClass::backspin}};
  return ann;
}

FitResult fit_with(double max_error, double rmse = 0.01) {
  FitResult f;
  f.max_error = max_error;
  f.rmse = rmse;
  f.converged = true;
  return f;
}

}  // namespace

TEST_CASE("delta r3d on identical, offset and random inputs") {
  const Trajectory gt = line_trajectory(40);
  CHECK(metric_delta_r3d(gt, gt) == 0.0);

  Trajectory shifted = gt;
  for (auto& s : shifted.samples) s.p3d->x() += 0.05;
  CHECK(metric_delta_r3d(shifted, gt) == doctest::Approx(5.0).epsilon(1e-12));

  RandomSource rng(1);
  Trajectory noisy = gt;
  double expect = 0.0;
  for (auto& s : noisy.samples) {
    const Vec3 d{rng.normal(), rng.normal(), rng.normal()};
    *s.p3d += 0.01 * d;
    expect += 0.01 * d.norm();
  }
  expect = 100.0 * expect / static_cast<double>(gt.size());
  CHECK(metric_delta_r3d(noisy, gt) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("delta r3d is invariant under a shared rigid motion") {
  const Trajectory gt = line_trajectory(30);
  RandomSource rng(2);
  Trajectory pred = gt;
  for (auto& s : pred.samples) *s.p3d += 0.02 * Vec3(rng.normal(), rng.normal(), rng.normal());
  const double base = metric_delta_r3d(pred, gt);

  const Mat3 Q = rotation_xyz(12, -30, 45);
  const Vec3 b{0.5, -1.0, 0.25};
  Trajectory pred_m = pred, gt_m = gt;
  for (auto& s : pred_m.samples) *s.p3d = Q * *s.p3d + b;
  for (auto& s : gt_m.samples) *s.p3d = Q * *s.p3d + b;
  CHECK(metric_delta_r3d(pred_m, gt_m) == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("delta omega via the 3-4-5 construction") {
  std::vector<Vec3> gt(10, Vec3(1, 2, 3));
  std::vector<Vec3> pred(10, Vec3(4, 6, 3));  // offset (3, 4, 0)
  CHECK(metric_delta_omega(pred, gt) == doctest::Approx(5.0));
  CHECK(metric_delta_omega(gt, gt) == 0.0);
}

TEST_CASE("delta r2d against projection and brute force") {
  const auto cam = make_posed_camera(rotation_xyz(-50, 10, -25), 1500, 1920, 1080, world);
  REQUIRE(cam.has_value());
  RandomSource rng(3);

  Trajectory pred;
  Trajectory gt2d;
  double expect = 0.0;
  for (int i = 0; i < 40; ++i) {
    TrajectorySample p;
    p.t = i * 0.01;
    p.p3d = Vec3(rng.uniform(-1, 1), rng.uniform(-0.7, 0.7), world.table_height + 0.2);
    pred.samples.push_back(p);

    TrajectorySample g;
    g.t = p.t;
    const Vec2 d{rng.uniform(-3, 3), rng.uniform(-3, 3)};
    g.p2d = *project(*cam, *p.p3d) + d;
    gt2d.samples.push_back(g);
    expect += d.norm();
  }
  expect /= 40.0;
  CHECK(metric_delta_r2d(pred, gt2d, *cam) == doctest::Approx(expect).epsilon(1e-9));

  Trajectory exact = gt2d;
  for (int i = 0; i < 40; ++i) exact.samples[i].p2d = project(*cam, *pred.samples[i].p3d);
  CHECK(metric_delta_r2d(pred, exact, *cam) == doctest::Approx(0.0));
}

TEST_CASE("macro F1 on the stated examples") {
  using S = SpinClass;
  const std::vector<S> perfect = {S::topspin, S::backspin, S::topspin};
  CHECK(macro_f1(perfect, perfect) == doctest::Approx(1.0));

  // Balanced truth, all-topspin prediction.
  const std::vector<S> gt = {S::topspin, S::topspin, S::backspin, S::backspin};
  const std::vector<S> all_top(4, S::topspin);
  CHECK(macro_f1(all_top, gt) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("macro F1 matches an independent confusion-matrix implementation") {
  using S = SpinClass;
  RandomSource rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<S> pred, gt;
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 20));
    for (int i = 0; i < n; ++i) {
      pred.push_back(rng.uniform(0, 1) < 0.5 ? S::topspin : S::backspin);
      gt.push_back(rng.uniform(0, 1) < 0.5 ? S::topspin : S::backspin);
    }
    double sum = 0.0;
    for (const S c : {S::topspin, S::backspin}) {
      int tp = 0, fp = 0, fn = 0, seen = 0;
      for (int i = 0; i < n; ++i) {
        tp += pred[i] == c && gt[i] == c;
        fp += pred[i] == c && gt[i] != c;
        fn += pred[i] != c && gt[i] == c;
        seen += pred[i] == c || gt[i] == c;
      }
      sum += seen == 0 ? 1.0 : (2.0 * tp) / std::max(2.0 * tp + fp + fn, 1e-30);
    }
    CHECK(macro_f1(pred, gt) == doctest::Approx(sum / 2.0).epsilon(1e-12));
  }
}

TEST_CASE("curate applies the stack in order with first failure winning") {
  const Trajectory traj = line_trajectory(60);
  const RallyAnnotation ann = plausible_annotation();
  const CurationThresholds th;
  const std::vector<FitResult> good = {fit_with(0.05), fit_with(0.08)};

  SUBCASE("clean inputs are accepted") {
    const auto v = curate(traj, ann, std::nullopt, good, std::nullopt, th, world);
    CHECK(v.accepted);
    CHECK(v.reason == CurationReason::none);
  }

  SUBCASE("a 0.31 m fit error is rejected as HighOdeFit") {
    const std::vector<FitResult> bad = {fit_with(0.05), fit_with(0.31)};
    const auto v = curate(traj, ann, std::nullopt, bad, std::nullopt, th, world);
    CHECK(!v.accepted);
    CHECK(v.reason == CurationReason::high_ode_fit);
    CHECK(*v.metrics.ode_max_error == doctest::Approx(0.31));
  }

  SUBCASE("visibility below one half is rejected") {
    Trajectory dim = traj;
    for (std::size_t i = 0; i < dim.size(); ++i) dim.samples[i].visible = i % 100 < 49;
    const auto v = curate(dim, ann, std::nullopt, good, std::nullopt, th, world);
    CHECK(!v.accepted);
    CHECK(v.reason == CurationReason::low_ball_visibility);
    CHECK(v.metrics.visibility == doctest::Approx(0.49).epsilon(0.03));
  }

  SUBCASE("implausible events outrank the fit check") {
    RallyAnnotation invalid = ann;
    invalid.valid = false;
    invalid.reason = RejectReason::missing_bounce;
    const std::vector<FitResult> bad = {fit_with(0.5)};
    const auto v = curate(traj, invalid, std::nullopt, bad, std::nullopt, th, world);
    CHECK(v.reason == CurationReason::event_implausible);
  }

  SUBCASE("single segment count is rejected") {
    RallyAnnotation ann1 = ann;
    ann1.segments.resize(1);
    ann1.hits.resize(2);
    const std::vector<FitResult> one = {fit_with(0.05)};
    const auto v = curate(traj, ann1, std::nullopt, one, std::nullopt, th, world);
    CHECK(v.reason == CurationReason::not_enough_segments);
  }

  SUBCASE("human centroids out of bounds are rejected, in bounds accepted") {
    const std::vector<Vec2> good_humans = {{2.0, 0.8}, {-2.0, 0.8}};
    CHECK(curate(traj, ann, std::nullopt, good, good_humans, th, world).accepted);
    const std::vector<Vec2> too_close = {{0.2, 0.8}};
    const auto v = curate(traj, ann, std::nullopt, good, too_close, th, world);
    CHECK(v.reason == CurationReason::invalid_human_pos);
  }

  SUBCASE("fit count must match the segment count") {
    const std::vector<FitResult> lonely = {fit_with(0.05)};
    CHECK_THROWS_AS(curate(traj, ann, std::nullopt, lonely, std::nullopt, th, world),
                    InconsistentInputs);
  }
}

TEST_CASE("loosening thresholds never rejects a previously accepted rally") {
  const Trajectory traj = line_trajectory(60);
  const RallyAnnotation ann = plausible_annotation();
  RandomSource rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const std::vector<FitResult> fits = {fit_with(rng.uniform(0, 0.6)),
                                         fit_with(rng.uniform(0, 0.6))};
    Trajectory t = traj;
    const double vis_cut = rng.uniform(0, 1);
    for (std::size_t i = 0; i < t.size(); ++i) {
      t.samples[i].visible = rng.uniform(0, 1) > vis_cut;
    }
    CurationThresholds tight;
    tight.max_ode_rmse = rng.uniform(0.05, 0.5);
    tight.min_ball_visibility = rng.uniform(0.1, 0.9);
    CurationThresholds loose = tight;
    loose.max_ode_rmse += rng.uniform(0, 0.3);
    loose.min_ball_visibility -= rng.uniform(0, 0.09);

    const bool tight_ok =
        curate(t, ann, std::nullopt, fits, std::nullopt, tight, world).accepted;
    const bool loose_ok =
        curate(t, ann, std::nullopt, fits, std::nullopt, loose, world).accepted;
    if (tight_ok) CHECK(loose_ok);
  }
}

TEST_CASE("statistics histograms capture spin, densities and cadence") {
  RallyRecord rec;
  rec.traj = line_trajectory(50);
  for (auto& s : rec.traj.samples) s.omega = hz_to_rad(Vec3(0, 12.0, 0));
  rec.annotation = plausible_annotation();
  rec.annotation.bounces = {{0.3, {0.5, 0.2, world.table_height}, true, Half::right}};

  const std::vector<RallyRecord> rallies = {rec};
  const StatisticsBundle stats = emit_statistics(rallies);

  const auto& top = stats.spin_by_class[static_cast<std::size_t>(SpinClass::topspin)];
  std::uint64_t total_top = 0;
  for (std::size_t i = 0; i < top.counts.size(); ++i) total_top += top.counts[i];
  CHECK(total_top == 1);
  CHECK(top.counts[12] == 1);  // 12 Hz lands in the [12, 13) bin

  CHECK(stats.bounce_xy.in_region(-2, 2, -1.2, 1.2) == 1);
  CHECK(stats.inter_hit.total() == 2);
  CHECK(stats.inter_hit.underflow == 0);

  CHECK_THROWS_AS(emit_statistics({}), EmptyInput);
}

TEST_CASE("histogram merge is associative and order independent") {
  RandomSource rng(8);
  Histogram1D a("h", 0, 10, 20), b("h", 0, 10, 20), c("h", 0, 10, 20);
  Histogram1D all("h", 0, 10, 20);
  for (int i = 0; i < 3000; ++i) {
    const double x = rng.uniform(-1, 11);
    (i % 3 == 0 ? a : i % 3 == 1 ? b : c).add(x);
    all.add(x);
  }
  Histogram1D left = a;
  left.merge(b);
  left.merge(c);
  Histogram1D right = c;
  right.merge(a);
  right.merge(b);
  for (std::size_t i = 0; i < all.counts.size(); ++i) {
    CHECK(left.counts[i] == all.counts[i]);
    CHECK(right.counts[i] == all.counts[i]);
  }
  CHECK(left.underflow == all.underflow);
  CHECK(right.overflow == all.overflow);
}
