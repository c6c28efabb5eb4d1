#include <doctest.h>

#include <cmath>

#include "test_helpers.hpp"
#include "ttkit/camera.hpp"
#include "ttkit/errors.hpp"
#include "ttkit/rng.hpp"

using namespace ttkit;
using namespace ttkit::testing;

namespace {

const WorldGeometry world{};

CameraModel reference_camera() {
  auto cam = make_posed_camera(rotation_xyz(-55, 15, -30), 1600, 1920, 1080, world);
  REQUIRE(cam.has_value());
  return *cam;
}

}  // namespace

TEST_CASE("a point on the optical axis projects to the principal point") {
  CameraModel cam;
  cam.f = 1200;
  cam.principal_point = {960, 540};
  cam.T = Vec3(0, 0, 5);
  const auto px = project(cam, Vec3(0, 0, 1));
  REQUIRE(px.has_value());
  CHECK(px->x() == doctest::Approx(960));
  CHECK(px->y() == doctest::Approx(540));
}

TEST_CASE("projection matches the homogeneous matrix product") {
  const CameraModel cam = reference_camera();
  Eigen::Matrix<double, 3, 4> P;
  Mat3 K = Mat3::Identity();
  K(0, 0) = K(1, 1) = cam.f;
  K(0, 2) = cam.principal_point.x();
  K(1, 2) = cam.principal_point.y();
  P.leftCols<3>() = K * cam.R;
  P.col(3) = K * cam.T;

  RandomSource rng(3);
  for (int i = 0; i < 500; ++i) {
    const Vec3 p{rng.uniform(-2, 2), rng.uniform(-1.5, 1.5), rng.uniform(0, 2)};
    const Vec3 h = P * p.homogeneous();
    const auto px = project(cam, p);
    if (h.z() <= 0) {
      CHECK(!px.has_value());
      continue;
    }
    REQUIRE(px.has_value());
    CHECK(px->x() == doctest::Approx(h.x() / h.z()).epsilon(1e-12));
    CHECK(px->y() == doctest::Approx(h.y() / h.z()).epsilon(1e-12));
  }
}

TEST_CASE("points at or behind the camera plane are flagged") {
  CameraModel cam;
  cam.T = Vec3(0, 0, 0);
  CHECK(!project(cam, Vec3(0.5, 0.5, 0)).has_value());
  CHECK(!project(cam, Vec3(0, 0, -1)).has_value());
}

TEST_CASE("calibration recovers a synthetic camera exactly") {
  const CameraModel cam = reference_camera();
  std::array<Vec2, 4> corners_px;
  const auto corners = table_corners(world);
  for (int i = 0; i < 4; ++i) corners_px[i] = *project(cam, corners[i]);

  const CalibrationResult result =
      calibrate_from_corners(corners_px, cam.width, cam.height, world);
  CHECK(std::abs(result.cam.f - cam.f) / cam.f < 0.01);
  CHECK(rotation_angle_deg(result.cam.R, cam.R) < 0.5);
  CHECK((result.cam.T - cam.T).norm() < 0.02);
  CHECK(result.residual_px < 1e-6);
  CHECK(result.cam.rotation_ok());
}

TEST_CASE("calibration tolerates half-pixel corner noise") {
  const CameraModel cam = reference_camera();
  std::array<Vec2, 4> corners_px;
  const auto corners = table_corners(world);
  RandomSource rng(5);
  for (int i = 0; i < 4; ++i) {
    corners_px[i] = *project(cam, corners[i]) +
                    Vec2(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
  }
  const CalibrationResult result =
      calibrate_from_corners(corners_px, cam.width, cam.height, world);
  CHECK(result.residual_px <= 2.0);
  CHECK(std::abs(result.cam.f - cam.f) / cam.f < 0.05);
}

TEST_CASE("front-parallel views still recover the rotation") {
  const Mat3 R = rotation_xyz(180, 0, 0);  // straight-down view
  const auto cam = make_posed_camera(R, 1400, 1920, 1080, world);
  REQUIRE(cam.has_value());
  std::array<Vec2, 4> corners_px;
  const auto corners = table_corners(world);
  for (int i = 0; i < 4; ++i) corners_px[i] = *project(*cam, corners[i]);
  const CalibrationResult result =
      calibrate_from_corners(corners_px, cam->width, cam->height, world);
  CHECK(rotation_angle_deg(result.cam.R, cam->R) < 0.5);
}

TEST_CASE("collinear corners are rejected") {
  const std::array<Vec2, 4> bad = {Vec2{100, 100}, Vec2{200, 200}, Vec2{300, 300},
                                   Vec2{400, 400}};
  CHECK_THROWS_AS(calibrate_from_corners(bad, 1920, 1080, world), DegenerateCorners);
}

TEST_CASE("ground homography round-trips floor points") {
  const CameraModel cam = reference_camera();
  const Mat3 H = ground_homography(cam, world);
  RandomSource rng(7);
  for (int i = 0; i < 200; ++i) {
    const Vec3 floor{rng.uniform(-3, 3), rng.uniform(-2, 2), 0.0};
    const auto px = project(cam, floor);
    if (!px) continue;
    const Vec3 mapped = H * px->homogeneous();
    CHECK(std::abs(mapped.x() / mapped.z() - floor.x()) < 1e-6);
    CHECK(std::abs(mapped.y() / mapped.z() - floor.y()) < 1e-6);
  }
  // Off-floor points must not round-trip.
  const Vec3 raised{0.5, 0.2, world.table_height};
  const auto px = project(cam, raised);
  REQUIRE(px.has_value());
  const Vec3 mapped = H * px->homogeneous();
  CHECK(std::hypot(mapped.x() / mapped.z() - raised.x(), mapped.y() / mapped.z() - raised.y()) >
        0.05);
}

TEST_CASE("ground homography equals the projective-matrix construction") {
  const CameraModel cam = reference_camera();
  const Mat3 H = ground_homography(cam, world);
  Mat3 K = Mat3::Identity();
  K(0, 0) = K(1, 1) = cam.f;
  K(0, 2) = cam.principal_point.x();
  K(1, 2) = cam.principal_point.y();
  Eigen::Matrix<double, 3, 4> P;
  P.leftCols<3>() = K * cam.R;
  P.col(3) = K * cam.T;
  Mat3 G;
  G.col(0) = P.col(0);
  G.col(1) = P.col(1);
  G.col(2) = P.col(3);
  const Mat3 expected = G.inverse();
  // Projective equality: proportional matrices.
  const double scale = H(2, 2) != 0 ? expected(2, 2) / H(2, 2) : expected(0, 0) / H(0, 0);
  CHECK((H * scale - expected).cwiseAbs().maxCoeff() <
        1e-9 * expected.cwiseAbs().maxCoeff());
}

TEST_CASE("reprojection errors and the table-diagonal normalization") {
  const CameraModel cam = reference_camera();
  RandomSource rng(9);

  Trajectory traj;
  for (int i = 0; i < 50; ++i) {
    TrajectorySample s;
    s.t = i * 0.01;
    s.p3d = Vec3(rng.uniform(-1.3, 1.3), rng.uniform(-0.7, 0.7),
                 world.table_height + rng.uniform(0.0, 0.6));
    s.p2d = project(cam, *s.p3d);
    traj.samples.push_back(s);
  }

  SUBCASE("exact projections give zero error") {
    const ReprojectionStats stats = reprojection_error(traj, cam, world);
    CHECK(stats.max_normalized < 1e-12);
  }

  SUBCASE("one offset of 0.2 diagonals hits the threshold exactly") {
    ReprojectionStats base = reprojection_error(traj, cam, world);
    Trajectory shifted = traj;
    shifted.samples[7].p2d->x() += 0.2 * base.diagonal_px;
    const ReprojectionStats stats = reprojection_error(shifted, cam, world);
    CHECK(stats.max_normalized == doctest::Approx(0.2).epsilon(1e-9));
  }

  SUBCASE("max matches a brute-force scan") {
    Trajectory noisy = traj;
    double expect_px = 0.0;
    for (auto& s : noisy.samples) {
      const Vec2 d{rng.uniform(-5, 5), rng.uniform(-5, 5)};
      *s.p2d += d;
      expect_px = std::max(expect_px, d.norm());
    }
    const ReprojectionStats stats = reprojection_error(noisy, cam, world);
    CHECK(*std::max_element(stats.per_sample_px.begin(), stats.per_sample_px.end()) ==
          doctest::Approx(expect_px).epsilon(1e-9));
  }

  SUBCASE("invariant under a simultaneous rigid motion") {
    const Mat3 Q = rotation_xyz(10, -20, 35);
    const Vec3 b{0.4, -0.2, 0.3};
    Trajectory moved = traj;
    for (auto& s : moved.samples) *s.p3d = Q * *s.p3d + b;
    CameraModel cam2 = cam;
    cam2.R = cam.R * Q.transpose();
    cam2.T = cam.T - cam.R * Q.transpose() * b;
    const ReprojectionStats a = reprojection_error(traj, cam, world);
    // The table itself did not move, so normalize manually by comparing raw
    // pixel errors.
    const ReprojectionStats c = reprojection_error(moved, cam2, world);
    REQUIRE(a.per_sample_px.size() == c.per_sample_px.size());
    for (std::size_t i = 0; i < a.per_sample_px.size(); ++i) {
      CHECK(c.per_sample_px[i] == doctest::Approx(a.per_sample_px[i]).epsilon(1e-6));
    }
  }

  SUBCASE("no paired samples is an error") {
    Trajectory empty2d = traj;
    for (auto& s : empty2d.samples) s.p2d.reset();
    CHECK_THROWS_AS(reprojection_error(empty2d, cam, world), NoPairedSamples);
  }
}

TEST_CASE("keypoints: 13 points, symmetric, and projectable") {
  const auto kps = table_keypoints(world);
  CHECK(kps.size() == 13);

  // Symmetry under x and y mirroring up to relabeling.
  for (const auto& kp : kps) {
    bool found_x = false, found_y = false;
    for (const auto& other : kps) {
      if ((other.p - Vec3(-kp.p.x(), kp.p.y(), kp.p.z())).norm() < 1e-12) found_x = true;
      if ((other.p - Vec3(kp.p.x(), -kp.p.y(), kp.p.z())).norm() < 1e-12) found_y = true;
    }
    CHECK(found_x);
    CHECK(found_y);
  }

  // A side camera on the x = 0 plane sees mirror keypoint pairs at mirrored u.
  const double tilt = 35.0 * std::numbers::pi / 180.0;
  Mat3 R;
  R.row(0) = Vec3(-1.0, 0.0, 0.0);
  R.row(1) = Vec3(0.0, std::sin(tilt), -std::cos(tilt));
  R.row(2) = Vec3(0.0, -std::cos(tilt), -std::sin(tilt));
  const auto cam = make_posed_camera(R, 1500, 1920, 1080, world, 0.4);
  REQUIRE(cam.has_value());
  const auto px = project_keypoints(*cam, world);
  REQUIRE(px.has_value());

  const auto find_px = [&](const Vec3& p) {
    for (std::size_t i = 0; i < kps.size(); ++i) {
      if ((kps[i].p - p).norm() < 1e-12) return (*px)[i];
    }
    REQUIRE(false);
    return Vec2{0, 0};
  };
  for (const auto& kp : kps) {
    const Vec2 a = find_px(kp.p);
    const Vec2 b = find_px(Vec3(-kp.p.x(), kp.p.y(), kp.p.z()));
    CHECK(a.x() + b.x() == doctest::Approx(2.0 * cam->principal_point.x()).epsilon(1e-6));
  }

  // A camera facing away cannot see them.
  CameraModel away = *cam;
  away.R = rotation_xyz(0, 180, 0) * away.R;
  away.T = -away.R * Vec3(6.0, 0.0, 2.0);
  CHECK(!project_keypoints(away, world).has_value());
}
