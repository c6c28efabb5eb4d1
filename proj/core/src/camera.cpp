#include "ttkit/camera.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>

#include "ttkit/errors.hpp"
#include "ttkit/optim.hpp"

namespace ttkit {

bool CameraModel::rotation_ok(double tol) const {
  return (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(R.determinant() - 1.0) <= tol;
}

std::optional<Vec2> project(const CameraModel& cam, const Vec3& p_world) {
  const Vec3 pc = cam.R * p_world + cam.T;
  if (pc.z() <= 0.0) return std::nullopt;
  return Vec2{cam.f * pc.x() / pc.z() + cam.principal_point.x(),
              cam.f * pc.y() / pc.z() + cam.principal_point.y()};
}

std::array<Vec3, 4> table_corners(const WorldGeometry& w) {
  const double hl = w.half_length(), hw = w.half_width(), z = w.table_height;
  return {Vec3{hl, -hw, z}, Vec3{hl, hw, z}, Vec3{-hl, hw, z}, Vec3{-hl, -hw, z}};
}

std::array<TableKeypoint, 13> table_keypoints(const WorldGeometry& w) {
  const double hl = w.half_length(), hw = w.half_width();
  const double z = w.table_height, zn = w.net_top();
  return {{
      {"corner_near_left", {hl, -hw, z}},
      {"corner_near_right", {hl, hw, z}},
      {"corner_far_right", {-hl, hw, z}},
      {"corner_far_left", {-hl, -hw, z}},
      {"net_base_left", {0.0, -hw, z}},
      {"net_base_right", {0.0, hw, z}},
      {"net_top_left", {0.0, -hw, zn}},
      {"net_top_right", {0.0, hw, zn}},
      {"net_top_center", {0.0, 0.0, zn}},
      {"edge_mid_near", {hl, 0.0, z}},
      {"edge_mid_far", {-hl, 0.0, z}},
      {"half_center_near", {hl / 2.0, 0.0, z}},
      {"half_center_far", {-hl / 2.0, 0.0, z}},
  }};
}

namespace {

// DLT homography from 4 plane correspondences (X, Y) -> (u, v), with
// Hartley normalization for conditioning.
Mat3 homography_dlt(const std::array<Vec2, 4>& src, const std::array<Vec2, 4>& dst) {
  const auto normalizer = [](const std::array<Vec2, 4>& pts) {
    Vec2 c = Vec2::Zero();
    for (const auto& p : pts) c += p;
    c /= 4.0;
    double scale = 0.0;
    for (const auto& p : pts) scale += (p - c).norm();
    scale = scale > 0 ? 4.0 * std::numbers::sqrt2 / scale : 1.0;
    Mat3 t = Mat3::Identity();
    t(0, 0) = t(1, 1) = scale;
    t(0, 2) = -scale * c.x();
    t(1, 2) = -scale * c.y();
    return t;
  };
  const Mat3 ts = normalizer(src);
  const Mat3 td = normalizer(dst);

  Eigen::Matrix<double, 8, 9> a;
  for (int i = 0; i < 4; ++i) {
    const Vec3 s = ts * Vec3(src[i].x(), src[i].y(), 1.0);
    const Vec3 d = td * Vec3(dst[i].x(), dst[i].y(), 1.0);
    a.row(2 * i) << -s.x(), -s.y(), -1.0, 0, 0, 0, d.x() * s.x(), d.x() * s.y(), d.x();
    a.row(2 * i + 1) << 0, 0, 0, -s.x(), -s.y(), -1.0, d.y() * s.x(), d.y() * s.y(), d.y();
  }
  const Eigen::JacobiSVD<Eigen::Matrix<double, 8, 9>> svd(a, Eigen::ComputeFullV);
  const Eigen::Matrix<double, 9, 1> h = svd.matrixV().col(8);
  Mat3 hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  return td.inverse() * hn * ts;
}

struct PoseGuess {
  Mat3 R;
  Vec3 T;
  bool ok = false;
};

// Recover (R, T) from a plane homography given intrinsics. The plane is
// z = plane_z in world coordinates, parameterized by (X, Y).
PoseGuess pose_from_homography(const Mat3& h, double f, const Vec2& pp, double plane_z) {
  Mat3 k = Mat3::Identity();
  k(0, 0) = k(1, 1) = f;
  k(0, 2) = pp.x();
  k(1, 2) = pp.y();

  Mat3 m = k.inverse() * h;
  double lambda = 2.0 / (m.col(0).norm() + m.col(1).norm());
  if (!std::isfinite(lambda)) return {};

  for (int attempt = 0; attempt < 2; ++attempt) {
    const Vec3 r1 = lambda * m.col(0);
    const Vec3 r2 = lambda * m.col(1);
    Mat3 r_raw;
    r_raw.col(0) = r1;
    r_raw.col(1) = r2;
    r_raw.col(2) = r1.cross(r2);

    const Eigen::JacobiSVD<Mat3> svd(r_raw, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() < 0) {
      Mat3 flip = Mat3::Identity();
      flip(2, 2) = -1.0;
      r = svd.matrixU() * flip * svd.matrixV().transpose();
    }
    const Vec3 t = lambda * m.col(2) - plane_z * r.col(2);

    // The plane origin must sit in front of the camera.
    if ((r * Vec3(0, 0, plane_z) + t).z() > 0.0) return {r, t, true};
    lambda = -lambda;
  }
  return {};
}

Eigen::VectorXd pack_pose(const Mat3& r, const Vec3& t, double f) {
  Eigen::VectorXd x(7);
  const Eigen::AngleAxisd aa(r);
  x.segment<3>(0) = aa.angle() * aa.axis();
  x.segment<3>(3) = t;
  x(6) = f;
  return x;
}

Mat3 rotation_of(const Eigen::VectorXd& x) {
  const Vec3 w = x.segment<3>(0);
  const double angle = w.norm();
  if (angle < 1e-14) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

}  // namespace

CalibrationResult calibrate_from_corners(const std::array<Vec2, 4>& corner_px, int image_w,
                                         int image_h, const WorldGeometry& w,
                                         const CalibrationOptions& opt) {
  // Reject collinear pixel configurations.
  const double scale = (corner_px[2] - corner_px[0]).norm() + (corner_px[3] - corner_px[1]).norm();
  for (int i = 0; i < 4; ++i) {
    const Vec2 a = corner_px[(i + 1) % 4] - corner_px[i];
    const Vec2 b = corner_px[(i + 2) % 4] - corner_px[i];
    if (std::abs(a.x() * b.y() - a.y() * b.x()) < 1e-9 * scale * scale) {
      throw DegenerateCorners();
    }
  }

  const Vec2 pp{image_w / 2.0, image_h / 2.0};
  const auto corners_world = table_corners(w);
  std::array<Vec2, 4> plane;
  for (int i = 0; i < 4; ++i) plane[i] = corners_world[i].head<2>();

  const Mat3 h = homography_dlt(plane, corner_px);

  const auto residuals_of = [&](const Eigen::VectorXd& x) {
    CameraModel cam;
    cam.R = rotation_of(x);
    cam.T = x.segment<3>(3);
    cam.f = x(6);
    cam.principal_point = pp;
    Eigen::VectorXd r(8);
    for (int i = 0; i < 4; ++i) {
      const auto px = project(cam, corners_world[i]);
      if (!px) {
        r.segment<2>(2 * i).setConstant(1e6);
        continue;
      }
      r.segment<2>(2 * i) = *px - corner_px[i];
    }
    return r;
  };

  LevMarOptions lm;
  lm.max_iterations = opt.max_iterations;
  lm.objective_tol = 1e-14;

  CalibrationResult best;
  double best_obj = std::numeric_limits<double>::infinity();
  const double log_lo = std::log(opt.f_min), log_hi = std::log(opt.f_max);
  for (int k = 0; k < opt.f_steps; ++k) {
    const double f0 = std::exp(log_lo + (log_hi - log_lo) * k / std::max(1, opt.f_steps - 1));
    const PoseGuess guess = pose_from_homography(h, f0, pp, w.table_height);
    if (!guess.ok) continue;

    const LevMarOutcome run =
        levenberg_marquardt(residuals_of, nullptr, pack_pose(guess.R, guess.T, f0), lm);
    if (run.objective < best_obj) {
      best_obj = run.objective;
      best.cam.R = rotation_of(run.x);
      best.cam.T = run.x.segment<3>(3);
      best.cam.f = run.x(6);
      best.cam.principal_point = pp;
      best.cam.width = image_w;
      best.cam.height = image_h;
      best.residual_px = std::sqrt(2.0 * run.objective / 4.0);
      best.converged = run.converged;
    }
    if (best_obj < 1e-18) break;
  }

  if (!std::isfinite(best_obj)) throw NoConvergence("calibration failed for every focal seed");
  return best;
}

Mat3 ground_homography(const CameraModel& cam, const WorldGeometry& w) {
  (void)w;
  Mat3 k = Mat3::Identity();
  k(0, 0) = k(1, 1) = cam.f;
  k(0, 2) = cam.principal_point.x();
  k(1, 2) = cam.principal_point.y();

  Mat3 g;  // maps (X, Y, 1) on z = 0 to pixel homogeneous coordinates
  g.col(0) = cam.R.col(0);
  g.col(1) = cam.R.col(1);
  g.col(2) = cam.T;
  g = k * g;

  const double det = g.determinant();
  const double norm = g.norm();
  if (std::abs(det) <= 1e-12 * norm * norm * norm) throw DegenerateView();
  Mat3 hinv = g.inverse();
  hinv /= hinv.norm();
  return hinv;
}

ReprojectionStats reprojection_error(const Trajectory& traj, const CameraModel& cam,
                                     const WorldGeometry& w) {
  ReprojectionStats out;

  const auto corners = table_corners(w);
  std::array<std::optional<Vec2>, 4> cpx;
  for (int i = 0; i < 4; ++i) cpx[i] = project(cam, corners[i]);
  if (cpx[0] && cpx[1] && cpx[2] && cpx[3]) {
    out.diagonal_px = 0.5 * ((*cpx[0] - *cpx[2]).norm() + (*cpx[1] - *cpx[3]).norm());
  }

  double max_err = 0.0;
  for (const auto& s : traj.samples) {
    if (!s.p3d || !s.p2d) continue;
    const auto px = project(cam, *s.p3d);
    const double e = px ? (*px - *s.p2d).norm() : std::numeric_limits<double>::infinity();
    out.per_sample_px.push_back(e);
    max_err = std::max(max_err, e);
  }
  if (out.per_sample_px.empty()) throw NoPairedSamples();

  out.max_normalized = out.diagonal_px > 0.0 ? max_err / out.diagonal_px
                                             : std::numeric_limits<double>::infinity();
  return out;
}

std::optional<std::array<Vec2, 13>> project_keypoints(const CameraModel& cam,
                                                      const WorldGeometry& w) {
  std::array<Vec2, 13> out;
  const auto kps = table_keypoints(w);
  for (std::size_t i = 0; i < kps.size(); ++i) {
    const auto px = project(cam, kps[i].p);
    if (!px) return std::nullopt;
    out[i] = *px;
  }
  return out;
}

}  // namespace ttkit
