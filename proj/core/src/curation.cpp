#include "ttkit/curation.hpp"

#include <algorithm>
#include <cmath>

#include "ttkit/errors.hpp"

namespace ttkit {

const char* to_string(CurationReason r) {
  switch (r) {
    case CurationReason::none: return "None";
    case CurationReason::high_reproj: return "HighReproj";
    case CurationReason::high_ode_fit: return "HighOdeFit";
    case CurationReason::not_enough_segments: return "NotEnoughSegments";
    case CurationReason::low_ball_visibility: return "LowBallVisibility";
    case CurationReason::invalid_human_pos: return "InvalidHumanPos";
    case CurationReason::event_implausible: return "EventImplausible";
  }
  return "?";
}

CurationVerdict curate(const Trajectory& traj, const RallyAnnotation& annotation,
                       const std::optional<CameraModel>& cam,
                       std::span<const FitResult> segment_fits,
                       const std::optional<std::vector<Vec2>>& human_centroids,
                       const CurationThresholds& thresholds, const WorldGeometry& w) {
  if (annotation.valid && segment_fits.size() != annotation.segments.size()) {
    throw InconsistentInputs("one fit per annotated segment expected");
  }

  CurationVerdict out;
  auto& m = out.metrics;

  bool has_2d = false;
  for (const auto& s : traj.samples) {
    if (s.p3d && s.p2d) has_2d = true;
  }
  if (cam && has_2d) {
    m.max_norm_reproj = reprojection_error(traj, *cam, w).max_normalized;
  }

  for (const auto& fit : segment_fits) {
    m.ode_max_error = std::max(m.ode_max_error.value_or(0.0), fit.max_error);
    m.ode_rmse = std::max(m.ode_rmse.value_or(0.0), fit.rmse);
  }

  m.visibility = traj.visibility_fraction();
  m.n_segments = static_cast<int>(annotation.segments.size());
  m.n_hits = static_cast<int>(annotation.hits.size());
  m.events_valid = annotation.valid;

  if (human_centroids) {
    bool ok = true;
    for (const auto& c : *human_centroids) {
      const double ax = std::abs(c.x()), ay = std::abs(c.y());
      ok = ok && ax >= thresholds.human_x_min && ax <= thresholds.human_x_max &&
           ay >= thresholds.human_y_min && ay <= thresholds.human_y_max;
    }
    m.humans_ok = ok;
  }

  // First failure wins.
  if (m.max_norm_reproj && *m.max_norm_reproj > thresholds.max_norm_reproj) {
    out.reason = CurationReason::high_reproj;
  } else if (!annotation.valid) {
    out.reason = CurationReason::event_implausible;
  } else if (m.ode_max_error && *m.ode_max_error > thresholds.max_ode_rmse) {
    out.reason = CurationReason::high_ode_fit;
  } else if (m.visibility < thresholds.min_ball_visibility) {
    out.reason = CurationReason::low_ball_visibility;
  } else if (m.n_segments < thresholds.min_segments) {
    out.reason = CurationReason::not_enough_segments;
  } else if (m.humans_ok && !*m.humans_ok) {
    out.reason = CurationReason::invalid_human_pos;
  }
  out.accepted = out.reason == CurationReason::none;
  return out;
}

double metric_delta_r3d(const Trajectory& pred, const Trajectory& gt) {
  double sum = 0.0;
  std::size_t n = 0;
  std::size_t j = 0;
  for (const auto& g : gt.samples) {
    if (!g.p3d) continue;
    while (j < pred.samples.size() && (pred.samples[j].t < g.t - 1e-9 || !pred.samples[j].p3d)) {
      ++j;
    }
    if (j >= pred.samples.size() || std::abs(pred.samples[j].t - g.t) > 1e-9) {
      throw TimestampMismatch("prediction is missing a ground-truth timestamp");
    }
    sum += (*pred.samples[j].p3d - *g.p3d).norm();
    ++n;
    ++j;
  }
  if (n == 0) throw EmptyInput("no aligned valid samples");
  return 100.0 * sum / static_cast<double>(n);  // cm
}

double metric_delta_r3d_batch(std::span<const std::pair<Trajectory, Trajectory>> pairs) {
  if (pairs.empty()) throw EmptyInput("no trajectories");
  double sum = 0.0;
  for (const auto& [pred, gt] : pairs) sum += metric_delta_r3d(pred, gt);
  return sum / static_cast<double>(pairs.size());
}

double metric_delta_omega(std::span<const Vec3> pred_hz, std::span<const Vec3> gt_hz) {
  if (pred_hz.size() != gt_hz.size()) throw TimestampMismatch("spin lists differ in length");
  if (pred_hz.empty()) throw EmptyInput("no spin samples");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred_hz.size(); ++i) sum += (pred_hz[i] - gt_hz[i]).norm();
  return sum / static_cast<double>(pred_hz.size());
}

double metric_delta_r2d(const Trajectory& pred, const Trajectory& gt2d, const CameraModel& cam) {
  double sum = 0.0;
  std::size_t n = 0;
  std::size_t j = 0;
  for (const auto& g : gt2d.samples) {
    if (!g.p2d) continue;
    while (j < pred.samples.size() && (pred.samples[j].t < g.t - 1e-9 || !pred.samples[j].p3d)) {
      ++j;
    }
    if (j >= pred.samples.size() || std::abs(pred.samples[j].t - g.t) > 1e-9) {
      throw TimestampMismatch("prediction is missing a 2D ground-truth timestamp");
    }
    const auto px = project(cam, *pred.samples[j].p3d);
    sum += px ? (*px - *g.p2d).norm() : std::numeric_limits<double>::infinity();
    ++n;
    ++j;
  }
  if (n == 0) throw NoPairedSamples();
  return sum / static_cast<double>(n);
}

double macro_f1(std::span<const SpinClass> pred, std::span<const SpinClass> gt) {
  if (pred.size() != gt.size()) throw TimestampMismatch("label lists differ in length");

  const auto f1_of = [&](SpinClass c) {
    std::size_t tp = 0, fp = 0, fn = 0, present = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i] == c || gt[i] == c) ++present;
      if (pred[i] == c && gt[i] == c) ++tp;
      if (pred[i] == c && gt[i] != c) ++fp;
      if (pred[i] != c && gt[i] == c) ++fn;
    }
    if (present == 0) return 1.0;  // absent from both lists
    const double denom = static_cast<double>(2 * tp + fp + fn);
    return denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
  };
  return 0.5 * (f1_of(SpinClass::topspin) + f1_of(SpinClass::backspin));
}

Histogram1D::Histogram1D(std::string name_, double lo_, double hi_, int nbins)
    : name(std::move(name_)), lo(lo_), hi(hi_), counts(static_cast<std::size_t>(nbins), 0) {}

void Histogram1D::add(double x) {
  if (x < lo) {
    ++underflow;
    return;
  }
  if (x >= hi) {
    ++overflow;
    return;
  }
  const auto bin = static_cast<std::size_t>((x - lo) / (hi - lo) * counts.size());
  ++counts[std::min(bin, counts.size() - 1)];
}

void Histogram1D::merge(const Histogram1D& other) {
  if (other.counts.size() != counts.size() || other.lo != lo || other.hi != hi) {
    throw InconsistentInputs("histogram binning differs");
  }
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  underflow += other.underflow;
  overflow += other.overflow;
}

std::vector<double> Histogram1D::edges() const {
  std::vector<double> e(counts.size() + 1);
  for (std::size_t i = 0; i < e.size(); ++i) {
    e[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(counts.size());
  }
  return e;
}

std::uint64_t Histogram1D::total() const {
  std::uint64_t t = underflow + overflow;
  for (auto c : counts) t += c;
  return t;
}

Histogram2D::Histogram2D(std::string name_, double x_lo_, double x_hi_, int nx_, double y_lo_,
                         double y_hi_, int ny_)
    : name(std::move(name_)),
      x_lo(x_lo_),
      x_hi(x_hi_),
      y_lo(y_lo_),
      y_hi(y_hi_),
      nx(nx_),
      ny(ny_),
      counts(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_), 0) {}

void Histogram2D::add(double x, double y) {
  if (x < x_lo || x >= x_hi || y < y_lo || y >= y_hi) {
    ++outside;
    return;
  }
  const auto ix = std::min(static_cast<std::size_t>((x - x_lo) / (x_hi - x_lo) * nx),
                           static_cast<std::size_t>(nx - 1));
  const auto iy = std::min(static_cast<std::size_t>((y - y_lo) / (y_hi - y_lo) * ny),
                           static_cast<std::size_t>(ny - 1));
  ++counts[iy * static_cast<std::size_t>(nx) + ix];
}

void Histogram2D::merge(const Histogram2D& other) {
  if (other.counts.size() != counts.size() || other.x_lo != x_lo || other.x_hi != x_hi ||
      other.y_lo != y_lo || other.y_hi != y_hi) {
    throw InconsistentInputs("histogram binning differs");
  }
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  outside += other.outside;
}

std::uint64_t Histogram2D::in_region(double x0, double x1, double y0, double y1) const {
  std::uint64_t total = 0;
  for (int iy = 0; iy < ny; ++iy) {
    const double yc = y_lo + (y_hi - y_lo) * (iy + 0.5) / ny;
    if (yc < y0 || yc > y1) continue;
    for (int ix = 0; ix < nx; ++ix) {
      const double xc = x_lo + (x_hi - x_lo) * (ix + 0.5) / nx;
      if (xc < x0 || xc > x1) continue;
      total += counts[static_cast<std::size_t>(iy) * nx + ix];
    }
  }
  return total;
}

void StatisticsBundle::merge(const StatisticsBundle& other) {
  if (spin_by_class.size() != other.spin_by_class.size()) {
    throw InconsistentInputs("statistics bundles differ");
  }
  for (std::size_t i = 0; i < spin_by_class.size(); ++i) {
    spin_by_class[i].merge(other.spin_by_class[i]);
  }
  ball_xy.merge(other.ball_xy);
  ball_xz.merge(other.ball_xz);
  bounce_xy.merge(other.bounce_xy);
  inter_hit.merge(other.inter_hit);
}

StatisticsBundle emit_statistics(std::span<const RallyRecord> rallies) {
  if (rallies.empty()) throw EmptyInput("no rallies");

  StatisticsBundle b;
  for (const SpinClass c : {SpinClass::topspin, SpinClass::backspin, SpinClass::side_left,
                            SpinClass::side_right, SpinClass::no_spin}) {
    b.spin_by_class.emplace_back(std::string("spin_") + to_string(c), 0.0, 50.0, 50);
  }
  b.ball_xy = Histogram2D("ball_xy", -3.5, 3.5, 140, -2.0, 2.0, 80);
  b.ball_xz = Histogram2D("ball_xz", -3.5, 3.5, 140, 0.0, 2.5, 50);
  b.bounce_xy = Histogram2D("bounce_xy", -2.0, 2.0, 80, -1.2, 1.2, 48);
  b.inter_hit = Histogram1D("inter_hit_s", 0.0, 2.0, 100);

  for (const auto& rally : rallies) {
    for (const auto& s : rally.traj.samples) {
      if (!s.p3d) continue;
      b.ball_xy.add(s.p3d->x(), s.p3d->y());
      b.ball_xz.add(s.p3d->x(), s.p3d->z());
    }
    for (const auto& bounce : rally.annotation.bounces) {
      b.bounce_xy.add(bounce.p.x(), bounce.p.y());
    }
    for (std::size_t i = 1; i < rally.annotation.hits.size(); ++i) {
      b.inter_hit.add(rally.annotation.hits[i].t - rally.annotation.hits[i - 1].t);
    }
    for (const auto& seg : rally.annotation.segments) {
      if (!seg.spin_class) continue;
      // Spin strength of the first in-segment spin sample, Hz.
      for (const auto& s : rally.traj.samples) {
        if (s.t < seg.t_start || s.t >= seg.t_end || !s.omega) continue;
        b.spin_by_class[static_cast<std::size_t>(*seg.spin_class)].add(
            rad_to_hz(*s.omega).norm());
        break;
      }
    }
  }
  return b;
}

}  // namespace ttkit
