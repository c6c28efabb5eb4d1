#include "ttkit/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ttkit/errors.hpp"

namespace ttkit {

const char* to_string(SpinClass c) {
  switch (c) {
    case SpinClass::topspin: return "topspin";
    case SpinClass::backspin: return "backspin";
    case SpinClass::side_left: return "side_left";
    case SpinClass::side_right: return "side_right";
    case SpinClass::no_spin: return "no_spin";
  }
  return "?";
}

const char* to_string(RejectReason r) {
  switch (r) {
    case RejectReason::none: return "None";
    case RejectReason::missing_bounce: return "MissingBounce";
    case RejectReason::too_few_hits: return "TooFewHits";
    case RejectReason::extra_bounce: return "ExtraBounce";
    case RejectReason::non_alternating: return "NonAlternating";
  }
  return "?";
}

namespace {

enum class ExtremumType { peak, trough };

struct Extremum {
  std::size_t index;
  ExtremumType type;
};

// Strict local extrema; plateaus take the middle index.
std::vector<Extremum> local_extrema(const std::vector<double>& v) {
  std::vector<Extremum> out;
  const std::size_t n = v.size();
  std::size_t i = 1;
  while (i + 1 <= n - 1 && i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[j + 1] == v[i]) ++j;  // plateau [i, j]
    if (j + 1 < n) {
      const double before = v[i - 1];
      const double after = v[j + 1];
      const std::size_t mid = (i + j) / 2;
      if (before < v[i] && after < v[i]) out.push_back({mid, ExtremumType::peak});
      if (before > v[i] && after > v[i]) out.push_back({mid, ExtremumType::trough});
    }
    i = j + 1;
  }
  return out;
}

struct ValidSeries {
  std::vector<double> t;
  std::vector<Vec3> p;
  double median_dt = 0.0;
};

ValidSeries valid_series(const Trajectory& traj) {
  ValidSeries s;
  for (const auto& sample : traj.samples) {
    if (!sample.p3d) continue;
    s.t.push_back(sample.t);
    s.p.push_back(*sample.p3d);
  }
  if (s.t.size() >= 2) {
    std::vector<double> dts(s.t.size() - 1);
    for (std::size_t i = 1; i < s.t.size(); ++i) dts[i - 1] = s.t[i] - s.t[i - 1];
    auto mid = dts.begin() + static_cast<std::ptrdiff_t>(dts.size() / 2);
    std::nth_element(dts.begin(), mid, dts.end());
    s.median_dt = *mid;
  }
  return s;
}

bool gap_ok(const ValidSeries& s, std::size_t idx, double factor) {
  if (idx == 0 || idx + 1 >= s.t.size()) return false;
  const double limit = factor * s.median_dt;
  return (s.t[idx] - s.t[idx - 1]) <= limit && (s.t[idx + 1] - s.t[idx]) <= limit;
}

}  // namespace

std::vector<HitEvent> detect_hits(const Trajectory& traj, const HitHeuristics& h) {
  const ValidSeries s = valid_series(traj);
  if (s.t.size() < 3) throw TooFewSamples("detect_hits needs at least 3 valid 3D samples");

  std::vector<double> xs(s.p.size());
  for (std::size_t i = 0; i < s.p.size(); ++i) xs[i] = s.p[i].x();

  std::vector<HitEvent> out;
  double last_peak = -std::numeric_limits<double>::infinity();
  double last_trough = -std::numeric_limits<double>::infinity();
  for (const Extremum& e : local_extrema(xs)) {
    if (!gap_ok(s, e.index, h.max_gap_factor)) continue;
    if (std::abs(xs[e.index]) < h.min_abs_x) continue;
    double& last = e.type == ExtremumType::peak ? last_peak : last_trough;
    if (s.t[e.index] - last < h.min_peak_gap) continue;
    last = s.t[e.index];
    out.push_back({s.t[e.index], s.p[e.index],
                   xs[e.index] < 0.0 ? Side::left : Side::right});
  }
  return out;
}

std::vector<BounceObservation> detect_bounces(const Trajectory& traj, const WorldGeometry& w,
                                              const HitHeuristics& h, double z_window) {
  const ValidSeries s = valid_series(traj);
  if (s.t.size() < 3) throw TooFewSamples("detect_bounces needs at least 3 valid 3D samples");

  std::vector<double> zs(s.p.size());
  for (std::size_t i = 0; i < s.p.size(); ++i) zs[i] = s.p[i].z();

  std::vector<BounceObservation> out;
  for (const Extremum& e : local_extrema(zs)) {
    if (e.type != ExtremumType::trough) continue;
    if (!gap_ok(s, e.index, h.max_gap_factor)) continue;
    if (std::abs(zs[e.index] - w.table_height) > z_window) continue;
    const Vec3& p = s.p[e.index];
    BounceObservation b;
    b.t = s.t[e.index];
    b.p = p;
    b.on_table = w.on_footprint(p.x(), p.y());
    b.half = b.on_table ? (p.x() < 0.0 ? Half::left : Half::right) : Half::off;
    out.push_back(b);
  }
  return out;
}

RallyAnnotation build_segments(std::span<const HitEvent> hits,
                               std::span<const BounceObservation> bounces,
                               const HitHeuristics& h) {
  RallyAnnotation ann;
  ann.hits.assign(hits.begin(), hits.end());
  ann.bounces.assign(bounces.begin(), bounces.end());
  std::sort(ann.hits.begin(), ann.hits.end(),
            [](const HitEvent& a, const HitEvent& b) { return a.t < b.t; });
  std::sort(ann.bounces.begin(), ann.bounces.end(),
            [](const BounceObservation& a, const BounceObservation& b) { return a.t < b.t; });

  if (static_cast<int>(ann.hits.size()) < h.min_hits) {
    ann.valid = false;
    ann.reason = RejectReason::too_few_hits;
    return ann;
  }

  double last_event = ann.hits.back().t;
  for (const auto& b : ann.bounces) last_event = std::max(last_event, b.t);

  for (std::size_t i = 0; i + 1 < ann.hits.size(); ++i) {
    ann.segments.push_back(
        {ann.hits[i].t, ann.hits[i + 1].t, ann.hits[i].side, 0, std::nullopt});
  }
  if (last_event > ann.hits.back().t) {
    ann.segments.push_back(
        {ann.hits.back().t, last_event, ann.hits.back().side, 0, std::nullopt});
  }

  for (const auto& b : ann.bounces) {
    for (auto& seg : ann.segments) {
      if (b.t > seg.t_start && b.t <= seg.t_end) {
        ++seg.bounce_count;
        break;
      }
    }
  }

  if (!ann.segments.empty() && ann.segments[0].bounce_count == 2) ann.serve_index = 0;

  ann.valid = true;
  for (std::size_t i = 0; i < ann.segments.size(); ++i) {
    const int n = ann.segments[i].bounce_count;
    const bool is_serve = ann.serve_index && *ann.serve_index == i;
    if (n == 0) {
      ann.valid = false;
      ann.reason = RejectReason::missing_bounce;
      return ann;
    }
    if (n > 2 || (n == 2 && !is_serve)) {
      ann.valid = false;
      ann.reason = RejectReason::extra_bounce;
      return ann;
    }
  }
  for (std::size_t i = 1; i < ann.hits.size(); ++i) {
    if (ann.hits[i].side == ann.hits[i - 1].side) {
      ann.valid = false;
      ann.reason = RejectReason::non_alternating;
      return ann;
    }
  }
  return ann;
}

RallyAnnotation annotate(const Trajectory& traj, const WorldGeometry& w,
                         const HitHeuristics& h, double no_spin_threshold_hz) {
  const auto hits = detect_hits(traj, h);
  const auto bounces = detect_bounces(traj, w, h);
  RallyAnnotation ann = build_segments(hits, bounces, h);

  // First in-segment spin sample; velocity from a forward difference.
  const auto valid = traj.valid3d_indices();
  for (auto& seg : ann.segments) {
    for (std::size_t k = 0; k + 1 < valid.size(); ++k) {
      const auto& s = traj.samples[valid[k]];
      if (s.t < seg.t_start || s.t >= seg.t_end || !s.omega) continue;
      const auto& nxt = traj.samples[valid[k + 1]];
      const double dt = nxt.t - s.t;
      if (dt <= 0.0) continue;
      const Vec3 v = (*nxt.p3d - *s.p3d) / dt;
      if (v.head<2>().norm() < 1e-9 && rad_to_hz(*s.omega).lpNorm<Eigen::Infinity>() >
                                           no_spin_threshold_hz) {
        break;  // degenerate velocity, leave the class unset
      }
      seg.spin_class = classify_spin(rad_to_hz(*s.omega), v, no_spin_threshold_hz);
      break;
    }
  }
  return ann;
}

SpinClass classify_spin(const Vec3& omega_hz, const Vec3& v, double no_spin_threshold_hz) {
  if (omega_hz.lpNorm<Eigen::Infinity>() <= no_spin_threshold_hz) return SpinClass::no_spin;

  // y_ball = z x v, normalized: orthogonal to velocity, parallel to the table.
  const Vec3 y_ball(-v.y(), v.x(), 0.0);
  const double n = y_ball.norm();
  if (n < 1e-12) throw DegenerateVelocity("spin above threshold with no horizontal velocity");

  const double w_y = omega_hz.dot(y_ball / n);
  const double w_z = omega_hz.z();
  if (std::abs(w_y) >= std::abs(w_z)) {
    return w_y > 0.0 ? SpinClass::topspin : SpinClass::backspin;
  }
  return w_z > 0.0 ? SpinClass::side_left : SpinClass::side_right;
}

DuplicationEstimate estimate_frame_duplication(std::span<const long long> dup_indices) {
  if (dup_indices.empty()) return {DuplicationKind::none, 0, 0};
  for (std::size_t i = 0; i < dup_indices.size(); ++i) {
    if (dup_indices[i] < 0 || (i > 0 && dup_indices[i] <= dup_indices[i - 1])) {
      throw UnsortedInput("duplicate indices must be strictly increasing and non-negative");
    }
  }
  if (dup_indices.size() < 3) return {DuplicationKind::aperiodic, 0, 0};

  std::map<long long, std::size_t> spacing_counts;
  for (std::size_t i = 1; i < dup_indices.size(); ++i) {
    const long long d = dup_indices[i] - dup_indices[i - 1];
    if (d > 1) ++spacing_counts[d];
  }
  if (spacing_counts.empty()) return {DuplicationKind::aperiodic, 0, 0};

  long long period = 0;
  std::size_t best = 0;
  for (const auto& [d, count] : spacing_counts) {
    if (count > best) {  // ties resolve to the smallest spacing
      best = count;
      period = d;
    }
  }

  std::map<long long, std::size_t> residue_counts;
  for (long long u : dup_indices) ++residue_counts[u % period];
  long long offset = 0;
  best = 0;
  for (const auto& [r, count] : residue_counts) {
    if (count > best) {
      best = count;
      offset = r;
    }
  }
  return {DuplicationKind::periodic, period, offset};
}

}  // namespace ttkit
