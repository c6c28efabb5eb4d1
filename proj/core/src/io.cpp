#include "ttkit/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ttkit/errors.hpp"

namespace ttkit {

using nlohmann::json;

namespace {

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json vec2_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

Vec3 vec3_of(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }
Vec2 vec2_of(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json state_json(const BallState& s) {
  return {{"t", s.t}, {"p", vec3_json(s.p)}, {"v", vec3_json(s.v)},
          {"omega_hz", vec3_json(rad_to_hz(s.omega))}};
}

BallState state_of(const json& j) {
  BallState s;
  s.t = j.at("t").get<double>();
  s.p = vec3_of(j.at("p"));
  s.v = vec3_of(j.at("v"));
  s.omega = hz_to_rad(vec3_of(j.at("omega_hz")));
  return s;
}

json quat_json(const Eigen::Quaterniond& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }

Eigen::Quaterniond quat_of(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(),
          j.at(3).get<double>()};
}

Side side_of_string(const std::string& s) { return s == "left" ? Side::left : Side::right; }

json hist1_json(const Histogram1D& h) {
  return {{"name", h.name},   {"bin_edges", h.edges()},   {"counts", h.counts},
          {"underflow", h.underflow}, {"overflow", h.overflow}};
}

json hist2_json(const Histogram2D& h) {
  std::vector<double> xe(static_cast<std::size_t>(h.nx) + 1), ye(static_cast<std::size_t>(h.ny) + 1);
  for (std::size_t i = 0; i < xe.size(); ++i) xe[i] = h.x_lo + (h.x_hi - h.x_lo) * i / h.nx;
  for (std::size_t i = 0; i < ye.size(); ++i) ye[i] = h.y_lo + (h.y_hi - h.y_lo) * i / h.ny;
  return {{"name", h.name}, {"x_edges", xe}, {"y_edges", ye}, {"counts", h.counts},
          {"outside", h.outside}};
}

}  // namespace

void atomic_write(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trajectory_to_jsonl(const Trajectory& traj) {
  std::string out;
  for (const auto& s : traj.samples) {
    json j;
    j["t"] = s.t;
    j["p3d"] = s.p3d ? vec3_json(*s.p3d) : json(nullptr);
    j["omega_hz"] = s.omega ? vec3_json(rad_to_hz(*s.omega)) : json(nullptr);
    j["p2d"] = s.p2d ? vec2_json(*s.p2d) : json(nullptr);
    j["visible"] = s.visible;
    out += j.dump();
    out += '\n';
  }
  return out;
}

Trajectory trajectory_from_jsonl(const std::string& text) {
  Trajectory traj;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    TrajectorySample s;
    s.t = j.at("t").get<double>();
    if (!j.at("p3d").is_null()) s.p3d = vec3_of(j.at("p3d"));
    if (!j.at("omega_hz").is_null()) s.omega = hz_to_rad(vec3_of(j.at("omega_hz")));
    if (!j.at("p2d").is_null()) s.p2d = vec2_of(j.at("p2d"));
    s.visible = j.at("visible").get<bool>();
    traj.samples.push_back(s);
  }
  return traj;
}

void save_trajectory(const Trajectory& traj, const fs::path& path) {
  atomic_write(path, trajectory_to_jsonl(traj));
}

Trajectory load_trajectory(const fs::path& path) {
  return trajectory_from_jsonl(read_file(path));
}

void save_annotation(const RallyAnnotation& ann, const fs::path& path) {
  json j;
  j["valid"] = ann.valid;
  j["reason"] = to_string(ann.reason);
  if (ann.serve_index) j["serve_index"] = *ann.serve_index;
  else j["serve_index"] = nullptr;

  j["hits"] = json::array();
  for (const auto& h : ann.hits) {
    j["hits"].push_back({{"t", h.t}, {"p", vec3_json(h.p)}, {"side", to_string(h.side)}});
  }
  j["bounces"] = json::array();
  for (const auto& b : ann.bounces) {
    j["bounces"].push_back({{"t", b.t},
                            {"p", vec3_json(b.p)},
                            {"on_table", b.on_table},
                            {"half", b.half == Half::off ? "off"
                                     : b.half == Half::left ? "left" : "right"}});
  }
  j["segments"] = json::array();
  for (const auto& s : ann.segments) {
    json seg = {{"t_start", s.t_start},
                {"t_end", s.t_end},
                {"hitter_side", to_string(s.hitter_side)},
                {"bounce_count", s.bounce_count}};
    seg["spin_class"] = s.spin_class ? json(to_string(*s.spin_class)) : json(nullptr);
    j["segments"].push_back(seg);
  }
  atomic_write(path, j.dump(2) + "\n");
}

RallyAnnotation load_annotation(const fs::path& path) {
  const json j = json::parse(read_file(path));
  RallyAnnotation ann;
  ann.valid = j.at("valid").get<bool>();
  const std::string reason = j.at("reason").get<std::string>();
  for (const RejectReason r : {RejectReason::none, RejectReason::missing_bounce,
                               RejectReason::too_few_hits, RejectReason::extra_bounce,
                               RejectReason::non_alternating}) {
    if (reason == to_string(r)) ann.reason = r;
  }
  if (!j.at("serve_index").is_null()) ann.serve_index = j.at("serve_index").get<std::size_t>();
  for (const auto& h : j.at("hits")) {
    ann.hits.push_back({h.at("t").get<double>(), vec3_of(h.at("p")),
                        side_of_string(h.at("side").get<std::string>())});
  }
  for (const auto& b : j.at("bounces")) {
    BounceObservation bo;
    bo.t = b.at("t").get<double>();
    bo.p = vec3_of(b.at("p"));
    bo.on_table = b.at("on_table").get<bool>();
    const std::string half = b.at("half").get<std::string>();
    bo.half = half == "off" ? Half::off : half == "left" ? Half::left : Half::right;
    ann.bounces.push_back(bo);
  }
  for (const auto& s : j.at("segments")) {
    Segment seg;
    seg.t_start = s.at("t_start").get<double>();
    seg.t_end = s.at("t_end").get<double>();
    seg.hitter_side = side_of_string(s.at("hitter_side").get<std::string>());
    seg.bounce_count = s.at("bounce_count").get<int>();
    if (!s.at("spin_class").is_null()) {
      const std::string sc = s.at("spin_class").get<std::string>();
      for (const SpinClass c : {SpinClass::topspin, SpinClass::backspin, SpinClass::side_left,
                                SpinClass::side_right, SpinClass::no_spin}) {
        if (sc == to_string(c)) seg.spin_class = c;
      }
    }
    ann.segments.push_back(seg);
  }
  return ann;
}

void save_truth(const RallyTruth& truth, const fs::path& path) {
  json j;
  j["sample_rate"] = truth.sample_rate;
  j["seed"] = truth.seed;
  j["hits"] = json::array();
  for (const auto& h : truth.hits) {
    j["hits"].push_back({{"t", h.t}, {"p", vec3_json(h.p)}, {"side", to_string(h.side)}});
  }
  j["bounces"] = json::array();
  for (const auto& b : truth.bounces) {
    j["bounces"].push_back({{"t", b.t},
                            {"p", vec3_json(b.p)},
                            {"pre", state_json(b.pre)},
                            {"post", state_json(b.post)}});
  }
  j["segments"] = json::array();
  for (const auto& [kind, t] : truth.segment_starts) {
    j["segments"].push_back({{"kind", to_string(kind)}, {"t_start", t}});
  }
  atomic_write(path, j.dump(2) + "\n");
}

RallyTruth load_truth(const fs::path& path) {
  const json j = json::parse(read_file(path));
  RallyTruth t;
  t.sample_rate = j.at("sample_rate").get<double>();
  t.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& h : j.at("hits")) {
    t.hits.push_back({h.at("t").get<double>(), vec3_of(h.at("p")),
                      side_of_string(h.at("side").get<std::string>())});
  }
  for (const auto& b : j.at("bounces")) {
    BounceEvent e;
    e.t = b.at("t").get<double>();
    e.p = vec3_of(b.at("p"));
    e.pre = state_of(b.at("pre"));
    e.post = state_of(b.at("post"));
    t.bounces.push_back(e);
  }
  for (const auto& s : j.at("segments")) {
    const std::string k = s.at("kind").get<std::string>();
    SegmentKind kind = SegmentKind::serve;
    if (k == "toss") kind = SegmentKind::toss;
    else if (k == "return") kind = SegmentKind::rally_return;
    t.segment_starts.emplace_back(kind, s.at("t_start").get<double>());
  }
  return t;
}

void save_fits(const std::vector<FitResult>& fits, const fs::path& path) {
  std::string out;
  for (const auto& f : fits) {
    json j;
    j["x0"] = state_json(f.x0);
    j["rmse"] = f.rmse;
    j["max_error"] = f.max_error;
    j["n_bounces"] = f.n_bounces;
    j["converged"] = f.converged;
    j["iterations"] = f.iterations;
    out += j.dump();
    out += '\n';
  }
  atomic_write(path, out);
}

std::vector<FitRecord> load_fits(const fs::path& path) {
  std::vector<FitRecord> fits;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    FitRecord f;
    f.x0 = state_of(j.at("x0"));
    f.rmse = j.at("rmse").get<double>();
    f.max_error = j.at("max_error").get<double>();
    f.n_bounces = j.at("n_bounces").get<int>();
    f.converged = j.at("converged").get<bool>();
    f.iterations = j.at("iterations").get<int>();
    fits.push_back(f);
  }
  return fits;
}

void save_camera(const CameraModel& cam, const fs::path& path) {
  json j;
  j["f"] = cam.f;
  j["cx"] = cam.principal_point.x();
  j["cy"] = cam.principal_point.y();
  std::vector<double> r(9);
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) r[3 * row + col] = cam.R(row, col);
  }
  j["R"] = r;
  j["T"] = vec3_json(cam.T);
  j["image_size"] = json::array({cam.width, cam.height});
  atomic_write(path, j.dump(2) + "\n");
}

CameraModel load_camera(const fs::path& path) {
  const json j = json::parse(read_file(path));
  CameraModel cam;
  cam.f = j.at("f").get<double>();
  cam.principal_point = {j.at("cx").get<double>(), j.at("cy").get<double>()};
  const auto r = j.at("R").get<std::vector<double>>();
  if (r.size() != 9) throw IoError("camera R must have 9 entries");
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) cam.R(row, col) = r[3 * row + col];
  }
  cam.T = vec3_of(j.at("T"));
  cam.width = j.at("image_size").at(0).get<int>();
  cam.height = j.at("image_size").at(1).get<int>();
  return cam;
}

void save_corners(const CornerObservation& c, const fs::path& path) {
  json j;
  j["corners"] = json::array();
  for (const auto& px : c.corners) j["corners"].push_back(vec2_json(px));
  j["image_size"] = json::array({c.width, c.height});
  atomic_write(path, j.dump(2) + "\n");
}

CornerObservation load_corners(const fs::path& path) {
  const json j = json::parse(read_file(path));
  CornerObservation c;
  const auto& arr = j.at("corners");
  if (arr.size() != 4) throw IoError("corner file must list 4 pixel pairs");
  for (int i = 0; i < 4; ++i) c.corners[i] = vec2_of(arr.at(i));
  c.width = j.at("image_size").at(0).get<int>();
  c.height = j.at("image_size").at(1).get<int>();
  return c;
}

void save_stroke_problems(const std::vector<StrokeProblem>& problems, const fs::path& path) {
  std::string out;
  for (const auto& p : problems) {
    json j;
    j["pre"] = state_json(p.pre);
    j["omega_target_hz"] = vec3_json(p.omega_target_hz);
    j["p_target"] = vec3_json(p.p_target);
    j["t_flight"] = p.t_flight;
    j["alpha_w"] = p.alpha_w;
    j["beta_w"] = p.beta_w;
    j["net_clearance"] = p.net_clearance;
    out += j.dump();
    out += '\n';
  }
  atomic_write(path, out);
}

std::vector<StrokeProblem> load_stroke_problems(const fs::path& path) {
  std::vector<StrokeProblem> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    StrokeProblem p;
    p.pre = state_of(j.at("pre"));
    p.omega_target_hz = vec3_of(j.at("omega_target_hz"));
    p.p_target = vec3_of(j.at("p_target"));
    p.t_flight = j.at("t_flight").get<double>();
    p.alpha_w = j.at("alpha_w").get<double>();
    p.beta_w = j.at("beta_w").get<double>();
    p.net_clearance = j.at("net_clearance").get<double>();
    out.push_back(p);
  }
  return out;
}

void save_strokes(const std::vector<RacketStroke>& strokes, const fs::path& path) {
  std::string out;
  for (const auto& s : strokes) {
    json j;
    j["q_r"] = quat_json(s.q);
    j["V_r"] = vec3_json(s.v);
    j["t_net"] = s.t_net;
    j["bounce_error"] = s.bounce_error;
    j["spin_error"] = s.spin_error;
    j["converged"] = s.converged;
    j["iterations"] = s.iterations;
    out += j.dump();
    out += '\n';
  }
  atomic_write(path, out);
}

std::vector<RacketStroke> load_strokes(const fs::path& path) {
  std::vector<RacketStroke> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    RacketStroke s;
    s.q = quat_of(j.at("q_r"));
    s.v = vec3_of(j.at("V_r"));
    s.t_net = j.at("t_net").get<double>();
    s.bounce_error = j.at("bounce_error").get<double>();
    s.spin_error = j.at("spin_error").get<double>();
    s.converged = j.at("converged").get<bool>();
    s.iterations = j.at("iterations").get<int>();
    out.push_back(s);
  }
  return out;
}

void save_mc_summary(const StrokeMonteCarloSummary& s, const fs::path& path) {
  json j;
  j["trials"] = s.trials;
  j["converged"] = s.converged;
  j["succeeded"] = s.succeeded;
  j["success_rate"] = s.success_rate;
  j["error_quantiles"] = {{"p50", s.bounce_error_p50},
                          {"p90", s.bounce_error_p90},
                          {"p99", s.bounce_error_p99},
                          {"max", s.bounce_error_max}};
  atomic_write(path, j.dump(2) + "\n");
}

void save_verdicts(const std::vector<VerdictRecord>& verdicts, const fs::path& path) {
  std::string out;
  for (const auto& v : verdicts) {
    json j;
    j["rally"] = v.rally;
    j["accepted"] = v.verdict.accepted;
    j["reason"] = v.verdict.accepted ? json(nullptr) : json(to_string(v.verdict.reason));
    json m;
    const auto& mm = v.verdict.metrics;
    m["max_norm_reproj"] = mm.max_norm_reproj ? json(*mm.max_norm_reproj) : json(nullptr);
    m["ode_max_error"] = mm.ode_max_error ? json(*mm.ode_max_error) : json(nullptr);
    m["ode_rmse"] = mm.ode_rmse ? json(*mm.ode_rmse) : json(nullptr);
    m["visibility"] = mm.visibility;
    m["n_segments"] = mm.n_segments;
    m["n_hits"] = mm.n_hits;
    m["events_valid"] = mm.events_valid;
    m["humans_ok"] = mm.humans_ok ? json(*mm.humans_ok) : json(nullptr);
    j["metrics"] = m;
    out += j.dump();
    out += '\n';
  }
  atomic_write(path, out);
}

void save_statistics(const StatisticsBundle& stats, const fs::path& path) {
  std::string out;
  for (const auto& h : stats.spin_by_class) {
    out += hist1_json(h).dump();
    out += '\n';
  }
  out += hist2_json(stats.ball_xy).dump() + "\n";
  out += hist2_json(stats.ball_xz).dump() + "\n";
  out += hist2_json(stats.bounce_xy).dump() + "\n";
  out += hist1_json(stats.inter_hit).dump() + "\n";
  atomic_write(path, out);
}

void save_manifest(const Manifest& m, const fs::path& path) {
  json j;
  j["command"] = m.command;
  j["config_fingerprint"] = m.config_fingerprint;
  j["seed"] = m.seed;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  j["counts"] = m.counts;
  j["scalars"] = m.scalars;
  j["wall_time_s"] = m.wall_time_s;
  atomic_write(path, j.dump(2) + "\n");
}

Manifest load_manifest(const fs::path& path) {
  const json j = json::parse(read_file(path));
  Manifest m;
  m.command = j.at("command").get<std::string>();
  m.config_fingerprint = j.at("config_fingerprint").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.inputs = j.at("inputs").get<std::vector<std::string>>();
  m.outputs = j.at("outputs").get<std::vector<std::string>>();
  m.counts = j.at("counts").get<std::map<std::string, std::int64_t>>();
  m.scalars = j.at("scalars").get<std::map<std::string, double>>();
  m.wall_time_s = j.at("wall_time_s").get<double>();
  return m;
}

}  // namespace ttkit
