#include "ttkit/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "ttkit/errors.hpp"

namespace ttkit {

namespace {

using nlohmann::json;

// One row per key keeps load/save/fingerprint in lockstep.
struct Field {
  const char* key;
  enum Kind { real, integer, boolean } kind;
  void* ptr;
};

std::vector<Field> fields(Config& c) {
  const auto r = [](const char* k, double& v) { return Field{k, Field::real, &v}; };
  const auto i = [](const char* k, int& v) { return Field{k, Field::integer, &v}; };
  const auto b = [](const char* k, bool& v) { return Field{k, Field::boolean, &v}; };
  return {
      r("table_length", c.world.table_length),
      r("table_width", c.world.table_width),
      r("table_height", c.world.table_height),
      r("net_height", c.world.net_height),
      r("ball_radius", c.world.ball_radius),
      r("ball_mass", c.world.ball_mass),

      r("k_d", c.aero.k_d),
      r("k_m", c.aero.k_m),
      r("gravity_x", c.aero.gravity.x()),
      r("gravity_y", c.aero.gravity.y()),
      r("gravity_z", c.aero.gravity.z()),

      r("cor_table", c.bounce.cor),
      r("mu", c.bounce.mu),
      b("cross_consistent_slip", c.bounce.cross_consistent_slip),

      r("cor_racket", c.racket.cor),
      r("k_p", c.racket.k_p),

      r("huber_delta", c.fit.huber_delta),
      r("fit_p_min_x", c.fit.p_min.x()),
      r("fit_p_min_y", c.fit.p_min.y()),
      r("fit_p_min_z", c.fit.p_min.z()),
      r("fit_p_max_x", c.fit.p_max.x()),
      r("fit_p_max_y", c.fit.p_max.y()),
      r("fit_p_max_z", c.fit.p_max.z()),
      r("v_max", c.fit.v_max),
      r("omega_max", c.fit.omega_max_hz),
      r("fit_rk4_dt", c.fit.rk4_dt),
      i("fit_max_iterations", c.fit.max_iterations),
      i("fit_multistart", c.fit.multistart_count),
      r("fit_convergence_tol", c.fit.convergence_tol),

      r("min_peak_gap", c.heuristics.min_peak_gap),
      r("min_abs_x", c.heuristics.min_abs_x),
      i("min_hits", c.heuristics.min_hits),
      r("max_gap_factor", c.heuristics.max_gap_factor),
      r("bounce_z_window", c.bounce_z_window),
      r("no_spin_threshold_hz", c.no_spin_threshold_hz),

      i("stroke_node_count", c.stroke.node_count),
      i("stroke_multistart", c.stroke.multistart),
      i("stroke_max_inner_iterations", c.stroke.max_inner_iterations),
      r("stroke_constraint_tol", c.stroke.constraint_tol),
      r("stroke_alpha_w", c.stroke_alpha_w),
      r("stroke_beta_w", c.stroke_beta_w),
      r("stroke_net_clearance", c.stroke_net_clearance),

      r("gen_rk4_dt", c.gen.rk4_dt),
      r("gen_sample_rate", c.gen.sample_rate),
      i("gen_max_attempts", c.gen.max_attempts),
      i("gen_min_segments", c.gen.min_segments),
      i("gen_max_segments", c.gen.max_segments),
      r("gen_max_segment_duration", c.gen.max_segment_duration),
      r("toss_behind_min", c.gen.toss_behind_min),
      r("toss_behind_max", c.gen.toss_behind_max),
      r("toss_y", c.gen.toss_y),
      r("toss_above_min", c.gen.toss_above_min),
      r("toss_above_max", c.gen.toss_above_max),
      r("toss_vx_out_max", c.gen.toss_vx_out_max),
      r("toss_vy", c.gen.toss_vy),
      r("toss_vz_min", c.gen.toss_vz_min),
      r("toss_vz_max", c.gen.toss_vz_max),
      r("serve_behind_min", c.gen.serve_behind_min),
      r("serve_behind_max", c.gen.serve_behind_max),
      r("serve_y", c.gen.serve_y),
      r("serve_above_min", c.gen.serve_above_min),
      r("serve_above_max", c.gen.serve_above_max),
      r("serve_speed_min", c.gen.serve_speed_min),
      r("serve_speed_max", c.gen.serve_speed_max),
      r("serve_spin_max_hz", c.gen.serve_spin_max_hz),
      r("serve_dir_y", c.gen.serve_dir_y),
      r("serve_dir_z_min", c.gen.serve_dir_z_min),
      r("serve_dir_z_max", c.gen.serve_dir_z_max),
      r("return_behind_min", c.gen.return_behind_min),
      r("return_behind_max", c.gen.return_behind_max),
      r("return_y", c.gen.return_y),
      r("return_z_min", c.gen.return_z_min),
      r("return_z_max", c.gen.return_z_max),
      r("return_speed_min", c.gen.return_speed_min),
      r("return_speed_max", c.gen.return_speed_max),
      r("return_spin_max_hz", c.gen.return_spin_max_hz),
      r("return_dir_y", c.gen.return_dir_y),
      r("return_dir_z_min", c.gen.return_dir_z_min),
      r("return_dir_z_max", c.gen.return_dir_z_max),

      r("max_norm_reproj", c.curation.max_norm_reproj),
      r("max_ode_rmse", c.curation.max_ode_rmse),
      i("curation_min_hits", c.curation.min_hits),
      r("min_ball_visibility", c.curation.min_ball_visibility),
      r("curation_min_peak_gap", c.curation.min_peak_gap),
      r("curation_min_abs_x", c.curation.min_abs_x),
      i("min_segments", c.curation.min_segments),
      r("human_x_min", c.curation.human_x_min),
      r("human_x_max", c.curation.human_x_max),
      r("human_y_min", c.curation.human_y_min),
      r("human_y_max", c.curation.human_y_max),

      r("calib_f_min", c.calib.f_min),
      r("calib_f_max", c.calib.f_max),
      i("calib_f_steps", c.calib.f_steps),

      i("mc_trials", c.mc.trials),
      r("mc_success_bounce_error", c.mc.success_bounce_error),
      r("mc_hit_behind_min", c.mc.hit_behind_min),
      r("mc_hit_behind_max", c.mc.hit_behind_max),
      r("mc_hit_z_min", c.mc.hit_z_min),
      r("mc_hit_z_max", c.mc.hit_z_max),
      r("mc_hit_y", c.mc.hit_y),
      r("mc_speed_min", c.mc.speed_min),
      r("mc_speed_max", c.mc.speed_max),
      r("mc_spin_max_hz", c.mc.spin_max_hz),
      r("mc_t_flight_min", c.mc.t_flight_min),
      r("mc_t_flight_max", c.mc.t_flight_max),
      r("mc_target_inset", c.mc.target_inset),
  };
}

}  // namespace

void Config::validate() const {
  const auto req = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  req(world.valid(), "world geometry fields must be strictly positive");
  req(aero.k_d >= 0.0 && aero.k_m >= 0.0, "aero coefficients must be non-negative");
  req(bounce.cor > 0.0 && bounce.cor <= 1.0, "cor_table must be in (0, 1]");
  req(bounce.mu >= 0.0, "mu must be non-negative");
  req(racket.cor > 0.0 && racket.cor <= 1.0, "cor_racket must be in (0, 1]");
  req(racket.k_p >= 0.0, "k_p must be non-negative");
  req(fit.huber_delta > 0.0, "huber_delta must be positive");
  req((fit.p_min.array() < fit.p_max.array()).all(), "fit position box is empty");
  req(fit.rk4_dt > 0.0, "fit_rk4_dt must be positive");
  req(heuristics.min_peak_gap > 0.0 && heuristics.min_abs_x > 0.0 && heuristics.min_hits > 0,
      "hit heuristics must be positive");
  req(bounce_z_window > 0.0, "bounce_z_window must be positive");
  req(stroke.node_count >= 2, "stroke_node_count must be at least 2");
  req(stroke_alpha_w >= 0.0 && stroke_beta_w >= 0.0, "stroke weights must be non-negative");
  req(gen.sample_rate > 0.0 && gen.rk4_dt > 0.0, "generator rates must be positive");
  req(gen.min_segments >= 1 && gen.max_segments >= gen.min_segments,
      "generator segment range is empty");
  req(curation.max_norm_reproj > 0.0 && curation.max_norm_reproj <= 1.0,
      "max_norm_reproj must be in (0, 1]");
  req(curation.max_ode_rmse > 0.0, "max_ode_rmse must be positive");
  req(curation.min_ball_visibility > 0.0 && curation.min_ball_visibility <= 1.0,
      "min_ball_visibility must be in (0, 1]");
  req(calib.f_min > 0.0 && calib.f_max > calib.f_min && calib.f_steps >= 2,
      "calibration focal grid is invalid");
}

Config default_config() { return Config{}; }

std::string dump_config(const Config& cfg) {
  json j = json::object();
  auto mutable_cfg = cfg;  // field table wants non-const references
  for (const Field& f : fields(mutable_cfg)) {
    switch (f.kind) {
      case Field::real: j[f.key] = *static_cast<double*>(f.ptr); break;
      case Field::integer: j[f.key] = *static_cast<int*>(f.ptr); break;
      case Field::boolean: j[f.key] = *static_cast<bool*>(f.ptr); break;
    }
  }
  return j.dump(2) + "\n";
}

Config parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a flat JSON object");

  Config cfg;
  std::set<std::string> known;
  for (const Field& f : fields(cfg)) {
    known.insert(f.key);
    if (!j.contains(f.key)) continue;
    const json& v = j.at(f.key);
    try {
      switch (f.kind) {
        case Field::real: *static_cast<double*>(f.ptr) = v.get<double>(); break;
        case Field::integer: *static_cast<int*>(f.ptr) = v.get<int>(); break;
        case Field::boolean: *static_cast<bool*>(f.ptr) = v.get<bool>(); break;
      }
    } catch (const json::exception&) {
      throw ConfigError(std::string("wrong type for key '") + f.key + "'");
    }
  }
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

void save_config(const Config& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config " + path.string());
  out << dump_config(cfg);
}

std::string Config::fingerprint() const {
  // FNV-1a over the canonical dump (nlohmann orders keys).
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char ch : dump_config(*this)) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ttkit
