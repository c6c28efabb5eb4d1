#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ttkit/ballistics.hpp"
#include "ttkit/camera.hpp"
#include "ttkit/curation.hpp"
#include "ttkit/racket_solver.hpp"
#include "ttkit/rally_gen.hpp"
#include "ttkit/segmentation.hpp"
#include "ttkit/trajectory_fit.hpp"

namespace ttkit {

/// Every tunable constant, loadable from a flat key/value JSON file. Unknown
/// keys are rejected; absent keys keep their defaults.
struct Config {
  WorldGeometry world;
  AeroParams aero;
  TableBounceParams bounce;
  RacketImpactParams racket;
  FitConfig fit;
  HitHeuristics heuristics;
  double bounce_z_window = 0.05;       // m, bounce detection window
  double no_spin_threshold_hz = 5.0;
  StrokeSolverConfig stroke;
  double stroke_alpha_w = 1.0;
  double stroke_beta_w = 100.0;
  double stroke_net_clearance = 0.02;
  GenParams gen;
  CurationThresholds curation;
  CalibrationOptions calib;
  StrokeMonteCarloConfig mc;

  void validate() const;  // throws ConfigError on a broken invariant
  std::string fingerprint() const;
};

Config default_config();
Config load_config(const std::filesystem::path& path);
void save_config(const Config& cfg, const std::filesystem::path& path);
std::string dump_config(const Config& cfg);
Config parse_config(const std::string& text);

}  // namespace ttkit
