#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "test_helpers.hpp"
#include "ttkit/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string cli = TTKIT_CLI_PATH;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("ttkit_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args) {
  const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("simulate is byte-identical for a fixed seed") {
  TempDir dir;
  const std::string a = (dir.path / "a").string();
  const std::string b = (dir.path / "b").string();
  REQUIRE(run("simulate -n 3 --seed 5 --duration 1.0 --out " + a) == 0);
  REQUIRE(run("simulate -n 3 --seed 5 --duration 1.0 --out " + b) == 0);
  for (int i = 0; i < 3; ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "sim_%06d.traj.jsonl", i);
    const std::string fa = slurp(dir.path / "a" / name);
    const std::string fb = slurp(dir.path / "b" / name);
    CHECK(!fa.empty());
    CHECK(fa == fb);
  }
}

TEST_CASE("a vacuum config produces parabolic fixtures") {
  TempDir dir;
  const fs::path cfg_path = dir.path / "vacuum.json";
  std::ofstream(cfg_path) << R"({"k_d": 0.0, "k_m": 0.0})";
  const std::string out = (dir.path / "out").string();
  REQUIRE(run("simulate -n 1 --seed 3 --duration 0.4 --config " + cfg_path.string() +
              " --out " + out) == 0);

  // Check z(t) against the free-fall parabola from the first two samples.
  std::ifstream in(dir.path / "out" / "sim_000000.traj.jsonl");
  std::string line;
  std::vector<std::pair<double, double>> tz;
  std::vector<double> tx;
  while (std::getline(in, line)) {
    const json j = json::parse(line);
    if (j.at("p3d").is_null()) continue;
    tz.emplace_back(j.at("t").get<double>(), j.at("p3d").at(2).get<double>());
    tx.push_back(j.at("p3d").at(0).get<double>());
  }
  REQUIRE(tz.size() >= 10);
  const double dt = tz[1].first - tz[0].first;
  const double vz0 = (tz[1].second - tz[0].second) / dt + 0.5 * 9.81 * dt;
  for (const auto& [t, z] : tz) {
    const double expect = tz[0].second + vz0 * (t - tz[0].first) -
                          0.5 * 9.81 * (t - tz[0].first) * (t - tz[0].first);
    if (z == tz.back().second && t < tz.back().first) break;  // post-bounce part
    CHECK(std::abs(z - expect) < 1e-6);
    if (std::abs(z - expect) > 1e-6) break;
  }
  // x advances linearly in a vacuum.
  CHECK(std::abs((tx[2] - tx[1]) - (tx[1] - tx[0])) < 1e-9);
}

TEST_CASE("gen, segment, fit and curate compose through files") {
  TempDir dir;
  const std::string data = (dir.path / "data").string();
  REQUIRE(run("gen -n 3 --pool-size 50 --seed 11 --out " + data) == 0);
  REQUIRE(fs::exists(dir.path / "data" / "manifest.json"));
  REQUIRE(fs::exists(dir.path / "data" / "rally_000000.traj.jsonl"));
  REQUIRE(fs::exists(dir.path / "data" / "rally_000000.truth.json"));

  // Manifest counts match the files on disk.
  const json manifest = json::parse(slurp(dir.path / "data" / "manifest.json"));
  int traj_files = 0;
  for (const auto& e : fs::directory_iterator(dir.path / "data")) {
    const std::string n = e.path().filename().string();
    if (n.size() > 11 && n.substr(n.size() - 11) == ".traj.jsonl") ++traj_files;
  }
  CHECK(manifest.at("counts").at("emitted").get<int>() == traj_files);
  for (const auto& out : manifest.at("outputs")) {
    CHECK(fs::exists(dir.path / "data" / out.get<std::string>()));
  }

  REQUIRE(run("segment --in " + data + " --out " + data) == 0);
  REQUIRE(fs::exists(dir.path / "data" / "rally_000000.ann.json"));

  REQUIRE(run("fit --in " + data + " --out " + data + " --multistart 1") == 0);
  REQUIRE(fs::exists(dir.path / "data" / "rally_000000.fit.jsonl"));

  REQUIRE(run("curate --in " + data + " --out " + data) == 0);
  const json table = json::parse(slurp(dir.path / "data" / "rejection_table.json"));
  const std::vector<std::string> rows = {"success",           "invalid human pos",
                                         "not enough segments", "high reproj errors",
                                         "high ODE fit",        "low ball vis"};
  CHECK(table.size() == rows.size());
  for (const auto& row : rows) CHECK(table.contains(row));
  CHECK(table.at("success").get<int>() == 3);

  REQUIRE(run("stats --in " + data + " --out " + (dir.path / "stats.jsonl").string()) == 0);
  CHECK(fs::exists(dir.path / "stats.jsonl"));
}

TEST_CASE("unknown config keys are rejected with a nonzero exit") {
  TempDir dir;
  const fs::path cfg_path = dir.path / "bad.json";
  std::ofstream(cfg_path) << R"({"tabel_length": 2.74})";
  CHECK(run("simulate -n 1 --config " + cfg_path.string() + " --out " +
            (dir.path / "x").string()) != 0);
}

TEST_CASE("mc-racket emits a summary with a success rate") {
  TempDir dir;
  const fs::path out = dir.path / "mc.json";
  REQUIRE(run("mc-racket -n 4 --seed 2 --out " + out.string()) == 0);
  const json j = json::parse(slurp(out));
  CHECK(j.contains("success_rate"));
  CHECK(j.at("trials").get<int>() == 4);
  CHECK(j.at("error_quantiles").contains("p90"));
}

TEST_CASE("calib consumes a corner file and emits a camera") {
  using namespace ttkit;
  TempDir dir;

  const WorldGeometry world{};
  const auto synth =
      testing::make_posed_camera(testing::rotation_xyz(-55, 15, -30), 1600, 1920, 1080, world);
  REQUIRE(synth.has_value());
  CornerObservation obs;
  obs.width = synth->width;
  obs.height = synth->height;
  const auto corners = table_corners(world);
  for (int i = 0; i < 4; ++i) obs.corners[i] = *project(*synth, corners[i]);
  const fs::path corners_file = dir.path / "corners.json";
  save_corners(obs, corners_file);

  const fs::path cam_out = dir.path / "camera.json";
  REQUIRE(run("calib --corners " + corners_file.string() + " --out " + cam_out.string()) == 0);
  const CameraModel cam = load_camera(cam_out);
  CHECK(std::abs(cam.f - synth->f) / synth->f < 0.01);
  CHECK(testing::rotation_angle_deg(cam.R, synth->R) < 0.5);
}
