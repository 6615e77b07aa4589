#include <doctest.h>

#include <filesystem>
#include <numbers>
#include <fstream>
#include <sstream>

#include "igss/calibration/detection.hpp"
#include "igss/cli/cli.hpp"
#include "igss/io/files.hpp"
#include "igss/io/json.hpp"
#include "igss/sim/phantom.hpp"
#include "support/oracles.hpp"

using namespace igss;
using geom::Vec3;
namespace fs = std::filesystem;

namespace {

const std::string kData = IGSS_DATA_DIR;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("igss_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) { return io::read_file(p); }

std::vector<std::string> data_rows(const std::string& csv) {
  std::vector<std::string> rows;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') rows.push_back(line);
  return rows;
}

void write(const fs::path& p, const std::string& text) { io::write_file_atomic(p, text); }

}  // namespace

TEST_CASE("cli pivot on the shipped files") {
  const auto dir = fresh_dir("pivot");
  const auto ok = run({"--out", dir.string(), "calibrate", "pivot", kData + "/pivot_noise_free.json"});
  CHECK(ok.code == 0);
  const auto j = io::parse(slurp(dir / "pivot.json"));
  CHECK(j.at("residual_rms_mm").get<double>() < 1e-9);
  CHECK(j.at("provenance").at("seed").get<std::uint64_t>() == cli::kDefaultSeed);

  const auto same = run({"--out", dir.string(), "calibrate", "pivot", kData + "/pivot_same_rotation.json"});
  CHECK(same.code == 3);
  CHECK(io::parse(same.err).at("error") == "InsufficientRotation");

  const auto missing = run({"--out", dir.string(), "calibrate", "pivot", (dir / "nope.json").string()});
  CHECK(missing.code == 2);
  CHECK(io::parse(missing.err).at("error") == "IOFailure");
  fs::remove_all(dir);
}

TEST_CASE("cli grade") {
  const auto dir = fresh_dir("grade");
  const auto r = run({"--out", dir.string(), "grade", kData + "/screws_example.json", kData + "/pedicles_example.json"});
  REQUIRE(r.code == 0);
  const auto rows = data_rows(slurp(dir / "grades.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == "level,breach_mm,grade");
  CHECK(rows[1].back() == 'A');
  CHECK(rows[2].back() == 'B');
  CHECK(rows[2].find(",1.5000,") != std::string::npos);
  double total = 0.0;
  for (const auto& row : data_rows(slurp(dir / "grade_summary.csv"))) {
    if (row.rfind("grade", 0) == 0) continue;
    total += std::stod(row.substr(row.rfind(',') + 1));
  }
  CHECK(total == doctest::Approx(100.0).epsilon(0.001));

  write(dir / "empty.json", R"({"screws": []})");
  CHECK(run({"--out", dir.string(), "grade", (dir / "empty.json").string(), kData + "/pedicles_example.json"}).code == 2);
  fs::remove_all(dir);
}

TEST_CASE("cli plan validate") {
  const auto dir = fresh_dir("plan");
  const auto r = run({"--out", dir.string(), "plan", "validate", kData + "/screws_example.json",
                      kData + "/pedicles_example.json", "--margin", "0.5"});
  REQUIRE(r.code == 0);
  const auto rows = data_rows(slurp(dir / "plan_validation.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].find("accept") != std::string::npos);
  CHECK(rows[2].find("reject") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("cli register points") {
  const auto dir = fresh_dir("register");
  const auto ph = sim::generate_phantom({}, 2);
  const auto truth = geom::RigidTransform::axis_angle(Vec3(0, 0, 1), 0.4, Vec3(10, -20, 5));
  write(dir / "fixed.json", io::to_json(reg::transformed(ph.fiducials, truth, geom::Frame::Tracker)).dump());
  write(dir / "moving.json", io::to_json(ph.fiducials).dump());
  const auto r = run({"--out", dir.string(), "register", "points", (dir / "fixed.json").string(),
                      (dir / "moving.json").string()});
  REQUIRE(r.code == 0);
  const auto j = io::parse(slurp(dir / "registration.json"));
  CHECK(j.at("fre_rms_mm").get<double>() < 1e-9);
  CHECK(j.at("verdict") == "accept");
  const auto t = io::from_json<geom::RigidTransform>(j.at("transform"));
  CHECK((t.matrix() - truth.matrix()).cwiseAbs().maxCoeff() < 1e-9);
  fs::remove_all(dir);
}

TEST_CASE("cli calibrate carm and register auto2d") {
  const auto dir = fresh_dir("auto2d");
  const auto ph = sim::generate_phantom({}, 3);
  const auto ap = calib::pinhole_view(calib::View::AP, {0.0, 1000.0, 600.0});
  const auto lp = calib::pinhole_view(calib::View::LP, {std::numbers::pi / 2, 1000.0, 600.0});

  // Calibration cage, then detections of it in AP.
  std::mt19937_64 rng(4);
  std::vector<Vec3> cage;
  for (int i = 0; i < 10; ++i) cage.push_back(testing::random_vec(rng, 70.0));
  write(dir / "cage.json", io::to_json(testing::make_set(cage, geom::Frame::CArm, "C")).dump());
  io::Json det = {{"view", "AP"}, {"points", io::Json::array()}};
  for (std::size_t i = 0; i < cage.size(); ++i) {
    const auto uv = calib::project(ap, cage[i]);
    det["points"].push_back({{"label", "C" + std::to_string(i + 1)}, {"uv_mm", {uv.x(), uv.y()}}});
  }
  write(dir / "det.json", det.dump());
  REQUIRE(run({"--out", dir.string(), "calibrate", "carm", (dir / "cage.json").string(), (dir / "det.json").string()})
              .code == 0);
  CHECK(io::parse(slurp(dir / "carm_AP.json")).at("reprojection_rms_mm").get<double>() < 1e-8);

  // Two rendered views of the jig, identity patient -> CArm pose.
  std::vector<calib::LabeledPoint3> jig;
  for (const auto& f : ph.jig.points) jig.push_back({f.label, f.position});
  for (const auto& [model, name] : {std::pair{ap, std::string("ap")}, std::pair{lp, std::string("lp")}}) {
    const auto image = calib::render_blobs(model.view, calib::project_pattern(model, jig).uv);
    std::ostringstream pgm;
    calib::write_pgm16(pgm, image);
    write(dir / (name + ".pgm"), pgm.str());
    write(dir / (name + ".json"), calib::sidecar_json(image));
    write(dir / (name + "_model.json"), io::to_json(model).dump());
  }
  write(dir / "jig.json", io::to_json(ph.jig).dump());
  const auto r = run({"--out", dir.string(), "register", "auto2d", (dir / "jig.json").string(),
                      (dir / "ap_model.json").string(), (dir / "ap.pgm").string(), (dir / "lp_model.json").string(),
                      (dir / "lp.pgm").string()});
  REQUIRE(r.code == 0);
  const auto j = io::parse(slurp(dir / "registration.json"));
  CHECK(j.at("fre_rms_mm").get<double>() < 0.05);
  CHECK(io::from_json<geom::RigidTransform>(j.at("transform")).translation().norm() < 0.1);
  fs::remove_all(dir);
}

TEST_CASE("cli simulate study is reproducible across runs and thread counts") {
  const auto a = fresh_dir("sim_a");
  const auto b = fresh_dir("sim_b");
  const std::vector<std::string> common = {"--seed", "77", "--set", "study.samples_per_method=36", "--set",
                                           "placement.screws_per_arm=6"};
  auto args = [&](const fs::path& out, const std::string& threads) {
    std::vector<std::string> v = {"--out", out.string(), "--threads", threads};
    v.insert(v.end(), common.begin(), common.end());
    v.push_back("simulate");
    v.push_back("study");
    return v;
  };
  REQUIRE(run(args(a, "1")).code == 0);
  REQUIRE(run(args(b, "3")).code == 0);
  for (const char* f : {"table1.csv", "table1.json", "table2.csv", "placement.json"}) {
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(slurp(a / "table1.csv").find("# seed=77") != std::string::npos);
  const auto rows = data_rows(slurp(a / "table1.csv"));
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "method,modality,n,mean_mm,sd_mm,ci95_mm");
  const auto t2 = data_rows(slurp(a / "table2.csv"));
  REQUIRE(t2.size() == 6);
  CHECK(t2[1][0] == 'A');
  CHECK(t2[5][0] == 'E');

  REQUIRE(run({"--out", a.string(), "simulate", "report", a.string()}).code != 0);
  REQUIRE(run({"--out", a.string(), "report", a.string()}).code == 0);
  CHECK(slurp(a / "report.txt").find("pointCT_navigation") != std::string::npos);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("cli simulate study with zero noise") {
  const auto dir = fresh_dir("sim_zero");
  const auto r = run({"--out", dir.string(), "--set", "study.samples_per_method=12", "--set",
                      "study.noise.tracker_sigma0=0", "--set", "study.noise.detector_sigma=0", "--set",
                      "study.noise.kinematic_sigma=0", "--set", "placement.screws_per_arm=4", "simulate", "study"});
  REQUIRE(r.code == 0);
  const auto rows = data_rows(slurp(dir / "table1.csv"));
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].find(",0.000000,0.000000,0.000000") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("cli simulate session reports three images per screw") {
  const auto dir = fresh_dir("session");
  REQUIRE(run({"--out", dir.string(), "simulate", "session"}).code == 0);
  const auto j = io::parse(slurp(dir / "session_report.json"));
  CHECK(j.at("radiation_mean_per_screw").get<double>() == 3.0);
  CHECK(slurp(dir / "trace.jsonl").rfind("#", 0) == 0);
  REQUIRE(run({"--out", dir.string(), "--set", "session.screws=10", "simulate", "session"}).code == 0);
  CHECK(io::parse(slurp(dir / "session_report.json")).at("radiation_mean_per_screw").get<double>() == 3.0);
  fs::remove_all(dir);
}

TEST_CASE("cli input errors") {
  const auto dir = fresh_dir("errors");
  CHECK(run({"--out", dir.string(), "--set", "study.bogus=1", "simulate", "study"}).code == 2);
  CHECK(run({"--out", dir.string(), "--set", "study.samples_per_method=0", "simulate", "study"}).code == 2);
  CHECK(run({"--out", dir.string(), "--set", "x=1", "calibrate", "pivot", kData + "/pivot_noise_free.json"}).code ==
        2);
  const auto usage = run({"frobnicate"});
  CHECK(usage.code == 2);
  CHECK(io::parse(usage.err).at("error") == "UsageError");
  write(dir / "config.json", R"({"study": {"samples_per_method": 6}, "nonsense": true})");
  CHECK(run({"--out", dir.string(), "--config", (dir / "config.json").string(), "simulate", "study"}).code == 2);
  // Failed commands leave no outputs behind.
  CHECK(!fs::exists(dir / "table1.csv"));
  fs::remove_all(dir);
}

TEST_CASE("exit code classification") {
  CHECK(cli::exit_code_for("ParseError") == 2);
  CHECK(cli::exit_code_for("LevelMismatch") == 2);
  CHECK(cli::exit_code_for("InsufficientRotation") == 3);
  CHECK(cli::exit_code_for("PatternAmbiguous") == 3);
}
