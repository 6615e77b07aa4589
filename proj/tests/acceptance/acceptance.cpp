// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <thread>

#include <fmt/core.h>

#include "igss/cli/cli.hpp"
#include "igss/error.hpp"
#include "igss/io/files.hpp"
#include "igss/kinematics/collision.hpp"
#include "igss/kinematics/kinematics.hpp"
#include "igss/kinematics/trajectory.hpp"
#include "igss/planning/screw.hpp"
#include "igss/registration/point_registration.hpp"
#include "igss/registration/tre.hpp"
#include "igss/sim/phantom.hpp"
#include "igss/sim/report.hpp"
#include "igss/sim/study.hpp"
#include "support/cases.hpp"
#include "support/oracles.hpp"
#include "support/workflow_check.hpp"

using namespace igss;
using geom::Vec3;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

unsigned worker_threads() { return std::max(1u, std::min(8u, std::thread::hardware_concurrency())); }

sim::NoiseModel zero_noise(sim::NoiseModel n) {
  n.tracker_sigma0 = 0.0;
  n.detector_sigma = 0.0;
  n.kinematic_sigma = 0.0;
  return n;
}

std::vector<Vec3> positions(const reg::FiducialSet& s) {
  std::vector<Vec3> out;
  for (const auto& f : s.points) out.push_back(f.position);
  return out;
}

// 1. Noise-free chains on 100 phantoms.
Outcome noise_free_chains() {
  sim::StudyConfig config;
  config.noise = zero_noise(config.noise);
  double worst = 0.0;
  std::size_t chains = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto phantom = sim::generate_phantom(config.phantom, 1000 + seed);
    const auto targets = positions(phantom.targets);
    for (const auto& method : config.methods) {
      const auto cell = sim::cell_values(config.factors, seed % sim::cell_count(config.factors));
      const auto outcome = sim::simulate_chain(phantom, config, method, cell, sim::derive_seed(seed, {7}), targets);
      double acc = 0.0;
      for (const auto& e : outcome.errors) acc += e.squaredNorm();
      worst = std::max(worst, std::sqrt(acc / static_cast<double>(outcome.errors.size())));
      ++chains;
    }
  }
  return {worst < 1e-6, fmt::format("{} chains, worst target RMSE {:.3e} mm", chains, worst)};
}

// 2. FRE and TRE statistics against closed form and Monte Carlo.
Outcome statistical_oracles() {
  const double fle = 0.5;
  const int trials = 100000;
  bool pass = true;
  std::string detail;
  std::mt19937_64 geometry_rng(2024);
  for (int n : {4, 6, 10}) {
    std::vector<Vec3> fid;
    for (int i = 0; i < n; ++i) fid.push_back(testing::random_vec(geometry_rng, 60.0));
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : fid) centroid += p / n;
    const Vec3 target = centroid + Vec3(40.0, -30.0, 25.0);

    std::mt19937_64 rng(sim::derive_seed(31, {static_cast<std::uint64_t>(n)}));
    std::normal_distribution<double> axis(0.0, fle / std::sqrt(3.0));
    std::vector<Vec3> noisy(fid.size());
    double fre2 = 0.0;
    for (int t = 0; t < trials; ++t) {
      for (int i = 0; i < n; ++i) noisy[i] = fid[i] + Vec3(axis(rng), axis(rng), axis(rng));
      const double f = reg::fit_rigid(fid, noisy).fre_rms;
      fre2 += f * f;
    }
    fre2 /= trials;
    const double fre2_expected = (1.0 - 2.0 / n) * fle * fle;

    const double predicted = reg::predict_tre(testing::make_set(fid), fle, target).expected_tre_rms;
    const double mc = testing::monte_carlo_tre(fid, target, fle, trials, sim::derive_seed(47, {static_cast<std::uint64_t>(n)}));

    const double fre_rel = std::abs(fre2 / fre2_expected - 1.0);
    const double tre_rel = std::abs(predicted / mc - 1.0);
    pass = pass && fre_rel < 0.03 && tre_rel < 0.05;
    detail += fmt::format("{}N={}: FRE2 {:+.2f}%, TRE {:.4f} vs MC {:.4f} ({:+.2f}%)", detail.empty() ? "" : "; ", n,
                          100.0 * (fre2 / fre2_expected - 1.0), predicted, mc, 100.0 * (predicted / mc - 1.0));
  }
  return {pass, detail};
}

// 3. Calibrated study ordering and 95% bound.
Outcome calibrated_study() {
  sim::StudyConfig config;
  const auto phantom = sim::generate_phantom(config.phantom, sim::derive_seed(cli::kDefaultSeed, {0x7068}));
  const double calibrated = sim::calibrate_tracker_sigma(config, phantom, 0.99, 0.05, worker_threads());
  const auto result = sim::run_study(config, phantom, worker_threads());
  const auto mean_of = [&](const std::string& name) {
    for (const auto& m : result.methods)
      if (m.method.name == name) return m.pooled.mean;
    throw Error(ErrorCode::InvalidArgument, "no method " + name);
  };
  const double point = mean_of("pointCT_navigation");
  const double auto2d = mean_of("auto2D_navigation");
  const double robot = mean_of("pointCT_robot");
  bool pass = std::abs(point - 0.99) <= 0.05 && std::abs(calibrated - point) < 1e-12;
  pass = pass && point <= auto2d && auto2d <= robot && result.failed() == 0;
  double worst_ci = 0.0;
  for (const auto& m : result.methods) {
    pass = pass && m.pooled.n == 150;
    worst_ci = std::max(worst_ci, m.pooled.ci95);
  }
  pass = pass && worst_ci <= 2.0;
  return {pass, fmt::format("sigma0 {:.4f} mm; means {:.3f} <= {:.3f} <= {:.3f}; max mu+1.96sd {:.3f} mm",
                            config.noise.tracker_sigma0, point, auto2d, robot, worst_ci)};
}

// 4. Images per screw over full sessions.
Outcome radiation_accounting() {
  const auto phantom = sim::generate_phantom({}, 5);
  bool pass = true;
  std::string detail;
  for (std::size_t n : {2u, 6u, 10u}) {
    for (auto mode : {workflow::Mode::NavigationOnly, workflow::Mode::RobotAssisted}) {
      const auto s = sim::simulate_session(mode, workflow::Modality::IntraOp2D_AutoFiducial,
                                           sim::screw_refs_for(phantom, n));
      pass = pass && s.radiation.mean_per_screw == 3.0 && s.radiation.unattributed == 0.0 &&
             s.final_state.phase == workflow::Phase::Complete;
      if (mode == workflow::Mode::NavigationOnly)
        detail += fmt::format("{}{} screws: {:.4f}", detail.empty() ? "" : "; ", n, s.radiation.mean_per_screw);
    }
  }
  return {pass, detail + " images/screw"};
}

// 5. Grade bins, breach oracle, zero-noise placement.
Outcome grading() {
  bool pass = true;
  int prev = 0;
  for (int i = 0; i <= 1000; ++i) {
    const double b = i * 0.01;
    const int g = static_cast<int>(plan::grade_gertzbein(b).value);
    const int expected = b == 0.0 ? 0 : b < 2.0 ? 1 : b < 4.0 ? 2 : b < 6.0 ? 3 : 4;
    pass = pass && g == expected && g >= prev;
    prev = g;
  }
  std::mt19937_64 rng(10);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto [screw, ped] = testing::random_breach_case(rng);
    worst = std::max(worst, std::abs(plan::breach_depth(screw, ped) - testing::dense_breach_oracle(screw, ped, 0.1, 180)));
  }
  pass = pass && worst < 0.05;

  sim::StudyConfig config;
  config.noise = zero_noise(config.noise);
  const auto phantom = sim::generate_phantom(config.phantom, 11);
  const auto placement = sim::run_placement_study(config, phantom, 20, {}, worker_threads());
  bool all_a = true;
  for (const auto& arm : placement.arms)
    all_a = all_a && arm.failed == 0 && arm.grade_counts[0] == arm.screws.size() && !arm.screws.empty();
  std::istringstream csv(sim::table2_csv(placement, {"acceptance", 0, ""}));
  std::string line, letters;
  while (std::getline(csv, line))
    if (!line.empty() && line[0] != '#' && line.rfind("grade", 0) != 0) letters += line[0];
  pass = pass && all_a && letters == "ABCDE";
  return {pass, fmt::format("grid ok; breach max |diff| {:.4f} mm; zero-noise placement {}; rows {}", worst,
                            all_a ? "100% A" : "not all A", letters)};
}

// 6. IK round trip, Jacobian, safe planning against sampled clearance.
Outcome kinematics() {
  const auto model = kin::RobotModel::default_model();
  std::mt19937_64 rng(3);
  int ok = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto target = kin::fk(model, testing::random_q(model, rng));
    try {
      const auto r = kin::ik_solve(model, target, testing::home_q());
      ok += (kin::fk(model, r.q).translation() - target.translation()).norm() < 0.01;
    } catch (const Error&) {
    }
  }

  double worst_jac = 0.0;
  const double h = 1e-6;
  for (int t = 0; t < 200; ++t) {
    const auto q = testing::random_q(model, rng);
    const kin::Jacobian j = kin::jacobian(model, q);
    kin::Jacobian fd;
    for (int i = 0; i < kin::kDof; ++i) {
      kin::JointVector qp = q, qm = q;
      qp(i) += h;
      qm(i) -= h;
      fd.col(i) = kin::pose_error(kin::fk(model, qm), kin::fk(model, qp)) / (2.0 * h);
    }
    worst_jac = std::max(worst_jac, (j - fd).norm() / j.norm());
  }

  // Scenes: spheres scattered around the nominal path of a random goal.
  const double margin = 1.5, sampling_tol = 0.3;
  int scenes = 0, planned = 0, rerouted = 0, no_path = 0, false_negatives = 0, unsafe = 0;
  std::mt19937_64 scene_rng(66);
  while (scenes < 100) {
    const auto target = testing::target_at(model, testing::random_q(model, scene_rng, 0.5));
    kin::Trajectory nominal;
    try {
      nominal = kin::densify(kin::plan_trajectory(model, testing::home_q(), target, 40.0));
    } catch (const Error&) {
      continue;
    }
    ++scenes;
    kin::CollisionScene scene;
    scene.safety_margin = margin;
    std::vector<kin::Sphere> spheres;
    const int count = 1 + static_cast<int>(scene_rng() % 3);
    for (int k = 0; k < count; ++k) {
      const auto& s = nominal.samples[scene_rng() % nominal.samples.size()];
      const auto frames = kin::link_frames(model, s.q);
      const int link = 2 + static_cast<int>(scene_rng() % 5);
      const Vec3 c = frames[link].translation() + testing::random_vec(scene_rng, 140.0);
      spheres.push_back({c, std::uniform_real_distribution<double>(10.0, 30.0)(scene_rng)});
      scene.obstacles.push_back({"s" + std::to_string(k), spheres.back(), geom::Frame::RobotBase});
    }
    // The checker itself: no sample the oracle sees inside the margin may pass.
    bool nominal_hit = false;
    for (const auto& s : nominal.samples) {
      const bool library_clear = kin::check_collision(model, scene, s.q).empty();
      const double oracle = testing::oracle_clearance(model, s.q, spheres, 1.0);
      false_negatives += library_clear && oracle < margin - sampling_tol;
      nominal_hit = nominal_hit || !library_clear;
    }
    try {
      const auto safe = kin::plan_safe(model, scene, testing::home_q(), target, 40.0);
      ++planned;
      rerouted += nominal_hit;
      for (const auto& s : safe.samples) unsafe += testing::oracle_clearance(model, s.q, spheres, 1.0) <= 1.0;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoSafePath) throw;
      ++no_path;
    }
  }
  const bool pass = ok >= 990 && worst_jac < 1e-5 && false_negatives == 0 && unsafe == 0 && planned >= 30;
  return {pass, fmt::format("ik {}/1000; jacobian rel {:.2e}; scenes {}: planned {} (rerouted {}), no path {}, "
                            "unsafe samples {}, checker false negatives {}",
                            ok, worst_jac, scenes, planned, rerouted, no_path, unsafe, false_negatives)};
}

// 7. Exhaustive event strings.
Outcome workflow_safety() {
  bool pass = true;
  std::size_t states = 0, violations = 0;
  for (auto mode : {workflow::Mode::NavigationOnly, workflow::Mode::RobotAssisted})
    for (auto modality : {workflow::Modality::PreOpCT_PointBased, workflow::Modality::IntraOp2D_AutoFiducial}) {
      const auto rep = testing::enumerate_sessions(mode, modality, 25);
      states += rep.states;
      violations += rep.violations.size();
      pass = pass && rep.violations.empty() && rep.reached_complete && rep.guard_rejections > 0;
    }
  return {pass, fmt::format("{} states explored to depth 25, {} violations", states, violations)};
}

// 8. Byte-identical simulate output.
Outcome reproducibility() {
  const fs::path root = fs::temp_directory_path() / "igss_acceptance_repro";
  fs::remove_all(root);
  const auto run = [&](const std::string& name, const std::string& threads) {
    std::ostringstream out, err;
    const int code = cli::run({"--out", (root / name).string(), "--seed", "4242", "--threads", threads, "simulate",
                               "study"},
                              out, err);
    return code;
  };
  bool pass = run("a", "1") == 0 && run("b", "1") == 0 && run("c", "4") == 0;
  std::size_t files = 0;
  for (const char* f : {"table1.csv", "table1.json", "table2.csv", "placement.json"}) {
    const auto a = io::read_file(root / "a" / f);
    pass = pass && a == io::read_file(root / "b" / f) && a == io::read_file(root / "c" / f) && !a.empty();
    ++files;
  }
  fs::remove_all(root);
  return {pass, fmt::format("{} files identical across 2 runs and 1 vs 4 threads", files)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"noise-free end-to-end exactness", 10.0, noise_free_chains},
      {"FRE/TRE statistical oracles", 120.0, statistical_oracles},
      {"calibrated accuracy study", 60.0, calibrated_study},
      {"radiation accounting", 5.0, radiation_accounting},
      {"screw grading", 60.0, grading},
      {"kinematics and safe planning", 60.0, kinematics},
      {"workflow safety", 60.0, workflow_safety},
      {"reproducibility", 60.0, reproducibility},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && secs < c.budget_s;
    failures += !pass;
    fmt::print("{} {}. {}: {} [{:.2f} s, limit {:.0f} s]\n", pass ? "PASS" : "FAIL", i + 1, c.name, o.detail, secs,
               c.budget_s);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
