#include "igss/sim/study.hpp"

#include "igss/calibration/detection.hpp"
#include "igss/calibration/projection.hpp"
#include "igss/calibration/triangulation.hpp"
#include "igss/error.hpp"
#include "igss/registration/point_registration.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <numbers>
#include <thread>

namespace igss::sim {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kMaxTrackerPoseDeg = 15.0;
constexpr double kMaxCArmPoseDeg = 8.0;
constexpr double kPlanEntryBackoffMm = 3.0;
constexpr double kPlanWaistClearanceMm = 1.0;
const Vec3 kIsoInPatient(0.0, -50.0, 0.0);  // C-arm isocentre sits between jig and spine

geom::Mat3 random_rotation(Rng& rng, double max_deg) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, max_deg * kDeg);
  Vec3 axis(g(rng), g(rng), g(rng));
  const double angle = u(rng);
  if (axis.norm() < 1e-12) axis = Vec3::UnitZ();
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Vec3 isotropic(Rng& rng, double sigma) {
  std::normal_distribution<double> g(0.0, 1.0);
  const Vec3 e(g(rng), g(rng), g(rng));
  return sigma * e;
}

calib::Vec2 planar(Rng& rng, double sigma) {
  std::normal_distribution<double> g(0.0, 1.0);
  const calib::Vec2 e(g(rng), g(rng));
  return sigma * e;
}

double angle_multiplier(const StudyConfig& c, const CellValues& cell) {
  return 1.0 + c.tool_angle_gain * (1.0 - std::cos(cell.tool_angle_deg * kDeg));
}

struct Streams {
  Rng pose, reg, track, kin;
  explicit Streams(std::uint64_t seed)
      : pose(derive_seed(seed, {1})), reg(derive_seed(seed, {2})), track(derive_seed(seed, {3})),
        kin(derive_seed(seed, {4})) {}
};

// Shared tail of both chains: navigate to T_est(p), track the tool, optionally
// position it with the robot, and express the physical miss in patient coordinates.
ChainOutcome navigate(const geom::RigidTransform& est, const geom::RigidTransform& truth, std::span<const Vec3> targets,
                      const NoiseModel& track_noise, double distance, const Vec3& view_axis, bool robot,
                      double kinematic_sigma, Streams& s) {
  ChainOutcome out;
  const geom::RigidTransform truth_inv = geom::invert(truth);
  for (const auto& p : targets) {
    Vec3 q = sample_noisy_measurement(track_noise, est.apply(p), distance, view_axis, s.track);
    if (robot) q += isotropic(s.kin, kinematic_sigma);
    out.errors.push_back(truth_inv.apply(q) - p);
  }
  return out;
}

ChainOutcome point_ct_chain(const Phantom& ph, const StudyConfig& c, const MethodSpec& m, const CellValues& cell,
                            Streams& s, std::span<const Vec3> targets) {
  const double d = cell.tracker_distance_mm;
  const geom::Mat3 r = random_rotation(s.pose, kMaxTrackerPoseDeg);
  const Vec3 t(uniform(s.pose, -50.0, 50.0), uniform(s.pose, -50.0, 50.0), d);
  const auto truth = geom::RigidTransform::from(r, t);  // patient -> tracker
  const Vec3 axis = t.normalized();
  const double am = angle_multiplier(c, cell);

  NoiseModel probe = c.noise;
  probe.tracker_sigma0 *= cell.user_multiplier * am;
  reg::FiducialSet measured;
  measured.frame = geom::Frame::Tracker;
  for (const auto& f : ph.fiducials.points) {
    measured.points.push_back({f.label, sample_noisy_measurement(probe, truth.apply(f.position), d, axis, s.reg)});
  }
  reg::FiducialSet image = ph.fiducials;
  image.frame = geom::Frame::PreOpImage;
  const reg::RegistrationResult res = reg::register_points(measured, image);

  NoiseModel track = c.noise;
  track.tracker_sigma0 *= am;
  ChainOutcome out = navigate(res.transform, truth, targets, track, d, axis, m.robot_assisted,
                              c.noise.kinematic_sigma, s);
  out.fre_rms = res.fre_rms;
  return out;
}

struct CArmAxes {
  Vec3 x, y, z;
};

CArmAxes beam_axes(double gantry) {
  const Vec3 z(-std::sin(gantry), std::cos(gantry), 0.0);
  const Vec3 x(std::cos(gantry), std::sin(gantry), 0.0);
  return {x, z.cross(x), z};
}

// Two-plate calibration cage straddling the isocentre.
std::vector<calib::LabeledPoint3> calibrator(const CArmAxes& a) {
  static constexpr double kPlate[6][2] = {{-60, -50}, {60, -50}, {-60, 50}, {55, 45}, {0, 70}, {10, -5}};
  std::vector<calib::LabeledPoint3> pts;
  for (int plate = 0; plate < 2; ++plate) {
    const double depth = plate == 0 ? -70.0 : 70.0;
    const double scale = plate == 0 ? 1.5 : 1.2;
    for (int i = 0; i < 6; ++i) {
      const double u = scale * kPlate[i][plate == 0 ? 0 : 1], v = scale * kPlate[i][plate == 0 ? 1 : 0];
      pts.push_back({"C" + std::to_string(plate * 6 + i + 1), depth * a.z + u * a.x + v * a.y});
    }
  }
  return pts;
}

calib::ViewDetections acquire_view(calib::View view, double gantry, const StudyConfig& c, const CellValues& cell,
                                   const std::vector<calib::LabeledPoint3>& jig_carm, Streams& s) {
  const double sod = c.source_to_detector_mm - cell.detector_distance_mm;
  if (!(sod > 100.0)) throw Error(ErrorCode::InvalidArgument, "detector distance leaves no room for the source");
  const calib::CArmGeometry geometry{gantry, c.source_to_detector_mm, sod};
  const calib::ProjectionModel truth = calib::pinhole_view(view, geometry);

  const auto cal = calibrator(beam_axes(gantry));
  calib::Detection2D cal_det;
  cal_det.view = view;
  for (const auto& p : cal) {
    cal_det.points.push_back({p.label, calib::project(truth, p.position) + planar(s.reg, c.noise.detector_sigma), 1.0});
  }
  const calib::DltResult dlt = calib::dlt_calibrate(cal, cal_det);

  std::vector<calib::Vec2> uvs;
  for (const auto& p : jig_carm) uvs.push_back(calib::project(truth, p.position));
  const auto image = calib::render_blobs(view, uvs);
  calib::Detection2D det = calib::detect_fiducials(image, calib::project_pattern(dlt.model, jig_carm));
  for (auto& d : det.points) d.uv += planar(s.reg, c.noise.detector_sigma);
  return {dlt.model, det};
}

ChainOutcome auto_2d_chain(const Phantom& ph, const StudyConfig& c, const MethodSpec& m, const CellValues& cell,
                           Streams& s, std::span<const Vec3> targets) {
  const geom::Mat3 r = random_rotation(s.pose, kMaxCArmPoseDeg);
  const Vec3 iso = kIsoInPatient + Vec3(uniform(s.pose, -15, 15), uniform(s.pose, -15, 15), uniform(s.pose, -15, 15));
  const auto truth = geom::RigidTransform::from(r, -(r * iso));  // patient -> CArm

  // The jig pose relative to the patient is known only through the tracker.
  const double d = cell.tracker_distance_mm;
  const geom::Mat3 rt = random_rotation(s.pose, kMaxTrackerPoseDeg);
  const Vec3 tt(uniform(s.pose, -50.0, 50.0), uniform(s.pose, -50.0, 50.0), d);
  const auto patient_to_tracker = geom::RigidTransform::from(rt, tt);
  const Vec3 tracker_axis = tt.normalized();
  reg::FiducialSet jig_tracked;
  jig_tracked.frame = geom::Frame::Tracker;
  for (const auto& f : ph.jig_array.points) {
    jig_tracked.points.push_back(
        {f.label, sample_noisy_measurement(c.noise, patient_to_tracker.apply(f.position), d, tracker_axis, s.reg)});
  }
  const auto jig_fit = reg::register_points(jig_tracked, ph.jig_array);
  const reg::FiducialSet jig_est =
      reg::transformed(ph.jig, geom::invert(patient_to_tracker) * jig_fit.transform, geom::Frame::Patient);

  std::vector<calib::LabeledPoint3> jig_carm;
  for (const auto& f : ph.jig.points) jig_carm.push_back({f.label, truth.apply(f.position)});
  const auto ap = acquire_view(calib::View::AP, 0.0, c, cell, jig_carm, s);
  const auto lp = acquire_view(calib::View::LP, 0.5 * std::numbers::pi, c, cell, jig_carm, s);
  const reg::RegistrationResult res = calib::register_patient_2d(jig_est, ap, lp);

  NoiseModel track = c.noise;
  track.tracker_sigma0 *= angle_multiplier(c, cell);
  const Vec3 axis = r * (rt.transpose() * tracker_axis);
  ChainOutcome out = navigate(res.transform, truth, targets, track, d, axis, m.robot_assisted,
                              c.noise.kinematic_sigma, s);
  out.fre_rms = res.fre_rms;
  return out;
}

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mu;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

double rms(const std::vector<Vec3>& errors) {
  double s = 0.0;
  for (const auto& e : errors) s += e.squaredNorm();
  return std::sqrt(s / static_cast<double>(errors.size()));
}

void check_list(const std::vector<double>& v, const char* name, bool positive) {
  if (v.empty()) throw Error(ErrorCode::InvalidArgument, std::string(name) + " must not be empty");
  for (double x : v) {
    if (!std::isfinite(x) || x < 0.0 || (positive && x == 0.0)) {
      throw Error(ErrorCode::InvalidArgument, std::string(name) + " has an invalid value");
    }
  }
}

}  // namespace

std::vector<MethodSpec> default_methods() {
  return {{"pointCT_navigation", Modality::PreOpCT_PointBased, false},
          {"auto2D_navigation", Modality::IntraOp2D_AutoFiducial, false},
          {"pointCT_robot", Modality::PreOpCT_PointBased, true}};
}

void validate(const StudyConfig& c) {
  if (c.methods.empty()) throw Error(ErrorCode::InvalidArgument, "at least one method is required");
  for (std::size_t i = 0; i < c.methods.size(); ++i) {
    if (c.methods[i].name.empty()) throw Error(ErrorCode::InvalidArgument, "method name is empty");
    for (std::size_t k = 0; k < i; ++k) {
      if (c.methods[k].name == c.methods[i].name) throw Error(ErrorCode::InvalidArgument, "duplicate method name");
    }
  }
  if (c.samples_per_method < 1) throw Error(ErrorCode::InvalidArgument, "samples_per_method must be >= 1");
  check_list(c.factors.user_groups, "user_groups", false);
  check_list(c.factors.tool_angles_deg, "tool_angles_deg", false);
  check_list(c.factors.tracker_distances_mm, "tracker_distances_mm", true);
  check_list(c.factors.detector_distances_mm, "detector_distances_mm", true);
  for (double a : c.factors.tool_angles_deg) {
    if (a >= 90.0) throw Error(ErrorCode::InvalidArgument, "tool angles must be below 90 degrees");
  }
  if (!std::isfinite(c.tool_angle_gain) || c.tool_angle_gain < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "tool_angle_gain must be >= 0");
  }
  validate(c.noise);
}

std::size_t cell_count(const StudyFactors& f) {
  return f.user_groups.size() * f.tool_angles_deg.size() * f.tracker_distances_mm.size() *
         f.detector_distances_mm.size();
}

CellValues cell_values(const StudyFactors& f, std::size_t index) {
  CellValues v;
  v.index = index % cell_count(f);
  std::size_t r = v.index;
  v.detector_distance_mm = f.detector_distances_mm[r % f.detector_distances_mm.size()];
  r /= f.detector_distances_mm.size();
  v.tracker_distance_mm = f.tracker_distances_mm[r % f.tracker_distances_mm.size()];
  r /= f.tracker_distances_mm.size();
  v.tool_angle_deg = f.tool_angles_deg[r % f.tool_angles_deg.size()];
  r /= f.tool_angles_deg.size();
  v.user_multiplier = f.user_groups[r];
  return v;
}

std::uint64_t trial_seed(std::uint64_t study_seed, Modality modality, std::size_t trial_index) {
  return derive_seed(study_seed, {0x7472, static_cast<std::uint64_t>(modality), trial_index});
}

ChainOutcome simulate_chain(const Phantom& phantom, const StudyConfig& config, const MethodSpec& method,
                            const CellValues& cell, std::uint64_t seed, std::span<const Vec3> targets) {
  Streams s(seed);
  return method.modality == Modality::PreOpCT_PointBased ? point_ct_chain(phantom, config, method, cell, s, targets)
                                                         : auto_2d_chain(phantom, config, method, cell, s, targets);
}

TrialResult run_trial(const Phantom& phantom, const StudyConfig& config, const MethodSpec& method,
                      std::size_t trial_index) {
  TrialResult r;
  r.method = method.name;
  r.modality = method.modality;
  r.robot_assisted = method.robot_assisted;
  r.trial_index = trial_index;
  r.cell = cell_values(config.factors, trial_index);
  r.seed = trial_seed(config.noise.seed, method.modality, trial_index);
  const auto targets = phantom.targets.positions();
  try {
    const ChainOutcome out = simulate_chain(phantom, config, method, r.cell, r.seed, targets);
    r.rmse_mm = rms(out.errors);
    r.fre_mm = out.fre_rms;
    r.ok = true;
  } catch (const Error& e) {
    r.error = std::string(to_string(e.code()));
  }
  return r;
}

StudyStats compute_stats(std::span<const double> v) {
  StudyStats s;
  s.n = v.size();
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  s.ci_mu_plus_1sigma = s.mean + s.sd;
  s.ci95 = s.mean + 1.96 * s.sd;
  return s;
}

std::size_t StudyResult::failed() const {
  std::size_t n = 0;
  for (const auto& m : methods) n += m.failed;
  return n;
}

StudyResult run_study(const StudyConfig& config, const Phantom& phantom, unsigned threads) {
  validate(config);
  const std::size_t per = static_cast<std::size_t>(config.samples_per_method);
  const std::size_t cells = cell_count(config.factors);
  StudyResult out;
  out.trials.resize(config.methods.size() * per);
  parallel_for(out.trials.size(), threads, [&](std::size_t i) {
    out.trials[i] = run_trial(phantom, config, config.methods[i / per], i % per);
  });

  std::vector<double> nav;
  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    MethodSummary sum;
    sum.method = config.methods[m];
    std::vector<double> all;
    std::vector<std::vector<double>> by_cell(cells);
    for (std::size_t i = m * per; i < (m + 1) * per; ++i) {
      const auto& t = out.trials[i];
      if (!t.ok) {
        ++sum.failed;
        continue;
      }
      all.push_back(t.rmse_mm);
      by_cell[t.cell.index].push_back(t.rmse_mm);
      if (!t.robot_assisted) nav.push_back(t.rmse_mm);
    }
    sum.pooled = compute_stats(all);
    for (const auto& c : by_cell) sum.per_cell.push_back(compute_stats(c));
    out.methods.push_back(std::move(sum));
  }
  out.navigation_pooled = compute_stats(nav);
  return out;
}

double calibrate_tracker_sigma(StudyConfig& config, const Phantom& phantom, double target_mean, double tolerance,
                               unsigned threads, int max_iter) {
  auto it = std::find_if(config.methods.begin(), config.methods.end(), [](const MethodSpec& m) {
    return m.modality == Modality::PreOpCT_PointBased && !m.robot_assisted;
  });
  if (it == config.methods.end()) throw Error(ErrorCode::InvalidArgument, "no point-based navigation method to calibrate");
  if (!(target_mean > 0.0) || !(tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "bad calibration target");
  StudyConfig probe = config;
  probe.methods = {*it};
  double mean = 0.0;
  for (int k = 0; k < max_iter; ++k) {
    mean = run_study(probe, phantom, threads).methods.front().pooled.mean;
    if (!(mean > 0.0)) throw Error(ErrorCode::InvalidArgument, "calibration needs nonzero tracker noise");
    if (std::abs(mean - target_mean) <= 0.2 * tolerance) break;
    probe.noise.tracker_sigma0 *= target_mean / mean;
  }
  config.noise.tracker_sigma0 = probe.noise.tracker_sigma0;
  return mean;
}

std::vector<workflow::ScrewRef> screw_refs_for(const Phantom& phantom, std::size_t count) {
  if (phantom.pedicles.empty()) throw Error(ErrorCode::InvalidArgument, "phantom has no pedicles");
  std::vector<workflow::ScrewRef> out;
  const std::size_t n = phantom.pedicles.size();
  for (std::size_t i = 0; i < count; ++i) {
    std::string id = phantom.pedicles[i % n].level;
    if (i >= n) id += "#" + std::to_string(i / n + 1);
    out.push_back({id, level_of(id)});
  }
  return out;
}

plan::ScrewPlan centered_plan(const plan::PedicleModel& pedicle, const std::string& id) {
  const Vec3 u = (pedicle.p1 - pedicle.p0).normalized();
  plan::ScrewPlan p;
  p.level = id;
  p.entry = pedicle.p0 - kPlanEntryBackoffMm * u;
  p.direction = u;
  p.diameter = std::min(6.5, 2.0 * (pedicle.min_radius() - kPlanWaistClearanceMm));
  p.length = 45.0;
  plan::validate(p);
  return p;
}

SessionSimulation simulate_session(workflow::Mode mode, Modality modality,
                                   const std::vector<workflow::ScrewRef>& screws,
                                   const workflow::AcquisitionPolicy& policy, double fre_rms) {
  SessionSimulation sim;
  const auto initial = workflow::SessionState::start(mode, modality, screws);
  sim.trace = workflow::happy_path_trace(initial, policy, fre_rms);
  sim.final_state = workflow::replay(initial, sim.trace);
  sim.radiation = workflow::radiation_report(sim.final_state.log, screws);
  return sim;
}

PlacementResult run_placement_study(const StudyConfig& config, const Phantom& phantom, std::size_t screws_per_arm,
                                    const workflow::AcquisitionPolicy& policy, unsigned threads) {
  validate(config);
  if (screws_per_arm < 1) throw Error(ErrorCode::InvalidArgument, "screws_per_arm must be >= 1");
  const auto refs = screw_refs_for(phantom, screws_per_arm);
  const std::size_t np = phantom.pedicles.size();
  PlacementResult out;
  for (const auto& m : config.methods) {
    ArmPlacement arm;
    arm.method = m;
    arm.screws.resize(refs.size());
    parallel_for(refs.size(), threads, [&](std::size_t i) {
      const auto& ped = phantom.pedicles[i % np];
      ScrewOutcome& so = arm.screws[i];
      so.screw = refs[i].id;
      so.level = refs[i].level;
      try {
        const plan::ScrewPlan planned = centered_plan(ped, refs[i].id);
        const std::array<Vec3, 2> pts = {planned.entry, planned.tip()};
        const auto seed = derive_seed(config.noise.seed, {0x706c6163, static_cast<std::uint64_t>(m.modality), i});
        const ChainOutcome chain =
            simulate_chain(phantom, config, m, cell_values(config.factors, i), seed, pts);
        plan::ScrewPlan achieved = planned;
        achieved.entry = pts[0] + chain.errors[0];
        achieved.direction = (pts[1] + chain.errors[1] - achieved.entry).normalized();
        so.breach_mm = plan::breach_depth(achieved, ped);
        so.grade = plan::grade_gertzbein(so.breach_mm).value;
        so.ok = true;
      } catch (const Error& e) {
        so.error = std::string(to_string(e.code()));
      }
    });
    for (const auto& s : arm.screws) {
      if (s.ok) {
        ++arm.grade_counts[static_cast<std::size_t>(s.grade)];
      } else {
        ++arm.failed;
      }
    }
    const auto mode = m.robot_assisted ? workflow::Mode::RobotAssisted : workflow::Mode::NavigationOnly;
    arm.radiation = simulate_session(mode, m.modality, refs, policy).radiation;
    out.arms.push_back(std::move(arm));
  }
  return out;
}

}  // namespace igss::sim
