#pragma once

#include "igss/planning/screw.hpp"
#include "igss/sim/noise.hpp"
#include "igss/sim/phantom.hpp"
#include "igss/workflow/radiation.hpp"
#include "igss/workflow/session.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace igss::sim {

using workflow::Modality;

struct MethodSpec {
  std::string name;
  Modality modality = Modality::PreOpCT_PointBased;
  bool robot_assisted = false;
  bool operator==(const MethodSpec&) const = default;
};

/// pointCT_navigation, auto2D_navigation, pointCT_robot.
std::vector<MethodSpec> default_methods();

struct StudyFactors {
  std::vector<double> user_groups = {1.0, 1.25, 1.5};  // probing-noise multipliers
  std::vector<double> tool_angles_deg = {0.0, 30.0, 60.0};
  std::vector<double> tracker_distances_mm = {1000.0, 1500.0};
  std::vector<double> detector_distances_mm = {300.0, 450.0};  // detector to ROI
  bool operator==(const StudyFactors&) const = default;
};

struct StudyConfig {
  std::vector<MethodSpec> methods = default_methods();
  StudyFactors factors;
  int samples_per_method = 150;
  NoiseModel noise;  // noise.seed is the study seed
  double tool_angle_gain = 0.5;  // tracker sigma multiplier 1 + gain * (1 - cos angle)
  double source_to_detector_mm = 1000.0;
  PhantomSpec phantom;
  bool operator==(const StudyConfig&) const = default;
};

/// Throws InvalidArgument.
void validate(const StudyConfig& config);

struct CellValues {
  std::size_t index = 0;
  double user_multiplier = 1.0;
  double tool_angle_deg = 0.0;
  double tracker_distance_mm = 1000.0;
  double detector_distance_mm = 300.0;
};

std::size_t cell_count(const StudyFactors& f);
/// Mixed-radix decoding: user group varies slowest, detector distance fastest.
CellValues cell_values(const StudyFactors& f, std::size_t index);

/// Seed of one trial. The robot flag is not mixed in, so a navigation trial and
/// its robot-assisted twin share their registration and tracking streams.
std::uint64_t trial_seed(std::uint64_t study_seed, Modality modality, std::size_t trial_index);

/// Per-target error vectors (patient frame, mm) of one simulated navigation chain.
struct ChainOutcome {
  std::vector<Vec3> errors;
  double fre_rms = 0.0;
};

/// The full chain for one trial, evaluated at `targets` (patient frame).
/// Throws whatever the chain throws.
ChainOutcome simulate_chain(const Phantom& phantom, const StudyConfig& config, const MethodSpec& method,
                            const CellValues& cell, std::uint64_t seed, std::span<const Vec3> targets);

struct TrialResult {
  std::string method;
  Modality modality = Modality::PreOpCT_PointBased;
  bool robot_assisted = false;
  std::size_t trial_index = 0;
  CellValues cell;
  std::uint64_t seed = 0;
  bool ok = false;
  double rmse_mm = 0.0;  // over phantom.targets
  double fre_mm = 0.0;
  std::string error;     // ErrorCode name when !ok
};

TrialResult run_trial(const Phantom& phantom, const StudyConfig& config, const MethodSpec& method,
                      std::size_t trial_index);

struct StudyStats {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation
  double ci_mu_plus_1sigma = 0.0;
  double ci95 = 0.0;  // mean + 1.96 sd
};

/// Zero-filled stats for an empty sample.
StudyStats compute_stats(std::span<const double> values);

struct MethodSummary {
  MethodSpec method;
  StudyStats pooled;
  std::size_t failed = 0;
  std::vector<StudyStats> per_cell;
};

struct StudyResult {
  std::vector<TrialResult> trials;  // method-major, then trial index
  std::vector<MethodSummary> methods;
  StudyStats navigation_pooled;  // all non-robot methods together
  std::size_t failed() const;
};

/// Runs exactly samples_per_method trials per method, cell = trial index mod
/// cell count. Output does not depend on `threads`.
StudyResult run_study(const StudyConfig& config, const Phantom& phantom, unsigned threads = 1);

/// Rescales noise.tracker_sigma0 until the first point-based navigation method's
/// pooled mean is within `tolerance` of `target_mean`. Returns that mean.
double calibrate_tracker_sigma(StudyConfig& config, const Phantom& phantom, double target_mean,
                               double tolerance, unsigned threads = 1, int max_iter = 8);

struct ScrewOutcome {
  std::string screw;
  std::string level;
  bool ok = false;
  double breach_mm = 0.0;
  plan::GradeValue grade = plan::GradeValue::A;
  std::string error;
};

struct ArmPlacement {
  MethodSpec method;
  std::vector<ScrewOutcome> screws;
  std::array<std::size_t, 5> grade_counts{};
  std::size_t failed = 0;
  workflow::RadiationReport radiation;
};

struct PlacementResult {
  std::vector<ArmPlacement> arms;
};

/// Screw ids cycle over the phantom pedicles; repeats get a "#k" suffix.
std::vector<workflow::ScrewRef> screw_refs_for(const Phantom& phantom, std::size_t count);

/// Centered plan through a pedicle; diameter leaves 1 mm at the waist (max 6.5 mm).
plan::ScrewPlan centered_plan(const plan::PedicleModel& pedicle, const std::string& id);

struct SessionSimulation {
  workflow::SessionState final_state;
  std::vector<workflow::TraceRecord> trace;
  workflow::RadiationReport radiation;
};

/// Drives a full session along the happy path and tallies its C-arm shots.
SessionSimulation simulate_session(workflow::Mode mode, Modality modality,
                                   const std::vector<workflow::ScrewRef>& screws,
                                   const workflow::AcquisitionPolicy& policy = {}, double fre_rms = 0.5);

/// Per arm: centered plans, achieved axis = plan displaced by the chain error
/// at entry and tip, breach depth, grade, and a workflow session for the shot count.
PlacementResult run_placement_study(const StudyConfig& config, const Phantom& phantom, std::size_t screws_per_arm,
                                    const workflow::AcquisitionPolicy& policy = {}, unsigned threads = 1);

nlohmann::json to_json(const StudyConfig& config);
/// Missing keys keep their defaults; unknown keys throw InvalidArgument.
StudyConfig study_config_from_json(const nlohmann::json& j);

}  // namespace igss::sim
