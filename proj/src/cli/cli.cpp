#include "igss/cli/cli.hpp"

#include "igss/calibration/detection.hpp"
#include "igss/calibration/pivot.hpp"
#include "igss/calibration/projection.hpp"
#include "igss/calibration/triangulation.hpp"
#include "igss/error.hpp"
#include "igss/io/files.hpp"
#include "igss/io/json.hpp"
#include "igss/registration/icp.hpp"
#include "igss/registration/point_registration.hpp"
#include "igss/registration/surface.hpp"
#include "igss/sim/report.hpp"
#include "igss/sim/study.hpp"
#include "igss/workflow/persistence.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>

namespace igss::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

struct Globals {
  std::uint64_t seed = kDefaultSeed;
  std::string out_dir = ".";
  std::string config_path;
  std::vector<std::string> overrides;
  unsigned threads = 1;
};

struct Outputs {
  std::vector<std::pair<fs::path, std::string>> files;
  void add(const fs::path& p, std::string content) { files.emplace_back(p, std::move(content)); }
};

sim::Provenance provenance(const Globals& g, const std::string& hashed) {
  return {IGSS_VERSION, g.seed, sim::fnv1a_hex(hashed)};
}

Json provenance_json(const sim::Provenance& p) {
  return {{"tool_version", p.tool_version}, {"seed", p.seed}, {"config_hash", p.config_hash}};
}

std::string inputs_text(const std::vector<std::string>& paths) {
  std::string all;
  for (const auto& p : paths) all += io::read_file(p) + '\x1f';
  return all;
}

Json read_json(const std::string& path) { return io::parse(io::read_file(path)); }

const Json& list_in(const Json& j, const char* key) {
  if (j.is_array()) return j;
  if (j.is_object() && j.contains(key) && j[key].is_array()) return j[key];
  throw Error(ErrorCode::ParseError, std::string("expected an array or an object with '") + key + "'");
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void no_overrides(const Globals& g) {
  if (!g.overrides.empty() || !g.config_path.empty()) {
    throw Error(ErrorCode::InvalidArgument, "--config/--set apply to 'simulate' only");
  }
}

// ---- calibrate ----

Outputs calibrate_pivot(const Globals& g, const std::string& input) {
  no_overrides(g);
  const Json j = read_json(input);
  const auto poses = io::vector_from_json<geom::RigidTransform>(list_in(j, "poses"));
  const calib::PivotResult r = calib::pivot_calibrate(poses);
  Json report = io::to_json(r);
  report["n_poses"] = poses.size();
  report["provenance"] = provenance_json(provenance(g, inputs_text({input})));
  Outputs o;
  o.add("pivot.json", dump(report));
  return o;
}

calib::Detection2D read_detections(const Json& j) {
  calib::Detection2D d;
  d.view = calib::parse_view(j.at("view").get<std::string>());
  for (const auto& p : list_in(j, "points")) {
    const auto uv = io::from_json<geom::Vec3>(Json::array({p.at("uv_mm").at(0), p.at("uv_mm").at(1), 0.0}));
    d.points.push_back({p.at("label").get<std::string>(), {uv.x(), uv.y()}, 1.0});
  }
  return d;
}

Outputs calibrate_carm(const Globals& g, const std::string& world_path, const std::string& det_path) {
  no_overrides(g);
  const auto world_set = io::from_json<reg::FiducialSet>(read_json(world_path));
  std::vector<calib::LabeledPoint3> world;
  for (const auto& f : world_set.points) world.push_back({f.label, f.position});
  const calib::Detection2D det = read_detections(read_json(det_path));
  const calib::DltResult r = calib::dlt_calibrate(world, det);
  Json report = io::to_json(r.model);
  report["reprojection_rms_mm"] = r.reprojection_rms;
  report["n_points"] = r.n_points;
  report["provenance"] = provenance_json(provenance(g, inputs_text({world_path, det_path})));
  Outputs o;
  o.add(fmt::format("carm_{}.json", calib::to_string(det.view)), dump(report));
  return o;
}

// ---- register ----

Json registration_report(const reg::RegistrationResult& r, const sim::Provenance& p) {
  Json j = io::to_json(r);
  const reg::Verdict v = reg::verify_registration(r);
  j["verdict"] = reg::accepted(v) ? "accept" : "reject";
  j["provenance"] = provenance_json(p);
  return j;
}

Outputs register_points_cmd(const Globals& g, const std::string& fixed, const std::string& moving) {
  no_overrides(g);
  const auto a = io::from_json<reg::FiducialSet>(read_json(fixed));
  const auto b = io::from_json<reg::FiducialSet>(read_json(moving));
  Outputs o;
  o.add("registration.json",
        dump(registration_report(reg::register_points(a, b), provenance(g, inputs_text({fixed, moving})))));
  return o;
}

reg::SurfaceModel read_surface(const std::string& path) {
  if (fs::path(path).extension() == ".stl") {
    std::istringstream in(io::read_file(path));
    return reg::read_stl_ascii(in, geom::Frame::PreOpImage);
  }
  return io::from_json<reg::SurfaceModel>(read_json(path));
}

Outputs register_icp_cmd(const Globals& g, const std::string& points, const std::string& surface,
                         const std::string& init_path) {
  no_overrides(g);
  const auto probed = io::from_json<reg::FiducialSet>(read_json(points)).positions();
  const auto model = read_surface(surface);
  const auto init = init_path.empty() ? geom::RigidTransform::identity()
                                      : io::from_json<geom::RigidTransform>(read_json(init_path));
  std::vector<std::string> hashed = {points, surface};
  if (!init_path.empty()) hashed.push_back(init_path);
  Outputs o;
  o.add("registration.json",
        dump(registration_report(reg::icp_register(probed, model, init), provenance(g, inputs_text(hashed)))));
  return o;
}

calib::SyntheticProjectionImage read_image(const std::string& pgm) {
  std::istringstream in(io::read_file(pgm));
  auto img = calib::read_pgm16(in);
  const fs::path sidecar = fs::path(pgm).replace_extension(".json");
  calib::apply_sidecar(img, io::read_file(sidecar));
  return img;
}

Outputs register_auto2d_cmd(const Globals& g, const std::vector<std::string>& in, const std::string& pose_path) {
  no_overrides(g);
  if (in.size() != 5) {
    throw Error(ErrorCode::InvalidArgument, "auto2d expects: jig.json ap_model.json ap.pgm lp_model.json lp.pgm");
  }
  const auto jig = io::from_json<reg::FiducialSet>(read_json(in[0]));
  const auto pose = pose_path.empty() ? geom::RigidTransform::identity()
                                      : io::from_json<geom::RigidTransform>(read_json(pose_path));
  std::vector<calib::LabeledPoint3> expected;
  for (const auto& f : jig.points) expected.push_back({f.label, pose.apply(f.position)});
  auto view = [&](const std::string& model_path, const std::string& pgm) {
    const auto model = io::from_json<calib::ProjectionModel>(read_json(model_path));
    const auto det = calib::detect_fiducials(read_image(pgm), calib::project_pattern(model, expected));
    return calib::ViewDetections{model, det};
  };
  const auto ap = view(in[1], in[2]);
  const auto lp = view(in[3], in[4]);
  std::vector<std::string> hashed = in;
  if (!pose_path.empty()) hashed.push_back(pose_path);
  Outputs o;
  o.add("registration.json",
        dump(registration_report(calib::register_patient_2d(jig, ap, lp), provenance(g, inputs_text(hashed)))));
  return o;
}

// ---- plan / grade ----

std::map<std::string, plan::PedicleModel> read_pedicles(const std::string& path) {
  std::map<std::string, plan::PedicleModel> out;
  for (const auto& p : io::vector_from_json<plan::PedicleModel>(list_in(read_json(path), "pedicles"))) {
    plan::validate(p);
    if (!out.emplace(p.level, p).second) throw Error(ErrorCode::InvalidArgument, "duplicate pedicle '" + p.level + "'");
  }
  return out;
}

const plan::PedicleModel& pedicle_for(const std::map<std::string, plan::PedicleModel>& peds, const std::string& level) {
  auto it = peds.find(level);
  if (it == peds.end()) throw Error(ErrorCode::LevelMismatch, "no pedicle for '" + level + "'");
  return it->second;
}

Outputs plan_validate_cmd(const Globals& g, const std::string& plans_path, const std::string& peds_path,
                          double margin) {
  no_overrides(g);
  const auto plans = io::vector_from_json<plan::ScrewPlan>(list_in(read_json(plans_path), "screws"));
  if (plans.empty()) throw Error(ErrorCode::InvalidArgument, "no screw plans");
  const auto peds = read_pedicles(peds_path);
  const auto prov = provenance(g, inputs_text({plans_path, peds_path}));
  std::string csv = sim::csv_header(prov) + "level,verdict,breach_mm,clearance_mm\n";
  for (const auto& p : plans) {
    plan::validate(p);
    const auto v = plan::validate_plan(p, pedicle_for(peds, p.level), margin);
    if (const auto* a = std::get_if<plan::PlanAccepted>(&v)) {
      csv += fmt::format("{},accept,{:.4f},{:.4f}\n", p.level, 0.0, a->clearance_mm);
    } else {
      const auto& r = std::get<plan::PlanRejected>(v);
      csv += fmt::format("{},reject,{:.4f},{:.4f}\n", p.level, r.breach_mm, r.clearance_mm);
    }
  }
  Outputs o;
  o.add("plan_validation.csv", csv);
  return o;
}

Outputs grade_cmd(const Globals& g, const std::string& screws_path, const std::string& peds_path) {
  no_overrides(g);
  const auto screws = io::vector_from_json<plan::ScrewPlan>(list_in(read_json(screws_path), "screws"));
  if (screws.empty()) throw Error(ErrorCode::InvalidArgument, "empty screw list");
  const auto peds = read_pedicles(peds_path);
  const auto prov = provenance(g, inputs_text({screws_path, peds_path}));
  std::string csv = sim::csv_header(prov) + "level,breach_mm,grade\n";
  std::array<std::size_t, 5> counts{};
  for (const auto& s : screws) {
    plan::validate(s);
    const auto grade = plan::grade_gertzbein(plan::breach_depth(s, pedicle_for(peds, s.level)));
    ++counts[static_cast<std::size_t>(grade.value)];
    csv += fmt::format("{},{:.4f},{}\n", s.level, grade.breach_mm, plan::to_char(grade.value));
  }
  std::string summary = sim::csv_header(prov) + "grade,count,percent\n";
  for (std::size_t k = 0; k < 5; ++k) {
    summary += fmt::format("{},{},{:.2f}\n", plan::kGradeLetters[k], counts[k],
                           100.0 * static_cast<double>(counts[k]) / static_cast<double>(screws.size()));
  }
  Outputs o;
  o.add("grades.csv", csv);
  o.add("grade_summary.csv", summary);
  return o;
}

// ---- simulate ----

Json parse_override_value(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error&) {
    return Json(text);
  }
}

void apply_override(Json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::InvalidArgument, "--set expects key=value");
  const std::string key = assignment.substr(0, eq);
  Json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(part)) throw Error(ErrorCode::InvalidArgument, "unknown key '" + key + "'");
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = parse_override_value(assignment.substr(eq + 1));
}

struct SimSettings {
  sim::StudyConfig study;
  std::size_t screws_per_arm = 10;
  std::size_t session_screws = 2;
  workflow::Mode session_mode = workflow::Mode::NavigationOnly;
  workflow::Modality session_modality = workflow::Modality::IntraOp2D_AutoFiducial;
  workflow::AcquisitionPolicy policy;
};

Json settings_json(const SimSettings& s) {
  Json j = {{"study", sim::to_json(s.study)},
            {"placement", {{"screws_per_arm", s.screws_per_arm}}},
            {"session",
             {{"screws", s.session_screws},
              {"mode", std::string(workflow::to_string(s.session_mode))},
              {"modality", std::string(workflow::to_string(s.session_modality))}}},
            {"policy",
             {{"registration_pairs_per_level", s.policy.registration_pairs_per_level},
              {"verification_pairs_per_screw", s.policy.verification_pairs_per_screw},
              {"navigation_images_per_screw", s.policy.navigation_images_per_screw}}}};
  return j;
}

SimSettings settings_from_json(const Json& j) {
  for (const auto& [k, v] : j.items()) {
    if (k != "study" && k != "placement" && k != "session" && k != "policy") {
      throw Error(ErrorCode::InvalidArgument, "unknown key '" + k + "'");
    }
  }
  SimSettings s;
  const Json defaults = settings_json(s);
  auto section = [&](const char* name) {
    Json merged = defaults[name];
    if (j.contains(name)) {
      if (!j[name].is_object()) throw Error(ErrorCode::InvalidArgument, std::string("'") + name + "' must be an object");
      for (const auto& [k, v] : j[name].items()) {
        if (!merged.contains(k)) throw Error(ErrorCode::InvalidArgument, "unknown key '" + std::string(name) + "." + k + "'");
        merged[k] = v;
      }
    }
    return merged;
  };
  if (j.contains("study")) s.study = sim::study_config_from_json(j["study"]);
  try {
    const Json placement = section("placement");
    const Json session = section("session");
    const Json policy = section("policy");
    s.screws_per_arm = placement["screws_per_arm"].get<std::size_t>();
    s.session_screws = session["screws"].get<std::size_t>();
    s.session_mode = workflow::parse_mode(session["mode"].get<std::string>());
    s.session_modality = workflow::parse_modality(session["modality"].get<std::string>());
    s.policy.registration_pairs_per_level = policy["registration_pairs_per_level"].get<int>();
    s.policy.verification_pairs_per_screw = policy["verification_pairs_per_screw"].get<int>();
    s.policy.navigation_images_per_screw = policy["navigation_images_per_screw"].get<int>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, e.what());
  }
  if (s.policy.registration_pairs_per_level < 0 || s.policy.verification_pairs_per_screw < 0 ||
      s.policy.navigation_images_per_screw < 0) {
    throw Error(ErrorCode::InvalidArgument, "policy counts must be >= 0");
  }
  return s;
}

SimSettings load_settings(const Globals& g) {
  Json j = settings_json(SimSettings{});
  if (!g.config_path.empty()) {
    const Json file = read_json(g.config_path);
    if (!file.is_object()) throw Error(ErrorCode::InvalidArgument, "config must be a JSON object");
    // Validate the file on its own first so unknown keys are reported against it.
    j = settings_json(settings_from_json(file));
  }
  for (const auto& o : g.overrides) apply_override(j, o);
  j["study"]["noise"]["seed"] = g.seed;
  return settings_from_json(j);
}

std::string settings_hash_text(const SimSettings& s) { return settings_json(s).dump(); }

int simulate_study(const Globals& g, Outputs& o) {
  const SimSettings s = load_settings(g);
  const auto prov = provenance(g, settings_hash_text(s));
  const auto phantom = sim::generate_phantom(s.study.phantom, sim::derive_seed(g.seed, {0x7068}));
  const auto study = sim::run_study(s.study, phantom, g.threads);
  const auto placement = sim::run_placement_study(s.study, phantom, s.screws_per_arm, s.policy, g.threads);
  o.add("table1.csv", sim::table1_csv(study, prov));
  o.add("table1.json", sim::table1_json(study, s.study, prov));
  o.add("table2.csv", sim::table2_csv(placement, prov));
  o.add("placement.json", sim::placement_json(placement, prov));
  std::size_t failed = study.failed();
  return failed * 10 > study.trials.size() ? kTooManyFailures : kOk;
}

int simulate_session(const Globals& g, Outputs& o) {
  const SimSettings s = load_settings(g);
  const auto prov = provenance(g, settings_hash_text(s));
  const auto phantom = sim::generate_phantom(s.study.phantom, sim::derive_seed(g.seed, {0x7068}));
  const auto screws = sim::screw_refs_for(phantom, s.session_screws);
  const auto result = sim::simulate_session(s.session_mode, s.session_modality, screws, s.policy);

  Json session = io::parse(workflow::session_json(result.final_state));
  session["provenance"] = provenance_json(prov);
  Json report = {{"provenance", provenance_json(prov)},
                 {"mode", std::string(workflow::to_string(s.session_mode))},
                 {"modality", std::string(workflow::to_string(s.session_modality))},
                 {"screws", screws.size()},
                 {"total_images", result.final_state.log.entries.size()},
                 {"radiation_mean_per_screw", result.radiation.mean_per_screw},
                 {"unattributed_images", result.radiation.unattributed}};
  o.add("session.json", dump(session));
  o.add("trace.jsonl", fmt::format("# tool_version={} seed={} config_hash={}\n", prov.tool_version, prov.seed,
                                   prov.config_hash) +
                           workflow::trace_jsonl(result.trace));
  o.add("radiation.csv", sim::csv_header(prov) + workflow::radiation_csv(result.radiation));
  o.add("session_report.json", dump(report));
  return kOk;
}

// ---- report ----

Outputs report_cmd(const Globals& g, const std::string& dir) {
  no_overrides(g);
  const Json t1 = read_json((fs::path(dir) / "table1.json").string());
  std::string text = "Registration accuracy (target RMSE, mm)\n\n";
  text += fmt::format("{:<24} {:>5} {:>9} {:>9} {:>11} {:>13}\n", "method", "n", "mean", "sd", "mean+1sd",
                      "mean+1.96sd");
  for (const auto& m : t1.at("methods")) {
    text += fmt::format("{:<24} {:>5} {:>9.4f} {:>9.4f} {:>11.4f} {:>13.4f}\n", m.at("method").get<std::string>(),
                        m.at("n").get<std::size_t>(), m.at("mean_mm").get<double>(), m.at("sd_mm").get<double>(),
                        m.at("ci_mu_plus_1sigma_mm").get<double>(), m.at("ci95_mu_plus_1p96sigma_mm").get<double>());
  }
  const auto& pooled = t1.at("navigation_pooled");
  text += fmt::format("\nnavigation pooled: {:.4f} +/- {:.4f} mm (n={})\n", pooled.at("mean_mm").get<double>(),
                      pooled.at("sd_mm").get<double>(), pooled.at("n").get<std::size_t>());
  text += fmt::format("failed trials: {} of {}\n", t1.at("failed_trials").get<std::size_t>(),
                      t1.at("total_trials").get<std::size_t>());
  const fs::path placement = fs::path(dir) / "placement.json";
  if (fs::exists(placement)) {
    const Json pl = read_json(placement.string());
    text += "\nPlacement grades (Gertzbein-Robbins, %)\n\n";
    text += fmt::format("{:<24} {:>7} {:>7} {:>7} {:>7} {:>7} {:>10}\n", "method", "A", "B", "C", "D", "E", "images/screw");
    for (const auto& a : pl.at("arms")) {
      double total = 0.0;
      for (const auto& [k, v] : a.at("grade_counts").items()) total += v.get<double>();
      text += fmt::format("{:<24}", a.at("method").get<std::string>());
      for (const char* k : {"A", "B", "C", "D", "E"}) {
        const double c = a.at("grade_counts").at(k).get<double>();
        text += fmt::format(" {:>7.2f}", total > 0 ? 100.0 * c / total : 0.0);
      }
      text += fmt::format(" {:>10.4f}\n", a.at("radiation_mean_per_screw").get<double>());
    }
  }
  const auto& prov = t1.at("provenance");
  text = fmt::format("# tool_version={}\n# seed={}\n# config_hash={}\n", prov.at("tool_version").get<std::string>(),
                     prov.at("seed").get<std::uint64_t>(), prov.at("config_hash").get<std::string>()) +
         text;
  Outputs o;
  o.add("report.txt", text);
  return o;
}

void emit_error(std::ostream& err, const std::string& code, const std::string& message) {
  err << Json{{"error", code}, {"message", message}}.dump() << "\n";
}

void write_outputs(const Globals& g, const Outputs& o) {
  std::error_code ec;
  fs::create_directories(g.out_dir, ec);
  if (ec) throw Error(ErrorCode::IOFailure, "cannot create '" + g.out_dir + "': " + ec.message());
  for (const auto& [name, content] : o.files) io::write_file_atomic(fs::path(g.out_dir) / name, content);
}

}  // namespace

int exit_code_for(const std::string& code) {
  static const std::vector<std::string> bad_input = {
      "InvalidArgument", "InvalidTransform", "IOFailure",    "ParseError",    "SchemaVersionMismatch",
      "LabelMismatch",   "LevelMismatch",    "DuplicateName", "UnknownModule", "TooFewPoints",
      "TooFewPoses",     "DegenerateSpec",   "NegativeBreach"};
  return std::find(bad_input.begin(), bad_input.end(), code) != bad_input.end() ? kBadInput : kNumericalFailure;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Image-guided spine surgery toolkit", "igss"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--out", g.out_dir, "output directory")->capture_default_str();
  app.add_option("--config", g.config_path, "simulation config JSON");
  app.add_option("--set", g.overrides, "override a config value, key=value (dotted keys)");
  app.add_option("--threads", g.threads, "worker threads for simulate")->check(CLI::Range(1u, 256u));

  std::vector<std::string> inputs;
  std::string init_path, pose_path;
  double margin = 0.5;

  auto* calibrate = app.add_subcommand("calibrate", "pivot or C-arm calibration");
  calibrate->require_subcommand(1);
  auto* cal_pivot = calibrate->add_subcommand("pivot", "tool tip from tracker poses");
  cal_pivot->add_option("poses", inputs, "poses JSON")->required()->expected(1);
  auto* cal_carm = calibrate->add_subcommand("carm", "DLT projection from a calibrator");
  cal_carm->add_option("inputs", inputs, "world.json detections.json")->required()->expected(2);

  auto* registration = app.add_subcommand("register", "patient registration");
  registration->require_subcommand(1);
  auto* reg_points = registration->add_subcommand("points", "paired-point registration");
  reg_points->add_option("inputs", inputs, "fixed.json moving.json")->required()->expected(2);
  auto* reg_icp = registration->add_subcommand("icp", "surface registration");
  reg_icp->add_option("inputs", inputs, "points.json surface.(stl|json)")->required()->expected(2);
  reg_icp->add_option("--init", init_path, "initial transform JSON");
  auto* reg_2d = registration->add_subcommand("auto2d", "automatic two-view fiducial registration");
  reg_2d->add_option("inputs", inputs, "jig.json ap_model.json ap.pgm lp_model.json lp.pgm")->required()->expected(5);
  reg_2d->add_option("--jig-pose", pose_path, "expected patient->CArm transform for labeling");

  auto* plan_cmd = app.add_subcommand("plan", "screw plans");
  plan_cmd->require_subcommand(1);
  auto* plan_val = plan_cmd->add_subcommand("validate", "check plans against pedicle corridors");
  plan_val->add_option("inputs", inputs, "plans.json pedicles.json")->required()->expected(2);
  plan_val->add_option("--margin", margin, "required clearance in mm")->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo studies");
  simulate->require_subcommand(1);
  auto* sim_study = simulate->add_subcommand("study", "accuracy and placement studies");
  auto* sim_session = simulate->add_subcommand("session", "workflow session with C-arm shot tally");

  auto* grade = app.add_subcommand("grade", "Gertzbein-Robbins grading");
  grade->add_option("inputs", inputs, "screws.json pedicles.json")->required()->expected(2);

  auto* report = app.add_subcommand("report", "text summary of a simulate study directory");
  report->add_option("dir", inputs, "results directory")->required()->expected(1);

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::Success&) {
    return kOk;
  } catch (const CLI::ParseError& e) {
    emit_error(err, "UsageError", e.what());
    return kBadInput;
  }

  try {
    Outputs o;
    int code = kOk;
    if (cal_pivot->parsed()) {
      o = calibrate_pivot(g, inputs[0]);
    } else if (cal_carm->parsed()) {
      o = calibrate_carm(g, inputs[0], inputs[1]);
    } else if (reg_points->parsed()) {
      o = register_points_cmd(g, inputs[0], inputs[1]);
    } else if (reg_icp->parsed()) {
      o = register_icp_cmd(g, inputs[0], inputs[1], init_path);
    } else if (reg_2d->parsed()) {
      o = register_auto2d_cmd(g, inputs, pose_path);
    } else if (plan_val->parsed()) {
      o = plan_validate_cmd(g, inputs[0], inputs[1], margin);
    } else if (sim_study->parsed()) {
      code = simulate_study(g, o);
    } else if (sim_session->parsed()) {
      code = simulate_session(g, o);
    } else if (grade->parsed()) {
      o = grade_cmd(g, inputs[0], inputs[1]);
    } else if (report->parsed()) {
      o = report_cmd(g, inputs[0]);
    }
    write_outputs(g, o);
    for (const auto& [name, content] : o.files) out << (fs::path(g.out_dir) / name).string() << "\n";
    if (code == kTooManyFailures) emit_error(err, "TooManyFailedTrials", "more than 10% of study trials failed");
    return code;
  } catch (const Error& e) {
    const std::string code(to_string(e.code()));
    emit_error(err, code, e.what());
    return exit_code_for(code);
  } catch (const Json::exception& e) {
    emit_error(err, "ParseError", e.what());
    return kBadInput;
  } catch (const std::exception& e) {
    emit_error(err, "Unexpected", e.what());
    return kUnexpected;
  }
}

}  // namespace igss::cli
