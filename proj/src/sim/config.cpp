#include "igss/error.hpp"
#include "igss/sim/study.hpp"

#include <set>

namespace igss::sim {

namespace {

using Json = nlohmann::json;

void reject_unknown(const Json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, where + " must be an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw Error(ErrorCode::InvalidArgument, "unknown key '" + where + k + "'");
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::InvalidArgument, "bad value for '" + where + key + "'");
  }
}

}  // namespace

Json to_json(const StudyConfig& c) {
  Json methods = Json::array();
  for (const auto& m : c.methods) {
    methods.push_back({{"name", m.name},
                       {"modality", std::string(workflow::to_string(m.modality))},
                       {"robot_assisted", m.robot_assisted}});
  }
  return {
      {"methods", methods},
      {"factors",
       {{"user_groups", c.factors.user_groups},
        {"tool_angles_deg", c.factors.tool_angles_deg},
        {"tracker_distances_mm", c.factors.tracker_distances_mm},
        {"detector_distances_mm", c.factors.detector_distances_mm}}},
      {"samples_per_method", c.samples_per_method},
      {"noise",
       {{"tracker_sigma0", c.noise.tracker_sigma0},
        {"depth_anisotropy", c.noise.depth_anisotropy},
        {"distance_ref", c.noise.distance_ref},
        {"distance_growth", c.noise.distance_growth},
        {"detector_sigma", c.noise.detector_sigma},
        {"kinematic_sigma", c.noise.kinematic_sigma},
        {"seed", c.noise.seed}}},
      {"tool_angle_gain", c.tool_angle_gain},
      {"source_to_detector_mm", c.source_to_detector_mm},
      {"phantom",
       {{"levels", c.phantom.levels}, {"fiducial_count", c.phantom.fiducial_count}, {"extent_mm", c.phantom.extent_mm}}},
  };
}

StudyConfig study_config_from_json(const Json& j) {
  StudyConfig c;
  reject_unknown(j, {"methods", "factors", "samples_per_method", "noise", "tool_angle_gain", "source_to_detector_mm", "phantom"}, "");
  if (j.contains("methods")) {
    if (!j["methods"].is_array()) throw Error(ErrorCode::InvalidArgument, "'methods' must be an array");
    c.methods.clear();
    for (const auto& m : j["methods"]) {
      reject_unknown(m, {"name", "modality", "robot_assisted"}, "methods.");
      MethodSpec spec;
      std::string modality = std::string(workflow::to_string(spec.modality));
      read(m, "name", spec.name, "methods.");
      read(m, "modality", modality, "methods.");
      read(m, "robot_assisted", spec.robot_assisted, "methods.");
      try {
        spec.modality = workflow::parse_modality(modality);
      } catch (const Error& e) {
        throw Error(ErrorCode::InvalidArgument, e.what());
      }
      c.methods.push_back(spec);
    }
  }
  if (j.contains("factors")) {
    const Json& f = j["factors"];
    reject_unknown(f, {"user_groups", "tool_angles_deg", "tracker_distances_mm", "detector_distances_mm"}, "factors.");
    read(f, "user_groups", c.factors.user_groups, "factors.");
    read(f, "tool_angles_deg", c.factors.tool_angles_deg, "factors.");
    read(f, "tracker_distances_mm", c.factors.tracker_distances_mm, "factors.");
    read(f, "detector_distances_mm", c.factors.detector_distances_mm, "factors.");
  }
  read(j, "samples_per_method", c.samples_per_method, "");
  if (j.contains("noise")) {
    const Json& n = j["noise"];
    reject_unknown(n, {"tracker_sigma0", "depth_anisotropy", "distance_ref", "distance_growth", "detector_sigma",
                       "kinematic_sigma", "seed"}, "noise.");
    read(n, "tracker_sigma0", c.noise.tracker_sigma0, "noise.");
    read(n, "depth_anisotropy", c.noise.depth_anisotropy, "noise.");
    read(n, "distance_ref", c.noise.distance_ref, "noise.");
    read(n, "distance_growth", c.noise.distance_growth, "noise.");
    read(n, "detector_sigma", c.noise.detector_sigma, "noise.");
    read(n, "kinematic_sigma", c.noise.kinematic_sigma, "noise.");
    read(n, "seed", c.noise.seed, "noise.");
  }
  read(j, "tool_angle_gain", c.tool_angle_gain, "");
  read(j, "source_to_detector_mm", c.source_to_detector_mm, "");
  if (j.contains("phantom")) {
    const Json& p = j["phantom"];
    reject_unknown(p, {"levels", "fiducial_count", "extent_mm"}, "phantom.");
    read(p, "levels", c.phantom.levels, "phantom.");
    read(p, "fiducial_count", c.phantom.fiducial_count, "phantom.");
    read(p, "extent_mm", c.phantom.extent_mm, "phantom.");
  }
  validate(c);
  return c;
}

}  // namespace igss::sim
