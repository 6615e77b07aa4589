#pragma once

#include "igss/calibration/pivot.hpp"
#include "igss/calibration/projection.hpp"
#include "igss/error.hpp"
#include "igss/geom/transform.hpp"
#include "igss/kinematics/robot_model.hpp"
#include "igss/planning/screw.hpp"
#include "igss/registration/fiducials.hpp"
#include "igss/registration/point_registration.hpp"
#include "igss/registration/surface.hpp"
#include "igss/workflow/session.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace igss::io {

using Json = nlohmann::json;

Json to_json(const geom::Vec3& v);
Json to_json(const geom::RigidTransform& t);
Json to_json(const reg::FiducialSet& set);
Json to_json(const reg::SurfaceModel& surface);
Json to_json(const reg::RegistrationResult& result);
Json to_json(const calib::ProjectionModel& model);
Json to_json(const calib::PivotResult& result);
Json to_json(const kin::RobotModel& model);
Json to_json(const plan::ScrewPlan& plan);
Json to_json(const plan::PedicleModel& pedicle);
Json to_json(const workflow::Event& event);
Json to_json(const workflow::AcquisitionEntry& entry);
Json to_json(const workflow::TraceRecord& record);
Json to_json(const workflow::SessionState& state);

/// Decoders throw ParseError on missing fields, wrong types or bad enum names.
template <typename T>
T from_json(const Json& j);

template <> geom::Vec3 from_json(const Json& j);
template <> geom::RigidTransform from_json(const Json& j);
template <> reg::FiducialSet from_json(const Json& j);
template <> reg::SurfaceModel from_json(const Json& j);
template <> calib::ProjectionModel from_json(const Json& j);
template <> kin::RobotModel from_json(const Json& j);
template <> plan::ScrewPlan from_json(const Json& j);
template <> plan::PedicleModel from_json(const Json& j);
template <> workflow::Event from_json(const Json& j);
template <> workflow::AcquisitionEntry from_json(const Json& j);
template <> workflow::TraceRecord from_json(const Json& j);
template <> workflow::SessionState from_json(const Json& j);

/// Parses text; throws ParseError with the parser message.
Json parse(const std::string& text);

template <typename T>
std::vector<T> vector_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, "expected a JSON array");
  std::vector<T> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(from_json<T>(e));
  return out;
}

}  // namespace igss::io
