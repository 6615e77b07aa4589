#include "igss/io/json.hpp"

#include "igss/error.hpp"

namespace igss::io {

namespace {

const Json& field(const Json& j, const char* key) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, std::string("expected an object with '") + key + "'");
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorCode::ParseError, std::string("missing field '") + key + "'");
  return *it;
}

double number(const Json& j, const char* what) {
  if (!j.is_number()) throw Error(ErrorCode::ParseError, std::string("'") + what + "' must be a number");
  return j.get<double>();
}

double number_field(const Json& j, const char* key) { return number(field(j, key), key); }

std::string string_field(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_string()) throw Error(ErrorCode::ParseError, std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

bool bool_field(const Json& j, const char* key, bool fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_boolean()) throw Error(ErrorCode::ParseError, std::string("'") + key + "' must be a boolean");
  return it->get<bool>();
}

std::vector<double> numbers(const Json& j, std::size_t n, const char* what) {
  if (!j.is_array() || j.size() != n) {
    throw Error(ErrorCode::ParseError, std::string("'") + what + "' must be an array of " + std::to_string(n));
  }
  std::vector<double> out;
  for (const auto& e : j) out.push_back(number(e, what));
  return out;
}

const Json& array_field(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_array()) throw Error(ErrorCode::ParseError, std::string("'") + key + "' must be an array");
  return v;
}

Json capsule_json(const kin::Capsule& c) {
  return {{"p0", to_json(c.p0)}, {"p1", to_json(c.p1)}, {"radius", c.radius}};
}

template <typename F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

}  // namespace

Json parse(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

Json to_json(const geom::Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Json to_json(const geom::RigidTransform& t) {
  Json r = Json::array();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) r.push_back(t.rotation()(i, k));
  return {{"r", r}, {"t", to_json(t.translation())}};
}

Json to_json(const reg::FiducialSet& set) {
  Json pts = Json::array();
  for (const auto& f : set.points) pts.push_back({{"label", f.label}, {"xyz_mm", to_json(f.position)}});
  return {{"frame", std::string(geom::to_string(set.frame))}, {"points", pts}};
}

Json to_json(const reg::SurfaceModel& surface) {
  Json v = Json::array();
  for (const auto& p : surface.vertices) v.push_back(to_json(p));
  Json t = Json::array();
  for (const auto& tri : surface.triangles) t.push_back({tri[0], tri[1], tri[2]});
  return {{"frame", std::string(geom::to_string(surface.frame))}, {"vertices", v}, {"triangles", t}};
}

Json to_json(const reg::RegistrationResult& result) {
  Json j = {{"transform", to_json(result.transform)},
            {"fre_rms_mm", result.fre_rms},
            {"per_point_residuals_mm", result.per_point_residuals},
            {"n_points", result.n_points}};
  if (!result.residual_history.empty()) {
    j["iterations"] = result.iterations;
    j["converged"] = result.converged;
    j["ambiguous"] = result.ambiguous;
    j["residual_history_mm"] = result.residual_history;
  }
  return j;
}

Json to_json(const calib::ProjectionModel& model) {
  Json p = Json::array();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 4; ++k) p.push_back(model.matrix(i, k));
  return {{"view", std::string(calib::to_string(model.view))}, {"P", p}};
}

Json to_json(const calib::PivotResult& result) {
  return {{"tip_offset_mm", to_json(result.tip_offset)},
          {"pivot_point_mm", to_json(result.pivot_point)},
          {"residual_rms_mm", result.residual_rms}};
}

Json to_json(const kin::RobotModel& model) {
  Json dh = Json::array(), limits = Json::array(), caps = Json::array();
  for (const auto& r : model.dh) {
    dh.push_back({{"a", r.a}, {"alpha", r.alpha}, {"d", r.d}, {"theta_offset", r.theta_offset}});
  }
  for (const auto& l : model.limits) limits.push_back({l.min, l.max});
  for (const auto& link : model.link_capsules) {
    Json cl = Json::array();
    for (const auto& c : link) cl.push_back(capsule_json(c));
    caps.push_back(cl);
  }
  return {{"dh", dh}, {"limits_rad", limits}, {"link_capsules", caps}, {"tool", to_json(model.tool)}};
}

Json to_json(const plan::ScrewPlan& p) {
  return {{"level", p.level},
          {"entry_mm", to_json(p.entry)},
          {"direction", to_json(p.direction)},
          {"diameter_mm", p.diameter},
          {"length_mm", p.length}};
}

Json to_json(const plan::PedicleModel& p) {
  Json knots = Json::array();
  for (const auto& k : p.radius_profile) knots.push_back({{"s", k.s}, {"radius_mm", k.radius}});
  return {{"level", p.level}, {"p0_mm", to_json(p.p0)}, {"p1_mm", to_json(p.p1)}, {"radius_profile", knots}};
}

Json to_json(const workflow::Event& e) {
  Json j = {{"kind", std::string(workflow::to_string(e.kind))}};
  switch (e.kind) {
    case workflow::EventKind::RegistrationComputed: j["fre_rms_mm"] = e.fre_rms; break;
    case workflow::EventKind::PlanSubmitted:
    case workflow::EventKind::PlanModified: j["plan_validated"] = e.plan_validated; break;
    case workflow::EventKind::BeginRobotPositioning: j["collision_checked"] = e.collision_checked; break;
    default: break;
  }
  return j;
}

Json to_json(const workflow::AcquisitionEntry& a) {
  return {{"subject", a.subject},
          {"purpose", std::string(workflow::to_string(a.purpose))},
          {"view", std::string(calib::to_string(a.view))},
          {"timestamp_s", a.timestamp_s}};
}

Json to_json(const workflow::TraceRecord& r) {
  Json j = Json::object();
  if (r.event) j["event"] = to_json(*r.event);
  if (r.acquisition) j["acquisition"] = to_json(*r.acquisition);
  return j;
}

Json to_json(const workflow::SessionState& s) {
  Json screws = Json::array();
  for (const auto& r : s.screws) screws.push_back({{"id", r.ref.id}, {"level", r.ref.level}, {"placed", r.placed}});
  Json log = Json::array();
  for (const auto& e : s.log.entries) log.push_back(to_json(e));
  return {{"phase", std::string(workflow::to_string(s.phase))},
          {"mode", std::string(workflow::to_string(s.mode))},
          {"modality", std::string(workflow::to_string(s.modality))},
          {"accept_threshold_mm", s.accept_threshold_mm},
          {"screws", screws},
          {"current_screw", s.current_screw},
          {"plan_validated", s.plan_validated},
          {"registration_fre_mm", s.registration_fre ? Json(*s.registration_fre) : Json(nullptr)},
          {"registration_accepted", s.registration_accepted},
          {"registration_rejections", s.registration_rejections},
          {"last_guard_failure", s.last_guard_failure},
          {"log", log}};
}

template <>
geom::Vec3 from_json(const Json& j) {
  const auto v = numbers(j, 3, "vector");
  return {v[0], v[1], v[2]};
}

template <>
geom::RigidTransform from_json(const Json& j) {
  const auto r = numbers(field(j, "r"), 9, "r");
  geom::Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) m(i, k) = r[static_cast<std::size_t>(3 * i + k)];
  return geom::RigidTransform::from(m, from_json<geom::Vec3>(field(j, "t")));
}

template <>
reg::FiducialSet from_json(const Json& j) {
  return guarded([&] {
    reg::FiducialSet set;
    set.frame = geom::parse_frame(string_field(j, "frame"));
    for (const auto& p : array_field(j, "points")) {
      set.points.push_back({string_field(p, "label"), from_json<geom::Vec3>(field(p, "xyz_mm"))});
    }
    return set;
  });
}

template <>
reg::SurfaceModel from_json(const Json& j) {
  return guarded([&] {
    reg::SurfaceModel s;
    s.frame = j.contains("frame") ? geom::parse_frame(string_field(j, "frame")) : geom::Frame::PreOpImage;
    for (const auto& v : array_field(j, "vertices")) s.vertices.push_back(from_json<geom::Vec3>(v));
    for (const auto& t : array_field(j, "triangles")) {
      const auto idx = numbers(t, 3, "triangle");
      s.triangles.push_back({static_cast<int>(idx[0]), static_cast<int>(idx[1]), static_cast<int>(idx[2])});
    }
    return s;
  });
}

template <>
calib::ProjectionModel from_json(const Json& j) {
  calib::ProjectionModel m;
  m.view = calib::parse_view(string_field(j, "view"));
  const auto p = numbers(field(j, "P"), 12, "P");
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 4; ++k) m.matrix(i, k) = p[static_cast<std::size_t>(4 * i + k)];
  return m;
}

template <>
kin::RobotModel from_json(const Json& j) {
  kin::RobotModel m;
  const Json& dh = array_field(j, "dh");
  const Json& limits = array_field(j, "limits_rad");
  if (dh.size() != kin::kDof || limits.size() != kin::kDof) {
    throw Error(ErrorCode::ParseError, "robot model needs 6 DH rows and 6 limits");
  }
  for (std::size_t i = 0; i < kin::kDof; ++i) {
    m.dh[i] = {number_field(dh[i], "a"), number_field(dh[i], "alpha"), number_field(dh[i], "d"),
               number_field(dh[i], "theta_offset")};
    const auto l = numbers(limits[i], 2, "limit");
    m.limits[i] = {l[0], l[1]};
  }
  if (j.contains("link_capsules")) {
    const Json& caps = array_field(j, "link_capsules");
    if (caps.size() != kin::kDof + 1) throw Error(ErrorCode::ParseError, "link_capsules needs 7 entries");
    for (std::size_t i = 0; i < caps.size(); ++i) {
      if (!caps[i].is_array()) throw Error(ErrorCode::ParseError, "link_capsules entries must be arrays");
      for (const auto& c : caps[i]) {
        m.link_capsules[i].push_back(
            {from_json<geom::Vec3>(field(c, "p0")), from_json<geom::Vec3>(field(c, "p1")), number_field(c, "radius")});
      }
    }
  }
  if (j.contains("tool")) m.tool = from_json<geom::RigidTransform>(j["tool"]);
  kin::validate(m);
  return m;
}

template <>
plan::ScrewPlan from_json(const Json& j) {
  plan::ScrewPlan p;
  p.level = string_field(j, "level");
  p.entry = from_json<geom::Vec3>(field(j, "entry_mm"));
  p.direction = from_json<geom::Vec3>(field(j, "direction"));
  if (j.contains("diameter_mm")) p.diameter = number_field(j, "diameter_mm");
  if (j.contains("length_mm")) p.length = number_field(j, "length_mm");
  return p;
}

template <>
plan::PedicleModel from_json(const Json& j) {
  plan::PedicleModel p;
  p.level = string_field(j, "level");
  p.p0 = from_json<geom::Vec3>(field(j, "p0_mm"));
  p.p1 = from_json<geom::Vec3>(field(j, "p1_mm"));
  for (const auto& k : array_field(j, "radius_profile")) {
    p.radius_profile.push_back({number_field(k, "s"), number_field(k, "radius_mm")});
  }
  return p;
}

template <>
workflow::Event from_json(const Json& j) {
  workflow::Event e;
  e.kind = workflow::parse_event_kind(string_field(j, "kind"));
  if (j.contains("fre_rms_mm")) e.fre_rms = number_field(j, "fre_rms_mm");
  e.plan_validated = bool_field(j, "plan_validated", false);
  e.collision_checked = bool_field(j, "collision_checked", false);
  return e;
}

template <>
workflow::AcquisitionEntry from_json(const Json& j) {
  return {string_field(j, "subject"), workflow::parse_purpose(string_field(j, "purpose")),
          calib::parse_view(string_field(j, "view")), number_field(j, "timestamp_s")};
}

template <>
workflow::TraceRecord from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "trace record must be an object");
  workflow::TraceRecord r;
  if (j.contains("event")) r.event = from_json<workflow::Event>(j["event"]);
  if (j.contains("acquisition")) r.acquisition = from_json<workflow::AcquisitionEntry>(j["acquisition"]);
  if (!r.event && !r.acquisition) throw Error(ErrorCode::ParseError, "empty trace record");
  return r;
}

template <>
workflow::SessionState from_json(const Json& j) {
  return guarded([&] {
    workflow::SessionState s;
    s.phase = workflow::parse_phase(string_field(j, "phase"));
    s.mode = workflow::parse_mode(string_field(j, "mode"));
    s.modality = workflow::parse_modality(string_field(j, "modality"));
    s.accept_threshold_mm = number_field(j, "accept_threshold_mm");
    for (const auto& r : array_field(j, "screws")) {
      s.screws.push_back({{string_field(r, "id"), string_field(r, "level")}, bool_field(r, "placed", false)});
    }
    const Json& cur = field(j, "current_screw");
    if (!cur.is_number_unsigned()) throw Error(ErrorCode::ParseError, "'current_screw' must be a count");
    s.current_screw = cur.get<std::size_t>();
    s.plan_validated = bool_field(j, "plan_validated", false);
    const Json& fre = field(j, "registration_fre_mm");
    if (!fre.is_null()) s.registration_fre = number(fre, "registration_fre_mm");
    s.registration_accepted = bool_field(j, "registration_accepted", false);
    const Json& rej = field(j, "registration_rejections");
    if (!rej.is_number_integer()) throw Error(ErrorCode::ParseError, "'registration_rejections' must be an integer");
    s.registration_rejections = rej.get<int>();
    s.last_guard_failure = string_field(j, "last_guard_failure");
    for (const auto& e : array_field(j, "log")) s.log.entries.push_back(from_json<workflow::AcquisitionEntry>(e));
    return s;
  });
}

}  // namespace igss::io
