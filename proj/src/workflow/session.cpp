#include "igss/workflow/session.hpp"

#include "igss/error.hpp"

#include <algorithm>
#include <set>

namespace igss::workflow {

namespace {

constexpr std::array<std::string_view, 16> kPhaseNames = {
    "PreOpImaging",   "PatientInput",      "Planning",
    "OTPreparation",  "InstrumentCalibration", "DRBAttachment",
    "RobotCartPositioning", "CArmMounting", "IntraOpImaging",
    "PatientRegistration", "RegistrationVerification", "Navigation",
    "RobotPositioning", "ScrewPlacement", "VerificationImaging",
    "Complete",
};

constexpr std::array<std::string_view, kEventKindCount> kEventNames = {
    "PreOpImagesAcquired", "PatientDataEntered", "PlanSubmitted", "PatientPrepared",
    "InstrumentsCalibrated", "DrbAttached", "CartPositioned", "CArmMounted",
    "IntraOpImagesAcquired", "RegistrationComputed", "VerifyRegistration", "BeginNavigation",
    "PlanModified", "BeginRobotPositioning", "BeginScrewPlacement", "ScrewPlaced",
    "NextScrew", "Reregister", "Finish",
};

template <typename Enum, std::size_t N>
Enum parse_named(const std::array<std::string_view, N>& names, std::string_view s, const char* what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<Enum>(i);
  }
  throw Error(ErrorCode::ParseError, std::string("unknown ") + what + " '" + std::string(s) + "'");
}

[[noreturn]] void illegal(const SessionState& s, const Event& e) {
  throw Error(ErrorCode::IllegalTransition, std::string(to_string(e.kind)) + " in phase " +
                                                std::string(to_string(s.phase)));
}

[[noreturn]] void guard_failed(const std::string& reason) {
  throw Error(ErrorCode::GuardFailed, reason);
}

bool all_placed(const SessionState& s) {
  return std::all_of(s.screws.begin(), s.screws.end(), [](const ScrewRecord& r) { return r.placed; });
}

}  // namespace

std::string_view to_string(Phase p) { return kPhaseNames[static_cast<std::size_t>(p)]; }
std::string_view to_string(EventKind k) { return kEventNames[static_cast<std::size_t>(k)]; }

std::string_view to_string(Mode m) {
  return m == Mode::NavigationOnly ? "NavigationOnly" : "RobotAssisted";
}

std::string_view to_string(Modality m) {
  return m == Modality::PreOpCT_PointBased ? "PreOpCT_PointBased" : "IntraOp2D_AutoFiducial";
}

Phase parse_phase(std::string_view s) { return parse_named<Phase>(kPhaseNames, s, "phase"); }
EventKind parse_event_kind(std::string_view s) { return parse_named<EventKind>(kEventNames, s, "event"); }

Mode parse_mode(std::string_view s) {
  if (s == "NavigationOnly") return Mode::NavigationOnly;
  if (s == "RobotAssisted") return Mode::RobotAssisted;
  throw Error(ErrorCode::ParseError, "unknown mode '" + std::string(s) + "'");
}

Modality parse_modality(std::string_view s) {
  if (s == "PreOpCT_PointBased") return Modality::PreOpCT_PointBased;
  if (s == "IntraOp2D_AutoFiducial") return Modality::IntraOp2D_AutoFiducial;
  throw Error(ErrorCode::ParseError, "unknown modality '" + std::string(s) + "'");
}

SessionState SessionState::start(Mode mode, Modality modality, std::vector<ScrewRef> screws) {
  std::set<std::string> ids;
  SessionState s;
  s.mode = mode;
  s.modality = modality;
  for (auto& r : screws) {
    if (!ids.insert(r.id).second) throw Error(ErrorCode::InvalidArgument, "duplicate screw id '" + r.id + "'");
    s.screws.push_back({std::move(r), false});
  }
  return s;
}

std::vector<ScrewRef> SessionState::screw_refs() const {
  std::vector<ScrewRef> out;
  for (const auto& r : screws) out.push_back(r.ref);
  return out;
}

SessionState advance(const SessionState& session, const Event& event) {
  SessionState s = session;
  s.last_guard_failure.clear();
  const bool robot = s.mode == Mode::RobotAssisted;
  auto expect = [&](Phase p) {
    if (s.phase != p) illegal(session, event);
  };

  switch (event.kind) {
    case EventKind::PreOpImagesAcquired:
      expect(Phase::PreOpImaging);
      s.phase = Phase::PatientInput;
      break;
    case EventKind::PatientDataEntered:
      expect(Phase::PatientInput);
      s.phase = Phase::Planning;
      break;
    case EventKind::PlanSubmitted:
      expect(Phase::Planning);
      s.plan_validated = event.plan_validated;
      s.phase = Phase::OTPreparation;
      break;
    case EventKind::PatientPrepared:
      expect(Phase::OTPreparation);
      s.phase = Phase::InstrumentCalibration;
      break;
    case EventKind::InstrumentsCalibrated:
      expect(Phase::InstrumentCalibration);
      s.phase = Phase::DRBAttachment;
      break;
    case EventKind::DrbAttached:
      expect(Phase::DRBAttachment);
      s.phase = robot ? Phase::RobotCartPositioning : Phase::CArmMounting;
      break;
    case EventKind::CartPositioned:
      expect(Phase::RobotCartPositioning);
      s.phase = Phase::CArmMounting;
      break;
    case EventKind::CArmMounted:
      expect(Phase::CArmMounting);
      s.phase = Phase::IntraOpImaging;
      break;
    case EventKind::IntraOpImagesAcquired:
      expect(Phase::IntraOpImaging);
      s.phase = Phase::PatientRegistration;
      break;
    case EventKind::RegistrationComputed:
      expect(Phase::PatientRegistration);
      if (!(event.fre_rms >= 0.0)) throw Error(ErrorCode::InvalidArgument, "fre_rms must be >= 0");
      s.registration_fre = event.fre_rms;
      s.registration_accepted = false;
      s.phase = Phase::RegistrationVerification;
      break;
    case EventKind::VerifyRegistration: {
      expect(Phase::RegistrationVerification);
      reg::RegistrationResult r;
      r.fre_rms = s.registration_fre.value_or(0.0);
      const reg::Verdict v = reg::verify_registration(r, s.accept_threshold_mm);
      if (reg::accepted(v)) {
        s.registration_accepted = true;
      } else {
        // Re-register loop.
        s.registration_accepted = false;
        s.registration_fre.reset();
        ++s.registration_rejections;
        s.last_guard_failure = std::get<reg::Reject>(v).reason;
        s.phase = Phase::PatientRegistration;
      }
      break;
    }
    case EventKind::BeginNavigation:
      expect(Phase::RegistrationVerification);
      if (!s.registration_accepted) guard_failed("registration has not been accepted");
      s.phase = Phase::Navigation;
      break;
    case EventKind::PlanModified:
      expect(Phase::Navigation);
      s.plan_validated = event.plan_validated;
      break;
    case EventKind::Reregister:
      expect(Phase::Navigation);
      s.registration_accepted = false;
      s.registration_fre.reset();
      s.phase = Phase::PatientRegistration;
      break;
    case EventKind::BeginRobotPositioning:
      expect(Phase::Navigation);
      if (!robot) illegal(session, event);
      if (!event.collision_checked) guard_failed("trajectory was not collision checked");
      s.phase = Phase::RobotPositioning;
      break;
    case EventKind::BeginScrewPlacement:
      if (robot ? s.phase != Phase::RobotPositioning : s.phase != Phase::Navigation) illegal(session, event);
      if (!s.plan_validated) guard_failed("screw plan is not validated");
      s.phase = Phase::ScrewPlacement;
      break;
    case EventKind::ScrewPlaced:
      expect(Phase::ScrewPlacement);
      if (s.current_screw < s.screws.size()) s.screws[s.current_screw].placed = true;
      s.phase = Phase::VerificationImaging;
      break;
    case EventKind::NextScrew: {
      expect(Phase::VerificationImaging);
      const auto next = std::find_if(s.screws.begin(), s.screws.end(),
                                     [](const ScrewRecord& r) { return !r.placed; });
      if (next == s.screws.end()) guard_failed("no screws left to place");
      if (!s.registration_accepted) guard_failed("registration has not been accepted");
      s.current_screw = static_cast<std::size_t>(next - s.screws.begin());
      s.phase = Phase::Navigation;
      break;
    }
    case EventKind::Finish:
      expect(Phase::VerificationImaging);
      if (!all_placed(s)) guard_failed("unplaced screws remain");
      s.phase = Phase::Complete;
      break;
  }
  return s;
}

std::vector<Phase> successors(Phase from, Mode mode) {
  const bool robot = mode == Mode::RobotAssisted;
  switch (from) {
    case Phase::PreOpImaging: return {Phase::PatientInput};
    case Phase::PatientInput: return {Phase::Planning};
    case Phase::Planning: return {Phase::OTPreparation};
    case Phase::OTPreparation: return {Phase::InstrumentCalibration};
    case Phase::InstrumentCalibration: return {Phase::DRBAttachment};
    case Phase::DRBAttachment: return {robot ? Phase::RobotCartPositioning : Phase::CArmMounting};
    case Phase::RobotCartPositioning: return {Phase::CArmMounting};
    case Phase::CArmMounting: return {Phase::IntraOpImaging};
    case Phase::IntraOpImaging: return {Phase::PatientRegistration};
    case Phase::PatientRegistration: return {Phase::RegistrationVerification};
    case Phase::RegistrationVerification: return {Phase::RegistrationVerification, Phase::PatientRegistration, Phase::Navigation};
    case Phase::Navigation:
      return robot ? std::vector{Phase::Navigation, Phase::PatientRegistration, Phase::RobotPositioning}
                   : std::vector{Phase::Navigation, Phase::PatientRegistration, Phase::ScrewPlacement};
    case Phase::RobotPositioning: return {Phase::ScrewPlacement};
    case Phase::ScrewPlacement: return {Phase::VerificationImaging};
    case Phase::VerificationImaging: return {Phase::Navigation, Phase::Complete};
    case Phase::Complete: return {};
  }
  return {};
}

std::vector<AcquisitionEntry> policy_acquisitions(const AcquisitionPolicy& policy, Modality modality,
                                                  const std::vector<ScrewRef>& screws) {
  std::vector<AcquisitionEntry> out;
  double t = 0.0;
  auto pair = [&](const std::string& subject, Purpose purpose) {
    out.push_back({subject, purpose, calib::View::AP, t += 1.0});
    out.push_back({subject, purpose, calib::View::LP, t += 1.0});
  };
  if (modality == Modality::IntraOp2D_AutoFiducial) {
    std::vector<std::string> levels;
    for (const auto& s : screws) {
      if (std::find(levels.begin(), levels.end(), s.level) == levels.end()) levels.push_back(s.level);
    }
    for (const auto& level : levels) {
      for (int k = 0; k < policy.registration_pairs_per_level; ++k) pair(level, Purpose::Registration);
    }
  }
  for (const auto& s : screws) {
    for (int k = 0; k < policy.navigation_images_per_screw; ++k) {
      out.push_back({s.id, Purpose::Navigation, calib::View::AP, t += 1.0});
    }
    for (int k = 0; k < policy.verification_pairs_per_screw; ++k) pair(s.id, Purpose::Verification);
  }
  return out;
}

SessionState replay(SessionState s, const std::vector<TraceRecord>& trace) {
  for (const auto& rec : trace) {
    if (rec.event) s = advance(s, *rec.event);
    if (rec.acquisition) s.log = record_acquisition(s.log, *rec.acquisition);
  }
  return s;
}

std::vector<TraceRecord> happy_path_trace(const SessionState& initial, const AcquisitionPolicy& policy,
                                          double fre_rms) {
  const auto screws = initial.screw_refs();
  const auto shots = policy_acquisitions(policy, initial.modality, screws);
  std::vector<TraceRecord> trace;
  auto ev = [&](EventKind k) { trace.push_back({Event{k, fre_rms, true, true}, std::nullopt}); };
  auto shots_for = [&](Purpose purpose, const std::string& subject) {
    for (const auto& a : shots) {
      if (a.purpose == purpose && a.subject == subject) trace.push_back({std::nullopt, a});
    }
  };
  const bool robot = initial.mode == Mode::RobotAssisted;

  ev(EventKind::PreOpImagesAcquired);
  ev(EventKind::PatientDataEntered);
  ev(EventKind::PlanSubmitted);
  ev(EventKind::PatientPrepared);
  ev(EventKind::InstrumentsCalibrated);
  ev(EventKind::DrbAttached);
  if (robot) ev(EventKind::CartPositioned);
  ev(EventKind::CArmMounted);
  for (const auto& a : shots) {
    if (a.purpose == Purpose::Registration) trace.push_back({std::nullopt, a});
  }
  ev(EventKind::IntraOpImagesAcquired);
  ev(EventKind::RegistrationComputed);
  ev(EventKind::VerifyRegistration);
  ev(EventKind::BeginNavigation);
  for (std::size_t i = 0; i < screws.size(); ++i) {
    if (i > 0) ev(EventKind::NextScrew);
    shots_for(Purpose::Navigation, screws[i].id);
    if (robot) ev(EventKind::BeginRobotPositioning);
    ev(EventKind::BeginScrewPlacement);
    ev(EventKind::ScrewPlaced);
    shots_for(Purpose::Verification, screws[i].id);
  }
  if (screws.empty()) {
    if (robot) ev(EventKind::BeginRobotPositioning);
    ev(EventKind::BeginScrewPlacement);
    ev(EventKind::ScrewPlaced);
  }
  ev(EventKind::Finish);
  return trace;
}

}  // namespace igss::workflow
