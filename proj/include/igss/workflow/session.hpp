#pragma once

#include "igss/registration/point_registration.hpp"
#include "igss/workflow/radiation.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace igss::workflow {

enum class Phase {
  PreOpImaging,
  PatientInput,
  Planning,
  OTPreparation,
  InstrumentCalibration,
  DRBAttachment,
  RobotCartPositioning,  // RobotAssisted only
  CArmMounting,
  IntraOpImaging,
  PatientRegistration,
  RegistrationVerification,
  Navigation,
  RobotPositioning,  // RobotAssisted only
  ScrewPlacement,
  VerificationImaging,
  Complete,
};

enum class Mode { NavigationOnly, RobotAssisted };
enum class Modality { PreOpCT_PointBased, IntraOp2D_AutoFiducial };

std::string_view to_string(Phase p);
std::string_view to_string(Mode m);
std::string_view to_string(Modality m);
Phase parse_phase(std::string_view s);
Mode parse_mode(std::string_view s);
Modality parse_modality(std::string_view s);

enum class EventKind {
  PreOpImagesAcquired,
  PatientDataEntered,
  PlanSubmitted,       // carries plan_validated
  PatientPrepared,
  InstrumentsCalibrated,
  DrbAttached,
  CartPositioned,
  CArmMounted,
  IntraOpImagesAcquired,
  RegistrationComputed,  // carries fre_rms
  VerifyRegistration,
  BeginNavigation,
  PlanModified,          // carries plan_validated
  BeginRobotPositioning,  // carries collision_checked
  BeginScrewPlacement,
  ScrewPlaced,
  NextScrew,
  Reregister,
  Finish,
};

inline constexpr int kEventKindCount = static_cast<int>(EventKind::Finish) + 1;

std::string_view to_string(EventKind k);
EventKind parse_event_kind(std::string_view s);

struct Event {
  EventKind kind = EventKind::PreOpImagesAcquired;
  double fre_rms = 0.0;
  bool plan_validated = false;
  bool collision_checked = false;

  bool operator==(const Event&) const = default;
};

struct ScrewRecord {
  ScrewRef ref;
  bool placed = false;
  bool operator==(const ScrewRecord&) const = default;
};

struct SessionState {
  Phase phase = Phase::PreOpImaging;
  Mode mode = Mode::NavigationOnly;
  Modality modality = Modality::IntraOp2D_AutoFiducial;
  double accept_threshold_mm = reg::kDefaultAcceptThresholdMm;

  std::vector<ScrewRecord> screws;
  std::size_t current_screw = 0;

  bool plan_validated = false;
  std::optional<double> registration_fre;
  bool registration_accepted = false;
  int registration_rejections = 0;
  std::string last_guard_failure;

  AcquisitionLog log;

  static SessionState start(Mode mode, Modality modality, std::vector<ScrewRef> screws);
  std::vector<ScrewRef> screw_refs() const;
  bool operator==(const SessionState&) const = default;
};

/// Applies one event. Throws IllegalTransition for events not allowed in the
/// current phase and GuardFailed when a guarded phase is not yet permitted.
/// A rejected registration is a legal transition back to PatientRegistration.
SessionState advance(const SessionState& session, const Event& event);

/// Phases that may follow `from` for some event, given the mode.
std::vector<Phase> successors(Phase from, Mode mode);

/// Log entries produced by the policy for the whole session.
std::vector<AcquisitionEntry> policy_acquisitions(const AcquisitionPolicy& policy, Modality modality,
                                                  const std::vector<ScrewRef>& screws);

/// One record of an event trace: either a state-machine event or a C-arm shot.
struct TraceRecord {
  std::optional<Event> event;
  std::optional<AcquisitionEntry> acquisition;
  bool operator==(const TraceRecord&) const = default;
};

SessionState replay(SessionState initial, const std::vector<TraceRecord>& trace);

/// Event/shot sequence that drives a session from PreOpImaging to Complete under `policy`.
std::vector<TraceRecord> happy_path_trace(const SessionState& initial, const AcquisitionPolicy& policy,
                                          double fre_rms = 0.5);

}  // namespace igss::workflow
