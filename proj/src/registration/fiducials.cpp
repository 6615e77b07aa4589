#include "igss/registration/fiducials.hpp"

#include "igss/error.hpp"

#include <set>

namespace igss::reg {

const Fiducial* FiducialSet::find(const std::string& label) const {
  for (const auto& f : points) {
    if (f.label == label) return &f;
  }
  return nullptr;
}

std::vector<std::string> FiducialSet::labels() const {
  std::vector<std::string> out;
  out.reserve(points.size());
  for (const auto& f : points) out.push_back(f.label);
  return out;
}

std::vector<Vec3> FiducialSet::positions() const {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& f : points) out.push_back(f.position);
  return out;
}

void validate(const FiducialSet& set) {
  if (set.points.empty()) throw Error(ErrorCode::InvalidArgument, "fiducial set is empty");
  std::set<std::string> seen;
  for (const auto& f : set.points) {
    if (!seen.insert(f.label).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate fiducial label '" + f.label + "'");
    }
    if (!f.position.allFinite()) {
      throw Error(ErrorCode::InvalidArgument, "non-finite position for '" + f.label + "'");
    }
  }
}

MatchedPairs match_by_label(const FiducialSet& a, const FiducialSet& b) {
  validate(a);
  validate(b);
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LabelMismatch, "sets have different sizes");
  }
  MatchedPairs out;
  for (const auto& f : a.points) {
    const Fiducial* other = b.find(f.label);
    if (other == nullptr) {
      throw Error(ErrorCode::LabelMismatch, "label '" + f.label + "' missing from second set");
    }
    out.labels.push_back(f.label);
    out.a.push_back(f.position);
    out.b.push_back(other->position);
  }
  return out;
}

FiducialSet transformed(const FiducialSet& set, const geom::RigidTransform& t,
                        geom::Frame new_frame) {
  FiducialSet out{new_frame, {}};
  out.points.reserve(set.points.size());
  for (const auto& f : set.points) out.points.push_back({f.label, t.apply(f.position)});
  return out;
}

}  // namespace igss::reg
