#pragma once

#include "igss/geom/frame_graph.hpp"

#include <string>
#include <vector>

namespace igss::reg {

using geom::Vec3;

struct Fiducial {
  std::string label;
  Vec3 position;  // mm
};

/// Labeled points in one frame. Labels are unique and positions finite.
struct FiducialSet {
  geom::Frame frame = geom::Frame::Patient;
  std::vector<Fiducial> points;

  std::size_t size() const { return points.size(); }
  const Fiducial* find(const std::string& label) const;
  std::vector<std::string> labels() const;
  std::vector<Vec3> positions() const;
};

/// Throws InvalidArgument if empty, labels repeat, or a coordinate is non-finite.
void validate(const FiducialSet& set);

/// Positions of `a` and `b` paired by label, in `a`'s order.
/// Throws LabelMismatch unless both sets carry exactly the same labels.
struct MatchedPairs {
  std::vector<std::string> labels;
  std::vector<Vec3> a;
  std::vector<Vec3> b;
};
MatchedPairs match_by_label(const FiducialSet& a, const FiducialSet& b);

FiducialSet transformed(const FiducialSet& set, const geom::RigidTransform& t,
                        geom::Frame new_frame);

}  // namespace igss::reg
