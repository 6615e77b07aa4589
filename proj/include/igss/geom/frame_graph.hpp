#pragma once

#include "igss/geom/transform.hpp"

#include <array>
#include <optional>
#include <string_view>
#include <vector>

namespace igss::geom {

enum class Frame {
  Tracker,
  DRB,
  Patient,
  PreOpImage,
  IntraOpImage,
  CArm,
  ToolBody,
  ToolTip,
  RobotBase,
  RobotFlange,
  Guard,  // tracked like any other body; carries no extra semantics
};

inline constexpr std::array kAllFrames = {
    Frame::Tracker,   Frame::DRB,       Frame::Patient,     Frame::PreOpImage,
    Frame::IntraOpImage, Frame::CArm,   Frame::ToolBody,    Frame::ToolTip,
    Frame::RobotBase, Frame::RobotFlange, Frame::Guard,
};

std::string_view to_string(Frame f);
/// Throws ParseError for unknown names.
Frame parse_frame(std::string_view name);

/// `transform` maps coordinates expressed in `from` into `to`.
struct FrameEdge {
  Frame from;
  Frame to;
  RigidTransform transform;
  double timestamp_s = 0.0;
};

/// Forest of frame relationships. Values are immutable: with_edge returns a new graph.
class FrameGraph {
 public:
  FrameGraph() = default;

  /// Validates the edge list; throws CycleDetected if it is not a forest.
  static FrameGraph from_edges(std::vector<FrameEdge> edges);

  /// Adds or replaces the edge between the two frames (in either stored direction).
  /// Throws CycleDetected if a new edge would close a loop.
  [[nodiscard]] FrameGraph with_edge(Frame from, Frame to, const RigidTransform& t,
                                     double timestamp_s = 0.0) const;

  const std::vector<FrameEdge>& edges() const { return edges_; }
  bool connected(Frame a, Frame b) const;

  /// Transform mapping coordinates in `from` into `to`. Throws NoPath.
  RigidTransform resolve(Frame from, Frame to) const;

 private:
  explicit FrameGraph(std::vector<FrameEdge> edges) : edges_(std::move(edges)) {}

  // Sequence of (edge index, traversed forward) from `from` to `to`.
  std::optional<std::vector<std::pair<std::size_t, bool>>> path(Frame from, Frame to) const;

  std::vector<FrameEdge> edges_;
};

RigidTransform resolve(const FrameGraph& graph, Frame from, Frame to);

}  // namespace igss::geom
