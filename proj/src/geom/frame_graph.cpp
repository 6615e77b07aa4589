#include "igss/geom/frame_graph.hpp"

#include "igss/error.hpp"

#include <algorithm>
#include <string>

namespace igss::geom {

namespace {

constexpr std::size_t kFrameCount = kAllFrames.size();

std::size_t index_of(Frame f) { return static_cast<std::size_t>(f); }

// Union-find over frame indices.
struct Components {
  std::array<std::size_t, kFrameCount> parent{};
  Components() {
    for (std::size_t i = 0; i < kFrameCount; ++i) parent[i] = i;
  }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

bool same_pair(const FrameEdge& e, Frame a, Frame b) {
  return (e.from == a && e.to == b) || (e.from == b && e.to == a);
}

}  // namespace

std::string_view to_string(Frame f) {
  switch (f) {
    case Frame::Tracker: return "Tracker";
    case Frame::DRB: return "DRB";
    case Frame::Patient: return "Patient";
    case Frame::PreOpImage: return "PreOpImage";
    case Frame::IntraOpImage: return "IntraOpImage";
    case Frame::CArm: return "CArm";
    case Frame::ToolBody: return "ToolBody";
    case Frame::ToolTip: return "ToolTip";
    case Frame::RobotBase: return "RobotBase";
    case Frame::RobotFlange: return "RobotFlange";
    case Frame::Guard: return "Guard";
  }
  return "?";
}

Frame parse_frame(std::string_view name) {
  for (Frame f : kAllFrames) {
    if (to_string(f) == name) return f;
  }
  throw Error(ErrorCode::ParseError, "unknown frame '" + std::string(name) + "'");
}

FrameGraph FrameGraph::from_edges(std::vector<FrameEdge> edges) {
  Components comps;
  for (const auto& e : edges) {
    if (e.from == e.to || !comps.unite(index_of(e.from), index_of(e.to))) {
      throw Error(ErrorCode::CycleDetected,
                  std::string("edge ") + std::string(to_string(e.from)) + "->" +
                      std::string(to_string(e.to)) + " closes a loop");
    }
  }
  return FrameGraph(std::move(edges));
}

FrameGraph FrameGraph::with_edge(Frame from, Frame to, const RigidTransform& t,
                                 double timestamp_s) const {
  std::vector<FrameEdge> next;
  next.reserve(edges_.size() + 1);
  for (const auto& e : edges_) {
    if (!same_pair(e, from, to)) next.push_back(e);
  }
  next.push_back(FrameEdge{from, to, t, timestamp_s});
  return from_edges(std::move(next));
}

std::optional<std::vector<std::pair<std::size_t, bool>>> FrameGraph::path(Frame from,
                                                                          Frame to) const {
  // Depth-first search; on a forest the path is unique.
  std::array<bool, kFrameCount> visited{};
  std::array<std::optional<std::pair<std::size_t, bool>>, kFrameCount> via{};
  std::vector<Frame> stack{from};
  visited[index_of(from)] = true;
  while (!stack.empty()) {
    const Frame cur = stack.back();
    stack.pop_back();
    if (cur == to) break;
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      const auto& e = edges_[i];
      std::optional<Frame> next;
      bool forward = true;
      if (e.from == cur) {
        next = e.to;
      } else if (e.to == cur) {
        next = e.from;
        forward = false;
      }
      if (!next) continue;
      if (visited[index_of(*next)]) {
        // Reaching a visited frame through an edge other than the one we came by means a loop.
        if (!via[index_of(cur)] || via[index_of(cur)]->first != i) {
          throw Error(ErrorCode::CycleDetected, "frame graph is not a forest");
        }
        continue;
      }
      visited[index_of(*next)] = true;
      via[index_of(*next)] = std::make_pair(i, forward);
      stack.push_back(*next);
    }
  }
  if (!visited[index_of(to)]) return std::nullopt;

  std::vector<std::pair<std::size_t, bool>> steps;
  Frame cur = to;
  while (cur != from) {
    const auto [edge, forward] = *via[index_of(cur)];
    steps.emplace_back(edge, forward);
    cur = forward ? edges_[edge].from : edges_[edge].to;
  }
  std::reverse(steps.begin(), steps.end());
  return steps;
}

bool FrameGraph::connected(Frame a, Frame b) const { return path(a, b).has_value(); }

RigidTransform FrameGraph::resolve(Frame from, Frame to) const {
  const auto steps = path(from, to);
  if (!steps) {
    throw Error(ErrorCode::NoPath, std::string(to_string(from)) + " and " +
                                       std::string(to_string(to)) + " are disconnected");
  }
  RigidTransform acc;
  for (const auto& [edge, forward] : *steps) {
    const auto& t = edges_[edge].transform;
    acc = compose(forward ? t : invert(t), acc);
  }
  return acc;
}

RigidTransform resolve(const FrameGraph& graph, Frame from, Frame to) {
  return graph.resolve(from, to);
}

}  // namespace igss::geom
