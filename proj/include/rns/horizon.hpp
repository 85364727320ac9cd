// Copyright 2026 The Risk Navigation Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "rns/geometry.hpp"
#include "rns/rldm.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rns::horizon
{

using geometry::LocalPoint;
using geometry::Polyline;
using rldm::LdmGraph;
using rldm::NodeId;

/// The ego lane is not part of its navigation route.
class RouteDeviation : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

enum class BranchLabel { Straight, Left, Right };

inline std::string_view to_string(BranchLabel b)
{
  switch (b) {
    case BranchLabel::Straight: return "straight";
    case BranchLabel::Left: return "left";
    case BranchLabel::Right: return "right";
  }
  return "?";
}

struct HorizonConfig
{
  double delta_l_h{50.0};
  std::size_t max_paths{8};
  double straight_threshold{geometry::deg2rad(30.0)};
};

/// A lane-node sequence and its concatenated centerline, starting at the
/// vehicle's projected position.
struct Path
{
  std::vector<NodeId> node_ids;
  /// Path arc length at which each node begins; the first entry is minus the
  /// root offset on that node.
  std::vector<double> node_starts;
  Polyline polyline;
  std::vector<BranchLabel> branch_labels;  // one per junction node on the path
  double length{0.0};

  [[nodiscard]] double node_end(std::size_t i, const LdmGraph & g) const
  {
    return node_starts[i] + g.at(node_ids[i]).centerline()->length();
  }
};

struct PathTree
{
  std::string vehicle_id;
  std::optional<rldm::LaneMatch> root;
  std::vector<Path> paths;
};

/// Straight / left / right from the signed heading change across a junction
/// connector.
inline BranchLabel classify_branch(const Polyline & connector, double straight_threshold)
{
  const double turn =
    geometry::normalize_angle(connector.end_heading() - connector.start_heading());
  if (std::abs(turn) < straight_threshold) return BranchLabel::Straight;
  return turn > 0.0 ? BranchLabel::Left : BranchLabel::Right;
}

namespace detail
{

struct Partial
{
  std::vector<NodeId> nodes;
  std::vector<double> starts;
  std::vector<BranchLabel> labels;
  double reach{0.0};  // path length covered so far
};

/// Concatenates node centerlines from `root_s` on the first node, truncated at
/// `max_length`.
inline Path assemble(const LdmGraph & g, const Partial & p, double root_s, double max_length)
{
  std::vector<LocalPoint> pts;
  for (std::size_t i = 0; i < p.nodes.size(); ++i) {
    const Polyline & cl = *g.at(p.nodes[i]).centerline();
    const double from = i == 0 ? root_s : 0.0;
    const double to = std::min(cl.length(), max_length - p.starts[i]);
    if (to - from < geometry::kMinSpacing) {
      if (i == 0) continue;
      break;
    }
    const Polyline piece = (from <= 0.0 && to >= cl.length()) ? cl : cl.slice(from, to);
    if (piece.empty()) continue;
    geometry::append_points(pts, piece.points());
  }
  Path path;
  path.node_ids = p.nodes;
  path.node_starts = p.starts;
  path.branch_labels = p.labels;
  if (pts.size() >= 2) {
    path.polyline = Polyline(std::move(pts));
    path.length = path.polyline.length();
  }
  return path;
}

inline int label_rank(BranchLabel b)
{
  switch (b) {
    case BranchLabel::Straight: return 0;
    case BranchLabel::Right: return 1;
    case BranchLabel::Left: return 2;
  }
  return 3;
}

}  // namespace detail

/// Depth-first enumeration of successor branches from a matched root until
/// each branch covers delta_l_h or dead-ends.
inline PathTree path_tree_from(
  const LdmGraph & g, std::string vehicle_id, const rldm::LaneMatch & root,
  const HorizonConfig & cfg = {})
{
  PathTree tree{std::move(vehicle_id), root, {}};
  std::vector<detail::Partial> finished;

  auto label_of = [&](const NodeId & id) -> std::optional<BranchLabel> {
    const auto & n = g.at(id);
    if (n.kind != rldm::NodeKind::LaneJunction) return std::nullopt;
    return classify_branch(*n.centerline(), cfg.straight_threshold);
  };

  detail::Partial start;
  start.nodes.push_back(root.lane);
  start.starts.push_back(-root.s_along);
  if (auto l = label_of(root.lane)) start.labels.push_back(*l);
  start.reach = g.at(root.lane).centerline()->length() - root.s_along;

  std::vector<detail::Partial> stack{std::move(start)};
  while (!stack.empty()) {
    detail::Partial cur = std::move(stack.back());
    stack.pop_back();
    if (cur.reach >= cfg.delta_l_h) {
      finished.push_back(std::move(cur));
      continue;
    }
    struct Child
    {
      NodeId id;
      std::optional<BranchLabel> label;
    };
    std::vector<Child> children;
    for (const auto & s : g.successors(cur.nodes.back())) {
      if (std::find(cur.nodes.begin(), cur.nodes.end(), s) != cur.nodes.end()) continue;
      children.push_back({s, label_of(s)});
    }
    if (children.empty()) {
      finished.push_back(std::move(cur));
      continue;
    }
    // Straight, left, right; plain continuations before junctions.
    auto order = [](const std::optional<BranchLabel> & l) {
      if (!l) return -1;
      switch (*l) {
        case BranchLabel::Straight: return 0;
        case BranchLabel::Left: return 1;
        case BranchLabel::Right: return 2;
      }
      return 3;
    };
    std::sort(children.begin(), children.end(), [&](const Child & a, const Child & b) {
      return order(a.label) < order(b.label) || (order(a.label) == order(b.label) && a.id < b.id);
    });
    // Push in reverse so the first child is expanded first.
    for (auto it = children.rbegin(); it != children.rend(); ++it) {
      detail::Partial next = cur;
      next.nodes.push_back(it->id);
      next.starts.push_back(cur.reach);
      if (it->label) next.labels.push_back(*it->label);
      next.reach = cur.reach + g.at(it->id).centerline()->length();
      stack.push_back(std::move(next));
    }
  }

  // Prune lowest priority first: straight > right > left, then shorter.
  while (finished.size() > cfg.max_paths) {
    auto worse = [](const detail::Partial & a, const detail::Partial & b) {
      std::vector<int> ka, kb;
      for (auto l : a.labels) ka.push_back(detail::label_rank(l));
      for (auto l : b.labels) kb.push_back(detail::label_rank(l));
      if (ka != kb) return ka > kb;
      return a.reach < b.reach;
    };
    auto victim = finished.begin();
    for (auto it = finished.begin(); it != finished.end(); ++it) {
      if (worse(*it, *victim)) victim = it;
    }
    finished.erase(victim);
  }

  for (const auto & p : finished) {
    Path path = detail::assemble(g, p, root.s_along, cfg.delta_l_h);
    if (path.length >= geometry::kMinSpacing) tree.paths.push_back(std::move(path));
  }
  return tree;
}

/// Path tree for a dynamic object; empty when it cannot be matched.
inline PathTree path_tree(
  const LdmGraph & g, const rldm::DynamicObject & vehicle, const HorizonConfig & cfg = {})
{
  std::optional<rldm::LaneMatch> m;
  const auto layer = g.dynamic();
  if (auto it = layer->located_on.find(vehicle.id); it != layer->located_on.end()) {
    m = it->second;
  } else {
    m = g.match_to_lane(vehicle.position, vehicle.heading);
  }
  if (!m) return PathTree{vehicle.id, std::nullopt, {}};
  return path_tree_from(g, vehicle.id, *m, cfg);
}

/// Path along `route` starting `s_on_node` into route node `index`.
inline Path route_path(
  const LdmGraph & g, const std::vector<NodeId> & route, std::size_t index, double s_on_node,
  const HorizonConfig & cfg = {})
{
  if (index >= route.size()) throw RouteDeviation("route index out of range");
  for (std::size_t i = 0; i < route.size(); ++i) {
    const auto * n = g.find(route[i]);
    if (!n || !rldm::is_lane(n->kind)) throw RouteDeviation("route node '" + route[i] + "' is not a lane");
    if (i > 0) {
      const auto succ = g.successors(route[i - 1]);
      if (std::find(succ.begin(), succ.end(), route[i]) == succ.end()) {
        throw RouteDeviation("route nodes '" + route[i - 1] + "' -> '" + route[i] + "' are not linked");
      }
    }
  }
  detail::Partial p;
  double reach = -s_on_node;
  for (std::size_t i = index; i < route.size(); ++i) {
    const auto & n = g.at(route[i]);
    p.nodes.push_back(n.id);
    p.starts.push_back(reach);
    if (n.kind == rldm::NodeKind::LaneJunction) {
      p.labels.push_back(classify_branch(*n.centerline(), cfg.straight_threshold));
    }
    reach += n.centerline()->length();
    if (reach >= cfg.delta_l_h) break;
  }
  p.reach = reach;
  return detail::assemble(g, p, s_on_node, cfg.delta_l_h);
}

/// A route lane this much farther away than the best lane overall still
/// counts as a match. Overlapping junction connectors only separate gradually.
inline constexpr double kRouteMatchTolerance = 1.0;

/// Route position of `ego`: the nearest route lane, unless some other lane is
/// nearer by more than kRouteMatchTolerance.
struct RouteMatch
{
  std::size_t index{0};
  rldm::LaneMatch match;
};

inline RouteMatch match_on_route(
  const LdmGraph & g, const rldm::DynamicObject & ego, const std::vector<NodeId> & route)
{
  const auto global = g.match_to_lane(ego.position, ego.heading);
  if (!global) throw RouteDeviation("ego '" + ego.id + "' cannot be matched to any lane");
  auto index_of = [&](const NodeId & id) -> std::optional<std::size_t> {
    auto it = std::find(route.begin(), route.end(), id);
    if (it == route.end()) return std::nullopt;
    return static_cast<std::size_t>(std::distance(route.begin(), it));
  };
  if (auto i = index_of(global->lane)) return {*i, *global};
  const auto on_route = g.match_to_lane(
    ego.position, ego.heading, {}, [&](const rldm::LdmNode & n) { return index_of(n.id).has_value(); });
  const auto dist = [&](const rldm::LaneMatch & m) {
    return geometry::distance(*g.at(m.lane).centerline(), ego.position);
  };
  if (on_route && dist(*on_route) <= dist(*global) + kRouteMatchTolerance) {
    return {*index_of(on_route->lane), *on_route};
  }
  throw RouteDeviation("ego lane '" + global->lane + "' is not on the route");
}

/// The single path along the navigation route from the ego position.
inline Path ego_route_path(
  const LdmGraph & g, const rldm::DynamicObject & ego, const std::vector<NodeId> & route,
  const HorizonConfig & cfg = {})
{
  const RouteMatch rm = match_on_route(g, ego, route);
  return route_path(g, route, rm.index, rm.match.s_along, cfg);
}

struct ConflictZone
{
  LocalPoint point;
  std::size_t ego_path_index{0};
  std::string other_vehicle_id;
  std::size_t other_path_index{0};
  double s_ego{0.0};
  double s_other{0.0};
};

/// Crossings of the ego path with every path of every other vehicle, sorted
/// by s_ego.
inline std::vector<ConflictZone> conflict_zones(
  const Path & ego_path, const std::vector<PathTree> & others, std::string_view ego_id = {})
{
  std::vector<ConflictZone> zones;
  if (ego_path.polyline.size() < 2) return zones;
  for (const auto & tree : others) {
    if (!ego_id.empty() && tree.vehicle_id == ego_id) continue;
    for (std::size_t j = 0; j < tree.paths.size(); ++j) {
      if (tree.paths[j].polyline.size() < 2) continue;
      for (const auto & c : geometry::intersect(ego_path.polyline, tree.paths[j].polyline)) {
        if (c.s_a > ego_path.length) continue;
        zones.push_back({c.point, 0, tree.vehicle_id, j, c.s_a, c.s_b});
      }
    }
  }
  std::stable_sort(zones.begin(), zones.end(), [](const ConflictZone & a, const ConflictZone & b) {
    if (a.s_ego != b.s_ego) return a.s_ego < b.s_ego;
    if (a.other_vehicle_id != b.other_vehicle_id) return a.other_vehicle_id < b.other_vehicle_id;
    return a.other_path_index < b.other_path_index;
  });
  return zones;
}

}  // namespace rns::horizon
