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

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace rns::rldm
{

using geometry::LocalPoint;
using geometry::Polyline;

/// Error raised when a graph would violate its structural invariants.
class GraphError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

enum class NodeKind {
  Road,
  HalfRoad,
  LaneSegment,
  LaneJunction,
  Intersection,
  TrafficLight,
  StopLine,
  Crosswalk,
  Building,
  TrafficLightState,
  Vehicle,
  Pedestrian,
};

enum class Layer { Static, QuasiStatic, Transient, Dynamic };

enum class RelationKind { Successor, PartOf, RegulatedBy, HasState, LocatedOn };

constexpr Layer layer_of(NodeKind k)
{
  switch (k) {
    case NodeKind::Road:
    case NodeKind::HalfRoad:
    case NodeKind::LaneSegment:
    case NodeKind::LaneJunction:
    case NodeKind::Intersection:
      return Layer::Static;
    case NodeKind::TrafficLight:
    case NodeKind::StopLine:
    case NodeKind::Crosswalk:
    case NodeKind::Building:
      return Layer::QuasiStatic;
    case NodeKind::TrafficLightState:
      return Layer::Transient;
    case NodeKind::Vehicle:
    case NodeKind::Pedestrian:
      return Layer::Dynamic;
  }
  return Layer::Static;
}

constexpr bool is_lane(NodeKind k)
{
  return k == NodeKind::LaneSegment || k == NodeKind::LaneJunction;
}

constexpr bool is_regulator(NodeKind k)
{
  return k == NodeKind::StopLine || k == NodeKind::TrafficLight || k == NodeKind::Crosswalk;
}

inline std::string_view to_string(NodeKind k)
{
  switch (k) {
    case NodeKind::Road: return "Road";
    case NodeKind::HalfRoad: return "HalfRoad";
    case NodeKind::LaneSegment: return "LaneSegment";
    case NodeKind::LaneJunction: return "LaneJunction";
    case NodeKind::Intersection: return "Intersection";
    case NodeKind::TrafficLight: return "TrafficLight";
    case NodeKind::StopLine: return "StopLine";
    case NodeKind::Crosswalk: return "Crosswalk";
    case NodeKind::Building: return "Building";
    case NodeKind::TrafficLightState: return "TrafficLightState";
    case NodeKind::Vehicle: return "Vehicle";
    case NodeKind::Pedestrian: return "Pedestrian";
  }
  return "?";
}

inline std::string_view to_string(RelationKind k)
{
  switch (k) {
    case RelationKind::Successor: return "Successor";
    case RelationKind::PartOf: return "PartOf";
    case RelationKind::RegulatedBy: return "RegulatedBy";
    case RelationKind::HasState: return "HasState";
    case RelationKind::LocatedOn: return "LocatedOn";
  }
  return "?";
}

using NodeId = std::string;
using AttributeValue = std::variant<double, std::string>;
using Attributes = std::map<std::string, AttributeValue, std::less<>>;
using NodeGeometry = std::variant<std::monostate, LocalPoint, Polyline>;

struct LdmNode
{
  NodeId id;
  NodeKind kind{NodeKind::LaneSegment};
  NodeGeometry geometry;
  Attributes attributes;

  [[nodiscard]] const Polyline * centerline() const { return std::get_if<Polyline>(&geometry); }
  [[nodiscard]] const LocalPoint * point() const { return std::get_if<LocalPoint>(&geometry); }

  [[nodiscard]] std::optional<double> number(std::string_view key) const
  {
    auto it = attributes.find(key);
    if (it == attributes.end()) return std::nullopt;
    if (const double * d = std::get_if<double>(&it->second)) return *d;
    return std::nullopt;
  }
  [[nodiscard]] std::optional<std::string> text(std::string_view key) const
  {
    auto it = attributes.find(key);
    if (it == attributes.end()) return std::nullopt;
    if (const auto * s = std::get_if<std::string>(&it->second)) return *s;
    return std::nullopt;
  }
};

struct Relation
{
  NodeId src;
  RelationKind kind{RelationKind::Successor};
  NodeId dst;

  friend bool operator==(const Relation &, const Relation &) = default;
};

enum class ObjectClass { Ego, Car, Bicycle, Pedestrian };

inline std::string_view to_string(ObjectClass c)
{
  switch (c) {
    case ObjectClass::Ego: return "ego";
    case ObjectClass::Car: return "car";
    case ObjectClass::Bicycle: return "bicycle";
    case ObjectClass::Pedestrian: return "pedestrian";
  }
  return "?";
}

inline std::optional<ObjectClass> object_class_from(std::string_view s)
{
  if (s == "ego") return ObjectClass::Ego;
  if (s == "car") return ObjectClass::Car;
  if (s == "bicycle") return ObjectClass::Bicycle;
  if (s == "pedestrian") return ObjectClass::Pedestrian;
  return std::nullopt;
}

struct DynamicObject
{
  std::string id;
  ObjectClass object_class{ObjectClass::Car};
  LocalPoint position;
  double heading{0.0};  // east = 0, CCW, (-pi, pi]
  double speed{0.0};
  double timestamp{0.0};
};

struct LaneMatch
{
  NodeId lane;
  double s_along{0.0};
  double lateral{0.0};

  friend bool operator==(const LaneMatch &, const LaneMatch &) = default;
};

/// Dynamic layer contents for one tick. Replaced as a whole.
struct DynamicLayer
{
  std::vector<DynamicObject> objects;
  std::map<std::string, LaneMatch> located_on;  // object id -> lane
};

struct MatchGates
{
  double max_lateral{5.0};
  double max_heading_diff{std::numbers::pi / 2.0};
};

/// Immutable static, quasi-static and transient-structure core of the map.
class StaticMap
{
public:
  static constexpr double kCellSize = 25.0;

  StaticMap(std::vector<LdmNode> nodes, std::vector<Relation> relations)
  : nodes_(std::move(nodes)), relations_(std::move(relations))
  {
    index_.reserve(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto & n = nodes_[i];
      if (n.id.empty()) throw GraphError("node with empty id");
      if (layer_of(n.kind) == Layer::Dynamic) {
        throw GraphError("dynamic node '" + n.id + "' cannot be part of the static map");
      }
      if (is_lane(n.kind) && !n.centerline()) {
        throw GraphError("lane node '" + n.id + "' needs a centerline");
      }
      if (!index_.emplace(n.id, i).second) throw GraphError("duplicate node id '" + n.id + "'");
    }
    out_.resize(nodes_.size());
    in_.resize(nodes_.size());
    for (std::size_t r = 0; r < relations_.size(); ++r) {
      const auto & rel = relations_[r];
      const auto s = index_.find(rel.src);
      const auto d = index_.find(rel.dst);
      if (s == index_.end() || d == index_.end()) {
        throw GraphError(
          "dangling " + std::string(to_string(rel.kind)) + " relation " + rel.src + " -> " +
          rel.dst);
      }
      check_relation(nodes_[s->second].kind, rel.kind, nodes_[d->second].kind, rel);
      out_[s->second].push_back({rel.kind, d->second});
      in_[d->second].push_back({rel.kind, s->second});
    }
    build_grid();
  }

  [[nodiscard]] const std::vector<LdmNode> & nodes() const { return nodes_; }
  [[nodiscard]] const std::vector<Relation> & relations() const { return relations_; }

  [[nodiscard]] const LdmNode * find(std::string_view id) const
  {
    auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &nodes_[it->second];
  }
  [[nodiscard]] const LdmNode & at(std::string_view id) const
  {
    const LdmNode * n = find(id);
    if (!n) throw GraphError("unknown node id '" + std::string(id) + "'");
    return *n;
  }

  [[nodiscard]] std::vector<NodeId> targets(std::string_view id, RelationKind kind) const
  {
    return collect(out_, id, kind);
  }
  [[nodiscard]] std::vector<NodeId> sources(std::string_view id, RelationKind kind) const
  {
    return collect(in_, id, kind);
  }
  [[nodiscard]] std::vector<NodeId> successors(std::string_view id) const
  {
    return targets(id, RelationKind::Successor);
  }
  [[nodiscard]] std::vector<NodeId> predecessors(std::string_view id) const
  {
    return sources(id, RelationKind::Successor);
  }
  [[nodiscard]] std::vector<NodeId> regulators(std::string_view id) const
  {
    return targets(id, RelationKind::RegulatedBy);
  }

  /// Node indices whose bounding box touches the square around `c`.
  [[nodiscard]] std::vector<std::size_t> candidates(const LocalPoint & c, double radius) const
  {
    std::vector<std::size_t> out;
    const auto [cx0, cy0] = cell_of(c.x - radius, c.y - radius);
    const auto [cx1, cy1] = cell_of(c.x + radius, c.y + radius);
    for (long cx = cx0; cx <= cx1; ++cx) {
      for (long cy = cy0; cy <= cy1; ++cy) {
        auto it = grid_.find(key(cx, cy));
        if (it == grid_.end()) continue;
        out.insert(out.end(), it->second.begin(), it->second.end());
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  [[nodiscard]] std::size_t lane_count() const
  {
    return static_cast<std::size_t>(std::count_if(
      nodes_.begin(), nodes_.end(), [](const LdmNode & n) { return is_lane(n.kind); }));
  }

private:
  struct Edge
  {
    RelationKind kind;
    std::size_t node;
  };

  static void check_relation(NodeKind s, RelationKind r, NodeKind d, const Relation & rel)
  {
    bool ok = false;
    switch (r) {
      case RelationKind::Successor:
        ok = is_lane(s) && is_lane(d);
        break;
      case RelationKind::PartOf:
        ok = (s == NodeKind::LaneSegment && d == NodeKind::HalfRoad) ||
             (s == NodeKind::HalfRoad && d == NodeKind::Road) ||
             (s == NodeKind::LaneJunction && d == NodeKind::Intersection);
        break;
      case RelationKind::RegulatedBy:
        ok = is_lane(s) && is_regulator(d);
        break;
      case RelationKind::HasState:
        ok = s == NodeKind::TrafficLight && d == NodeKind::TrafficLightState;
        break;
      case RelationKind::LocatedOn:
        ok = false;  // only produced by the dynamic layer
        break;
    }
    if (!ok) {
      throw GraphError(
        "layer violation: " + std::string(to_string(r)) + " from " + std::string(to_string(s)) +
        " '" + rel.src + "' to " + std::string(to_string(d)) + " '" + rel.dst + "'");
    }
  }

  std::vector<NodeId> collect(
    const std::vector<std::vector<Edge>> & adj, std::string_view id, RelationKind kind) const
  {
    std::vector<NodeId> out;
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return out;
    for (const auto & e : adj[it->second]) {
      if (e.kind == kind) out.push_back(nodes_[e.node].id);
    }
    return out;
  }

  static std::pair<long, long> cell_of(double x, double y)
  {
    return {static_cast<long>(std::floor(x / kCellSize)), static_cast<long>(std::floor(y / kCellSize))};
  }
  static long long key(long cx, long cy)
  {
    return (static_cast<long long>(cx) << 32) ^ static_cast<long long>(static_cast<unsigned>(cy));
  }

  void build_grid()
  {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto & n = nodes_[i];
      double x0, y0, x1, y1;
      if (const auto * p = n.point()) {
        x0 = x1 = p->x;
        y0 = y1 = p->y;
      } else if (const auto * pl = n.centerline()) {
        x0 = y0 = std::numeric_limits<double>::infinity();
        x1 = y1 = -std::numeric_limits<double>::infinity();
        for (const auto & q : pl->points()) {
          x0 = std::min(x0, q.x);
          y0 = std::min(y0, q.y);
          x1 = std::max(x1, q.x);
          y1 = std::max(y1, q.y);
        }
      } else {
        continue;
      }
      const auto [cx0, cy0] = cell_of(x0, y0);
      const auto [cx1, cy1] = cell_of(x1, y1);
      for (long cx = cx0; cx <= cx1; ++cx) {
        for (long cy = cy0; cy <= cy1; ++cy) grid_[key(cx, cy)].push_back(i);
      }
    }
  }

  std::vector<LdmNode> nodes_;
  std::vector<Relation> relations_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<Edge>> out_;
  std::vector<std::vector<Edge>> in_;
  std::unordered_map<long long, std::vector<std::size_t>> grid_;
};

/// Distance from `p` to a node's geometry; infinity for geometry-less nodes.
inline double node_distance(const LdmNode & n, const LocalPoint & p)
{
  if (const auto * q = n.point()) return geometry::dist2(*q, p);
  if (const auto * pl = n.centerline()) return geometry::distance(*pl, p);
  return std::numeric_limits<double>::infinity();
}

/// The relational local dynamic map: a shared immutable core plus a
/// per-instance transient overlay and dynamic layer. Copies share the core.
class LdmGraph
{
public:
  LdmGraph() = default;
  explicit LdmGraph(std::shared_ptr<const StaticMap> core)
  : core_(std::move(core)), dynamic_(std::make_shared<const DynamicLayer>())
  {
  }
  LdmGraph(const LdmGraph & other) : core_(other.core_)
  {
    std::scoped_lock lock(other.mutex_);
    dynamic_ = other.dynamic_;
    light_states_ = other.light_states_;
  }
  LdmGraph & operator=(const LdmGraph & other)
  {
    if (this == &other) return *this;
    std::scoped_lock lock(mutex_, other.mutex_);
    core_ = other.core_;
    dynamic_ = other.dynamic_;
    light_states_ = other.light_states_;
    return *this;
  }

  [[nodiscard]] const StaticMap & map() const { return *core_; }
  [[nodiscard]] std::shared_ptr<const StaticMap> shared_map() const { return core_; }

  [[nodiscard]] const LdmNode * find(std::string_view id) const { return core_->find(id); }
  [[nodiscard]] const LdmNode & at(std::string_view id) const { return core_->at(id); }
  [[nodiscard]] std::vector<NodeId> successors(std::string_view id) const
  {
    return core_->successors(id);
  }
  [[nodiscard]] std::vector<NodeId> regulators(std::string_view id) const
  {
    return core_->regulators(id);
  }

  /// Snapshot of the current dynamic layer; never half-updated.
  [[nodiscard]] std::shared_ptr<const DynamicLayer> dynamic() const
  {
    std::scoped_lock lock(mutex_);
    return dynamic_;
  }

  /// Current color of a TrafficLightState node ("unknown" when never set).
  [[nodiscard]] std::string light_state(std::string_view state_id) const
  {
    std::scoped_lock lock(mutex_);
    auto it = light_states_.find(std::string(state_id));
    if (it != light_states_.end()) return it->second;
    if (const auto * n = core_->find(state_id)) {
      if (auto c = n->text("color")) return *c;
    }
    return "unknown";
  }

  void set_light_state(std::string_view state_id, std::string color)
  {
    const auto & n = core_->at(state_id);
    if (n.kind != NodeKind::TrafficLightState) {
      throw GraphError("'" + n.id + "' is not a TrafficLightState");
    }
    std::scoped_lock lock(mutex_);
    light_states_[n.id] = std::move(color);
  }

  /// Best lane for a pose: within the lateral gate, tangent within the
  /// heading gate, minimal |lateral|, ties by smaller id. `accept` filters
  /// candidates when given.
  [[nodiscard]] std::optional<LaneMatch> match_to_lane(
    const LocalPoint & position, double heading, const MatchGates & gates = {},
    const std::function<bool(const LdmNode &)> & accept = {}) const
  {
    std::optional<LaneMatch> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t idx : core_->candidates(position, gates.max_lateral)) {
      const auto & n = core_->nodes()[idx];
      if (!is_lane(n.kind)) continue;
      if (accept && !accept(n)) continue;
      const auto & cl = *n.centerline();
      const auto pr = geometry::project(cl, position);
      const double d = geometry::dist2(pr.foot, position);
      if (d > gates.max_lateral) continue;
      const double tangent = cl.heading_at(pr.s_along);
      if (std::abs(geometry::normalize_angle(tangent - heading)) >= gates.max_heading_diff) continue;
      if (!best || d < best_d - 1e-9 || (std::abs(d - best_d) <= 1e-9 && n.id < best->lane)) {
        best_d = d;
        best = LaneMatch{n.id, pr.s_along, pr.lateral};
      }
    }
    return best;
  }

  /// Nodes of the given kinds whose geometry touches the disc, nearest first
  /// (ties by id).
  [[nodiscard]] std::vector<const LdmNode *> query_radius(
    const LocalPoint & center, double radius, const std::set<NodeKind> & kinds) const
  {
    if (!(radius > 0.0)) throw DomainError("query radius must be positive");
    std::vector<std::pair<double, const LdmNode *>> hits;
    for (std::size_t idx : core_->candidates(center, radius)) {
      const auto & n = core_->nodes()[idx];
      if (!kinds.empty() && !kinds.contains(n.kind)) continue;
      const double d = node_distance(n, center);
      if (d <= radius) hits.emplace_back(d, &n);
    }
    std::sort(hits.begin(), hits.end(), [](const auto & a, const auto & b) {
      return a.first < b.first || (a.first == b.first && a.second->id < b.second->id);
    });
    std::vector<const LdmNode *> out;
    out.reserve(hits.size());
    for (const auto & h : hits) out.push_back(h.second);
    return out;
  }

  /// Replaces the dynamic layer with `objects`, each map-matched to a lane.
  void update_dynamic(std::vector<DynamicObject> objects, const MatchGates & gates = {})
  {
    auto layer = std::make_shared<DynamicLayer>();
    std::sort(objects.begin(), objects.end(), [](const auto & a, const auto & b) {
      return a.id < b.id;
    });
    for (auto & o : objects) {
      o.heading = geometry::normalize_angle(o.heading);
      if (o.speed < 0.0) throw DomainError("object '" + o.id + "' has negative speed");
      if (auto m = match_to_lane(o.position, o.heading, gates)) layer->located_on[o.id] = *m;
    }
    layer->objects = std::move(objects);
    std::shared_ptr<const DynamicLayer> frozen = std::move(layer);
    std::scoped_lock lock(mutex_);
    dynamic_ = std::move(frozen);
  }

  /// All relations including the dynamic LocatedOn links of the current layer.
  [[nodiscard]] std::vector<Relation> all_relations() const
  {
    std::vector<Relation> out = core_->relations();
    for (const auto & [obj, m] : dynamic()->located_on) {
      out.push_back({obj, RelationKind::LocatedOn, m.lane});
    }
    return out;
  }

private:
  std::shared_ptr<const StaticMap> core_;
  mutable std::mutex mutex_;
  std::shared_ptr<const DynamicLayer> dynamic_;
  std::map<std::string, std::string> light_states_;
};

/// Validates and freezes a node/relation set into a graph.
inline LdmGraph build(std::vector<LdmNode> nodes, std::vector<Relation> relations)
{
  return LdmGraph(std::make_shared<const StaticMap>(std::move(nodes), std::move(relations)));
}

}  // namespace rns::rldm
