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
#include "rns/horizon.hpp"
#include "rns/rldm.hpp"
#include "rns/risk.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace rns::hmi
{

using geometry::LocalPoint;
using geometry::Polyline;
using horizon::Path;
using risk::RiskAssessment;

inline constexpr int kFrameSchemaVersion = 1;

enum class ColorClass { Green, Yellow, Red };

inline std::string_view to_string(ColorClass c)
{
  switch (c) {
    case ColorClass::Green: return "green";
    case ColorClass::Yellow: return "yellow";
    case ColorClass::Red: return "red";
  }
  return "?";
}

struct HmiConfig
{
  double green_deviation{1.0};   // m/s
  double yellow_deviation{3.0};  // m/s
  double zone_green_length{10.0};
  double zone_yellow_length{25.0};
  double v_max_floor{15.0};
  double v_max_factor{1.2};
  double viewport_radius{150.0};
  double chunk_size{100.0};
  double path_sample_step{2.0};
};

inline ColorClass deviation_color(double v0, double v_tar, const HmiConfig & cfg = {})
{
  const double dev = std::abs(v0 - v_tar);
  if (dev <= cfg.green_deviation) return ColorClass::Green;
  if (dev <= cfg.yellow_deviation) return ColorClass::Yellow;
  return ColorClass::Red;
}

struct HazardZone
{
  double start{0.0};
  double end{0.0};
  std::string kind{"intersection"};
  ColorClass color{ColorClass::Green};
};

struct HazardRoute
{
  double length{0.0};
  std::vector<HazardZone> zones;
  double ego_marker{0.0};
};

/// Each maximal run of junction nodes on the ego path becomes a zone, colored
/// by the length of path inside the junction.
inline HazardRoute hazard_route(
  const Path & ego_path, const rldm::LdmGraph & g, double delta_l_h, const HmiConfig & cfg = {})
{
  HazardRoute hr;
  hr.length = delta_l_h;
  const auto & ids = ego_path.node_ids;
  std::size_t i = 0;
  while (i < ids.size()) {
    if (g.at(ids[i]).kind != rldm::NodeKind::LaneJunction) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < ids.size() && g.at(ids[j]).kind == rldm::NodeKind::LaneJunction) ++j;
    const double start = std::max(0.0, ego_path.node_starts[i]);
    const double end = ego_path.node_end(j - 1, g);
    if (start < delta_l_h && end > start) {
      const double inside = end - start;
      HazardZone z;
      z.start = start;
      z.end = std::min(end, delta_l_h);
      z.color = inside <= cfg.zone_green_length    ? ColorClass::Green
                : inside <= cfg.zone_yellow_length ? ColorClass::Yellow
                                                   : ColorClass::Red;
      hr.zones.push_back(z);
    }
    i = j;
  }
  return hr;
}

struct VelocityScale
{
  double v0{0.0};
  double v_tar{0.0};
  double v_max{0.0};
  ColorClass color{ColorClass::Green};
  risk::GoverningSource source{risk::GoverningSource::None};
};

inline VelocityScale velocity_scale(double v0, const RiskAssessment & a, const HmiConfig & cfg = {})
{
  VelocityScale vs;
  vs.v0 = v0;
  vs.v_max = std::max(cfg.v_max_floor, a.speed_limit ? cfg.v_max_factor * *a.speed_limit : 0.0);
  vs.source = a.governing_source;
  if (a.governing_v_tar) {
    vs.v_tar = *a.governing_v_tar;
  } else if (a.speed_limit) {
    vs.v_tar = *a.speed_limit;
    vs.source = risk::GoverningSource::SpeedLimit;
  } else {
    vs.v_tar = vs.v_max;
  }
  vs.color = deviation_color(v0, vs.v_tar, cfg);
  return vs;
}

enum class PopupCause { Collision, RightCurve, LeftCurve, Crosswalk, StopLine, TrafficLight };

inline std::string_view to_string(PopupCause c)
{
  switch (c) {
    case PopupCause::Collision: return "collision";
    case PopupCause::RightCurve: return "right_curve";
    case PopupCause::LeftCurve: return "left_curve";
    case PopupCause::Crosswalk: return "crosswalk";
    case PopupCause::StopLine: return "stop_line";
    case PopupCause::TrafficLight: return "traffic_light";
  }
  return "?";
}

inline std::string_view unit_of(PopupCause c) { return c == PopupCause::Collision ? "s" : "m"; }

struct PopupSign
{
  PopupCause cause{PopupCause::Collision};
  double value{0.0};
  LocalPoint anchor;
};

/// Collision (s_E), nearest turn (distance to its start) and the nearest
/// active regulator of each kind (d_c). `ego_path` places the turn anchors.
inline std::vector<PopupSign> popup_signs(const RiskAssessment & a, const Path * ego_path = nullptr)
{
  std::vector<PopupSign> out;
  if (a.max_encounter) {
    out.push_back({PopupCause::Collision, a.max_encounter->s_E, a.max_encounter->point_ego});
  }
  if (!a.turns.empty()) {
    const auto & t = *std::min_element(a.turns.begin(), a.turns.end(), [](const auto & l, const auto & r) {
      return l.s_start < r.s_start;
    });
    const double d = std::max(0.0, t.s_start);
    LocalPoint anchor;
    if (ego_path && ego_path->polyline.size() >= 2) anchor = ego_path->polyline.point_at(d);
    out.push_back(
      {t.direction == risk::TurnDirection::Right ? PopupCause::RightCurve : PopupCause::LeftCurve, d,
       anchor});
  }
  std::set<risk::RegulatorKind> seen;
  for (const auto & r : a.regulatory) {  // sorted nearest first
    if (!r.active || seen.contains(r.regulator_kind)) continue;
    seen.insert(r.regulator_kind);
    PopupCause cause = PopupCause::Crosswalk;
    if (r.regulator_kind == risk::RegulatorKind::StopLine) cause = PopupCause::StopLine;
    if (r.regulator_kind == risk::RegulatorKind::TrafficLight) cause = PopupCause::TrafficLight;
    out.push_back({cause, r.d_c, r.anchor});
  }
  return out;
}

enum class EventKind { LaneBand, EncounterMarker };

struct ColoredEvent
{
  EventKind kind{EventKind::LaneBand};
  std::variant<Polyline, LocalPoint> geometry;
  ColorClass color{ColorClass::Red};
};

/// Lane band from the ego to the governing curve/regulator risk point in the
/// velocity-scale color, and a red marker at the closest encounter.
inline std::vector<ColoredEvent> colored_events(
  const RiskAssessment & a, const Path & ego_path, const HmiConfig & cfg = {})
{
  std::vector<ColoredEvent> out;
  if (a.governing_index && ego_path.polyline.size() >= 2) {
    std::optional<double> until;
    if (a.governing_source == risk::GoverningSource::Curve) until = a.turns[*a.governing_index].s_peak;
    if (a.governing_source == risk::GoverningSource::Regulatory) {
      until = a.regulatory[*a.governing_index].d_c;
    }
    if (until) {
      const Polyline band = ego_path.polyline.slice(0.0, *until);
      if (band.size() >= 2) {
        out.push_back(
          {EventKind::LaneBand, band, velocity_scale(a.ego_v0, a, cfg).color});
      }
    }
  }
  if (a.max_encounter) {
    out.push_back({EventKind::EncounterMarker, a.max_encounter->point_ego, ColorClass::Red});
  }
  return out;
}

/// What the world looked like at one tick, as far as the display cares.
struct WorldSnapshot
{
  double t{0.0};
  rldm::DynamicObject ego;
  std::optional<rldm::LaneMatch> ego_lane;
  bool route_deviation{false};
  Path ego_path;
  std::vector<rldm::DynamicObject> others;
  std::map<std::string, horizon::PathTree> trees;
  std::vector<std::string> flags;
};

struct OtherView
{
  std::string id;
  rldm::ObjectClass object_class{rldm::ObjectClass::Car};
  LocalPoint position;
  double heading{0.0};
  double speed{0.0};
  bool critical{false};
  std::vector<Polyline> paths;  // only for the critical vehicle
};

struct HmiFrame
{
  double t{0.0};
  rldm::DynamicObject ego;
  std::optional<std::string> ego_lane;
  std::vector<OtherView> others;
  std::vector<std::string> map_chunks;
  Polyline ego_path;
  HazardRoute hazard_route;
  VelocityScale velocity_scale;
  std::vector<PopupSign> popups;
  std::vector<ColoredEvent> events;
  bool slim{false};
  std::vector<std::string> flags;
};

inline std::string chunk_id(const LocalPoint & p, double chunk_size)
{
  return std::to_string(static_cast<long>(std::floor(p.x / chunk_size))) + "_" +
         std::to_string(static_cast<long>(std::floor(p.y / chunk_size)));
}

/// Chunk ids of the square viewport around `center`.
inline std::vector<std::string> viewport_chunks(const LocalPoint & center, const HmiConfig & cfg)
{
  std::vector<std::string> out;
  const auto lo_x = static_cast<long>(std::floor((center.x - cfg.viewport_radius) / cfg.chunk_size));
  const auto hi_x = static_cast<long>(std::floor((center.x + cfg.viewport_radius) / cfg.chunk_size));
  const auto lo_y = static_cast<long>(std::floor((center.y - cfg.viewport_radius) / cfg.chunk_size));
  const auto hi_y = static_cast<long>(std::floor((center.y + cfg.viewport_radius) / cfg.chunk_size));
  for (long x = lo_x; x <= hi_x; ++x) {
    for (long y = lo_y; y <= hi_y; ++y) out.push_back(std::to_string(x) + "_" + std::to_string(y));
  }
  return out;
}

inline Polyline thin(const Polyline & p, double step)
{
  if (p.size() < 2 || p.length() <= step) return p;
  return geometry::resample(p, step);
}

inline HmiFrame compose_frame(
  const WorldSnapshot & world, const RiskAssessment & a, const horizon::HorizonConfig & hcfg,
  const rldm::LdmGraph & g, bool slim_mode, const HmiConfig & cfg = {})
{
  HmiFrame f;
  f.t = world.t;
  f.ego = world.ego;
  if (world.ego_lane) f.ego_lane = world.ego_lane->lane;
  f.slim = slim_mode;
  f.flags = world.flags;
  if (world.route_deviation) f.flags.push_back("route_deviation");
  f.map_chunks = viewport_chunks(world.ego.position, cfg);
  if (world.ego_path.polyline.size() >= 2) f.ego_path = thin(world.ego_path.polyline, cfg.path_sample_step);

  const std::string critical = a.max_encounter ? a.max_encounter->other_vehicle_id : std::string{};
  for (const auto & o : world.others) {
    OtherView v{o.id, o.object_class, o.position, o.heading, o.speed, !critical.empty() && o.id == critical, {}};
    if (v.critical) {
      if (auto it = world.trees.find(o.id); it != world.trees.end()) {
        for (const auto & p : it->second.paths) {
          if (p.polyline.size() >= 2) v.paths.push_back(thin(p.polyline, cfg.path_sample_step));
        }
      }
    }
    f.others.push_back(std::move(v));
  }

  f.hazard_route = hazard_route(world.ego_path, g, hcfg.delta_l_h, cfg);
  f.velocity_scale = velocity_scale(world.ego.speed, a, cfg);
  f.popups = popup_signs(a, &world.ego_path);
  f.events = colored_events(a, world.ego_path, cfg);
  return f;
}

namespace detail
{
inline double round3(double v)
{
  const double r = std::round(v * 1000.0) / 1000.0;
  return r == 0.0 ? 0.0 : r;  // no negative zero
}

inline nlohmann::json point_json(const LocalPoint & p) { return {round3(p.x), round3(p.y)}; }

inline nlohmann::json polyline_json(const Polyline & p)
{
  nlohmann::json arr = nlohmann::json::array();
  for (const auto & q : p.points()) arr.push_back(point_json(q));
  return arr;
}
}  // namespace detail

/// Object-notation form of a frame. Keys are emitted in sorted order so the
/// serialization is byte-stable.
inline nlohmann::json to_json(const HmiFrame & f)
{
  using detail::point_json;
  using detail::polyline_json;
  using detail::round3;
  nlohmann::json j;
  j["schema_version"] = kFrameSchemaVersion;
  j["t"] = round3(f.t);
  j["slim"] = f.slim;
  j["flags"] = f.flags;
  j["ego"] = {
    {"x", round3(f.ego.position.x)},
    {"y", round3(f.ego.position.y)},
    {"heading", round3(f.ego.heading)},
    {"v", round3(f.ego.speed)},
    {"lane", f.ego_lane ? nlohmann::json(*f.ego_lane) : nlohmann::json(nullptr)},
    {"path", f.ego_path.size() >= 2 ? polyline_json(f.ego_path) : nlohmann::json::array()}};

  nlohmann::json others = nlohmann::json::array();
  for (const auto & o : f.others) {
    nlohmann::json paths = nlohmann::json::array();
    for (const auto & p : o.paths) paths.push_back(polyline_json(p));
    others.push_back(
      {{"id", o.id},
       {"class", std::string(rldm::to_string(o.object_class))},
       {"x", round3(o.position.x)},
       {"y", round3(o.position.y)},
       {"heading", round3(o.heading)},
       {"v", round3(o.speed)},
       {"critical", o.critical},
       {"paths", paths}});
  }
  j["others"] = others;
  j["map"] = {{"chunks", f.map_chunks}};

  nlohmann::json zones = nlohmann::json::array();
  for (const auto & z : f.hazard_route.zones) {
    zones.push_back(
      {{"start", round3(z.start)}, {"end", round3(z.end)}, {"kind", z.kind},
       {"color", std::string(to_string(z.color))}});
  }
  j["hazard_route"] = {
    {"length", round3(f.hazard_route.length)}, {"ego_marker", 0.0}, {"zones", zones}};

  j["velocity_scale"] = {
    {"v0", round3(f.velocity_scale.v0)},
    {"v_tar", round3(f.velocity_scale.v_tar)},
    {"v_max", round3(f.velocity_scale.v_max)},
    {"color", std::string(to_string(f.velocity_scale.color))},
    {"source", std::string(risk::to_string(f.velocity_scale.source))}};

  nlohmann::json popups = nlohmann::json::array();
  for (const auto & p : f.popups) {
    nlohmann::json pj = {
      {"cause", std::string(to_string(p.cause))},
      {"unit", std::string(unit_of(p.cause))},
      {"anchor", point_json(p.anchor)}};
    if (!f.slim) pj["value"] = round3(p.value);
    popups.push_back(std::move(pj));
  }
  j["popups"] = popups;

  nlohmann::json events = nlohmann::json::array();
  for (const auto & e : f.events) {
    nlohmann::json ej = {{"color", std::string(to_string(e.color))}};
    if (e.kind == EventKind::LaneBand) {
      ej["kind"] = "lane_band";
      ej["points"] = polyline_json(std::get<Polyline>(e.geometry));
    } else {
      ej["kind"] = "encounter_marker";
      ej["point"] = point_json(std::get<LocalPoint>(e.geometry));
    }
    events.push_back(std::move(ej));
  }
  j["events"] = events;
  return j;
}

inline std::string serialize(const HmiFrame & f) { return to_json(f).dump(); }

}  // namespace rns::hmi
