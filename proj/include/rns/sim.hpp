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
#include "rns/hmi.hpp"
#include "rns/horizon.hpp"
#include "rns/osm_ingest.hpp"
#include "rns/rldm.hpp"
#include "rns/risk.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rns::sim
{

using geometry::GeoPoint;
using geometry::LocalPoint;
using geometry::Polyline;
using rldm::NodeId;

inline constexpr int kScenarioSchemaVersion = 1;
inline constexpr double kMaxInteractiveSpeed = 20.0;
inline const std::string kEgoId = "ego";

/// Invalid scenario content. The message starts with the offending field path.
class ScenarioError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

enum class Mode { Replay, Interactive };

struct TracePoint
{
  double t{0.0};
  LocalPoint position;
  double heading{0.0};
  double speed{0.0};
};

/// Time-sorted samples; heading and speed are filled in at load time when the
/// recording lacks them.
struct Trace
{
  std::vector<TracePoint> points;

  [[nodiscard]] bool empty() const { return points.empty(); }
  [[nodiscard]] double t_first() const { return points.front().t; }
  [[nodiscard]] double t_last() const { return points.back().t; }

  /// Linear position and speed, shortest-arc heading. Nullopt outside the
  /// recorded interval.
  [[nodiscard]] std::optional<TracePoint> at(double t) const
  {
    if (points.empty() || t < t_first() - 1e-9 || t > t_last() + 1e-9) return std::nullopt;
    if (points.size() == 1) return points.front();
    auto it = std::upper_bound(
      points.begin(), points.end(), t, [](double v, const TracePoint & p) { return v < p.t; });
    if (it == points.begin()) return points.front();
    if (it == points.end()) return points.back();
    const TracePoint & b = *it;
    const TracePoint & a = *(it - 1);
    const double u = std::clamp((t - a.t) / (b.t - a.t), 0.0, 1.0);
    TracePoint out;
    out.t = t;
    out.position = geometry::lerp(a.position, b.position, u);
    out.heading = geometry::normalize_angle(a.heading + u * geometry::normalize_angle(b.heading - a.heading));
    out.speed = a.speed + u * (b.speed - a.speed);
    return out;
  }
};

/// Concatenated centerlines of a lane sequence with successor links checked.
struct LaneChain
{
  std::vector<NodeId> lanes;
  std::vector<double> starts;
  Polyline polyline;

  [[nodiscard]] std::size_t index_at(double s) const
  {
    auto it = std::upper_bound(starts.begin(), starts.end(), s);
    return it == starts.begin() ? 0 : static_cast<std::size_t>(std::distance(starts.begin(), it) - 1);
  }
};

struct EgoSpec
{
  std::vector<NodeId> route;
  double s0{0.0};
  double v0{0.0};
  Mode mode{Mode::Interactive};
  Trace trace;
};

struct ActorSpec
{
  std::string id;
  rldm::ObjectClass object_class{rldm::ObjectClass::Car};
  Trace trace;
  std::vector<NodeId> path;  // used when trace is empty
  double s0{0.0};
  double speed{0.0};
};

struct PedestrianSpec
{
  std::string id;
  NodeId crosswalk;
  double appear_t{0.0};
  double wait{0.0};
};

struct MapBundle
{
  rldm::LdmGraph graph;
  GeoPoint origin;
};

struct Scenario
{
  std::string map_path;
  std::string augmentation_path;
  std::shared_ptr<const MapBundle> map;
  double tick_hz{10.0};
  std::optional<double> duration;
  horizon::HorizonConfig horizon;
  risk::RiskConfig risk;
  hmi::HmiConfig hmi;
  std::map<NodeId, std::string> light_states;
  EgoSpec ego;
  LaneChain ego_chain;
  std::vector<ActorSpec> actors;
  std::vector<LaneChain> actor_chains;  // parallel to actors; empty for traced ones
  std::vector<PedestrianSpec> pedestrians;

  [[nodiscard]] double dt() const { return 1.0 / tick_hz; }
};

inline std::string read_file(const std::filesystem::path & p)
{
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ScenarioError(p.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Parses and builds a map; an empty augmentation path means defaults.
inline MapBundle load_map(const std::filesystem::path & osm, const std::filesystem::path & augmentation = {})
{
  const auto extract = osm::parse_osm(read_file(osm));
  const auto aug =
    augmentation.empty() ? osm::AugmentationConfig{} : osm::parse_augmentation(read_file(augmentation));
  return MapBundle{osm::build_static_map(extract, aug), osm::map_origin(extract, aug)};
}

inline LaneChain lane_chain(const rldm::LdmGraph & g, const std::vector<NodeId> & lanes, const std::string & where)
{
  if (lanes.empty()) throw ScenarioError(where + ": must list at least one lane");
  LaneChain c;
  std::vector<LocalPoint> pts;
  double reach = 0.0;
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    const auto * n = g.find(lanes[i]);
    const std::string here = where + "[" + std::to_string(i) + "]";
    if (!n) throw ScenarioError(here + ": unknown lane '" + lanes[i] + "'");
    if (!rldm::is_lane(n->kind)) throw ScenarioError(here + ": '" + lanes[i] + "' is not a lane");
    if (i > 0) {
      const auto succ = g.successors(lanes[i - 1]);
      if (std::find(succ.begin(), succ.end(), lanes[i]) == succ.end()) {
        throw ScenarioError(here + ": '" + lanes[i] + "' does not follow '" + lanes[i - 1] + "'");
      }
    }
    c.lanes.push_back(lanes[i]);
    c.starts.push_back(reach);
    const auto & cl = *n->centerline();
    geometry::append_points(pts, cl.points());
    reach += cl.length();
  }
  c.polyline = Polyline(std::move(pts));
  return c;
}

namespace detail
{
using nlohmann::json;

inline std::string join(const std::string & path, const std::string & key)
{
  return path.empty() ? key : path + "." + key;
}

inline const json & field(const json & obj, const std::string & key, const std::string & path)
{
  if (!obj.is_object()) throw ScenarioError((path.empty() ? "scenario" : path) + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ScenarioError(join(path, key) + ": missing");
  return *it;
}

inline double number(const json & v, const std::string & path)
{
  if (!v.is_number()) throw ScenarioError(path + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ScenarioError(path + ": must be finite");
  return d;
}

inline double number(const json & obj, const std::string & key, const std::string & path, double fallback)
{
  if (!obj.contains(key)) return fallback;
  return number(obj.at(key), join(path, key));
}

inline std::string text(const json & v, const std::string & path)
{
  if (!v.is_string()) throw ScenarioError(path + ": expected a string");
  return v.get<std::string>();
}

inline std::vector<NodeId> id_list(const json & v, const std::string & path)
{
  if (!v.is_array()) throw ScenarioError(path + ": expected an array of lane ids");
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(text(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline Trace read_trace(const json & v, const std::string & path, const GeoPoint & origin)
{
  if (!v.is_array() || v.empty()) throw ScenarioError(path + ": expected a non-empty array");
  Trace tr;
  std::vector<bool> has_heading;
  std::vector<bool> has_speed;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string here = path + "[" + std::to_string(i) + "]";
    const auto & p = v[i];
    TracePoint tp;
    tp.t = number(field(p, "t", here), here + ".t");
    if (p.contains("lat") || p.contains("lon")) {
      GeoPoint gp{number(field(p, "lat", here), here + ".lat"), number(field(p, "lon", here), here + ".lon"), 0.0};
      try {
        geometry::validate(gp);
      } catch (const std::exception & e) {
        throw ScenarioError(here + ": " + e.what());
      }
      tp.position = geometry::to_local(origin, gp);
    } else {
      tp.position = {number(field(p, "x", here), here + ".x"), number(field(p, "y", here), here + ".y"), 0.0};
    }
    has_heading.push_back(p.contains("heading"));
    has_speed.push_back(p.contains("speed"));
    if (has_heading.back()) tp.heading = geometry::normalize_angle(number(p.at("heading"), here + ".heading"));
    if (has_speed.back()) {
      tp.speed = number(p.at("speed"), here + ".speed");
      if (tp.speed < 0.0) throw ScenarioError(here + ".speed: must be >= 0");
    }
    if (!tr.points.empty() && !(tp.t > tr.points.back().t)) {
      throw ScenarioError(here + ".t: trace must be strictly increasing in time");
    }
    tr.points.push_back(tp);
  }
  // Missing heading/speed come from the neighbouring segment.
  const std::size_t n = tr.points.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (n < 2) break;
    const std::size_t a = i + 1 < n ? i : i - 1;
    const auto & p = tr.points[a];
    const auto & q = tr.points[a + 1];
    const LocalPoint d = q.position - p.position;
    if (!has_heading[i]) {
      if (geometry::norm2(d) > 1e-9) {
        tr.points[i].heading = std::atan2(d.y, d.x);
      } else if (i > 0) {
        tr.points[i].heading = tr.points[i - 1].heading;
      }
    }
    if (!has_speed[i]) tr.points[i].speed = geometry::norm2(d) / (q.t - p.t);
  }
  return tr;
}
}  // namespace detail

struct LoadOptions
{
  /// Replace the map files named in the scenario.
  std::optional<std::string> map_path;
  std::optional<std::string> augmentation_path;
  /// Use an already built map and ignore all map references.
  std::shared_ptr<const MapBundle> map;
};

/// Validates a scenario document. Relative map paths resolve against
/// `base_dir`.
inline Scenario parse_scenario(
  const std::string & text, const std::filesystem::path & base_dir = {}, const LoadOptions & opts = {})
{
  using detail::field;
  using detail::number;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error & e) {
    throw ScenarioError(std::string("scenario: ") + e.what());
  }
  if (!j.is_object()) throw ScenarioError("scenario: expected an object");
  if (j.contains("schema_version") && j.at("schema_version") != kScenarioSchemaVersion) {
    throw ScenarioError("schema_version: unsupported (expected 1)");
  }

  Scenario sc;
  if (opts.map) {
    sc.map = opts.map;
  } else {
    auto resolve = [&](const std::string & p) {
      const std::filesystem::path fp(p);
      return fp.is_absolute() || base_dir.empty() ? fp : base_dir / fp;
    };
    if (opts.map_path) {
      sc.map_path = *opts.map_path;
    } else if (j.contains("map")) {
      sc.map_path = resolve(detail::text(field(j.at("map"), "osm", "map"), "map.osm")).string();
    } else {
      throw ScenarioError("map.osm: missing");
    }
    if (opts.augmentation_path) {
      sc.augmentation_path = *opts.augmentation_path;
    } else if (j.contains("map") && j.at("map").contains("augmentation")) {
      sc.augmentation_path = resolve(detail::text(j.at("map").at("augmentation"), "map.augmentation")).string();
    }
    sc.map = std::make_shared<const MapBundle>(load_map(sc.map_path, sc.augmentation_path));
  }
  const auto & g = sc.map->graph;
  const GeoPoint origin = sc.map->origin;

  sc.tick_hz = number(j, "tick_hz", "", 10.0);
  if (!(sc.tick_hz > 0.0)) throw ScenarioError("tick_hz: must be > 0");
  if (j.contains("duration")) {
    sc.duration = number(j.at("duration"), "duration");
    if (!(*sc.duration > 0.0)) throw ScenarioError("duration: must be > 0");
  }

  if (j.contains("horizon")) {
    const auto & h = j.at("horizon");
    sc.horizon.delta_l_h = number(h, "delta_l_h", "horizon", sc.horizon.delta_l_h);
    sc.horizon.max_paths = static_cast<std::size_t>(number(h, "max_paths", "horizon", sc.horizon.max_paths));
    if (h.contains("straight_threshold_deg")) {
      sc.horizon.straight_threshold =
        geometry::deg2rad(number(h.at("straight_threshold_deg"), "horizon.straight_threshold_deg"));
    }
    if (!(sc.horizon.delta_l_h > 0.0)) throw ScenarioError("horizon.delta_l_h: must be > 0");
    if (sc.horizon.max_paths < 1) throw ScenarioError("horizon.max_paths: must be >= 1");
  }
  if (j.contains("risk")) {
    const auto & r = j.at("risk");
    auto & c = sc.risk;
    c.d_min = number(r, "d_min", "risk", c.d_min);
    c.kappa_th = number(r, "kappa_th", "risk", c.kappa_th);
    c.a_y = number(r, "a_y", "risk", c.a_y);
    c.a_c = number(r, "a_c", "risk", c.a_c);
    c.t_r = number(r, "t_r", "risk", c.t_r);
    c.t_r_distance_gate = number(r, "t_r_distance_gate", "risk", c.t_r_distance_gate);
    c.prediction_horizon = number(r, "prediction_horizon", "risk", c.prediction_horizon);
    c.dt_sample = number(r, "dt_sample", "risk", c.dt_sample);
    c.crosswalk_occupancy_radius = number(r, "crosswalk_occupancy_radius", "risk", c.crosswalk_occupancy_radius);
    if (r.contains("crosswalk_occupancy_only")) {
      if (!r.at("crosswalk_occupancy_only").is_boolean()) {
        throw ScenarioError("risk.crosswalk_occupancy_only: expected a boolean");
      }
      c.crosswalk_occupancy_only = r.at("crosswalk_occupancy_only").get<bool>();
    }
    for (const char * k : {"d_min", "kappa_th", "a_y", "a_c", "prediction_horizon", "dt_sample"}) {
      if (r.contains(k) && !(r.at(k).get<double>() > 0.0)) {
        throw ScenarioError(std::string("risk.") + k + ": must be > 0");
      }
    }
  }
  if (j.contains("hmi")) {
    const auto & h = j.at("hmi");
    auto & c = sc.hmi;
    c.green_deviation = number(h, "green_deviation", "hmi", c.green_deviation);
    c.yellow_deviation = number(h, "yellow_deviation", "hmi", c.yellow_deviation);
    c.zone_green_length = number(h, "zone_green_length", "hmi", c.zone_green_length);
    c.zone_yellow_length = number(h, "zone_yellow_length", "hmi", c.zone_yellow_length);
  }
  if (j.contains("light_states")) {
    const auto & ls = j.at("light_states");
    if (!ls.is_object()) throw ScenarioError("light_states: expected an object");
    for (const auto & [id, color] : ls.items()) {
      const auto * n = g.find(id);
      if (!n || n->kind != rldm::NodeKind::TrafficLightState) {
        throw ScenarioError("light_states." + id + ": unknown traffic light state");
      }
      sc.light_states[id] = detail::text(color, "light_states." + id);
    }
  }

  const auto & ego = field(j, "ego", "");
  sc.ego.route = detail::id_list(field(ego, "route", "ego"), "ego.route");
  sc.ego_chain = lane_chain(g, sc.ego.route, "ego.route");
  sc.ego.s0 = number(ego, "s0", "ego", 0.0);
  sc.ego.v0 = number(ego, "v0", "ego", 0.0);
  if (sc.ego.s0 < 0.0) throw ScenarioError("ego.s0: must be >= 0");
  if (sc.ego.v0 < 0.0 || sc.ego.v0 > kMaxInteractiveSpeed) throw ScenarioError("ego.v0: must be in [0, 20]");
  const std::string mode = ego.contains("mode") ? detail::text(ego.at("mode"), "ego.mode") : "replay";
  if (mode == "replay") {
    sc.ego.mode = Mode::Replay;
    if (!ego.contains("trace")) throw ScenarioError("ego.trace: replay mode requires a trace");
    sc.ego.trace = detail::read_trace(ego.at("trace"), "ego.trace", origin);
    if (sc.ego.trace.points.size() < 2) throw ScenarioError("ego.trace: needs at least two samples");
  } else if (mode == "interactive") {
    sc.ego.mode = Mode::Interactive;
  } else {
    throw ScenarioError("ego.mode: expected 'replay' or 'interactive'");
  }

  if (j.contains("actors")) {
    const auto & arr = j.at("actors");
    if (!arr.is_array()) throw ScenarioError("actors: expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string here = "actors[" + std::to_string(i) + "]";
      const auto & a = arr[i];
      ActorSpec spec;
      spec.id = detail::text(field(a, "id", here), here + ".id");
      if (spec.id == kEgoId) throw ScenarioError(here + ".id: 'ego' is reserved");
      for (const auto & prev : sc.actors) {
        if (prev.id == spec.id) throw ScenarioError(here + ".id: duplicate '" + spec.id + "'");
      }
      const std::string cls = a.contains("class") ? detail::text(a.at("class"), here + ".class") : "car";
      const auto oc = rldm::object_class_from(cls);
      if (!oc || *oc == rldm::ObjectClass::Ego) throw ScenarioError(here + ".class: unknown '" + cls + "'");
      spec.object_class = *oc;
      LaneChain chain;
      if (a.contains("trace")) {
        spec.trace = detail::read_trace(a.at("trace"), here + ".trace", origin);
      } else if (a.contains("path")) {
        spec.path = detail::id_list(a.at("path"), here + ".path");
        chain = lane_chain(g, spec.path, here + ".path");
        spec.s0 = number(a, "s0", here, 0.0);
        spec.speed = number(field(a, "speed", here), here + ".speed");
        if (spec.speed < 0.0) throw ScenarioError(here + ".speed: must be >= 0");
        if (spec.s0 < 0.0) throw ScenarioError(here + ".s0: must be >= 0");
      } else {
        throw ScenarioError(here + ": needs either 'trace' or 'path'");
      }
      sc.actors.push_back(std::move(spec));
      sc.actor_chains.push_back(std::move(chain));
    }
  }

  if (j.contains("pedestrians")) {
    const auto & arr = j.at("pedestrians");
    if (!arr.is_array()) throw ScenarioError("pedestrians: expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string here = "pedestrians[" + std::to_string(i) + "]";
      const auto & p = arr[i];
      PedestrianSpec spec;
      spec.id = p.contains("id") ? detail::text(p.at("id"), here + ".id") : "ped" + std::to_string(i);
      spec.crosswalk = detail::text(field(p, "crosswalk", here), here + ".crosswalk");
      const auto * n = g.find(spec.crosswalk);
      if (!n || n->kind != rldm::NodeKind::Crosswalk) {
        throw ScenarioError(here + ".crosswalk: unknown crosswalk '" + spec.crosswalk + "'");
      }
      spec.appear_t = number(p, "appear_t", here, 0.0);
      spec.wait = number(field(p, "wait", here), here + ".wait");
      if (spec.wait < 0.0) throw ScenarioError(here + ".wait: must be >= 0");
      sc.pedestrians.push_back(std::move(spec));
    }
  }
  return sc;
}

/// Reads and validates a scenario file.
inline Scenario load(const std::filesystem::path & file, const LoadOptions & opts = {})
{
  return parse_scenario(read_file(file), file.parent_path(), opts);
}

struct TickResult
{
  double t{0.0};
  hmi::WorldSnapshot world;
  risk::RiskAssessment assessment;
  hmi::HmiFrame frame;
};

/// One scenario run. Each step evaluates the world at the current tick and
/// then advances the interactive ego by the given acceleration.
class Session
{
public:
  explicit Session(std::shared_ptr<const Scenario> scenario, bool slim = false)
  : sc_(std::move(scenario)), graph_(sc_->map->graph), slim_(slim)
  {
    for (const auto & [id, color] : sc_->light_states) graph_.set_light_state(id, color);
    if (sc_->ego.mode == Mode::Replay) {
      t0_ = sc_->ego.trace.t_first();
      t_end_ = sc_->ego.trace.t_last();
      if (sc_->duration) t_end_ = std::min(*t_end_, t0_ + *sc_->duration);
    } else if (sc_->duration) {
      t_end_ = *sc_->duration;
    }
    s_ = sc_->ego.s0;
    v_ = sc_->ego.v0;
  }

  [[nodiscard]] const Scenario & scenario() const { return *sc_; }
  [[nodiscard]] Mode mode() const { return sc_->ego.mode; }
  [[nodiscard]] double time() const { return t0_ + static_cast<double>(tick_) / sc_->tick_hz; }
  [[nodiscard]] std::size_t ticks_done() const { return tick_; }

  /// Number of ticks the run lasts; nullopt for open-ended interactive runs.
  [[nodiscard]] std::optional<std::size_t> tick_count() const
  {
    if (!t_end_) return std::nullopt;
    return static_cast<std::size_t>(std::max(0.0, std::ceil((*t_end_ - t0_) * sc_->tick_hz - 1e-9)));
  }

  [[nodiscard]] bool finished() const
  {
    const auto n = tick_count();
    return n && tick_ >= *n;
  }

  TickResult step(std::optional<double> accel = std::nullopt, std::vector<std::string> flags = {})
  {
    const double t = time();
    const double dt = sc_->dt();
    if (accel && sc_->ego.mode == Mode::Replay) flags.emplace_back("control_ignored");

    hmi::WorldSnapshot world;
    world.t = t;
    world.flags = std::move(flags);
    world.ego = ego_at(t);

    std::vector<rldm::DynamicObject> objects{world.ego};
    for (std::size_t i = 0; i < sc_->actors.size(); ++i) {
      if (auto o = actor_at(i, t)) objects.push_back(*o);
    }
    for (const auto & p : sc_->pedestrians) {
      if (t + 1e-9 < p.appear_t || t + 1e-9 >= p.appear_t + p.wait) continue;
      const auto pos = graph_.at(p.crosswalk).point();
      objects.push_back({p.id, rldm::ObjectClass::Pedestrian, *pos, 0.0, 0.0, t});
    }
    graph_.update_dynamic(objects);

    world.ego_path = ego_path(world, sc_->horizon);

    std::vector<risk::OtherVehicle> others;
    for (const auto & o : graph_.dynamic()->objects) {
      if (o.id == kEgoId) continue;
      world.others.push_back(o);
      if (o.object_class == rldm::ObjectClass::Pedestrian) continue;
      auto tree = horizon::path_tree(graph_, o, sc_->horizon);
      others.push_back({tree, o.speed});
      world.trees.emplace(o.id, std::move(tree));
    }

    TickResult r;
    r.t = t;
    r.assessment = risk::assess(graph_, world.ego, world.ego_path, others, sc_->risk);
    r.frame = hmi::compose_frame(world, r.assessment, sc_->horizon, graph_, slim_, sc_->hmi);
    r.world = std::move(world);

    if (sc_->ego.mode == Mode::Interactive) {
      v_ = std::clamp(v_ + accel.value_or(0.0) * dt, 0.0, kMaxInteractiveSpeed);
      s_ = std::min(s_ + v_ * dt, sc_->ego_chain.polyline.length());
    }
    ++tick_;
    return r;
  }

  [[nodiscard]] double ego_s() const { return s_; }
  [[nodiscard]] double ego_v() const { return v_; }

private:
  rldm::DynamicObject ego_at(double t) const
  {
    rldm::DynamicObject ego{kEgoId, rldm::ObjectClass::Ego, {}, 0.0, 0.0, t};
    if (sc_->ego.mode == Mode::Replay) {
      const auto p = sc_->ego.trace.at(t);
      ego.position = p->position;
      ego.heading = p->heading;
      ego.speed = p->speed;
    } else {
      const auto & line = sc_->ego_chain.polyline;
      ego.position = line.point_at(s_);
      ego.heading = line.heading_at(s_);
      ego.speed = v_;
    }
    return ego;
  }

  std::optional<rldm::DynamicObject> actor_at(std::size_t i, double t) const
  {
    const auto & a = sc_->actors[i];
    rldm::DynamicObject o{a.id, a.object_class, {}, 0.0, 0.0, t};
    if (!a.trace.empty()) {
      const auto p = a.trace.at(t);
      if (!p) return std::nullopt;
      o.position = p->position;
      o.heading = p->heading;
      o.speed = p->speed;
      return o;
    }
    const auto & line = sc_->actor_chains[i].polyline;
    const double s = a.s0 + a.speed * (t - t0_);
    if (s > line.length()) return std::nullopt;  // left the scripted path
    o.position = line.point_at(s);
    o.heading = line.heading_at(s);
    o.speed = a.speed;
    return o;
  }

  horizon::Path ego_path(hmi::WorldSnapshot & world, const horizon::HorizonConfig & cfg)
  {
    const auto & chain = sc_->ego_chain;
    if (sc_->ego.mode == Mode::Interactive) {
      const std::size_t idx = chain.index_at(s_);
      const double on_node = std::min(s_ - chain.starts[idx], graph_.at(chain.lanes[idx]).centerline()->length());
      world.ego_lane = rldm::LaneMatch{chain.lanes[idx], on_node, 0.0};
      return horizon::route_path(graph_, chain.lanes, idx, on_node, cfg);
    }
    try {
      const auto rm = horizon::match_on_route(graph_, world.ego, chain.lanes);
      last_index_ = rm.index;
      world.ego_lane = rm.match;
      return horizon::route_path(graph_, chain.lanes, rm.index, rm.match.s_along, cfg);
    } catch (const horizon::RouteDeviation &) {
      world.route_deviation = true;
      if (!last_index_) return {};
      const auto & lane = graph_.at(chain.lanes[*last_index_]);
      const auto pr = geometry::project(*lane.centerline(), world.ego.position);
      world.ego_lane = rldm::LaneMatch{lane.id, pr.s_along, pr.lateral};
      return horizon::route_path(graph_, chain.lanes, *last_index_, pr.s_along, cfg);
    }
  }

  std::shared_ptr<const Scenario> sc_;
  rldm::LdmGraph graph_;
  bool slim_{false};
  double t0_{0.0};
  std::optional<double> t_end_;
  std::size_t tick_{0};
  double s_{0.0};
  double v_{0.0};
  std::optional<std::size_t> last_index_;
};

/// Every tick of a replay scenario, from the first trace sample up to (not
/// including) the last.
inline std::vector<TickResult> run_replay(std::shared_ptr<const Scenario> scenario, bool slim = false)
{
  if (scenario->ego.mode != Mode::Replay) throw ScenarioError("ego.mode: run_replay needs a replay scenario");
  Session s(std::move(scenario), slim);
  std::vector<TickResult> out;
  while (!s.finished()) out.push_back(s.step());
  return out;
}

}  // namespace rns::sim
