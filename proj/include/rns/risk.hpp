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

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace rns::risk
{

using geometry::LocalPoint;
using horizon::Path;
using horizon::PathTree;
using rldm::LdmGraph;

struct RiskConfig
{
  double d_min{4.0};              // m, collision sensitivity
  double kappa_th{0.05};          // 1/m, turn detection threshold
  double a_y{2.0};                // m/s^2, lateral acceleration limit
  double a_c{2.0};                // m/s^2, comfortable braking
  double t_r{1.0};                // s, reaction time
  double t_r_distance_gate{50.0}; // m, reaction time only counts beyond this
  double prediction_horizon{10.0};
  double dt_sample{0.1};
  double resample_step{1.0};
  /// When set, crosswalks only constrain the ego while a pedestrian is near.
  bool crosswalk_occupancy_only{false};
  double crosswalk_occupancy_radius{5.0};
};

/// Constant-speed motion along a path.
struct Trajectory
{
  Path path;
  double speed{0.0};
  double t0{0.0};

  [[nodiscard]] LocalPoint position(double s) const
  {
    return path.polyline.point_at(speed * s);
  }
};

inline Trajectory predict(Path path, double speed, double t0 = 0.0)
{
  if (speed < 0.0) throw DomainError("trajectory speed must be >= 0");
  if (path.polyline.size() < 2) throw DomainError("cannot predict along an empty path");
  return Trajectory{std::move(path), speed, t0};
}

struct EncounterResult
{
  double d_E{0.0};
  double s_E{0.0};
  LocalPoint point_ego;
  LocalPoint point_other;
  std::size_t ego_path_index{0};
  std::size_t other_path_index{0};
  std::string other_vehicle_id;
  double risk{0.0};  // 1/s
};

/// 1/s_E inside the distance gate, capped at 1/dt; zero outside.
inline double collision_risk_value(double d_E, double s_E, const RiskConfig & cfg)
{
  if (!(d_E < cfg.d_min)) return 0.0;
  if (s_E < cfg.dt_sample) return 1.0 / cfg.dt_sample;
  return 1.0 / s_E;
}

namespace detail
{
/// Times in (lo, hi) at which a trajectory passes a polyline vertex or stops.
inline void add_breakpoints(const Trajectory & t, double lo, double hi, std::vector<double> & out)
{
  if (t.speed <= 0.0) return;
  for (double c : t.path.polyline.cumulative_arclength()) {
    const double s = c / t.speed;
    if (s > lo && s < hi) out.push_back(s);
  }
}
}  // namespace detail

/// Closest encounter of two trajectories. d(s) is scanned at dt_sample over
/// the prediction horizon; the best sample's neighbourhood is then minimised
/// exactly, since both trajectories are piecewise linear in time.
inline EncounterResult encounter(
  const Trajectory & ego, const Trajectory & other, const RiskConfig & cfg = {})
{
  const auto steps = static_cast<std::size_t>(std::llround(cfg.prediction_horizon / cfg.dt_sample));
  std::size_t best_k = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k <= steps; ++k) {
    const double s = static_cast<double>(k) * cfg.dt_sample;
    const double d = geometry::dist2(ego.position(s), other.position(s));
    if (d < best_d - 1e-9) {
      best_d = d;
      best_k = k;
    }
  }

  const double lo = best_k == 0 ? 0.0 : static_cast<double>(best_k - 1) * cfg.dt_sample;
  const double hi = std::min(cfg.prediction_horizon, static_cast<double>(best_k + 1) * cfg.dt_sample);
  std::vector<double> cuts{lo, hi};
  detail::add_breakpoints(ego, lo, hi, cuts);
  detail::add_breakpoints(other, lo, hi, cuts);
  std::sort(cuts.begin(), cuts.end());

  double s_best = static_cast<double>(best_k) * cfg.dt_sample;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double u0 = cuts[i];
    const double u1 = cuts[i + 1];
    if (u1 - u0 < 1e-12) continue;
    const LocalPoint e0 = ego.position(u0), e1 = ego.position(u1);
    const LocalPoint o0 = other.position(u0), o1 = other.position(u1);
    const LocalPoint d0 = o0 - e0;
    const LocalPoint dv = ((o1 - e1) - d0) * (1.0 / (u1 - u0));
    const double vv = geometry::dot2(dv, dv);
    const double u = vv > 1e-18 ? std::clamp(-geometry::dot2(d0, dv) / vv, 0.0, u1 - u0) : 0.0;
    const double d = geometry::norm2(d0 + dv * u);
    if (d < best_d - 1e-9 || (std::abs(d - best_d) <= 1e-9 && u0 + u < s_best)) {
      best_d = d;
      s_best = u0 + u;
    }
  }

  EncounterResult r;
  r.d_E = best_d;
  r.s_E = s_best;
  r.point_ego = ego.position(s_best);
  r.point_other = other.position(s_best);
  r.risk = collision_risk_value(r.d_E, r.s_E, cfg);
  return r;
}

/// An other traffic participant: its path hypotheses and current speed.
struct OtherVehicle
{
  PathTree tree;
  double speed{0.0};
};

struct CollisionRisk
{
  std::vector<EncounterResult> encounters;
  std::optional<EncounterResult> max;
};

/// Encounters over every (ego path, other path) pair; the maximum is the
/// highest positive risk, ties resolved by (vehicle id, other path, ego path).
inline CollisionRisk collision_risk(
  const std::vector<Path> & ego_paths, double ego_speed, const std::vector<OtherVehicle> & others,
  const RiskConfig & cfg = {})
{
  CollisionRisk out;
  for (std::size_t i = 0; i < ego_paths.size(); ++i) {
    if (ego_paths[i].polyline.size() < 2) continue;
    const Trajectory ego = predict(ego_paths[i], ego_speed);
    for (const auto & o : others) {
      for (std::size_t j = 0; j < o.tree.paths.size(); ++j) {
        if (o.tree.paths[j].polyline.size() < 2) continue;
        EncounterResult r = encounter(ego, predict(o.tree.paths[j], o.speed), cfg);
        r.ego_path_index = i;
        r.other_path_index = j;
        r.other_vehicle_id = o.tree.vehicle_id;
        out.encounters.push_back(std::move(r));
      }
    }
  }
  for (const auto & r : out.encounters) {
    if (r.risk <= 0.0) continue;
    if (!out.max) {
      out.max = r;
      continue;
    }
    const auto & m = *out.max;
    const bool better =
      r.risk > m.risk ||
      (r.risk == m.risk &&
       std::tie(r.other_vehicle_id, r.other_path_index, r.ego_path_index) <
         std::tie(m.other_vehicle_id, m.other_path_index, m.ego_path_index));
    if (better) out.max = r;
  }
  return out;
}

enum class TurnDirection { Left, Right };

inline std::string_view to_string(TurnDirection d)
{
  return d == TurnDirection::Left ? "left" : "right";
}

struct TurnSegment
{
  double s_start{0.0};
  double s_end{0.0};
  double s_peak{0.0};  // where |kappa| is maximal
  double kappa_max{0.0};
  TurnDirection direction{TurnDirection::Left};
  double v_tar{0.0};
};

/// Maximal runs with |kappa| >= kappa_th (at least two samples). A run that
/// is already open at the first sample starts at s = 0.
inline std::vector<TurnSegment> detect_turns(
  const geometry::CurvatureProfile & profile, const RiskConfig & cfg = {})
{
  std::vector<TurnSegment> out;
  const std::size_t n = profile.size();
  std::size_t i = 0;
  while (i < n) {
    if (std::abs(profile[i].kappa) < cfg.kappa_th) {
      ++i;
      continue;
    }
    std::size_t j = i;
    std::size_t peak = i;
    while (j < n && std::abs(profile[j].kappa) >= cfg.kappa_th) {
      if (std::abs(profile[j].kappa) > std::abs(profile[peak].kappa)) peak = j;
      ++j;
    }
    if (j - i >= 2) {
      TurnSegment t;
      t.s_start = profile[i].s_along;
      t.s_end = j < n ? profile[j].s_along : profile[j - 1].s_along;
      t.s_peak = profile[peak].s_along;
      t.kappa_max = std::abs(profile[peak].kappa);
      t.direction = profile[peak].kappa > 0.0 ? TurnDirection::Left : TurnDirection::Right;
      t.v_tar = std::sqrt(cfg.a_y / t.kappa_max);
      out.push_back(t);
    }
    i = j;
  }
  return out;
}

enum class RegulatorKind { StopLine, Crosswalk, TrafficLight };

inline std::string_view to_string(RegulatorKind k)
{
  switch (k) {
    case RegulatorKind::StopLine: return "stop_line";
    case RegulatorKind::Crosswalk: return "crosswalk";
    case RegulatorKind::TrafficLight: return "traffic_light";
  }
  return "?";
}

struct RegulatoryTarget
{
  std::string regulator_id;
  RegulatorKind regulator_kind{RegulatorKind::StopLine};
  double d_c{0.0};
  double v_tar{0.0};
  bool active{true};
  LocalPoint anchor;
};

/// Highest speed from which a constant a_c brake still stops within d_c;
/// beyond the reaction-time gate the reaction distance is subtracted.
inline double stopping_target_speed(double d_c, const RiskConfig & cfg = {})
{
  const double v = std::sqrt(2.0 * cfg.a_c * std::max(0.0, d_c));
  if (d_c > cfg.t_r_distance_gate) return std::max(0.0, v - cfg.a_c * cfg.t_r);
  return v;
}

namespace detail
{
inline std::optional<RegulatorKind> regulator_kind(rldm::NodeKind k)
{
  switch (k) {
    case rldm::NodeKind::StopLine: return RegulatorKind::StopLine;
    case rldm::NodeKind::Crosswalk: return RegulatorKind::Crosswalk;
    case rldm::NodeKind::TrafficLight: return RegulatorKind::TrafficLight;
    default: return std::nullopt;
  }
}

inline bool regulator_active(
  const LdmGraph & g, const rldm::LdmNode & reg, const RiskConfig & cfg,
  const rldm::DynamicLayer & dyn)
{
  if (reg.kind == rldm::NodeKind::TrafficLight) {
    for (const auto & s : g.map().targets(reg.id, rldm::RelationKind::HasState)) {
      if (g.light_state(s) == "green") return false;
    }
    return true;
  }
  if (reg.kind == rldm::NodeKind::Crosswalk && cfg.crosswalk_occupancy_only) {
    return std::any_of(dyn.objects.begin(), dyn.objects.end(), [&](const rldm::DynamicObject & o) {
      return o.object_class == rldm::ObjectClass::Pedestrian &&
             geometry::dist2(o.position, *reg.point()) <= cfg.crosswalk_occupancy_radius;
    });
  }
  return true;
}
}  // namespace detail

/// Regulators linked to lanes of `ego_path` that lie ahead of `ego_s` and
/// within the path, nearest first.
inline std::vector<RegulatoryTarget> regulatory_targets(
  const LdmGraph & g, const Path & ego_path, double ego_s = 0.0, const RiskConfig & cfg = {})
{
  std::map<std::string, RegulatoryTarget> found;
  const auto dyn = g.dynamic();
  for (std::size_t i = 0; i < ego_path.node_ids.size(); ++i) {
    const auto & lane = g.at(ego_path.node_ids[i]);
    for (const auto & reg_id : g.regulators(lane.id)) {
      const auto & reg = g.at(reg_id);
      const auto kind = detail::regulator_kind(reg.kind);
      if (!kind || !reg.point()) continue;
      double anchor_s = 0.0;
      if (auto s = reg.number("s_along"); s && reg.kind == rldm::NodeKind::StopLine) {
        anchor_s = *s;
      } else {
        anchor_s = geometry::project(*lane.centerline(), *reg.point()).s_along;
      }
      const double d_c = ego_path.node_starts[i] + anchor_s - ego_s;
      if (d_c < 0.0 || d_c > ego_path.length + 1e-6) continue;
      RegulatoryTarget t;
      t.regulator_id = reg.id;
      t.regulator_kind = *kind;
      t.d_c = d_c;
      t.v_tar = stopping_target_speed(d_c, cfg);
      t.active = detail::regulator_active(g, reg, cfg, *dyn);
      t.anchor = ego_path.polyline.point_at(d_c + ego_s);
      auto it = found.find(reg.id);
      if (it == found.end() || d_c < it->second.d_c) found[reg.id] = t;
    }
  }
  std::vector<RegulatoryTarget> out;
  for (auto & [id, t] : found) out.push_back(std::move(t));
  std::sort(out.begin(), out.end(), [](const auto & a, const auto & b) {
    return a.d_c < b.d_c || (a.d_c == b.d_c && a.regulator_id < b.regulator_id);
  });
  return out;
}

enum class GoverningSource { None, Curve, Regulatory, SpeedLimit };

inline std::string_view to_string(GoverningSource s)
{
  switch (s) {
    case GoverningSource::None: return "none";
    case GoverningSource::Curve: return "curve";
    case GoverningSource::Regulatory: return "regulatory";
    case GoverningSource::SpeedLimit: return "speed_limit";
  }
  return "?";
}

struct RiskAssessment
{
  double timestamp{0.0};
  std::vector<EncounterResult> encounters;
  std::optional<EncounterResult> max_encounter;
  std::vector<TurnSegment> turns;
  std::vector<RegulatoryTarget> regulatory;
  double ego_v0{0.0};
  std::optional<double> speed_limit;
  std::optional<double> governing_v_tar;
  GoverningSource governing_source{GoverningSource::None};
  /// Index into `turns` or `regulatory` of the governing constraint.
  std::optional<std::size_t> governing_index;
};

/// Collision, curve and regulatory evaluation for one tick; the governing
/// target speed is the minimum over active constraints (ties: regulatory,
/// then curve, then speed limit).
inline RiskAssessment assess(
  const LdmGraph & g, const rldm::DynamicObject & ego, const Path & ego_path,
  const std::vector<OtherVehicle> & others, const RiskConfig & cfg = {})
{
  RiskAssessment a;
  a.timestamp = ego.timestamp;
  a.ego_v0 = ego.speed;

  auto collisions = collision_risk({ego_path}, ego.speed, others, cfg);
  a.encounters = std::move(collisions.encounters);
  a.max_encounter = std::move(collisions.max);

  if (ego_path.polyline.size() >= 2) {
    const auto sampled = geometry::resample(ego_path.polyline, cfg.resample_step);
    for (const auto & t : detect_turns(geometry::curvature_profile(sampled), cfg)) {
      if (t.s_end > 0.0) a.turns.push_back(t);
    }
  }
  a.regulatory = regulatory_targets(g, ego_path, 0.0, cfg);
  if (!ego_path.node_ids.empty()) a.speed_limit = g.at(ego_path.node_ids.front()).number("speed_limit");

  auto consider = [&](double v, GoverningSource src, std::optional<std::size_t> idx) {
    if (!a.governing_v_tar || v < *a.governing_v_tar) {
      a.governing_v_tar = v;
      a.governing_source = src;
      a.governing_index = idx;
    }
  };
  for (std::size_t i = 0; i < a.regulatory.size(); ++i) {
    if (a.regulatory[i].active) consider(a.regulatory[i].v_tar, GoverningSource::Regulatory, i);
  }
  for (std::size_t i = 0; i < a.turns.size(); ++i) {
    consider(a.turns[i].v_tar, GoverningSource::Curve, i);
  }
  if (a.speed_limit) consider(*a.speed_limit, GoverningSource::SpeedLimit, std::nullopt);
  return a;
}

}  // namespace rns::risk
