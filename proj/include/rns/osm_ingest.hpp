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

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rns::osm
{

using geometry::GeoPoint;
using geometry::LocalPoint;
using geometry::Polyline;
using OsmId = std::int64_t;
using Tags = std::map<std::string, std::string, std::less<>>;

/// Malformed or inconsistent OSM input. `line()` is 0 when unknown.
class ParseError : public std::runtime_error
{
public:
  ParseError(const std::string & what, unsigned long line = 0)
  : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line)
  {
  }
  [[nodiscard]] unsigned long line() const { return line_; }

private:
  unsigned long line_;
};

/// Inconsistent augmentation data or an unusable road set.
class BuildError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct OsmNode
{
  GeoPoint position;
  Tags tags;
};

struct OsmWay
{
  std::vector<OsmId> refs;
  Tags tags;
};

struct Bounds
{
  double min_lat{0.0};
  double min_lon{0.0};
  double max_lat{0.0};
  double max_lon{0.0};

  [[nodiscard]] GeoPoint center() const
  {
    return {0.5 * (min_lat + max_lat), 0.5 * (min_lon + max_lon), 0.0};
  }
};

struct OsmExtract
{
  std::map<OsmId, OsmNode> nodes;
  std::map<OsmId, OsmWay> ways;
  Bounds bounds;
};

inline std::string_view tag(const Tags & tags, std::string_view key)
{
  auto it = tags.find(key);
  return it == tags.end() ? std::string_view{} : std::string_view{it->second};
}

/// Highway values that carry motor traffic and become lanes.
inline bool is_road_highway(std::string_view v)
{
  static const std::set<std::string, std::less<>> roads{
    "motorway",     "trunk",          "primary",       "secondary",     "tertiary",
    "unclassified", "residential",    "service",       "living_street", "road",
    "motorway_link", "trunk_link",    "primary_link",  "secondary_link", "tertiary_link"};
  return roads.contains(v);
}

inline bool is_crossing(const Tags & tags)
{
  const auto crossing = tag(tags, "crossing");
  return tag(tags, "highway") == "crossing" || tag(tags, "footway") == "crossing" ||
         (!crossing.empty() && crossing != "no");
}

inline bool is_traffic_signal(const Tags & tags)
{
  return tag(tags, "highway") == "traffic_signals" || tag(tags, "crossing") == "traffic_signals";
}

namespace detail
{
inline Tags read_tags(const boost::property_tree::ptree & elem)
{
  Tags tags;
  for (const auto & [name, child] : elem) {
    if (name != "tag") continue;
    tags[child.get<std::string>("<xmlattr>.k", "")] = child.get<std::string>("<xmlattr>.v", "");
  }
  return tags;
}

inline bool keep_way(const Tags & tags)
{
  return tags.contains("highway") || tags.contains("building") || is_crossing(tags) ||
         is_traffic_signal(tags);
}
}  // namespace detail

/// Reads `<bounds>`, `<node>` and `<way>` elements. Ways that are neither
/// roads nor buildings/crossings/signals are dropped; relations are ignored.
inline OsmExtract parse_osm(const std::string & xml_text)
{
  namespace pt = boost::property_tree;
  pt::ptree doc;
  std::istringstream in(xml_text);
  try {
    pt::read_xml(in, doc);
  } catch (const pt::xml_parser_error & e) {
    throw ParseError(e.message(), e.line());
  }
  const auto root = doc.get_child_optional("osm");
  if (!root) throw ParseError("missing <osm> root element");

  OsmExtract ex;
  std::optional<Bounds> declared;
  for (const auto & [name, elem] : *root) {
    try {
      if (name == "bounds") {
        declared = Bounds{
          elem.get<double>("<xmlattr>.minlat"), elem.get<double>("<xmlattr>.minlon"),
          elem.get<double>("<xmlattr>.maxlat"), elem.get<double>("<xmlattr>.maxlon")};
      } else if (name == "node") {
        const auto id = elem.get<OsmId>("<xmlattr>.id");
        OsmNode n{
          {elem.get<double>("<xmlattr>.lat"), elem.get<double>("<xmlattr>.lon"),
           elem.get<double>("<xmlattr>.ele", 0.0)},
          detail::read_tags(elem)};
        geometry::validate(n.position);
        ex.nodes[id] = std::move(n);
      } else if (name == "way") {
        const auto id = elem.get<OsmId>("<xmlattr>.id");
        OsmWay w;
        for (const auto & [child_name, child] : elem) {
          if (child_name == "nd") w.refs.push_back(child.get<OsmId>("<xmlattr>.ref"));
        }
        w.tags = detail::read_tags(elem);
        if (detail::keep_way(w.tags)) ex.ways[id] = std::move(w);
      }
    } catch (const pt::ptree_error & e) {
      throw ParseError("bad <" + name + "> element: " + e.what());
    } catch (const DomainError & e) {
      throw ParseError(std::string("bad <node> element: ") + e.what());
    }
  }

  for (const auto & [id, w] : ex.ways) {
    for (OsmId ref : w.refs) {
      if (!ex.nodes.contains(ref)) {
        throw ParseError(
          "way " + std::to_string(id) + " references missing node " + std::to_string(ref));
      }
    }
    if (w.tags.contains("highway") && w.refs.size() < 2) {
      throw ParseError("highway way " + std::to_string(id) + " has fewer than 2 nodes");
    }
  }

  if (declared) {
    ex.bounds = *declared;
  } else if (!ex.nodes.empty()) {
    Bounds b{90.0, 180.0, -90.0, -180.0};
    for (const auto & [id, n] : ex.nodes) {
      b.min_lat = std::min(b.min_lat, n.position.lat);
      b.max_lat = std::max(b.max_lat, n.position.lat);
      b.min_lon = std::min(b.min_lon, n.position.lon);
      b.max_lon = std::max(b.max_lon, n.position.lon);
    }
    ex.bounds = b;
  }
  return ex;
}

/// A point given either geographically or in local coordinates.
struct PlacedPoint
{
  std::optional<GeoPoint> geo;
  std::optional<LocalPoint> local;
};

struct StopLineSpec
{
  rldm::NodeId lane;
  double s_along{0.0};
};

struct AugmentationConfig
{
  double default_lane_width{3.5};
  double default_speed_limit{13.89};  // m/s, used when a way has no maxspeed
  std::map<OsmId, int> lanes_per_direction;
  std::vector<StopLineSpec> stop_lines;
  std::vector<PlacedPoint> crosswalks;
  std::vector<PlacedPoint> traffic_lights;
  std::optional<GeoPoint> origin;
  double regulator_link_distance{10.0};
  double intersection_margin{2.0};
};

namespace detail
{
inline PlacedPoint read_point(const nlohmann::json & j, const std::string & where)
{
  PlacedPoint p;
  if (j.contains("lat") || j.contains("lon")) {
    p.geo = GeoPoint{j.at("lat").get<double>(), j.at("lon").get<double>(), j.value("alt", 0.0)};
    geometry::validate(*p.geo);
  } else if (j.contains("x") && j.contains("y")) {
    p.local = LocalPoint{j.at("x").get<double>(), j.at("y").get<double>(), j.value("z", 0.0)};
  } else {
    throw BuildError(where + ": expected {lat, lon} or {x, y}");
  }
  return p;
}
}  // namespace detail

/// Parses the JSON augmentation document (see docs/augmentation.md).
inline AugmentationConfig parse_augmentation(const std::string & text)
{
  AugmentationConfig aug;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error & e) {
    throw BuildError(std::string("augmentation: ") + e.what());
  }
  try {
    if (j.value("schema_version", 1) != 1) throw BuildError("augmentation: unsupported schema_version");
    aug.default_lane_width = j.value("default_lane_width", aug.default_lane_width);
    aug.default_speed_limit = j.value("default_speed_limit", aug.default_speed_limit);
    aug.regulator_link_distance = j.value("regulator_link_distance", aug.regulator_link_distance);
    if (!(aug.default_lane_width > 0.0)) throw BuildError("augmentation: default_lane_width must be > 0");
    if (j.contains("lanes_per_direction")) {
      for (const auto & [way, count] : j.at("lanes_per_direction").items()) {
        const int n = count.get<int>();
        if (n < 1) throw BuildError("augmentation: lanes_per_direction." + way + " must be >= 1");
        aug.lanes_per_direction[std::stoll(way)] = n;
      }
    }
    if (j.contains("stop_lines")) {
      for (const auto & s : j.at("stop_lines")) {
        aug.stop_lines.push_back({s.at("lane").get<std::string>(), s.at("s_along").get<double>()});
      }
    }
    for (const char * key : {"crosswalks", "traffic_lights"}) {
      if (!j.contains(key)) continue;
      auto & dst = std::string_view(key) == "crosswalks" ? aug.crosswalks : aug.traffic_lights;
      for (const auto & p : j.at(key)) dst.push_back(detail::read_point(p, key));
    }
    if (j.contains("origin")) {
      const auto & o = j.at("origin");
      aug.origin = GeoPoint{o.at("lat").get<double>(), o.at("lon").get<double>(), o.value("alt", 0.0)};
      geometry::validate(*aug.origin);
    }
  } catch (const nlohmann::json::exception & e) {
    throw BuildError(std::string("augmentation: ") + e.what());
  } catch (const std::invalid_argument & e) {
    throw BuildError(std::string("augmentation: ") + e.what());
  }
  return aug;
}

/// Lane-level node identifiers.
inline std::string road_id(OsmId way, std::size_t part)
{
  return "R" + std::to_string(way) + "." + std::to_string(part);
}
inline std::string half_road_id(OsmId way, std::size_t part, bool forward)
{
  return road_id(way, part) + (forward ? "f" : "b");
}
inline std::string lane_id(OsmId way, std::size_t part, bool forward, int index)
{
  return "L" + std::to_string(way) + "." + std::to_string(part) + (forward ? "f" : "b") +
         std::to_string(index);
}

/// Speed in m/s from an OSM maxspeed value ("50", "30 mph", ...).
inline std::optional<double> parse_maxspeed(std::string_view v)
{
  if (v.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double num = std::stod(std::string(v), &used);
    const bool mph = v.find("mph") != std::string_view::npos;
    if (!(num > 0.0)) return std::nullopt;
    return mph ? num * 0.44704 : num / 3.6;
  } catch (const std::exception &) {
    return std::nullopt;
  }
}

/// Connector from a lane end (p_in, h_in) to a lane start (p_out, h_out):
/// straight lead-in, circular arc tangent to both lanes, straight lead-out.
/// Falls back to a cubic Hermite blend when no arc of radius >= min_radius
/// fits.
inline Polyline junction_connector(
  const LocalPoint & p_in, double h_in, const LocalPoint & p_out, double h_out,
  double min_radius = 3.0)
{
  using namespace geometry;
  const LocalPoint d_in{std::cos(h_in), std::sin(h_in)};
  const LocalPoint d_out{std::cos(h_out), std::sin(h_out)};
  const double turn = normalize_angle(h_out - h_in);
  const LocalPoint gap = p_out - p_in;

  auto hermite = [&]() {
    const double scale = norm2(gap);
    std::vector<LocalPoint> pts;
    constexpr int kSteps = 24;
    for (int k = 0; k <= kSteps; ++k) {
      const double t = static_cast<double>(k) / kSteps;
      const double h00 = 2 * t * t * t - 3 * t * t + 1;
      const double h10 = t * t * t - 2 * t * t + t;
      const double h01 = -2 * t * t * t + 3 * t * t;
      const double h11 = t * t * t - t * t;
      pts.push_back(p_in * h00 + d_in * (h10 * scale) + p_out * h01 + d_out * (h11 * scale));
    }
    return Polyline::cleaned(pts);
  };

  if (std::abs(turn) < 1e-3) {
    if (std::abs(cross2(d_in, gap)) < 0.05 && dot2(d_in, gap) > 0.0) {
      return Polyline::cleaned(std::vector<LocalPoint>{p_in, p_out});
    }
    return hermite();
  }
  // Corner where the two lane tangents meet: p_in + a*d_in == p_out - b*d_out.
  const double denom = cross2(d_in, d_out);
  const double a = cross2(gap, d_out) / denom;
  const double b = cross2(d_in, gap) / denom;
  if (a <= 0.0 || b <= 0.0) return hermite();
  const double tangent = std::min(a, b);
  const double radius = tangent / std::tan(std::abs(turn) / 2.0);
  if (radius < min_radius) return hermite();

  const LocalPoint corner = p_in + d_in * a;
  const LocalPoint t1 = corner - d_in * tangent;
  const double side = turn > 0.0 ? 1.0 : -1.0;
  const LocalPoint center = t1 + LocalPoint{-d_in.y, d_in.x} * (radius * side);
  const double start_angle = std::atan2(t1.y - center.y, t1.x - center.x);
  const int steps = std::max(4, static_cast<int>(std::ceil(std::abs(turn) * radius / 0.5)));

  std::vector<LocalPoint> pts{p_in};
  for (int k = 0; k <= steps; ++k) {
    const double ang = start_angle + turn * static_cast<double>(k) / steps;
    pts.push_back({center.x + radius * std::cos(ang), center.y + radius * std::sin(ang), p_in.z});
  }
  pts.push_back(p_out);
  return Polyline::cleaned(pts);
}

namespace detail
{

struct Part
{
  OsmId way;
  std::size_t index;
  std::vector<OsmId> refs;
  Polyline centerline;  // untrimmed, local
  bool forward{true};
  bool backward{true};
  int lanes_forward{1};
  int lanes_backward{1};
  double lane_width{3.5};
  double speed_limit{13.89};
};

/// A lane end at an OSM node; `arm` identifies (part, which end).
struct LaneEnd
{
  std::string lane;
  int lane_index;
  std::pair<std::size_t, bool> arm;
  LocalPoint point;
  double heading;
};

inline LocalPoint unit(const LocalPoint & d) { return d * (1.0 / geometry::norm2(d)); }

}  // namespace detail

/// Origin of the local frame: the augmentation's, else the extract center.
inline GeoPoint map_origin(const OsmExtract & ex, const AugmentationConfig & aug)
{
  return aug.origin.value_or(ex.bounds.center());
}

/// Builds static and quasi-static layers: lane chains offset from way
/// centerlines, intersections with junction connectors, regulators.
inline rldm::LdmGraph build_static_map(const OsmExtract & ex, const AugmentationConfig & aug)
{
  using namespace geometry;
  using rldm::LdmNode;
  using rldm::NodeKind;
  using rldm::Relation;
  using rldm::RelationKind;

  const GeoPoint origin = map_origin(ex, aug);
  auto local_of = [&](OsmId id) { return to_local(origin, ex.nodes.at(id).position); };

  // Road ways with consecutive duplicate refs removed.
  std::map<OsmId, std::vector<OsmId>> road_refs;
  for (const auto & [id, w] : ex.ways) {
    if (!is_road_highway(tag(w.tags, "highway"))) continue;
    std::vector<OsmId> refs;
    for (OsmId r : w.refs) {
      if (refs.empty() || refs.back() != r) refs.push_back(r);
    }
    if (refs.size() >= 2) road_refs[id] = std::move(refs);
  }
  if (road_refs.empty()) throw BuildError("extract contains no drivable highway ways");

  // Arms meeting at each OSM node; three or more make an intersection.
  std::map<OsmId, int> arms;
  for (const auto & [id, refs] : road_refs) {
    for (std::size_t i = 0; i < refs.size(); ++i) {
      arms[refs[i]] += (i == 0 || i + 1 == refs.size()) ? 1 : 2;
    }
  }
  auto is_intersection = [&](OsmId n) { return arms[n] >= 3; };

  // Split ways at interior intersection nodes.
  std::vector<detail::Part> parts;
  for (const auto & [id, refs] : road_refs) {
    const auto & tags = ex.ways.at(id).tags;
    const auto oneway = tag(tags, "oneway");
    const bool roundabout = tag(tags, "junction") == "roundabout";
    const bool one_fwd = oneway == "yes" || oneway == "true" || oneway == "1" || roundabout;
    const bool one_bwd = oneway == "-1" || oneway == "reverse";
    const int override_n = aug.lanes_per_direction.contains(id) ? aug.lanes_per_direction.at(id) : 1;
    const double limit = parse_maxspeed(tag(tags, "maxspeed")).value_or(aug.default_speed_limit);

    std::vector<OsmId> current{refs.front()};
    std::size_t part_index = 0;
    for (std::size_t i = 1; i < refs.size(); ++i) {
      current.push_back(refs[i]);
      if ((is_intersection(refs[i]) && i + 1 < refs.size()) || i + 1 == refs.size()) {
        std::vector<LocalPoint> pts;
        for (OsmId r : current) pts.push_back(local_of(r));
        std::vector<LocalPoint> clean;
        append_points(clean, pts);
        if (clean.size() >= 2) {
          detail::Part p;
          p.way = id;
          p.index = part_index;
          p.refs = current;
          p.centerline = Polyline(std::move(clean));
          p.forward = !one_bwd;
          p.backward = !one_fwd;
          p.lanes_forward = p.forward ? override_n : 0;
          p.lanes_backward = p.backward ? override_n : 0;
          p.lane_width = aug.default_lane_width;
          p.speed_limit = limit;
          parts.push_back(std::move(p));
        }
        ++part_index;
        current = {refs[i]};
      }
    }
  }

  auto half_width = [](const detail::Part & p) {
    const bool two_way = p.forward && p.backward;
    return two_way ? std::max(p.lanes_forward, p.lanes_backward) * p.lane_width
                   : 0.5 * std::max(p.lanes_forward, p.lanes_backward) * p.lane_width;
  };

  // Setback of lane ends from each intersection node.
  std::map<OsmId, double> setback;
  for (const auto & p : parts) {
    for (OsmId end : {p.refs.front(), p.refs.back()}) {
      if (!is_intersection(end)) continue;
      setback[end] = std::max(setback[end], half_width(p) + aug.intersection_margin);
    }
  }

  // Parts incident to each node, for continuation mitres.
  std::map<OsmId, std::vector<std::pair<std::size_t, bool>>> incident;  // (part, at_start)
  for (std::size_t i = 0; i < parts.size(); ++i) {
    incident[parts[i].refs.front()].push_back({i, true});
    incident[parts[i].refs.back()].push_back({i, false});
  }
  // Direction of travel leaving node `n` along the other part (away from n).
  auto away_direction = [&](OsmId n, std::pair<std::size_t, bool> self) -> std::optional<LocalPoint> {
    if (is_intersection(n)) return std::nullopt;
    const auto & inc = incident[n];
    if (inc.size() != 2) return std::nullopt;
    const auto other = inc[0] == self ? inc[1] : inc[0];
    const auto & pts = parts[other.first].centerline.points();
    if (other.second) return detail::unit(pts[1] - pts[0]);
    return detail::unit(pts[pts.size() - 2] - pts.back());
  };

  std::vector<LdmNode> nodes;
  std::vector<Relation> relations;
  std::map<OsmId, std::vector<detail::LaneEnd>> incoming, outgoing;

  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    auto & p = parts[pi];
    const OsmId first = p.refs.front();
    const OsmId last = p.refs.back();
    const double len = p.centerline.length();
    double cut0 = is_intersection(first) ? setback[first] : 0.0;
    double cut1 = is_intersection(last) ? setback[last] : 0.0;
    if (cut0 + cut1 > len - 1.0) {
      const double scale = std::max(0.0, len - 1.0) / (cut0 + cut1);
      cut0 *= scale;
      cut1 *= scale;
    }
    const Polyline trimmed = (cut0 > 0.0 || cut1 > 0.0) ? p.centerline.slice(cut0, len - cut1) : p.centerline;
    if (trimmed.size() < 2) continue;

    const std::string rid = road_id(p.way, p.index);
    nodes.push_back({rid, NodeKind::Road, p.centerline, {{"way_id", static_cast<double>(p.way)}}});

    // Continuation directions (unit vectors) in way orientation.
    const auto start_away = away_direction(first, {pi, true});
    const auto end_away = away_direction(last, {pi, false});

    for (bool fwd : {true, false}) {
      const int n = fwd ? p.lanes_forward : p.lanes_backward;
      if (n == 0) continue;
      const bool two_way = p.forward && p.backward;
      const std::string hid = half_road_id(p.way, p.index, fwd);
      nodes.push_back({hid, NodeKind::HalfRoad, std::monostate{}, {{"lanes", static_cast<double>(n)}}});
      relations.push_back({hid, RelationKind::PartOf, rid});

      std::vector<LocalPoint> base = trimmed.points();
      std::optional<LocalPoint> in_dir, out_dir;
      // Travel direction arriving at the start / leaving from the end.
      if (fwd) {
        if (start_away) in_dir = *start_away * -1.0;
        if (end_away) out_dir = *end_away;
      } else {
        std::reverse(base.begin(), base.end());
        if (end_away) in_dir = *end_away * -1.0;
        if (start_away) out_dir = *start_away;
      }
      const Polyline travel(std::move(base));
      const OsmId from_node = fwd ? first : last;
      const OsmId to_node = fwd ? last : first;
      for (int i = 0; i < n; ++i) {
        const double off = two_way ? (i + 0.5) * p.lane_width : (i + 0.5 - 0.5 * n) * p.lane_width;
        Polyline lane = offset(travel, -off, in_dir ? &*in_dir : nullptr, out_dir ? &*out_dir : nullptr);
        const std::string lid = lane_id(p.way, p.index, fwd, i);
        detail::LaneEnd start{lid, i, {pi, fwd}, lane.front(), lane.start_heading()};
        detail::LaneEnd end{lid, i, {pi, !fwd}, lane.back(), lane.end_heading()};
        outgoing[from_node].push_back(start);
        incoming[to_node].push_back(end);
        nodes.push_back(
          {lid,
           NodeKind::LaneSegment,
           std::move(lane),
           {{"lane_width", p.lane_width},
            {"speed_limit", p.speed_limit},
            {"way_id", static_cast<double>(p.way)},
            {"lane_index", static_cast<double>(i)},
            {"direction", std::string(fwd ? "forward" : "backward")}}});
        relations.push_back({lid, RelationKind::PartOf, hid});
      }
    }
  }

  auto by_lane = [](const detail::LaneEnd & a, const detail::LaneEnd & b) { return a.lane < b.lane; };
  for (auto & [n, v] : incoming) std::sort(v.begin(), v.end(), by_lane);
  for (auto & [n, v] : outgoing) std::sort(v.begin(), v.end(), by_lane);

  for (const auto & [osm_node, ins] : incoming) {
    const auto out_it = outgoing.find(osm_node);
    if (out_it == outgoing.end()) continue;
    const auto & outs = out_it->second;
    if (!is_intersection(osm_node)) {
      // Continuation: pair lanes by index across different arms.
      std::set<std::pair<std::string, std::string>> links;
      for (const auto & in : ins) {
        std::vector<const detail::LaneEnd *> cands;
        int max_out = 0;
        for (const auto & o : outs) {
          if (o.arm == in.arm) continue;
          cands.push_back(&o);
          max_out = std::max(max_out, o.lane_index);
        }
        int max_in = 0;
        for (const auto & c : ins) {
          if (c.arm == in.arm) max_in = std::max(max_in, c.lane_index);
        }
        for (const auto * o : cands) {
          if (o->lane_index == std::min(in.lane_index, max_out) ||
              in.lane_index == std::min(o->lane_index, max_in)) {
            links.insert({in.lane, o->lane});
          }
        }
      }
      for (const auto & [a, b] : links) relations.push_back({a, RelationKind::Successor, b});
      continue;
    }
    const std::string iid = "I" + std::to_string(osm_node);
    nodes.push_back({iid, NodeKind::Intersection, local_of(osm_node), {}});
    for (const auto & in : ins) {
      for (const auto & o : outs) {
        if (o.arm.first == in.arm.first) continue;  // no U-turns back into the same road part
        const std::string jid = "J" + std::to_string(osm_node) + ":" + in.lane + "-" + o.lane;
        Polyline conn = junction_connector(in.point, in.heading, o.point, o.heading);
        nodes.push_back(
          {jid,
           NodeKind::LaneJunction,
           std::move(conn),
           {{"from", in.lane}, {"to", o.lane}, {"junction_flag", 1.0}}});
        relations.push_back({jid, RelationKind::PartOf, iid});
        relations.push_back({in.lane, RelationKind::Successor, jid});
        relations.push_back({jid, RelationKind::Successor, o.lane});
      }
    }
  }

  // Speed limits carry over onto junction connectors from their entry lane.
  std::map<std::string, double> lane_limit;
  for (const auto & n : nodes) {
    if (n.kind == NodeKind::LaneSegment) lane_limit[n.id] = *n.number("speed_limit");
  }
  for (auto & n : nodes) {
    if (n.kind != NodeKind::LaneJunction) continue;
    n.attributes["speed_limit"] = lane_limit[*n.text("from")];
    n.attributes["lane_width"] = aug.default_lane_width;
  }

  // Quasi-static objects.
  struct PointObject
  {
    std::string id;
    NodeKind kind;
    LocalPoint where;
  };
  std::vector<PointObject> point_objects;
  std::set<OsmId> crossing_nodes;
  for (const auto & [id, n] : ex.nodes) {
    if (is_traffic_signal(n.tags)) {
      point_objects.push_back({"T" + std::to_string(id), NodeKind::TrafficLight, local_of(id)});
    } else if (is_crossing(n.tags)) {
      point_objects.push_back({"C" + std::to_string(id), NodeKind::Crosswalk, local_of(id)});
      crossing_nodes.insert(id);
    }
  }
  for (const auto & [id, w] : ex.ways) {
    if (tag(w.tags, "building").empty()) {
      if (!is_crossing(w.tags) || road_refs.contains(id)) continue;
      // Crossing footways: the crosswalk sits where they meet a road.
      for (OsmId r : w.refs) {
        if (arms.contains(r) && !crossing_nodes.contains(r)) {
          point_objects.push_back({"C" + std::to_string(r), NodeKind::Crosswalk, local_of(r)});
          crossing_nodes.insert(r);
        }
      }
      continue;
    }
    std::vector<LocalPoint> outline;
    for (OsmId r : w.refs) append_points(outline, std::vector<LocalPoint>{local_of(r)});
    LdmNode b{"B" + std::to_string(id), NodeKind::Building, std::monostate{}, {}};
    if (outline.size() >= 2) {
      b.geometry = Polyline(std::move(outline));
    } else if (!outline.empty()) {
      b.geometry = outline.front();
    }
    nodes.push_back(std::move(b));
  }
  auto place = [&](const PlacedPoint & p) { return p.geo ? to_local(origin, *p.geo) : *p.local; };
  for (std::size_t i = 0; i < aug.crosswalks.size(); ++i) {
    point_objects.push_back({"Caug" + std::to_string(i), NodeKind::Crosswalk, place(aug.crosswalks[i])});
  }
  for (std::size_t i = 0; i < aug.traffic_lights.size(); ++i) {
    point_objects.push_back({"Taug" + std::to_string(i), NodeKind::TrafficLight, place(aug.traffic_lights[i])});
  }

  std::vector<const LdmNode *> lane_nodes;
  for (const auto & n : nodes) {
    if (n.kind == NodeKind::LaneSegment) lane_nodes.push_back(&n);
  }
  std::vector<Relation> regulated;
  for (const auto & obj : point_objects) {
    for (const auto * lane : lane_nodes) {
      const auto & cl = *lane->centerline();
      const auto pr = project(cl, obj.where);
      if (pr.distance() > aug.regulator_link_distance) continue;
      // Only lanes leading towards the object: it must not lie behind the lane start.
      const LocalPoint start_dir{std::cos(cl.start_heading()), std::sin(cl.start_heading())};
      if (pr.s_along <= 1e-9 && dot2(obj.where - cl.front(), start_dir) < 0.0) continue;
      regulated.push_back({lane->id, RelationKind::RegulatedBy, obj.id});
    }
  }
  for (const auto & obj : point_objects) {
    nodes.push_back({obj.id, obj.kind, obj.where, {}});
    if (obj.kind == NodeKind::TrafficLight) {
      const std::string sid = "S" + obj.id;
      nodes.push_back({sid, NodeKind::TrafficLightState, obj.where, {{"color", std::string("unknown")}}});
      relations.push_back({obj.id, RelationKind::HasState, sid});
    }
  }
  relations.insert(relations.end(), regulated.begin(), regulated.end());

  for (std::size_t i = 0; i < aug.stop_lines.size(); ++i) {
    const auto & sl = aug.stop_lines[i];
    const auto it = std::find_if(nodes.begin(), nodes.end(), [&](const LdmNode & n) {
      return n.id == sl.lane && rldm::is_lane(n.kind);
    });
    if (it == nodes.end()) throw BuildError("stop line references unknown lane '" + sl.lane + "'");
    const auto & cl = *it->centerline();
    if (sl.s_along < 0.0 || sl.s_along > cl.length()) {
      throw BuildError("stop line s_along outside lane '" + sl.lane + "'");
    }
    const std::string sid = "Stop" + std::to_string(i);
    const LocalPoint where = cl.point_at(sl.s_along);
    const std::string lane = sl.lane;
    nodes.push_back({sid, NodeKind::StopLine, where, {{"lane", lane}, {"s_along", sl.s_along}}});
    relations.push_back({lane, RelationKind::RegulatedBy, sid});
  }

  return rldm::build(std::move(nodes), std::move(relations));
}

}  // namespace rns::osm
