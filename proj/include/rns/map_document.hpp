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
#include "rns/rldm.hpp"

#include <json.hpp>

#include <set>
#include <string>
#include <variant>

namespace rns
{

inline constexpr int kMapSchemaVersion = 1;

/// Whole static map as one document: nodes with geometry, attributes and the
/// viewport chunks they touch, plus every static relation.
inline nlohmann::json map_document(
  const rldm::StaticMap & m, const geometry::GeoPoint & origin, double chunk_size = hmi::HmiConfig{}.chunk_size)
{
  using hmi::detail::point_json;
  using hmi::detail::polyline_json;
  using nlohmann::json;

  json nodes = json::array();
  for (const auto & n : m.nodes()) {
    json node;
    node["id"] = n.id;
    node["kind"] = std::string(rldm::to_string(n.kind));
    std::set<std::string> chunks;
    if (const auto * line = n.centerline()) {
      node["geometry"] = {{"type", "polyline"}, {"points", polyline_json(*line)}};
      for (const auto & p : line->points()) chunks.insert(hmi::chunk_id(p, chunk_size));
    } else if (const auto * p = n.point()) {
      node["geometry"] = {{"type", "point"}, {"point", point_json(*p)}};
      chunks.insert(hmi::chunk_id(*p, chunk_size));
    } else {
      node["geometry"] = nullptr;
    }
    json attrs = json::object();
    for (const auto & [k, v] : n.attributes) {
      if (const auto * d = std::get_if<double>(&v)) {
        attrs[k] = hmi::detail::round3(*d);
      } else {
        attrs[k] = std::get<std::string>(v);
      }
    }
    node["attributes"] = attrs;
    node["chunks"] = chunks;
    nodes.push_back(std::move(node));
  }

  json relations = json::array();
  for (const auto & r : m.relations()) {
    relations.push_back({{"src", r.src}, {"kind", std::string(rldm::to_string(r.kind))}, {"dst", r.dst}});
  }

  return {
    {"schema_version", kMapSchemaVersion},
    {"origin", {{"lat", origin.lat}, {"lon", origin.lon}}},
    {"chunk_size", chunk_size},
    {"nodes", nodes},
    {"relations", relations}};
}

}  // namespace rns
