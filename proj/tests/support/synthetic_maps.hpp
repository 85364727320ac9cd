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

// OSM extracts written from local coordinates, for tests.

#pragma once

#include "rns/geometry.hpp"
#include "rns/osm_ingest.hpp"
#include "rns/rldm.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace rns::test
{

using geometry::GeoPoint;
using geometry::LocalPoint;

inline const GeoPoint kOrigin{50.1, 8.76, 0.0};

using TagList = std::vector<std::pair<std::string, std::string>>;

class OsmBuilder
{
public:
  OsmBuilder & node(long id, double x, double y, TagList tags = {})
  {
    nodes_.push_back({id, geometry::to_geo(kOrigin, {x, y, 0.0}), std::move(tags)});
    return *this;
  }

  OsmBuilder & way(long id, std::vector<long> refs, TagList tags = {{"highway", "residential"}})
  {
    ways_.push_back({id, std::move(refs), std::move(tags)});
    return *this;
  }

  [[nodiscard]] std::string xml() const
  {
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<osm version=\"0.6\">\n";
    char buf[256];
    for (const auto & n : nodes_) {
      std::snprintf(buf, sizeof buf, "  <node id=\"%ld\" lat=\"%.12f\" lon=\"%.12f\"", n.id, n.pos.lat, n.pos.lon);
      out += buf;
      if (n.tags.empty()) {
        out += "/>\n";
        continue;
      }
      out += ">\n";
      for (const auto & [k, v] : n.tags) out += "    <tag k=\"" + k + "\" v=\"" + v + "\"/>\n";
      out += "  </node>\n";
    }
    for (const auto & w : ways_) {
      out += "  <way id=\"" + std::to_string(w.id) + "\">\n";
      for (long r : w.refs) out += "    <nd ref=\"" + std::to_string(r) + "\"/>\n";
      for (const auto & [k, v] : w.tags) out += "    <tag k=\"" + k + "\" v=\"" + v + "\"/>\n";
      out += "  </way>\n";
    }
    out += "</osm>\n";
    return out;
  }

private:
  struct N
  {
    long id;
    GeoPoint pos;
    TagList tags;
  };
  struct W
  {
    long id;
    std::vector<long> refs;
    TagList tags;
  };
  std::vector<N> nodes_;
  std::vector<W> ways_;
};

inline osm::AugmentationConfig fixed_origin()
{
  osm::AugmentationConfig aug;
  aug.origin = kOrigin;
  return aug;
}

inline std::string origin_json()
{
  char buf[128];
  std::snprintf(buf, sizeof buf, "\"origin\": {\"lat\": %.12f, \"lon\": %.12f}", kOrigin.lat, kOrigin.lon);
  return buf;
}

/// Two two-way ways crossing at node 1 in the local origin. Way 10 runs west
/// to east along y = 0, way 20 south to north along x = 0.
inline OsmBuilder x_intersection(double arm = 100.0)
{
  OsmBuilder b;
  b.node(1, 0, 0).node(2, -arm, 0).node(3, arm, 0).node(4, 0, -arm).node(5, 0, arm);
  b.way(10, {2, 1, 3}).way(20, {4, 1, 5});
  return b;
}

/// Way 10 west to east, way 20 ends at the junction from the south.
inline OsmBuilder t_junction(double arm = 100.0)
{
  OsmBuilder b;
  b.node(1, 0, 0).node(2, -arm, 0).node(3, arm, 0).node(4, 0, -arm);
  b.way(10, {2, 1, 3}).way(20, {4, 1});
  return b;
}

/// One-way way 30: east along y = 0 for `lead` m, a right-hand arc of
/// `radius` through `sweep` rad, then straight for `tail` m. Nodes every
/// `step` m of arc.
inline OsmBuilder curve_road(double radius, double lead = 60.0, double tail = 60.0, double sweep = std::numbers::pi / 2,
                             double step = 1.0)
{
  OsmBuilder b;
  std::vector<long> refs;
  long id = 100;
  auto add = [&](double x, double y) {
    b.node(id, x, y);
    refs.push_back(id++);
  };
  for (double x = -lead; x < 0.0 - 1e-9; x += 10.0) add(x, 0.0);
  // Arc centred at (0, -radius), heading east at the start, turning right.
  const int n = std::max(2, static_cast<int>(std::ceil(radius * sweep / step)));
  for (int i = 0; i <= n; ++i) {
    const double a = sweep * i / n;
    add(radius * std::sin(a), -radius + radius * std::cos(a));
  }
  const double hx = std::cos(-sweep);
  const double hy = std::sin(-sweep);
  const LocalPoint end{radius * std::sin(sweep), -radius + radius * std::cos(sweep), 0.0};
  for (double d = 10.0; d <= tail + 1e-9; d += 10.0) add(end.x + hx * d, end.y + hy * d);
  b.way(30, refs, {{"highway", "residential"}, {"oneway", "yes"}});
  return b;
}

/// Square grid of two-way streets: `n` x `n` nodes spaced `spacing` m.
inline OsmBuilder grid(int n, double spacing = 80.0)
{
  OsmBuilder b;
  auto nid = [n](int i, int j) { return 1000L + i * n + j; };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) b.node(nid(i, j), i * spacing, j * spacing);
  }
  long way = 1;
  for (int j = 0; j < n; ++j) {
    std::vector<long> refs;
    for (int i = 0; i < n; ++i) refs.push_back(nid(i, j));
    b.way(way++, refs);
  }
  for (int i = 0; i < n; ++i) {
    std::vector<long> refs;
    for (int j = 0; j < n; ++j) refs.push_back(nid(i, j));
    b.way(way++, refs);
  }
  return b;
}

inline rldm::LdmGraph build(const OsmBuilder & b, osm::AugmentationConfig aug = fixed_origin())
{
  if (!aug.origin) aug.origin = kOrigin;
  return osm::build_static_map(osm::parse_osm(b.xml()), aug);
}

/// Scratch directory under the system temp dir, wiped on creation.
inline std::filesystem::path scratch_dir(const std::string & name)
{
  auto p = std::filesystem::temp_directory_path() / ("rns_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline void write_file(const std::filesystem::path & p, const std::string & text)
{
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

}  // namespace rns::test
