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

#include "rns/horizon.hpp"
#include "support/synthetic_maps.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <random>
#include <set>

namespace
{

using namespace rns;
using horizon::BranchLabel;
using rldm::DynamicObject;
using rldm::ObjectClass;

constexpr double kPi = std::numbers::pi;

DynamicObject car(const std::string & id, double x, double y, double heading, double v = 10.0)
{
  return {id, ObjectClass::Car, {x, y, 0}, heading, v, 0.0};
}

std::multiset<BranchLabel> labels_of(const horizon::PathTree & t)
{
  std::multiset<BranchLabel> out;
  for (const auto & p : t.paths) {
    EXPECT_EQ(p.branch_labels.size(), 1U);
    if (!p.branch_labels.empty()) out.insert(p.branch_labels.front());
  }
  return out;
}

TEST(PathTree, XIntersectionGivesThreeLabelledPaths)
{
  auto g = test::build(test::x_intersection());
  const auto tree = horizon::path_tree(g, car("v", -20, -1.75, 0.0));
  ASSERT_EQ(tree.paths.size(), 3U);
  EXPECT_EQ(labels_of(tree), (std::multiset<BranchLabel>{BranchLabel::Straight, BranchLabel::Left, BranchLabel::Right}));
  // Straight first.
  EXPECT_EQ(tree.paths[0].node_ids[1], "J1:L10.0f0-L10.1f0");
}

TEST(PathTree, TJunctionGivesTwo)
{
  auto g = test::build(test::t_junction());
  const auto tree = horizon::path_tree(g, car("v", 1.75, -30, kPi / 2));
  ASSERT_EQ(tree.paths.size(), 2U);
  EXPECT_EQ(labels_of(tree), (std::multiset<BranchLabel>{BranchLabel::Left, BranchLabel::Right}));
}

TEST(PathTree, PathsStartAtVehicleAndRespectHorizon)
{
  auto g = test::build(test::x_intersection());
  horizon::HorizonConfig cfg;
  cfg.delta_l_h = 40.0;
  const auto tree = horizon::path_tree(g, car("v", -20, -1.75, 0.0), cfg);
  for (const auto & p : tree.paths) {
    EXPECT_NEAR(p.polyline.front().x, -20.0, 1e-9);
    EXPECT_NEAR(p.length, 40.0, 1e-6);
    EXPECT_NEAR(p.node_starts.front(), -80.0, 1e-6);  // lane starts at x = -100
  }
}

TEST(PathTree, UnmatchedVehicleHasNoPaths)
{
  auto g = test::build(test::x_intersection());
  EXPECT_TRUE(horizon::path_tree(g, car("v", -20, -30, 0.0)).paths.empty());
}

TEST(PathTree, DeadEndStopsShort)
{
  test::OsmBuilder b;
  b.node(1, 0, 0).node(2, 30, 0);
  b.way(1, {1, 2});
  auto g = test::build(b);
  const auto tree = horizon::path_tree(g, car("v", 10, -1.75, 0.0));
  ASSERT_EQ(tree.paths.size(), 1U);
  EXPECT_NEAR(tree.paths[0].length, 20.0, 1e-6);
}

TEST(PathTree, CountNeverExceedsLimit)
{
  // Property: on a dense grid the enumeration is cut to max_paths and every
  // path stays within delta_l_h.
  auto g = test::build(test::grid(5, 40.0));
  std::mt19937 rng(21);
  std::uniform_int_distribution<std::size_t> pick(0, g.map().nodes().size() - 1);
  for (std::size_t max_paths : {1U, 3U, 8U}) {
    horizon::HorizonConfig cfg;
    cfg.delta_l_h = 150.0;
    cfg.max_paths = max_paths;
    int trees = 0;
    while (trees < 40) {
      const auto & n = g.map().nodes()[pick(rng)];
      if (n.kind != rldm::NodeKind::LaneSegment) continue;
      const auto & cl = *n.centerline();
      const auto tree = horizon::path_tree_from(g, "v", {n.id, cl.length() / 2, 0.0}, cfg);
      EXPECT_GE(tree.paths.size(), 1U);
      EXPECT_LE(tree.paths.size(), max_paths);
      for (const auto & p : tree.paths) EXPECT_LE(p.length, cfg.delta_l_h + 1e-6);
      ++trees;
    }
  }
}

TEST(PathTree, PruningKeepsStraightFirst)
{
  auto g = test::build(test::x_intersection());
  horizon::HorizonConfig cfg;
  cfg.max_paths = 1;
  const auto tree = horizon::path_tree(g, car("v", -20, -1.75, 0.0), cfg);
  ASSERT_EQ(tree.paths.size(), 1U);
  EXPECT_EQ(tree.paths[0].branch_labels.front(), BranchLabel::Straight);
  cfg.max_paths = 2;
  EXPECT_EQ(
    labels_of(horizon::path_tree(g, car("v", -20, -1.75, 0.0), cfg)),
    (std::multiset<BranchLabel>{BranchLabel::Straight, BranchLabel::Right}));
}

TEST(PathTree, RootOnJunctionIsLabelled)
{
  auto g = test::build(test::x_intersection());
  const auto tree = horizon::path_tree_from(g, "v", {"J1:L10.0f0-L20.1f0", 2.0, 0.0});
  ASSERT_EQ(tree.paths.size(), 1U);
  EXPECT_EQ(tree.paths[0].branch_labels, std::vector<BranchLabel>{BranchLabel::Left});
}

TEST(Route, PathFollowsRouteOnly)
{
  auto g = test::build(test::x_intersection());
  const std::vector<rldm::NodeId> route{"L10.0f0", "J1:L10.0f0-L20.1f0", "L20.1f0"};
  const auto p = horizon::ego_route_path(g, car("ego", -20, -1.75, 0.0), route);
  EXPECT_EQ(p.node_ids, route);
  EXPECT_NEAR(p.length, 50.0, 1e-6);
  EXPECT_EQ(p.branch_labels, std::vector<BranchLabel>{BranchLabel::Left});
}

TEST(Route, UnlinkedRouteIsRejected)
{
  auto g = test::build(test::x_intersection());
  EXPECT_THROW(
    horizon::route_path(g, {"L10.0f0", "L10.1f0"}, 0, 10.0), horizon::RouteDeviation);
}

TEST(Route, EgoOffRouteRaisesDeviation)
{
  auto g = test::build(test::x_intersection());
  const std::vector<rldm::NodeId> route{"L10.0f0", "J1:L10.0f0-L10.1f0", "L10.1f0"};
  EXPECT_THROW(horizon::ego_route_path(g, car("ego", 1.75, -30, kPi / 2), route), horizon::RouteDeviation);
}

TEST(Route, OverlappingJunctionPrefersRouteLane)
{
  // At the junction entry all three connectors coincide; the route decides.
  auto g = test::build(test::x_intersection());
  const std::vector<rldm::NodeId> route{"L10.0f0", "J1:L10.0f0-L20.0b0", "L20.0b0"};
  const auto rm = horizon::match_on_route(g, car("ego", -4.0, -1.75, 0.0), route);
  EXPECT_EQ(rm.index, 1U);
  EXPECT_EQ(rm.match.lane, "J1:L10.0f0-L20.0b0");
}

TEST(Conflicts, CrossingPathsMeetAtGroundTruth)
{
  auto g = test::build(test::x_intersection());
  const auto ego = horizon::ego_route_path(
    g, car("ego", -30, -1.75, 0.0), {"L10.0f0", "J1:L10.0f0-L10.1f0", "L10.1f0"});
  const auto other = horizon::path_tree(g, car("a", 1.75, -30, kPi / 2));
  const auto zones = horizon::conflict_zones(ego, {other});
  ASSERT_FALSE(zones.empty());
  // The straight-through crossing is the nearest on the ego path besides the
  // right-turn merge, which lies further ahead.
  bool found = false;
  for (const auto & z : zones) {
    if (geometry::dist2(z.point, {1.75, -1.75, 0}) < 1e-6) {
      found = true;
      EXPECT_NEAR(z.s_ego, 31.75, 1e-6);
    }
  }
  EXPECT_TRUE(found);
  EXPECT_TRUE(std::is_sorted(zones.begin(), zones.end(), [](const auto & a, const auto & b) { return a.s_ego < b.s_ego; }));
}

}  // namespace
