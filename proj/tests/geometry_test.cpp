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

#include "rns/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace
{

using namespace rns::geometry;
using rns::DomainError;
constexpr double kPi = std::numbers::pi;

Polyline line(std::initializer_list<LocalPoint> pts) { return Polyline(std::vector<LocalPoint>(pts)); }

// Arc of radius r centred at the origin, counter-clockwise, points every
// `step` m of arc.
Polyline circle_arc(double r, double sweep, double step)
{
  std::vector<LocalPoint> pts;
  const int n = static_cast<int>(std::ceil(r * sweep / step));
  for (int i = 0; i <= n; ++i) {
    const double a = sweep * i / n;
    pts.push_back({r * std::cos(a), r * std::sin(a), 0.0});
  }
  return Polyline(pts);
}

TEST(Projection, OriginMapsToZero)
{
  const GeoPoint o{50.1, 8.76, 0.0};
  const auto p = to_local(o, o);
  EXPECT_DOUBLE_EQ(p.x, 0.0);
  EXPECT_DOUBLE_EQ(p.y, 0.0);
}

TEST(Projection, NorthIsPositiveY)
{
  const GeoPoint o{50.1, 8.76, 0.0};
  // One arc-minute of latitude on a 6371 km sphere.
  const double expected = 6'371'000.0 * kPi / (180.0 * 60.0);
  const auto p = to_local(o, {50.1 + 1.0 / 60.0, 8.76, 0.0});
  EXPECT_NEAR(p.y, expected, 1e-6);
  EXPECT_NEAR(p.x, 0.0, 1e-9);
  const auto e = to_local(o, {50.1, 8.76 + 1.0 / 60.0, 0.0});
  EXPECT_NEAR(e.x, expected * std::cos(50.1 * kPi / 180.0), 1e-6);
}

TEST(Projection, RoundTripWithinAMillimetre)
{
  const GeoPoint o{48.137, 11.575, 520.0};
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-2000.0, 2000.0);
  for (int i = 0; i < 1000; ++i) {
    const LocalPoint p{u(rng), u(rng), 0.0};
    const auto back = to_local(o, to_geo(o, p));
    EXPECT_NEAR(back.x, p.x, 1e-3);
    EXPECT_NEAR(back.y, p.y, 1e-3);
  }
}

TEST(Projection, RejectsOutOfRange)
{
  const GeoPoint o{0.0, 0.0, 0.0};
  EXPECT_THROW(to_local(o, {91.0, 0.0, 0.0}), DomainError);
  EXPECT_THROW(to_local(o, {0.0, 181.0, 0.0}), DomainError);
  EXPECT_THROW(to_local(o, {std::nan(""), 0.0, 0.0}), DomainError);
}

TEST(PolylineTest, RejectsDegenerateInput)
{
  EXPECT_THROW(Polyline(std::vector<LocalPoint>{{0, 0, 0}}), DomainError);
  EXPECT_THROW(line({{0, 0, 0}, {0, 0, 0}}), DomainError);
  EXPECT_THROW(line({{0, 0, 0}, {std::nan(""), 1, 0}}), DomainError);
  EXPECT_NO_THROW(Polyline::cleaned(std::vector<LocalPoint>{{0, 0, 0}, {0, 0, 0}, {1, 0, 0}}));
}

TEST(PolylineTest, ArcLengthAndInterpolation)
{
  const auto p = line({{0, 0, 0}, {3, 0, 0}, {3, 4, 0}});
  EXPECT_DOUBLE_EQ(p.length(), 7.0);
  EXPECT_NEAR(p.point_at(5.0).y, 2.0, 1e-12);
  EXPECT_NEAR(p.heading_at(5.0), kPi / 2, 1e-12);
  EXPECT_DOUBLE_EQ(p.point_at(-1.0).x, 0.0);
  EXPECT_DOUBLE_EQ(p.point_at(99.0).y, 4.0);
  const auto s = p.slice(1.0, 5.0);
  EXPECT_NEAR(s.length(), 4.0, 1e-12);
  EXPECT_EQ(s.size(), 3U);
  EXPECT_TRUE(p.slice(2.0, 2.0).empty());
}

TEST(Resample, KeepsEndpointsAndStep)
{
  const auto p = line({{0, 0, 0}, {10.5, 0, 0}});
  const auto r = resample(p, 1.0);
  EXPECT_EQ(r.size(), 12U);
  EXPECT_DOUBLE_EQ(r.back().x, 10.5);
  EXPECT_THROW(resample(p, 0.0), DomainError);
}

TEST(Curvature, StraightLineIsZero)
{
  const auto prof = curvature_profile(resample(line({{0, 0, 0}, {50, 0, 0}}), 1.0));
  for (const auto & c : prof) EXPECT_NEAR(c.kappa, 0.0, 1e-12);
}

TEST(Curvature, CircleMatchesInverseRadius)
{
  // Property: over radii 2..500 m at 1 m sampling, |kappa - 1/R| <= 2%.
  for (double r : {2.0, 3.0, 5.0, 8.0, 12.0, 20.0, 50.0, 100.0, 250.0, 500.0}) {
    const auto prof = curvature_profile(resample(circle_arc(r, kPi / 2, 0.05), 1.0));
    for (std::size_t i = 1; i + 1 < prof.size(); ++i) {
      EXPECT_NEAR(prof[i].kappa, 1.0 / r, 0.02 / r) << "R=" << r << " i=" << i;
    }
  }
}

TEST(Curvature, MirrorFlipsSign)
{
  std::vector<LocalPoint> pts;
  for (int i = 0; i <= 40; ++i) pts.push_back({static_cast<double>(i), 0.02 * i * i, 0.0});
  std::vector<LocalPoint> mirrored = pts;
  for (auto & p : mirrored) p.y = -p.y;
  const auto a = curvature_profile(Polyline(pts));
  const auto b = curvature_profile(Polyline(mirrored));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_GT(a[i].kappa, 0.0);
    EXPECT_NEAR(a[i].kappa, -b[i].kappa, 1e-12);
  }
}

TEST(Curvature, TooShortIsEmpty) { EXPECT_TRUE(curvature_profile(line({{0, 0, 0}, {1, 0, 0}})).empty()); }

TEST(Intersect, PerpendicularCross)
{
  const auto a = line({{-5, 0, 0}, {5, 0, 0}});
  const auto b = line({{1, -5, 0}, {1, 5, 0}});
  const auto xs = intersect(a, b);
  ASSERT_EQ(xs.size(), 1U);
  EXPECT_NEAR(xs[0].point.x, 1.0, 1e-12);
  EXPECT_NEAR(xs[0].s_a, 6.0, 1e-12);
  EXPECT_NEAR(xs[0].s_b, 5.0, 1e-12);
}

TEST(Intersect, SharedVertexReportedOnce)
{
  const auto a = line({{-5, 0, 0}, {0, 0, 0}, {5, 0, 0}});
  const auto b = line({{0, -5, 0}, {0, 0, 0}, {0, 5, 0}});
  EXPECT_EQ(intersect(a, b).size(), 1U);
}

TEST(Intersect, CollinearOverlapIsOneCrossing)
{
  const auto a = line({{0, 0, 0}, {10, 0, 0}});
  const auto b = line({{4, 0, 0}, {20, 0, 0}});
  const auto xs = intersect(a, b);
  ASSERT_EQ(xs.size(), 1U);
  EXPECT_NEAR(xs[0].point.x, 7.0, 1e-9);
}

TEST(Intersect, DisjointIsEmpty)
{
  EXPECT_TRUE(intersect(line({{0, 0, 0}, {1, 0, 0}}), line({{0, 1, 0}, {1, 1, 0}})).empty());
}

TEST(Intersect, SymmetricOnRandomPolylines)
{
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<LocalPoint> pa;
    std::vector<LocalPoint> pb;
    for (int i = 0; i < 6; ++i) pa.push_back({u(rng), u(rng), 0});
    for (int i = 0; i < 6; ++i) pb.push_back({u(rng), u(rng), 0});
    const auto a = Polyline::cleaned(pa);
    const auto b = Polyline::cleaned(pb);
    auto ab = intersect(a, b);
    auto ba = intersect(b, a);
    ASSERT_EQ(ab.size(), ba.size());
    for (auto & c : ba) std::swap(c.s_a, c.s_b);
    std::sort(ba.begin(), ba.end(), [](const auto & l, const auto & r) { return l.s_a < r.s_a; });
    for (std::size_t i = 0; i < ab.size(); ++i) {
      EXPECT_NEAR(ab[i].s_a, ba[i].s_a, 1e-6);
      EXPECT_NEAR(ab[i].s_b, ba[i].s_b, 1e-6);
      // Both arc lengths name the same point.
      EXPECT_NEAR(dist2(a.point_at(ab[i].s_a), b.point_at(ab[i].s_b)), 0.0, 1e-6);
    }
  }
}

TEST(Project, SignedLateralLeftPositive)
{
  const auto p = line({{0, 0, 0}, {10, 0, 0}});
  const auto left = project(p, {4, 2, 0});
  EXPECT_NEAR(left.s_along, 4.0, 1e-12);
  EXPECT_NEAR(left.lateral, 2.0, 1e-12);
  EXPECT_NEAR(project(p, {4, -3, 0}).lateral, -3.0, 1e-12);
  EXPECT_NEAR(project(p, {-2, 0, 0}).s_along, 0.0, 1e-12);
}

TEST(Project, FootIsNearestAmongDenseSamples)
{
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  const auto poly = Polyline::cleaned(
    std::vector<LocalPoint>{{-20, -5, 0}, {-5, 10, 0}, {3, -2, 0}, {15, 8, 0}, {25, -10, 0}});
  for (int i = 0; i < 300; ++i) {
    const LocalPoint q{u(rng), u(rng), 0};
    const auto pr = project(poly, q);
    double best = 1e9;
    for (double s = 0; s <= poly.length(); s += 0.01) best = std::min(best, dist2(poly.point_at(s), q));
    EXPECT_LE(pr.distance(), best + 1e-9);
    EXPECT_NEAR(pr.distance(), best, 0.01);
  }
}

TEST(Offset, ParallelAtConstantDistance)
{
  const auto p = line({{0, 0, 0}, {10, 0, 0}, {10, 10, 0}});
  const auto left = offset(p, 2.0);
  EXPECT_NEAR(left.front().y, 2.0, 1e-12);
  // Mitred corner on the inside of the left turn.
  EXPECT_NEAR(left.points()[1].x, 8.0, 1e-9);
  EXPECT_NEAR(left.points()[1].y, 2.0, 1e-9);
  for (double s = 0.5; s < left.length(); s += 0.5) {
    EXPECT_NEAR(distance(p, left.point_at(s)), 2.0, 1e-9);
  }
}

TEST(Angles, NormalizeRange)
{
  EXPECT_NEAR(normalize_angle(3 * kPi), kPi, 1e-12);
  EXPECT_NEAR(normalize_angle(-kPi), kPi, 1e-12);
  EXPECT_NEAR(normalize_angle(-kPi / 2 - 2 * kPi), -kPi / 2, 1e-12);
}

}  // namespace
