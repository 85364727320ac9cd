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

#include "rns/hmi.hpp"
#include "rns/horizon.hpp"
#include "rns/map_document.hpp"
#include "rns/osm_ingest.hpp"
#include "rns/rldm.hpp"
#include "rns/sim.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace rns::service
{

enum ExitCode : int { kOk = 0, kRuntimeFailure = 1, kInvalidInput = 2 };

inline constexpr const char * kCsvHeader = "t,v0,governing_v_tar,governing_source,s_E,d_E,d_I,d_c,scale_color";

inline std::string fixed3(std::optional<double> v)
{
  if (!v) return {};
  double x = std::round(*v * 1000.0) / 1000.0;
  if (x == 0.0) x = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

/// One CSV row per tick; absent quantities stay blank.
inline std::string csv_row(const sim::TickResult & r)
{
  const auto & a = r.assessment;
  const auto & f = r.frame;
  std::optional<double> s_e;
  std::optional<double> d_e;
  if (a.max_encounter) {
    s_e = a.max_encounter->s_E;
    d_e = a.max_encounter->d_E;
  }
  std::optional<double> d_i;
  if (!f.hazard_route.zones.empty()) d_i = f.hazard_route.zones.front().start;
  std::optional<double> d_c;
  for (const auto & t : a.regulatory) {
    if (t.active) {
      d_c = t.d_c;
      break;
    }
  }
  std::string row;
  row += fixed3(r.t) + ',';
  row += fixed3(a.ego_v0) + ',';
  row += fixed3(a.governing_v_tar) + ',';
  row += std::string(risk::to_string(a.governing_source)) + ',';
  row += fixed3(s_e) + ',';
  row += fixed3(d_e) + ',';
  row += fixed3(d_i) + ',';
  row += fixed3(d_c) + ',';
  row += std::string(hmi::to_string(f.velocity_scale.color));
  return row;
}

/// Acceleration command for the next tick of a batch run.
using Controller = std::function<std::optional<double>(const sim::TickResult &)>;

/// Runs a scenario to its end, calling `sink` with every tick. Interactive
/// scenarios need a duration and are driven by `controller` (zero control
/// when absent).
inline std::size_t run_batch(
  std::shared_ptr<const sim::Scenario> scenario, bool slim,
  const std::function<void(const sim::TickResult &)> & sink, const Controller & controller = {})
{
  if (scenario->ego.mode == sim::Mode::Interactive && !scenario->duration) {
    throw sim::ScenarioError("duration: required for interactive scenarios in batch runs");
  }
  sim::Session session(std::move(scenario), slim);
  std::optional<double> accel;
  std::size_t n = 0;
  while (!session.finished()) {
    const auto r = session.step(accel);
    if (controller) accel = controller(r);
    sink(r);
    ++n;
  }
  return n;
}

struct ReplayArgs
{
  std::string map;
  std::string augmentation;
  std::string scenario;
  std::string out_csv;
  std::string out_frames;
  std::string dump_map;
  bool slim{false};
};

/// Batch replay. Exit 0 on success, 2 on invalid input, 1 on any other
/// failure.
inline int cli_replay(const ReplayArgs & args, std::ostream & err = std::cerr)
{
  std::shared_ptr<const sim::Scenario> scenario;
  try {
    for (const auto & [flag, path] :
         {std::pair{"--scenario", args.scenario}, std::pair{"--map", args.map}, std::pair{"--aug", args.augmentation}}) {
      if (!path.empty() && !std::filesystem::is_regular_file(path)) {
        err << "error: " << flag << ": no such file '" << path << "'\n";
        return kInvalidInput;
      }
    }
    if (args.scenario.empty()) {
      err << "error: --scenario is required\n";
      return kInvalidInput;
    }
    sim::LoadOptions opts;
    if (!args.map.empty()) opts.map_path = args.map;
    if (!args.augmentation.empty()) opts.augmentation_path = args.augmentation;
    scenario = std::make_shared<const sim::Scenario>(sim::load(args.scenario, opts));
    if (scenario->ego.mode == sim::Mode::Interactive && !scenario->duration) {
      throw sim::ScenarioError("duration: required for interactive scenarios in batch runs");
    }
  } catch (const sim::ScenarioError & e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const osm::ParseError & e) {
    err << "error: map: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const osm::BuildError & e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const rldm::GraphError & e) {
    err << "error: map: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const std::exception & e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }

  try {
    std::ofstream csv;
    std::ofstream frames;
    auto open = [&](std::ofstream & f, const std::string & path) {
      if (path.empty()) return;
      f.open(path, std::ios::binary | std::ios::trunc);
      if (!f) throw std::runtime_error("cannot write '" + path + "'");
    };
    open(csv, args.out_csv);
    open(frames, args.out_frames);
    if (!args.dump_map.empty()) {
      std::ofstream m(args.dump_map, std::ios::binary | std::ios::trunc);
      if (!m) throw std::runtime_error("cannot write '" + args.dump_map + "'");
      m << map_document(scenario->map->graph.map(), scenario->map->origin).dump() << '\n';
    }
    if (csv.is_open()) csv << kCsvHeader << '\n';
    run_batch(scenario, args.slim, [&](const sim::TickResult & r) {
      if (csv.is_open()) csv << csv_row(r) << '\n';
      if (frames.is_open()) frames << hmi::serialize(r.frame) << '\n';
    });
    if ((csv.is_open() && !csv) || (frames.is_open() && !frames)) throw std::runtime_error("write failed");
  } catch (const std::exception & e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kOk;
}

}  // namespace rns::service
