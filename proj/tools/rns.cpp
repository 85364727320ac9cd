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

// rns replay | serve

#include "rns/server.hpp"
#include "rns/service.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <memory>

int main(int argc, char ** argv)
{
  CLI::App app{"Risk navigation system: batch replay and session service"};
  app.require_subcommand(1);

  rns::service::ReplayArgs replay;
  auto * r = app.add_subcommand("replay", "Run a scenario and write per-tick CSV and frames");
  r->add_option("--scenario", replay.scenario, "Scenario file")->required();
  r->add_option("--map", replay.map, "OSM file (overrides the scenario's)");
  r->add_option("--aug", replay.augmentation, "Augmentation file (overrides the scenario's)");
  r->add_option("--out-csv", replay.out_csv, "Per-tick risk CSV");
  r->add_option("--out-frames", replay.out_frames, "Newline-delimited frames");
  r->add_option("--dump-map", replay.dump_map, "Write the static map document");
  r->add_flag("--slim", replay.slim, "Suppress numeric popup values in frames");

  unsigned short port = 8080;
  std::string map_path;
  std::string aug_path;
  auto * s = app.add_subcommand("serve", "Serve the map and interactive sessions");
  s->add_option("--port", port, "TCP port")->capture_default_str();
  s->add_option("--map", map_path, "OSM file")->required();
  s->add_option("--aug", aug_path, "Augmentation file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : rns::service::kInvalidInput;
  }

  if (*r) return rns::service::cli_replay(replay);

  std::shared_ptr<const rns::sim::MapBundle> map;
  try {
    map = std::make_shared<const rns::sim::MapBundle>(rns::sim::load_map(map_path, aug_path));
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << '\n';
    return rns::service::kInvalidInput;
  }
  try {
    return rns::server::serve(port, map);
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << '\n';
    return rns::service::kRuntimeFailure;
  }
}
