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

#include "rns/server.hpp"
#include "rns/service.hpp"
#include "support/synthetic_maps.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

namespace
{

using namespace rns;
using nlohmann::json;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

json crossing_scenario(double seconds = 5.0)
{
  return {
    {"schema_version", 1},
    {"ego",
     {{"route", {"L10.0f0", "J1:L10.0f0-L10.1f0", "L10.1f0"}},
      {"trace", {{{"t", 0.0}, {"x", -28.25}, {"y", -1.75}}, {{"t", seconds}, {"x", -28.25 + 10 * seconds}, {"y", -1.75}}}}}},
    {"actors", {{{"id", "a"}, {"path", {"L20.0f0", "J1:L20.0f0-L20.1f0", "L20.1f0"}}, {"s0", 68.25}, {"speed", 10.0}}}}};
}

json interactive_scenario(double v0)
{
  return {{"ego", {{"route", {"L10.0f0", "J1:L10.0f0-L10.1f0", "L10.1f0"}}, {"mode", "interactive"}, {"v0", v0}}}};
}

std::string slurp(const std::filesystem::path & p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string & text)
{
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

// Map, augmentation and scenario files for the CLI.
struct Workspace
{
  std::filesystem::path dir;
  std::filesystem::path osm;
  std::filesystem::path aug;
  std::filesystem::path scenario;

  explicit Workspace(const std::string & name, const json & sc = crossing_scenario())
  : dir(test::scratch_dir(name)), osm(dir / "x.osm"), aug(dir / "aug.json"), scenario(dir / "scenario.json")
  {
    test::write_file(osm, test::x_intersection().xml());
    test::write_file(aug, "{" + test::origin_json() + "}");
    json s = sc;
    s["map"] = {{"osm", "x.osm"}, {"augmentation", "aug.json"}};
    test::write_file(scenario, s.dump(2));
  }
};

int run_cli(const std::string & args)
{
  const std::string cmd = std::string(RNS_CLI_PATH) + " " + args + " 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

TEST(Csv, FixedFormatting)
{
  EXPECT_EQ(service::fixed3(1.0 / 3.0), "0.333");
  EXPECT_EQ(service::fixed3(-0.0001), "0.000");
  EXPECT_EQ(service::fixed3(std::nullopt), "");
}

TEST(Cli, ReplayWritesOneRowPerTick)
{
  Workspace w("cli_rows");
  const auto csv = w.dir / "out.csv";
  const auto frames = w.dir / "frames.ndjson";
  const auto map = w.dir / "map.json";
  ASSERT_EQ(
    run_cli(
      "replay --scenario " + w.scenario.string() + " --out-csv " + csv.string() + " --out-frames " +
      frames.string() + " --dump-map " + map.string()),
    0);
  const auto rows = lines_of(slurp(csv));
  ASSERT_EQ(rows.size(), 51U);
  EXPECT_EQ(rows[0], service::kCsvHeader);
  EXPECT_EQ(rows[1].rfind("0.000,10.000,", 0), 0U) << rows[1];
  EXPECT_EQ(lines_of(slurp(frames)).size(), 50U);
  const auto doc = json::parse(slurp(map));
  EXPECT_EQ(doc["schema_version"], 1);
  EXPECT_FALSE(doc["nodes"].empty());
}

TEST(Cli, InvalidInputExitsTwo)
{
  Workspace w("cli_invalid");
  EXPECT_EQ(run_cli("replay --scenario " + w.scenario.string() + " --map " + (w.dir / "missing.osm").string()), 2);
  EXPECT_EQ(run_cli("replay --scenario " + (w.dir / "missing.json").string()), 2);
  EXPECT_EQ(run_cli("replay"), 2);
  EXPECT_EQ(run_cli("bogus"), 2);
  test::write_file(w.dir / "bad.json", R"({"ego": {"route": ["nope"]}, "map": {"osm": "x.osm"}})");
  EXPECT_EQ(run_cli("replay --scenario " + (w.dir / "bad.json").string()), 2);
  test::write_file(w.dir / "bad.osm", "<osm><node id=\"1\"");
  EXPECT_EQ(run_cli("replay --scenario " + w.scenario.string() + " --map " + (w.dir / "bad.osm").string()), 2);
}

TEST(Cli, ErrorMessageNamesField)
{
  Workspace w("cli_message");
  test::write_file(w.dir / "bad.json", R"({"ego": {"route": ["L10.0f0"], "trace": []}, "map": {"osm": "x.osm"}})");
  service::ReplayArgs args;
  args.scenario = (w.dir / "bad.json").string();
  std::ostringstream err;
  EXPECT_EQ(service::cli_replay(args, err), service::kInvalidInput);
  EXPECT_NE(err.str().find("ego.trace"), std::string::npos) << err.str();
}

TEST(Cli, OutputsAreByteIdenticalAcrossRuns)
{
  Workspace w("cli_determinism");
  for (const char * tag : {"a", "b"}) {
    ASSERT_EQ(
      run_cli(
        "replay --scenario " + w.scenario.string() + " --out-csv " + (w.dir / (std::string(tag) + ".csv")).string() +
        " --out-frames " + (w.dir / (std::string(tag) + ".ndjson")).string()),
      0);
  }
  EXPECT_EQ(slurp(w.dir / "a.csv"), slurp(w.dir / "b.csv"));
  EXPECT_EQ(slurp(w.dir / "a.ndjson"), slurp(w.dir / "b.ndjson"));
}

TEST(Cli, SlimFramesCarryNoValues)
{
  Workspace w("cli_slim");
  const auto frames = w.dir / "slim.ndjson";
  ASSERT_EQ(run_cli("replay --slim --scenario " + w.scenario.string() + " --out-frames " + frames.string()), 0);
  std::size_t popups = 0;
  for (const auto & line : lines_of(slurp(frames))) {
    const auto f = json::parse(line);
    EXPECT_TRUE(f["slim"].get<bool>());
    for (const auto & p : f["popups"]) {
      ++popups;
      EXPECT_FALSE(p.contains("value"));
    }
  }
  EXPECT_GT(popups, 0U);
}

TEST(Batch, InteractiveNeedsDuration)
{
  auto map = std::make_shared<const sim::MapBundle>(sim::MapBundle{test::build(test::x_intersection()), test::kOrigin});
  sim::LoadOptions opts;
  opts.map = map;
  auto sc = std::make_shared<const sim::Scenario>(sim::parse_scenario(interactive_scenario(5).dump(), {}, opts));
  EXPECT_THROW(service::run_batch(sc, false, [](const sim::TickResult &) {}), sim::ScenarioError);
  auto j = interactive_scenario(5);
  j["duration"] = 1.0;
  sc = std::make_shared<const sim::Scenario>(sim::parse_scenario(j.dump(), {}, opts));
  std::vector<double> v;
  service::run_batch(
    sc, false, [&](const sim::TickResult & r) { v.push_back(r.world.ego.speed); },
    [](const sim::TickResult &) { return 1.0; });
  // The first command is issued after tick 0 and moves the speed reported at tick 2.
  ASSERT_EQ(v.size(), 10U);
  EXPECT_EQ(v[1], v[0]);
  EXPECT_NEAR(v[9] - v[0], 0.8, 1e-9);
}

// A server on an ephemeral port with its io_context on a background thread.
class LiveServer : public ::testing::Test
{
protected:
  void SetUp() override
  {
    map_ = std::make_shared<const sim::MapBundle>(sim::MapBundle{test::build(test::x_intersection()), test::kOrigin});
    server_ = std::make_unique<server::Server>(io_, map_, 0, log_);
    port_ = server_->port();
    thread_ = std::thread([this] { io_.run(); });
  }

  void TearDown() override
  {
    net::post(io_, [this] {
      server_->stop();
      io_.stop();
    });
    thread_.join();
  }

  http::response<http::string_body> request(http::verb verb, const std::string & target, const std::string & body = {})
  {
    net::io_context io;
    beast::tcp_stream s(io);
    s.connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), port_));
    http::request<http::string_body> req{verb, target, 11};
    req.set(http::field::host, "localhost");
    req.body() = body;
    req.prepare_payload();
    http::write(s, req);
    beast::flat_buffer buf;
    http::response<http::string_body> res;
    http::read(s, buf, res);
    beast::error_code ec;
    s.socket().shutdown(tcp::socket::shutdown_both, ec);
    return res;
  }

  std::string start_session(const json & scenario, const std::string & query = {})
  {
    const auto res = request(http::verb::post, "/session" + query, scenario.dump());
    EXPECT_EQ(res.result(), http::status::created) << res.body();
    return json::parse(res.body()).at("id").get<std::string>();
  }

  struct Client
  {
    net::io_context io;
    websocket::stream<tcp::socket> ws{io};

    Client(unsigned short port, const std::string & target)
    {
      ws.next_layer().connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), port));
      ws.handshake("localhost", target);
    }

    std::optional<json> next()
    {
      beast::flat_buffer buf;
      beast::error_code ec;
      ws.read(buf, ec);
      if (ec) return std::nullopt;
      return json::parse(beast::buffers_to_string(buf.data()));
    }

    std::optional<std::string> next_text()
    {
      beast::flat_buffer buf;
      beast::error_code ec;
      ws.read(buf, ec);
      if (ec) return std::nullopt;
      return beast::buffers_to_string(buf.data());
    }

    void send(const std::string & text) { ws.write(net::buffer(text)); }
  };

  net::io_context io_;
  std::ostringstream log_;
  std::shared_ptr<const sim::MapBundle> map_;
  std::unique_ptr<server::Server> server_;
  unsigned short port_{0};
  std::thread thread_;
};

TEST_F(LiveServer, MapDocument)
{
  const auto res = request(http::verb::get, "/map");
  ASSERT_EQ(res.result(), http::status::ok);
  const auto doc = json::parse(res.body());
  EXPECT_EQ(doc, map_document(map_->graph.map(), map_->origin));
  EXPECT_EQ(request(http::verb::get, "/nothing").result(), http::status::not_found);
}

TEST_F(LiveServer, FirstFrameWithinHalfASecond)
{
  const auto t0 = std::chrono::steady_clock::now();
  const auto id = start_session(crossing_scenario());
  Client c(port_, "/session/" + id + "/stream");
  const auto f = c.next();
  const auto elapsed = std::chrono::steady_clock::now() - t0;
  ASSERT_TRUE(f);
  EXPECT_LT(elapsed, std::chrono::milliseconds(500));
  EXPECT_EQ((*f)["schema_version"], 1);
  EXPECT_EQ((*f)["t"], 0.0);
}

TEST_F(LiveServer, RejectsBadScenario)
{
  const auto res = request(http::verb::post, "/session", R"({"ego": {"route": ["nope"]}})");
  EXPECT_EQ(res.result(), http::status::bad_request);
  EXPECT_NE(json::parse(res.body())["error"].get<std::string>().find("ego.route"), std::string::npos);
}

TEST_F(LiveServer, AccelerationSlowsInteractiveEgo)
{
  const auto id = start_session(interactive_scenario(10.0));
  Client c(port_, "/session/" + id + "/stream");
  ASSERT_TRUE(c.next());
  c.send(R"({"accel": -2.0})");
  // Held deceleration: once applied, each tick is 0.2 m/s slower.
  std::vector<double> v;
  for (int i = 0; i < 40 && v.size() < 3; ++i) {
    const auto f = c.next();
    ASSERT_TRUE(f);
    const double speed = (*f)["ego"]["v"].get<double>();
    if (speed < 10.0) v.push_back(speed);
  }
  ASSERT_EQ(v.size(), 3U);
  EXPECT_NEAR(v[1] - v[0], -0.2, 1e-6);
  EXPECT_NEAR(v[2] - v[1], -0.2, 1e-6);
}

TEST_F(LiveServer, MalformedControlIsFlagged)
{
  const auto id = start_session(interactive_scenario(5.0));
  Client c(port_, "/session/" + id + "/stream");
  ASSERT_TRUE(c.next());
  c.send("not json");
  bool flagged = false;
  for (int i = 0; i < 20 && !flagged; ++i) {
    const auto f = c.next();
    ASSERT_TRUE(f);
    for (const auto & flag : (*f)["flags"]) flagged = flagged || flag == "control_rejected";
    EXPECT_NEAR((*f)["ego"]["v"].get<double>(), 5.0, 1e-9);
  }
  EXPECT_TRUE(flagged);
}

TEST_F(LiveServer, ControlOnReplayIsIgnored)
{
  const auto id = start_session(crossing_scenario(1.0));
  Client c(port_, "/session/" + id + "/stream");
  ASSERT_TRUE(c.next());
  c.send(R"({"accel": -3})");
  int ignored = 0;
  while (auto f = c.next()) {
    for (const auto & flag : (*f)["flags"]) ignored += flag == "control_ignored";
  }
  EXPECT_EQ(ignored, 1);
}

TEST_F(LiveServer, DeleteClosesTheStream)
{
  const auto id = start_session(interactive_scenario(5.0));
  Client c(port_, "/session/" + id + "/stream");
  ASSERT_TRUE(c.next());
  EXPECT_EQ(request(http::verb::delete_, "/session/" + id).result(), http::status::no_content);
  int after = 0;
  while (c.next()) ++after;
  EXPECT_LT(after, 10);
  EXPECT_EQ(request(http::verb::delete_, "/session/" + id).result(), http::status::not_found);
}

TEST_F(LiveServer, UnknownSessionIsNotFound)
{
  EXPECT_EQ(request(http::verb::delete_, "/session/s999").result(), http::status::not_found);
  EXPECT_THROW(Client(port_, "/session/s999/stream"), beast::system_error);
}

TEST_F(LiveServer, FramesMatchBatchReplay)
{
  // A late subscriber gets the backlog, so the stream is the full run.
  const auto id = start_session(crossing_scenario(2.0), "?slim=1");
  std::this_thread::sleep_for(std::chrono::milliseconds(300));
  Client c(port_, "/session/" + id + "/stream");
  std::vector<std::string> live;
  while (auto text = c.next_text()) live.push_back(*text);

  sim::LoadOptions opts;
  opts.map = map_;
  auto sc = std::make_shared<const sim::Scenario>(sim::parse_scenario(crossing_scenario(2.0).dump(), {}, opts));
  std::vector<std::string> batch;
  service::run_batch(sc, true, [&](const sim::TickResult & r) { batch.push_back(hmi::serialize(r.frame)); });
  ASSERT_EQ(batch.size(), 20U);
  EXPECT_EQ(live, batch);
}

}  // namespace
