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
#include "rns/map_document.hpp"
#include "rns/sim.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

#include <chrono>
#include <deque>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rns::server
{

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

/// Frames kept for a session nobody is listening to yet.
inline constexpr std::size_t kMaxBacklog = 6000;

class Stream;

struct LiveSession
{
  LiveSession(net::io_context & io, std::string id_, std::shared_ptr<const sim::Scenario> sc, bool slim)
  : id(std::move(id_)), session(std::move(sc), slim), timer(io)
  {
  }

  std::string id;
  sim::Session session;
  net::steady_timer timer;
  std::chrono::steady_clock::time_point start;
  std::shared_ptr<Stream> stream;
  std::deque<std::string> backlog;
  std::optional<double> accel;  // held until replaced
  bool fresh_control{false};
  std::vector<std::string> pending_flags;
  bool stopped{false};
};

/// One WebSocket subscriber: serialized outbound writes, inbound controls.
class Stream : public std::enable_shared_from_this<Stream>
{
public:
  Stream(tcp::socket socket, std::weak_ptr<LiveSession> session)
  : ws_(std::move(socket)), session_(std::move(session))
  {
  }

  void start(http::request<http::string_body> req)
  {
    req_ = std::move(req);
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req_, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->open_ = true;
      self->flush_backlog();
      self->read();
      self->pump();
    });
  }

  void send(std::string text)
  {
    queue_.push_back(std::move(text));
    pump();
  }

  /// Closes once queued frames are written.
  void finish()
  {
    closing_ = true;
    pump();
  }

private:
  void flush_backlog()
  {
    auto s = session_.lock();
    if (!s) return;
    // Backlog predates anything queued during the handshake.
    queue_.insert(
      queue_.begin(), std::make_move_iterator(s->backlog.begin()), std::make_move_iterator(s->backlog.end()));
    s->backlog.clear();
    if (s->stopped) closing_ = true;
  }

  void pump()
  {
    if (!open_ || writing_ || closed_) return;
    if (!queue_.empty()) {
      writing_ = true;
      ws_.text(true);
      ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
        self->writing_ = false;
        self->queue_.pop_front();
        if (ec) {
          self->closed_ = true;
          return;
        }
        self->pump();
      });
      return;
    }
    if (closing_) {
      closed_ = true;
      ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
    }
  }

  void read()
  {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->closed_ = true;
        if (auto s = self->session_.lock(); s && s->stream == self) s->stream.reset();
        return;
      }
      self->on_control(beast::buffers_to_string(self->buffer_.data()));
      self->buffer_.consume(self->buffer_.size());
      self->read();
    });
  }

  void on_control(const std::string & text)
  {
    auto s = session_.lock();
    if (!s) return;
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("accel") || !j.at("accel").is_number() ||
        !std::isfinite(j.at("accel").get<double>())) {
      s->pending_flags.emplace_back("control_rejected");
      return;
    }
    s->accel = j.at("accel").get<double>();
    s->fresh_control = true;
  }

  websocket::stream<beast::tcp_stream> ws_;
  std::weak_ptr<LiveSession> session_;
  http::request<http::string_body> req_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  bool open_{false};
  bool writing_{false};
  bool closing_{false};
  bool closed_{false};
};

/// HTTP + WebSocket front end. All state lives on one io_context thread.
class Server
{
public:
  Server(net::io_context & io, std::shared_ptr<const sim::MapBundle> map, unsigned short port,
         std::ostream & log = std::cerr)
  : io_(io), acceptor_(io, tcp::endpoint(net::ip::make_address("0.0.0.0"), port)), map_(std::move(map)), log_(log)
  {
    map_text_ = map_document(map_->graph.map(), map_->origin).dump();
    accept();
  }

  [[nodiscard]] unsigned short port() const { return acceptor_.local_endpoint().port(); }
  [[nodiscard]] std::size_t session_count() const { return sessions_.size(); }

  void stop()
  {
    beast::error_code ec;
    acceptor_.close(ec);
    for (auto & [id, s] : sessions_) halt(*s);
    sessions_.clear();
  }

private:
  class Connection : public std::enable_shared_from_this<Connection>
  {
  public:
    Connection(Server & srv, tcp::socket socket) : srv_(srv), stream_(std::move(socket)) {}

    void read()
    {
      req_ = {};
      stream_.expires_after(std::chrono::seconds(30));
      http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec) return;
        if (websocket::is_upgrade(self->req_)) {
          self->srv_.upgrade(self->stream_.release_socket(), std::move(self->req_));
          return;
        }
        self->respond(self->srv_.handle(self->req_));
      });
    }

  private:
    void respond(http::response<http::string_body> res)
    {
      res_ = std::move(res);
      res_.prepare_payload();
      http::async_write(stream_, res_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec) return;
        if (self->res_.keep_alive()) {
          self->read();
        } else {
          beast::error_code ignored;
          self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        }
      });
    }

    Server & srv_;
    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
    http::response<http::string_body> res_;
  };

  static std::string_view target_of(const http::request<http::string_body> & req)
  {
    return {req.target().data(), req.target().size()};
  }

  static std::string path_of(std::string_view target)
  {
    return std::string(target.substr(0, target.find('?')));
  }

  static bool query_flag(std::string_view target, std::string_view key)
  {
    const auto q = target.find('?');
    if (q == std::string_view::npos) return false;
    const std::string needle = std::string(key) + "=";
    for (std::string_view rest = target.substr(q + 1); !rest.empty();) {
      const auto amp = rest.find('&');
      const auto part = rest.substr(0, amp);
      if (part == key || part == needle + "1" || part == needle + "true") return true;
      if (amp == std::string_view::npos) break;
      rest.remove_prefix(amp + 1);
    }
    return false;
  }

  /// "/session/{id}" or "/session/{id}/stream" -> id.
  static std::optional<std::string> session_id(const std::string & path, bool stream)
  {
    const std::string prefix = "/session/";
    if (path.rfind(prefix, 0) != 0) return std::nullopt;
    std::string rest = path.substr(prefix.size());
    const std::string suffix = "/stream";
    if (stream) {
      if (rest.size() <= suffix.size() || rest.compare(rest.size() - suffix.size(), suffix.size(), suffix) != 0) {
        return std::nullopt;
      }
      rest.resize(rest.size() - suffix.size());
    }
    if (rest.empty() || rest.find('/') != std::string::npos) return std::nullopt;
    return rest;
  }

  static http::response<http::string_body> reply(
    const http::request<http::string_body> & req, http::status status, std::string body)
  {
    http::response<http::string_body> res{status, req.version()};
    res.set(http::field::content_type, "application/json");
    res.set(http::field::access_control_allow_origin, "*");
    res.keep_alive(req.keep_alive());
    res.body() = std::move(body);
    return res;
  }

  static std::string error_body(const std::string & msg) { return nlohmann::json{{"error", msg}}.dump(); }

  http::response<http::string_body> handle(const http::request<http::string_body> & req)
  {
    const std::string path = path_of(target_of(req));
    if (req.method() == http::verb::get && path == "/map") return reply(req, http::status::ok, map_text_);
    if (req.method() == http::verb::post && path == "/session") {
      try {
        sim::LoadOptions opts;
        opts.map = map_;
        auto sc = std::make_shared<const sim::Scenario>(sim::parse_scenario(req.body(), {}, opts));
        const std::string id = "s" + std::to_string(++next_id_);
        auto s = std::make_shared<LiveSession>(io_, id, sc, query_flag(target_of(req), "slim"));
        sessions_[id] = s;
        s->start = std::chrono::steady_clock::now();
        tick(s);
        log_ << "session " << id << " started\n";
        return reply(
          req, http::status::created,
          nlohmann::json{{"id", id}, {"stream", "/session/" + id + "/stream"}}.dump());
      } catch (const std::exception & e) {
        return reply(req, http::status::bad_request, error_body(e.what()));
      }
    }
    if (req.method() == http::verb::delete_) {
      if (auto id = session_id(path, false)) {
        auto it = sessions_.find(*id);
        if (it == sessions_.end()) return reply(req, http::status::not_found, error_body("unknown session"));
        halt(*it->second);
        sessions_.erase(it);
        log_ << "session " << *id << " deleted\n";
        return reply(req, http::status::no_content, {});
      }
    }
    if (req.method() == http::verb::options) return reply(req, http::status::no_content, {});
    return reply(req, http::status::not_found, error_body("no such resource"));
  }

  void upgrade(tcp::socket socket, http::request<http::string_body> req)
  {
    const auto id = session_id(path_of(target_of(req)), true);
    auto it = id ? sessions_.find(*id) : sessions_.end();
    if (it == sessions_.end()) {
      // Answer the upgrade with a plain 404 and drop the connection.
      auto res = std::make_shared<http::response<http::string_body>>(
        reply(req, http::status::not_found, error_body("unknown session")));
      res->keep_alive(false);
      res->prepare_payload();
      auto sock = std::make_shared<tcp::socket>(std::move(socket));
      http::async_write(*sock, *res, [sock, res](beast::error_code, std::size_t) {
        beast::error_code ignored;
        sock->shutdown(tcp::socket::shutdown_send, ignored);
      });
      return;
    }
    auto & s = it->second;
    auto stream = std::make_shared<Stream>(std::move(socket), s);
    s->stream = stream;
    stream->start(std::move(req));
  }

  void deliver(LiveSession & s, std::string frame)
  {
    if (s.stream) {
      s.stream->send(std::move(frame));
      return;
    }
    s.backlog.push_back(std::move(frame));
    if (s.backlog.size() > kMaxBacklog) s.backlog.pop_front();
  }

  void halt(LiveSession & s)
  {
    s.stopped = true;
    s.timer.cancel();
    if (s.stream) s.stream->finish();
  }

  void tick(const std::shared_ptr<LiveSession> & s)
  {
    if (s->stopped) return;
    std::optional<double> accel;
    if (s->session.mode() == sim::Mode::Interactive || s->fresh_control) accel = s->accel;
    s->fresh_control = false;
    try {
      auto r = s->session.step(accel, std::exchange(s->pending_flags, {}));
      deliver(*s, hmi::serialize(r.frame));
    } catch (const std::exception & e) {
      log_ << "session " << s->id << " failed: " << e.what() << '\n';
      halt(*s);
      return;
    }
    if (s->session.finished()) {
      s->stopped = true;
      if (s->stream) s->stream->finish();
      return;
    }
    const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(s->session.scenario().dt()));
    s->timer.expires_at(s->start + period * static_cast<long>(s->session.ticks_done()));
    s->timer.async_wait([this, weak = std::weak_ptr<LiveSession>(s)](beast::error_code ec) {
      if (ec) return;
      if (auto live = weak.lock()) tick(live);
    });
  }

  void accept()
  {
    acceptor_.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<Connection>(*this, std::move(socket))->read();
      accept();
    });
  }

  net::io_context & io_;
  tcp::acceptor acceptor_;
  std::shared_ptr<const sim::MapBundle> map_;
  std::ostream & log_;
  std::string map_text_;
  std::map<std::string, std::shared_ptr<LiveSession>> sessions_;
  std::size_t next_id_{0};
};

/// Blocks serving until SIGINT/SIGTERM.
inline int serve(unsigned short port, std::shared_ptr<const sim::MapBundle> map, std::ostream & log = std::cerr)
{
  net::io_context io;
  Server srv(io, std::move(map), port, log);
  net::signal_set signals(io, SIGINT, SIGTERM);
  signals.async_wait([&](beast::error_code, int) {
    srv.stop();
    io.stop();
  });
  log << "listening on port " << srv.port() << '\n';
  io.run();
  return 0;
}

}  // namespace rns::server
