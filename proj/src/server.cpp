#include "streamclust/server.hpp"

#include <condition_variable>
#include <deque>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <thread>

// Every open event stream holds one worker.
#define CPPHTTPLIB_THREAD_POOL_COUNT 16
#include <httplib.h>

namespace streamclust {

Timestamp StreamClock::now(std::optional<Timestamp> latest) {
  const auto wall = std::chrono::steady_clock::now();
  std::lock_guard lock(mutex_);
  if (!latest) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
  }
  if (!anchor_ || *latest > *anchor_) {
    anchor_ = *latest;
    anchor_wall_ = wall;
  }
  const double elapsed = std::chrono::duration<double, std::milli>(wall - anchor_wall_).count();
  return *anchor_ + static_cast<Timestamp>(elapsed * rate_);
}

namespace {

// One SSE connection: events queue up here and the streaming worker drains
// them.
struct Connection {
  std::mutex mutex;
  std::condition_variable ready;
  std::deque<std::string> queue;
  std::optional<std::uint64_t> handle;
};

std::string sse_frame(const ClientEvent& e) {
  return "id: " + std::to_string(e.seq) + "\nevent: " + e.kind + "\ndata: " + e.payload.dump() + "\n\n";
}

void reply_json(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void sleep_until(std::chrono::steady_clock::time_point due, const std::atomic<bool>& stop) {
  while (!stop.load() && std::chrono::steady_clock::now() < due)
    std::this_thread::sleep_for(
        std::min<std::chrono::steady_clock::duration>(due - std::chrono::steady_clock::now(),
                                                      std::chrono::milliseconds(100)));
}

}  // namespace

void serve(Engine& engine, const std::atomic<bool>& stop) {
  const ServiceConfig& config = engine.config();
  httplib::Server server;

  server.Get("/health", [&](const httplib::Request&, httplib::Response& res) {
    const auto s = engine.ingestor().stats();
    reply_json(res, {{"ok", true},
                     {"updates", engine.update_count()},
                     {"depth", engine.session_depth()},
                     {"window", engine.window().size()},
                     {"ingest",
                      {{"lines", s.lines},
                       {"accepted", s.accepted},
                       {"malformed", s.malformed},
                       {"filtered", s.filtered},
                       {"empty", s.empty}}}});
  });

  server.Get("/state", [&](const httplib::Request&, httplib::Response& res) {
    const Json view = engine.view();
    reply_json(res, {{"hash", state_hash(view)}, {"view", view}});
  });

  server.Post("/command", [&](const httplib::Request& req, httplib::Response& res) {
    Json cmd;
    try {
      cmd = Json::parse(req.body);
    } catch (const Json::parse_error& e) {
      reply_json(res, {{"ok", false}, {"error", "invalid"}, {"message", e.what()}}, 400);
      return;
    }
    const Json out = engine.handle_command(cmd);
    reply_json(res, out, out.at("ok").get<bool>() ? 200 : (out.at("error") == "invalid" ? 400 : 409));
  });

  server.Post("/ingest", [&](const httplib::Request& req, httplib::Response& res) {
    std::istringstream in(req.body);
    std::size_t accepted = 0, rejected = 0;
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      engine.ingestor().ingest_line(line) ? ++accepted : ++rejected;
    }
    reply_json(res, {{"accepted", accepted}, {"rejected", rejected}});
  });

  server.Get("/events", [&](const httplib::Request&, httplib::Response& res) {
    auto conn = std::make_shared<Connection>();
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream",
        [&engine, &stop, conn](std::size_t, httplib::DataSink& sink) {
          if (!conn->handle) {
            conn->handle = engine.subscribe([conn](const ClientEvent& e) {
              {
                std::lock_guard lock(conn->mutex);
                conn->queue.push_back(sse_frame(e));
              }
              conn->ready.notify_one();
            });
          }
          std::deque<std::string> batch;
          {
            std::unique_lock lock(conn->mutex);
            conn->ready.wait_for(lock, std::chrono::seconds(15), [&] { return !conn->queue.empty() || stop.load(); });
            batch.swap(conn->queue);
          }
          if (stop.load()) return false;
          // A comment line keeps idle connections open through proxies.
          if (batch.empty()) batch.push_back(": keepalive\n\n");
          for (const auto& frame : batch)
            if (!sink.write(frame.data(), frame.size())) return false;
          return true;
        },
        [&engine, conn](bool) {
          if (conn->handle) engine.unsubscribe(*conn->handle);
        });
  });

  if (config.static_dir && !server.set_mount_point("/", config.static_dir->string()))
    throw std::runtime_error("static_dir not found: " + config.static_dir->string());

  const auto [host, port] = config.listen_endpoint();
  if (!server.bind_to_port(host, port)) throw std::runtime_error("cannot bind " + config.listen_addr);

  std::thread http([&] { server.listen_after_bind(); });

  // File replay is paced; stdin is taken as it comes.
  std::thread source;
  const double rate = config.replay_path ? config.ingest_speed : 1.0;
  if (config.replay_path) {
    source = std::thread([&] {
      std::ifstream in(*config.replay_path);
      if (!in) {
        std::cerr << "cannot read " << config.replay_path->string() << '\n';
        return;
      }
      replay_stream(in, engine.ingestor(), config.ingest_speed, stop);
    });
  } else if (config.ingest_stdin) {
    source = std::thread([&] { replay_stream(std::cin, engine.ingestor(), 0.0, stop); });
  }

  // Updates run back to back on this thread, so an overrun delays the next
  // tick and never overlaps it.
  StreamClock clock(rate);
  const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(config.update_interval_secs));
  auto due = std::chrono::steady_clock::now() + interval;
  while (!stop.load()) {
    sleep_until(due, stop);
    if (stop.load()) break;
    const auto started = std::chrono::steady_clock::now();
    try {
      engine.tick(clock.now(engine.ingestor().latest()));
    } catch (const std::exception& e) {
      std::cerr << "update failed: " << e.what() << '\n';
    }
    due = std::max(started + interval, std::chrono::steady_clock::now());
  }

  server.stop();
  http.join();
  // stdin may still be blocked in getline; it cannot be interrupted portably.
  if (source.joinable()) {
    if (config.replay_path) source.join();
    else source.detach();
  }
}

}  // namespace streamclust
