#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>

#include "streamclust/service.hpp"

namespace streamclust {

// Stream time for the update loop: the newest post time plus the wall time
// elapsed since it was first seen, scaled by `rate`. Rate 1 suits live
// input; replays use their speed multiplier, and rate 0 freezes the clock at
// the newest post.
class StreamClock {
 public:
  explicit StreamClock(double rate) : rate_(rate) {}

  // Falls back to the system clock before the first post.
  Timestamp now(std::optional<Timestamp> latest);

 private:
  double rate_;
  std::mutex mutex_;
  std::optional<Timestamp> anchor_;
  std::chrono::steady_clock::time_point anchor_wall_;
};

// HTTP front-end for an engine:
//   GET  /events   server-sent events, one ClientEvent per message
//   POST /command  JSON command, JSON response
//   POST /ingest   JSONL records
//   GET  /state    current view model plus its hash
//   GET  /health   counters
// plus static files from service.static_dir. Also runs the update loop and
// the configured replay or stdin source. Blocks until `stop` is set; throws
// std::runtime_error when the address cannot be bound.
void serve(Engine& engine, const std::atomic<bool>& stop);

}  // namespace streamclust
