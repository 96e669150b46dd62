#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "streamclust/config.hpp"
#include "streamclust/ingest.hpp"
#include "streamclust/phrases.hpp"
#include "streamclust/pipeline.hpp"
#include "streamclust/textprep.hpp"
#include "streamclust/window.hpp"

namespace streamclust {

using Json = nlohmann::json;

// One message on a client's event channel. Kinds: "snapshot" (payload is
// the full view model), "delta" (the per-update fields plus "new_posts")
// and "session" ({"action", "session"}). seq starts at 1 per subscriber and
// has no gaps.
struct ClientEvent {
  std::uint64_t seq = 0;
  std::string kind;
  Json payload;

  Json to_json() const;
  // Throws std::invalid_argument on a malformed event.
  static ClientEvent from_json(const Json& j);
};

// Client-side reducer: a snapshot replaces the view, a delta overwrites the
// per-update fields and merges new post texts, a session event replaces the
// session block. Posts not referenced by a representative are dropped.
void apply_event(Json& view, const ClientEvent& event);

// FNV-1a 64 over the compact dump (keys sorted), as 16 hex digits.
std::string state_hash(const Json& view);

// Stale-state and rejection errors carry a machine-readable kind.
struct CommandError {
  std::string kind;  // "stale", "rejected" or "invalid"
  std::string message;
};

// Owns the window, the ingestion front-end and the session tree. Ticks and
// commands are serialized by one lock; ingestion only contends with the
// snapshot copy.
class Engine {
 public:
  using Listener = std::function<void(const ClientEvent&)>;

  // Loads stopwords and IDF from the configured paths (English list and an
  // empty model by default). Throws on an invalid config.
  explicit Engine(ServiceConfig config);
  Engine(ServiceConfig config, TextPipeline text);

  const ServiceConfig& config() const { return config_; }
  const TextPipeline& text() const { return text_; }
  SlidingWindow& window() { return window_; }
  Ingestor& ingestor() { return ingestor_; }

  // Evicts expired posts, snapshots the window, updates the active session
  // and broadcasts one delta. Paused sessions are not touched.
  void tick(Timestamp now);

  // {"cmd": ..., "update"?: n, ...}. Returns {"ok": true, "data": ...} or
  // {"ok": false, "error": kind, "message": ...}. A command carrying an
  // "update" other than the current one is stale.
  Json handle_command(const Json& command);

  Json view() const;
  std::string view_hash() const;
  std::uint64_t update_count() const;
  std::size_t session_depth() const;

  // The listener first receives a snapshot; returns a handle for
  // unsubscribe. Listeners run under the engine lock and must not call back.
  std::uint64_t subscribe(Listener listener);
  void unsubscribe(std::uint64_t handle);

 private:
  struct SessionView {
    std::vector<PhraseStats> phrases;
    std::vector<std::string> phrase_selection;
    std::vector<std::string> pending;  // post ids of reps not yet inserted
    std::optional<std::size_t> history_index;
  };
  struct Subscriber {
    Listener listener;
    std::uint64_t seq = 0;
  };

  Json run_command(const Json& command);
  void update_active(const WindowSnapshot& snapshot, bool keep_pending);
  void refresh_phrases();
  Json build_view() const;
  Json session_json() const;
  void publish(const std::string& kind, const Json& payload);
  void publish_snapshot();
  SessionView& active_view();
  std::vector<DocumentPtr> selection_posts() const;

  ServiceConfig config_;
  TextPipeline text_;
  SlidingWindow window_;
  Ingestor ingestor_;

  mutable std::mutex mutex_;
  SessionTree tree_;
  std::map<std::uint64_t, SessionView> views_;
  WindowSnapshot last_snapshot_;
  Json view_;
  std::map<std::uint64_t, Subscriber> subscribers_;
  std::uint64_t next_handle_ = 1;
};

// Appends every event as one JSONL line; flushes after each line.
Engine::Listener event_recorder(std::ostream& out);

// Per-update text summary of a view: window, topics with their deltas and
// labels. Contains no wall-clock data.
std::string format_update(const Json& view);

// Replays JSONL records in stream time: a tick fires at every multiple of
// the update interval after the first record, before the first record at
// or past it, plus one final tick at the end of the last interval. Each
// tick's summary is written to `out`. speed paces the records as in
// replay_stream. Returns the number of ticks.
std::size_t run_headless_replay(std::istream& in, Engine& engine, double speed, std::ostream& out);

}  // namespace streamclust
