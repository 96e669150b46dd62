#pragma once

#include <atomic>
#include <functional>
#include <istream>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "streamclust/textprep.hpp"
#include "streamclust/window.hpp"

namespace streamclust {

struct IngestStats {
  std::size_t lines = 0;      // non-blank lines seen
  std::size_t accepted = 0;   // appended to the window
  std::size_t malformed = 0;  // unparsable or missing required fields
  std::size_t filtered = 0;   // other language
  std::size_t empty = 0;      // no content token after analysis
};

// One JSONL record: {"id", "text", "lang"?, "created_at", "origin_created_at"?}.
// Ids may be strings or integers; times are ISO-8601 strings or epoch
// milliseconds. Throws std::invalid_argument with the reason.
RawPost parse_ingest_record(std::string_view line);

// Parses, filters and vectorizes records into a window. Safe to call from
// several threads.
class Ingestor {
 public:
  Ingestor(const TextPipeline& text, SlidingWindow& window, std::optional<std::string> lang_filter = {});

  // True when the record was appended. Blank lines are ignored.
  bool ingest_line(std::string_view line);
  bool ingest(RawPost post);

  IngestStats stats() const;
  // Largest publish time appended so far.
  std::optional<Timestamp> latest() const;

 private:
  const TextPipeline& text_;
  SlidingWindow& window_;
  std::optional<std::string> lang_filter_;
  mutable std::mutex mutex_;
  IngestStats stats_;
  std::optional<Timestamp> latest_;
};

// Feeds every line of `in` to the ingestor. With speed > 0, record i is held
// back until (t_i - t_0) / speed of wall time has passed since the first
// record; speed 0 goes as fast as possible. Stops early when `stop` is set.
// `before` runs ahead of every non-blank line with the record's publish time
// (nullopt when the line is malformed).
void replay_stream(std::istream& in, Ingestor& ingestor, double speed, const std::atomic<bool>& stop,
                   const std::function<void(std::optional<Timestamp>)>& before = {});

}  // namespace streamclust
