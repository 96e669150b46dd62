#include "streamclust/ingest.hpp"

#include <chrono>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "streamclust/timefmt.hpp"

namespace streamclust {

namespace {

using json = nlohmann::json;

Timestamp time_field(const json& j, const char* name) {
  const json& v = j.at(name);
  if (v.is_number_integer()) return v.get<Timestamp>();
  if (v.is_string()) {
    if (auto t = parse_iso8601(v.get<std::string>())) return *t;
  }
  throw std::invalid_argument(std::string("bad ") + name);
}

bool blank(std::string_view s) { return s.find_first_not_of(" \t\r\n") == std::string_view::npos; }

}  // namespace

RawPost parse_ingest_record(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error&) {
    throw std::invalid_argument("not valid JSON");
  }
  if (!j.is_object()) throw std::invalid_argument("not a JSON object");
  RawPost p;
  if (!j.contains("id")) throw std::invalid_argument("missing id");
  const json& id = j["id"];
  if (id.is_string()) p.id = id.get<std::string>();
  else if (id.is_number_integer()) p.id = id.dump();
  else throw std::invalid_argument("bad id");
  if (!j.contains("text") || !j["text"].is_string()) throw std::invalid_argument("missing text");
  p.text = j["text"].get<std::string>();
  if (j.contains("lang") && !j["lang"].is_null()) {
    if (!j["lang"].is_string()) throw std::invalid_argument("bad lang");
    p.lang = j["lang"].get<std::string>();
  }
  if (!j.contains("created_at")) throw std::invalid_argument("missing created_at");
  p.published_at = time_field(j, "created_at");
  if (j.contains("origin_created_at") && !j["origin_created_at"].is_null())
    p.origin_published_at = time_field(j, "origin_created_at");
  p.validate();
  return p;
}

Ingestor::Ingestor(const TextPipeline& text, SlidingWindow& window, std::optional<std::string> lang_filter)
    : text_(text), window_(window), lang_filter_(std::move(lang_filter)) {}

bool Ingestor::ingest_line(std::string_view line) {
  if (blank(line)) return false;
  RawPost post;
  try {
    post = parse_ingest_record(line);
  } catch (const std::invalid_argument&) {
    std::lock_guard lock(mutex_);
    ++stats_.lines;
    ++stats_.malformed;
    return false;
  }
  {
    std::lock_guard lock(mutex_);
    ++stats_.lines;
  }
  return ingest(std::move(post));
}

bool Ingestor::ingest(RawPost post) {
  // Posts without a language flag are kept: there is nothing to filter on.
  if (lang_filter_ && post.lang && *post.lang != *lang_filter_) {
    std::lock_guard lock(mutex_);
    ++stats_.filtered;
    return false;
  }
  const Timestamp t = post.published_at;
  auto doc = text_.process(std::move(post));
  std::lock_guard lock(mutex_);
  if (!doc) {
    ++stats_.empty;
    return false;
  }
  // Appending under the lock keeps window order equal to acceptance order.
  window_.append(std::move(*doc));
  ++stats_.accepted;
  latest_ = latest_ ? std::max(*latest_, t) : t;
  return true;
}

IngestStats Ingestor::stats() const {
  std::lock_guard lock(mutex_);
  return stats_;
}

std::optional<Timestamp> Ingestor::latest() const {
  std::lock_guard lock(mutex_);
  return latest_;
}

void replay_stream(std::istream& in, Ingestor& ingestor, double speed, const std::atomic<bool>& stop,
                   const std::function<void(std::optional<Timestamp>)>& before) {
  using clock = std::chrono::steady_clock;
  std::optional<Timestamp> first;
  const auto wall0 = clock::now();
  std::string line;
  while (!stop.load() && std::getline(in, line)) {
    if (blank(line)) continue;
    std::optional<Timestamp> t;
    try {
      t = parse_ingest_record(line).published_at;
    } catch (const std::invalid_argument&) {
    }
    // Pace on the record's own timestamp; malformed lines are not delayed.
    if (speed > 0 && t) {
      if (!first) first = *t;
      const auto offset = std::chrono::duration<double, std::milli>(static_cast<double>(*t - *first) / speed);
      const auto due = wall0 + std::chrono::duration_cast<clock::duration>(offset);
      while (!stop.load() && clock::now() < due)
        std::this_thread::sleep_for(std::min<clock::duration>(due - clock::now(), std::chrono::milliseconds(50)));
    }
    if (stop.load()) break;
    if (before) before(t);
    ingestor.ingest_line(line);
  }
}

}  // namespace streamclust
