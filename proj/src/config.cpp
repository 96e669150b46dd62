#include "streamclust/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace streamclust {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw std::invalid_argument("config: bad value for " + std::string(key) + ": '" + std::string(value) + "'");
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty()) bad_value(key, v);
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  // from_chars for double is available in libstdc++ 11.
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty() || !std::isfinite(out)) bad_value(key, v);
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v);
}

}  // namespace

void ServiceConfig::set(std::string_view key, std::string_view value) {
  const std::string_view v = trim(value);
  const auto size = [&] { return static_cast<std::size_t>(to_u64(key, v)); };
  if (key == "window.duration_secs") {
    if (v == "none") window.duration_ms.reset();
    else window.duration_ms = static_cast<std::int64_t>(std::llround(to_double(key, v) * 1000.0));
  } else if (key == "window.max_count") {
    if (v == "none") window.max_count.reset();
    else window.max_count = size();
  } else if (key == "pipeline.update_interval_secs") {
    update_interval_secs = to_double(key, v);
  } else if (key == "pipeline.coarse_kmax") {
    pipeline.coarse.k_max = size();
  } else if (key == "pipeline.fine_kmax") {
    pipeline.fine.k_max = size();
  } else if (key == "pipeline.theta_sim") {
    pipeline.theta_sim = to_double(key, v);
  } else if (key == "pipeline.theta_new") {
    pipeline.theta_new = to_double(key, v);
  } else if (key == "pipeline.history_depth") {
    pipeline.history_depth = size();
  } else if (key == "pipeline.parallel") {
    pipeline.parallel = to_bool(key, v);
  } else if (key == "cluster.restarts") {
    pipeline.coarse.restarts = pipeline.fine.restarts = size();
  } else if (key == "cluster.sample_cap") {
    pipeline.coarse.sample_cap = pipeline.fine.sample_cap = size();
  } else if (key == "cluster.max_iters") {
    pipeline.coarse.max_iters = pipeline.fine.max_iters = size();
  } else if (key == "phrases.top_n") {
    phrases.top_n = size();
  } else if (key == "textprep.stopwords_path") {
    stopwords_path = std::filesystem::path(std::string(v));
  } else if (key == "textprep.idf_path") {
    idf_path = std::filesystem::path(std::string(v));
  } else if (key == "service.listen_addr") {
    listen_addr = std::string(v);
  } else if (key == "service.lang_filter") {
    if (v.empty() || v == "none") lang_filter.reset();
    else lang_filter = std::string(v);
  } else if (key == "service.static_dir") {
    static_dir = std::filesystem::path(std::string(v));
  } else if (key == "ingest.speed") {
    ingest_speed = to_double(key, v);
  } else if (key == "ingest.replay_path") {
    replay_path = std::filesystem::path(std::string(v));
  } else if (key == "ingest.stdin") {
    ingest_stdin = to_bool(key, v);
  } else if (key == "seed") {
    seed = to_u64(key, v);
    pipeline.coarse.rng_seed = pipeline.fine.rng_seed = seed;
  } else {
    throw std::invalid_argument("config: unknown key " + std::string(key));
  }
}

void ServiceConfig::validate() const {
  pipeline.validate();
  if (window.duration_ms && *window.duration_ms <= 0)
    throw std::invalid_argument("config: window.duration_secs must be > 0");
  if (window.max_count && *window.max_count == 0) throw std::invalid_argument("config: window.max_count must be > 0");
  if (!(update_interval_secs > 0)) throw std::invalid_argument("config: pipeline.update_interval_secs must be > 0");
  if (ingest_speed < 0) throw std::invalid_argument("config: ingest.speed must be >= 0");
  if (phrases.top_n == 0) throw std::invalid_argument("config: phrases.top_n must be >= 1");
  listen_endpoint();
}

ServiceConfig ServiceConfig::parse(std::string_view text) {
  ServiceConfig c;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    c.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  c.validate();
  return c;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::pair<std::string, int> ServiceConfig::listen_endpoint() const {
  const std::size_t colon = listen_addr.rfind(':');
  if (colon == std::string::npos || colon + 1 == listen_addr.size())
    throw std::invalid_argument("config: service.listen_addr must be host:port");
  const std::uint64_t port = to_u64("service.listen_addr", std::string_view(listen_addr).substr(colon + 1));
  if (port > 65535) bad_value("service.listen_addr", listen_addr);
  return {listen_addr.substr(0, colon), static_cast<int>(port)};
}

}  // namespace streamclust
