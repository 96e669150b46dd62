#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "streamclust/phrases.hpp"
#include "streamclust/pipeline.hpp"
#include "streamclust/window.hpp"

namespace streamclust {

// Everything a running service needs. The file format is one `key = value`
// per line; blank lines and lines starting with '#' are ignored.
//
//   window.duration_secs        window.max_count
//   pipeline.update_interval_secs  pipeline.coarse_kmax  pipeline.fine_kmax
//   pipeline.theta_sim  pipeline.theta_new  pipeline.history_depth
//   pipeline.parallel
//   cluster.restarts  cluster.sample_cap  cluster.max_iters
//   phrases.top_n
//   textprep.stopwords_path  textprep.idf_path
//   service.listen_addr  service.lang_filter  service.static_dir
//   ingest.speed  ingest.replay_path  ingest.stdin
//   seed
struct ServiceConfig {
  WindowConfig window;
  PipelineConfig pipeline;
  PhraseConfig phrases;
  double update_interval_secs = 60.0;

  std::optional<std::filesystem::path> stopwords_path;
  std::optional<std::filesystem::path> idf_path;

  std::string listen_addr = "127.0.0.1:8080";
  std::optional<std::string> lang_filter;
  std::optional<std::filesystem::path> static_dir;

  // Replay speed multiplier; 0 replays as fast as possible.
  double ingest_speed = 1.0;
  std::optional<std::filesystem::path> replay_path;
  bool ingest_stdin = false;

  std::uint64_t seed = 0;

  // Throws std::invalid_argument on an unknown key or a malformed value.
  void set(std::string_view key, std::string_view value);
  // Throws std::invalid_argument on inconsistent values.
  void validate() const;

  static ServiceConfig parse(std::string_view text);
  // Throws std::runtime_error when the file cannot be read.
  static ServiceConfig load(const std::filesystem::path& path);

  // Host and port split from listen_addr.
  std::pair<std::string, int> listen_endpoint() const;
};

}  // namespace streamclust
