#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace streamclust {

// Milliseconds since the Unix epoch.
using Timestamp = std::int64_t;

struct RawPost {
  std::string id;
  std::string text;
  std::optional<std::string> lang;
  Timestamp published_at = 0;
  // Original publish time when the post is a repost.
  std::optional<Timestamp> origin_published_at;

  Timestamp effective_date() const { return origin_published_at.value_or(published_at); }
  // Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

class StopwordSet {
 public:
  StopwordSet() = default;
  explicit StopwordSet(const std::vector<std::string>& words) : words_(words.begin(), words.end()) {}

  bool contains(std::string_view token) const;
  std::size_t size() const { return words_.size(); }
  void insert(std::string word) { words_.insert(std::move(word)); }

  static StopwordSet english();
  // UTF-8, one token per line. Blank lines and lines starting with '#' are ignored.
  static StopwordSet load(const std::filesystem::path& path);

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::unordered_set<std::string, Hash, std::equal_to<>> words_{};
};

// Removes URLs, the leading "RT @user:" markup and '#' in front of hashtags.
// Mentions are kept. Idempotent.
std::string clean_text(std::string_view text);

// Lowercased word tokens in order. A token is a run of letters, digits and
// underscores, optionally prefixed with '@'. Stopwords are dropped.
std::vector<std::string> tokenize(std::string_view cleaned, const StopwordSet& stopwords);

// clean_text followed by tokenize.
std::vector<std::string> analyze(std::string_view text, const StopwordSet& stopwords);

}  // namespace streamclust
