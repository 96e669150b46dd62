#pragma once

#include <deque>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>

#include "streamclust/sparse_vector.hpp"

namespace streamclust {

// Append-only token <-> id map with dense ids starting at 0. Lookups take a
// shared lock; appends are serialized.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(const Vocabulary&) = delete;
  Vocabulary& operator=(const Vocabulary&) = delete;

  TokenId get_or_add(std::string_view token);
  std::optional<TokenId> lookup(std::string_view token) const;
  std::string token_of(TokenId id) const;
  std::size_t size() const;

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };

  mutable std::shared_mutex mutex_;
  std::deque<std::string> tokens_;
  std::unordered_map<std::string, TokenId, Hash, std::equal_to<>> ids_;
};

}  // namespace streamclust
