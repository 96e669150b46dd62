#include "streamclust/vocabulary.hpp"

#include <mutex>
#include <stdexcept>

namespace streamclust {

TokenId Vocabulary::get_or_add(std::string_view token) {
  {
    std::shared_lock lock(mutex_);
    if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  }
  std::unique_lock lock(mutex_);
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.emplace_back(token);
  ids_.emplace(tokens_.back(), id);
  return id;
}

std::optional<TokenId> Vocabulary::lookup(std::string_view token) const {
  std::shared_lock lock(mutex_);
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  return std::nullopt;
}

std::string Vocabulary::token_of(TokenId id) const {
  std::shared_lock lock(mutex_);
  if (id >= tokens_.size()) throw std::out_of_range("unknown token id " + std::to_string(id));
  return tokens_[id];
}

std::size_t Vocabulary::size() const {
  std::shared_lock lock(mutex_);
  return tokens_.size();
}

}  // namespace streamclust
