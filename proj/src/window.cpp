#include "streamclust/window.hpp"

#include <algorithm>
#include <limits>

namespace streamclust {

SlidingWindow::SlidingWindow(WindowConfig config) : config_(config) {}

void SlidingWindow::append(DocumentPtr doc) {
  std::lock_guard lock(mutex_);
  items_.push_back(std::move(doc));
  if (config_.max_count) {
    while (items_.size() > *config_.max_count) items_.pop_front();
  }
}

std::size_t SlidingWindow::evict_expired(Timestamp now) {
  std::lock_guard lock(mutex_);
  now_ = std::max(now_, now);
  if (!config_.duration_ms) return 0;
  const Timestamp cutoff = now - *config_.duration_ms;
  const auto before = items_.size();
  std::erase_if(items_, [cutoff](const DocumentPtr& d) { return d->post.published_at < cutoff; });
  return before - items_.size();
}

WindowSnapshot SlidingWindow::snapshot() {
  std::vector<DocumentPtr> copy;
  Timestamp now;
  std::uint64_t generation;
  {
    std::lock_guard lock(mutex_);
    copy.assign(items_.begin(), items_.end());
    now = now_;
    generation = ++generation_;
  }
  Timestamp latest = now;
  Timestamp earliest = std::numeric_limits<Timestamp>::max();
  for (const auto& d : copy) {
    latest = std::max(latest, d->post.published_at);
    earliest = std::min(earliest, d->post.published_at);
  }
  if (copy.empty()) earliest = latest;
  const Timestamp start = config_.duration_ms ? latest - *config_.duration_ms : earliest;
  return WindowSnapshot(generation, std::move(copy), start, latest);
}

std::size_t SlidingWindow::size() const {
  std::lock_guard lock(mutex_);
  return items_.size();
}

}  // namespace streamclust
