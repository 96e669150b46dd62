#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "streamclust/textprep.hpp"

namespace streamclust {

using DocumentPtr = std::shared_ptr<const Document>;

struct WindowConfig {
  // Time span in milliseconds; nullopt disables time-based eviction.
  std::optional<std::int64_t> duration_ms = 20 * 60 * 1000;
  std::optional<std::size_t> max_count;
};

// Immutable view of the window at one instant. Copies are cheap.
class WindowSnapshot {
 public:
  WindowSnapshot() : items_(std::make_shared<const std::vector<DocumentPtr>>()) {}
  WindowSnapshot(std::uint64_t generation, std::vector<DocumentPtr> items, Timestamp start,
                 Timestamp end)
      : generation_(generation),
        items_(std::make_shared<const std::vector<DocumentPtr>>(std::move(items))),
        start_(start),
        end_(end) {}

  std::uint64_t generation() const { return generation_; }
  std::size_t size() const { return items_->size(); }
  bool empty() const { return items_->empty(); }
  const Document& operator[](std::size_t i) const { return *(*items_)[i]; }
  const std::vector<DocumentPtr>& items() const { return *items_; }
  // Time range covered by the window, used for timelines and temporal bins.
  Timestamp start() const { return start_; }
  Timestamp end() const { return end_; }

 private:
  std::uint64_t generation_ = 0;
  std::shared_ptr<const std::vector<DocumentPtr>> items_;
  Timestamp start_ = 0;
  Timestamp end_ = 0;
};

// Single writer, many snapshot readers. Items are kept in arrival order.
class SlidingWindow {
 public:
  explicit SlidingWindow(WindowConfig config = {});

  // Evicts the oldest arrivals when max_count is exceeded.
  void append(DocumentPtr doc);
  void append(Document doc) { append(std::make_shared<const Document>(std::move(doc))); }

  // Removes exactly the items with published_at < now - duration.
  std::size_t evict_expired(Timestamp now);

  WindowSnapshot snapshot();

  std::size_t size() const;
  const WindowConfig& config() const { return config_; }

 private:
  WindowConfig config_;
  mutable std::mutex mutex_;
  std::deque<DocumentPtr> items_;
  std::uint64_t generation_ = 0;
  Timestamp now_ = 0;
};

}  // namespace streamclust
