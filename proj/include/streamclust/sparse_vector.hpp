#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace streamclust {

using TokenId = std::uint32_t;

struct SparseEntry {
  TokenId id;
  double weight;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

// Sorted (token id, weight) list. Every document and every centroid is one of
// these. Construction through the factories guarantees strictly increasing ids
// and no zero weights.
class SparseVector {
 public:
  SparseVector() = default;

  // Entries must already be strictly increasing by id.
  static SparseVector from_sorted(std::vector<SparseEntry> entries);
  // Sorts, merges duplicate ids by summing and drops non-positive weights.
  static SparseVector from_unsorted(std::vector<SparseEntry> entries);

  std::span<const SparseEntry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  double norm() const;
  // Divides by the L2 norm. No-op on the zero vector.
  void normalize();
  SparseVector normalized() const;

  double weight_of(TokenId id) const;
  bool contains(TokenId id) const;

  friend bool operator==(const SparseVector&, const SparseVector&) = default;

 private:
  explicit SparseVector(std::vector<SparseEntry> entries) : entries_(std::move(entries)) {}
  std::vector<SparseEntry> entries_;
};

// Merge-join over sorted ids, summing in increasing id order.
double dot(const SparseVector& a, const SparseVector& b);
double dot(std::span<const SparseEntry> a, std::span<const SparseEntry> b);

// 1 - dot, clamped at zero so rounding on identical unit vectors never yields
// a negative distance.
double cosine_distance(const SparseVector& a, const SparseVector& b);

double squared_euclidean(const SparseVector& a, const SparseVector& b);

// Dense accumulator used to sum many sparse vectors over a large id space
// without hashing. Only touched slots are visited when extracting or clearing.
class SparseAccumulator {
 public:
  void add(const SparseVector& v, double scale = 1.0);
  // Sorted result of everything added so far; resets the accumulator.
  SparseVector take();
  bool empty() const { return touched_.empty(); }

 private:
  std::vector<double> values_;
  std::vector<std::uint64_t> used_;  // bitmap over ids
  std::vector<TokenId> touched_;
  std::size_t lo_word_ = SIZE_MAX;
  std::size_t hi_word_ = 0;
};

}  // namespace streamclust
