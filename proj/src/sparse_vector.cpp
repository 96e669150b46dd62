#include "streamclust/sparse_vector.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cassert>
#include <cmath>

namespace streamclust {

SparseVector SparseVector::from_sorted(std::vector<SparseEntry> entries) {
#ifndef NDEBUG
  for (std::size_t i = 1; i < entries.size(); ++i) assert(entries[i - 1].id < entries[i].id);
#endif
  return SparseVector(std::move(entries));
}

SparseVector SparseVector::from_unsorted(std::vector<SparseEntry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const SparseEntry& a, const SparseEntry& b) { return a.id < b.id; });
  std::vector<SparseEntry> merged;
  merged.reserve(entries.size());
  for (const auto& e : entries) {
    if (!merged.empty() && merged.back().id == e.id) {
      merged.back().weight += e.weight;
    } else {
      merged.push_back(e);
    }
  }
  std::erase_if(merged, [](const SparseEntry& e) { return !(e.weight > 0.0); });
  return SparseVector(std::move(merged));
}

double SparseVector::norm() const {
  double sum = 0.0;
  for (const auto& e : entries_) sum += e.weight * e.weight;
  return std::sqrt(sum);
}

void SparseVector::normalize() {
  const double n = norm();
  if (n == 0.0) return;
  for (auto& e : entries_) e.weight /= n;
}

SparseVector SparseVector::normalized() const {
  SparseVector copy = *this;
  copy.normalize();
  return copy;
}

double SparseVector::weight_of(TokenId id) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                             [](const SparseEntry& e, TokenId v) { return e.id < v; });
  return (it != entries_.end() && it->id == id) ? it->weight : 0.0;
}

bool SparseVector::contains(TokenId id) const { return weight_of(id) != 0.0; }

double dot(const SparseVector& a, const SparseVector& b) { return dot(a.entries(), b.entries()); }

double dot(std::span<const SparseEntry> ea, std::span<const SparseEntry> eb) {
  if (ea.empty() || eb.empty()) return 0.0;
  // Galloping pays off when one side is a long centroid.
  if (ea.size() > 8 * eb.size()) std::swap(ea, eb);
  double sum = 0.0;
  if (eb.size() > 8 * ea.size()) {
    auto it = eb.begin();
    for (const auto& x : ea) {
      it = std::lower_bound(it, eb.end(), x.id,
                            [](const SparseEntry& e, TokenId v) { return e.id < v; });
      if (it == eb.end()) break;
      if (it->id == x.id) sum += x.weight * it->weight;
    }
    return sum;
  }
  std::size_t i = 0, j = 0;
  while (i < ea.size() && j < eb.size()) {
    if (ea[i].id < eb[j].id) {
      ++i;
    } else if (eb[j].id < ea[i].id) {
      ++j;
    } else {
      sum += ea[i].weight * eb[j].weight;
      ++i;
      ++j;
    }
  }
  return sum;
}

double cosine_distance(const SparseVector& a, const SparseVector& b) {
  return std::max(0.0, 1.0 - dot(a, b));
}

double squared_euclidean(const SparseVector& a, const SparseVector& b) {
  auto ea = a.entries();
  auto eb = b.entries();
  double sum = 0.0;
  std::size_t i = 0, j = 0;
  while (i < ea.size() || j < eb.size()) {
    if (j == eb.size() || (i < ea.size() && ea[i].id < eb[j].id)) {
      sum += ea[i].weight * ea[i].weight;
      ++i;
    } else if (i == ea.size() || eb[j].id < ea[i].id) {
      sum += eb[j].weight * eb[j].weight;
      ++j;
    } else {
      const double d = ea[i].weight - eb[j].weight;
      sum += d * d;
      ++i;
      ++j;
    }
  }
  return sum;
}

void SparseAccumulator::add(const SparseVector& v, double scale) {
  for (const auto& e : v.entries()) {
    if (e.id >= values_.size()) {
      const std::size_t size = std::max<std::size_t>(e.id + 1, values_.size() * 2);
      values_.resize(size, 0.0);
      used_.resize((size + 63) / 64, 0);
    }
    std::uint64_t& word = used_[e.id >> 6];
    const std::uint64_t bit = std::uint64_t{1} << (e.id & 63);
    if (!(word & bit)) {
      word |= bit;
      touched_.push_back(e.id);
      lo_word_ = std::min<std::size_t>(lo_word_, e.id >> 6);
      hi_word_ = std::max<std::size_t>(hi_word_, (e.id >> 6) + 1);
    }
    values_[e.id] += scale * e.weight;
  }
}

SparseVector SparseAccumulator::take() {
  std::vector<SparseEntry> out;
  out.reserve(touched_.size());
  auto emit = [&](TokenId id) {
    if (values_[id] > 0.0) out.push_back({id, values_[id]});
    values_[id] = 0.0;
  };
  if (hi_word_ > lo_word_ && hi_word_ - lo_word_ <= 4 * touched_.size()) {
    // Dense enough: walking the bitmap is cheaper than sorting.
    for (std::size_t w = lo_word_; w < hi_word_; ++w) {
      std::uint64_t bits = used_[w];
      used_[w] = 0;
      while (bits) {
        emit(static_cast<TokenId>(w * 64 + static_cast<std::size_t>(std::countr_zero(bits))));
        bits &= bits - 1;
      }
    }
  } else {
    std::sort(touched_.begin(), touched_.end());
    for (TokenId id : touched_) {
      emit(id);
      used_[id >> 6] = 0;
    }
  }
  touched_.clear();
  lo_word_ = SIZE_MAX;
  hi_word_ = 0;
  return SparseVector::from_sorted(std::move(out));
}

}  // namespace streamclust
