#include "streamclust/cluster.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <unordered_map>

namespace streamclust {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Distances below this are treated as exact coincidence. Normalizing the same
// vector twice can leave 1 - dot at a few ulps instead of zero.
constexpr double kZeroDistance = 1e-12;

double cosine_from_dot(double d) {
  const double dist = 1.0 - d;
  return dist < kZeroDistance ? 0.0 : dist;
}

// term -> (cluster, weight) postings for the current centroids. Scoring an
// item costs the summed posting length of its terms, which is what makes
// short documents against long centroids cheap.
std::vector<const SparseVector*> pointers_to(std::span<const SparseVector> v) {
  std::vector<const SparseVector*> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(&x);
  return out;
}

class CentroidIndex {
 public:
  explicit CentroidIndex(std::span<const SparseVector> centroids) : CentroidIndex(pointers_to(centroids)) {}

  explicit CentroidIndex(std::span<const SparseVector* const> centroids) : k_(centroids.size()) {
    TokenId max_id = 0;
    bool any = false;
    for (const auto* c : centroids) {
      if (!c->empty()) {
        max_id = std::max(max_id, c->entries().back().id);
        any = true;
      }
    }
    limit_ = any ? max_id + 1 : 0;
    offsets_.assign(static_cast<std::size_t>(limit_) + 1, 0);
    for (const auto* c : centroids)
      for (const auto& e : c->entries()) ++offsets_[e.id + 1];
    std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
    cluster_.resize(offsets_.back());
    weight_.resize(offsets_.back());
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    sq_norm_.resize(k_);
    for (std::size_t c = 0; c < k_; ++c) {
      double sq = 0.0;
      for (const auto& e : centroids[c]->entries()) {
        const std::size_t p = fill[e.id]++;
        cluster_[p] = static_cast<Label>(c);
        weight_[p] = e.weight;
        sq += e.weight * e.weight;
      }
      sq_norm_[c] = sq;
    }
  }

  std::size_t k() const { return k_; }
  double sq_norm(std::size_t c) const { return sq_norm_[c]; }

  // scores[c] += dot(item, centroid c). Terms are visited in ascending id
  // order, the same order dot() sums in, so results agree bit for bit.
  void accumulate(const SparseVector& item, double* scores) const {
    for (const auto& e : item.entries()) {
      if (e.id >= limit_) break;
      for (std::size_t p = offsets_[e.id]; p < offsets_[e.id + 1]; ++p)
        scores[cluster_[p]] += e.weight * weight_[p];
    }
  }

  // Same sums, but records which clusters were hit so the caller can visit
  // and reset only those. `scores` must be zero and `hit` clear on entry.
  void accumulate(const SparseVector& item, double* scores, char* hit, std::vector<Label>& touched) const {
    for (const auto& e : item.entries()) {
      if (e.id >= limit_) break;
      for (std::size_t p = offsets_[e.id]; p < offsets_[e.id + 1]; ++p) {
        const Label c = cluster_[p];
        if (!hit[c]) {
          hit[c] = 1;
          touched.push_back(c);
        }
        scores[c] += e.weight * weight_[p];
      }
    }
  }

 private:
  std::size_t k_;
  TokenId limit_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<Label> cluster_;
  std::vector<double> weight_;
  std::vector<double> sq_norm_;
};

// Centroid weights as a dense term-major table, row t holding the weight of
// term t in every centroid. Scoring an item reads one short row per term.
// Sums run over the item's terms in ascending id order, matching dot().
class DenseCentroids {
 public:
  DenseCentroids(std::size_t terms, std::span<const SparseVector> centroids)
      : k_(centroids.size()), table_(terms * k_, 0.0) {
    for (std::size_t c = 0; c < k_; ++c) set(c, centroids[c]);
  }

  void replace(std::size_t c, const SparseVector& old_centroid, const SparseVector& centroid) {
    for (const auto& e : old_centroid.entries()) table_[e.id * k_ + c] = 0.0;
    set(c, centroid);
  }

  double score(const SparseVector& item, std::size_t c) const {
    double sum = 0.0;
    for (const auto& e : item.entries()) sum += e.weight * table_[e.id * k_ + c];
    return sum;
  }

  // scores[j] = dot(item, centroid ids[j]) in one pass over the item's rows.
  void score_some(const SparseVector& item, std::span<const Label> ids, double* scores) const {
    std::fill(scores, scores + ids.size(), 0.0);
    for (const auto& e : item.entries()) {
      const double* row = &table_[e.id * k_];
      for (std::size_t j = 0; j < ids.size(); ++j) scores[j] += e.weight * row[ids[j]];
    }
  }

  void score_all(const SparseVector& item, double* scores) const {
    for (const auto& e : item.entries()) {
      const double* row = &table_[e.id * k_];
      for (std::size_t c = 0; c < k_; ++c) scores[c] += e.weight * row[c];
    }
  }

 private:
  void set(std::size_t c, const SparseVector& centroid) {
    for (const auto& e : centroid.entries()) table_[e.id * k_ + c] = e.weight;
  }

  std::size_t k_;
  std::vector<double> table_;
};

// term -> (item, weight) postings, used to find which items a new k-means++
// centroid touches.
class ItemIndex {
 public:
  explicit ItemIndex(ItemSpan items) {
    TokenId max_id = 0;
    for (const auto* v : items)
      if (!v->empty()) max_id = std::max(max_id, v->entries().back().id);
    limit_ = items.empty() ? 0 : max_id + 1;
    offsets_.assign(static_cast<std::size_t>(limit_) + 1, 0);
    for (const auto* v : items)
      for (const auto& e : v->entries()) ++offsets_[e.id + 1];
    std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
    item_.resize(offsets_.back());
    weight_.resize(offsets_.back());
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t i = 0; i < items.size(); ++i) {
      for (const auto& e : items[i]->entries()) {
        const std::size_t p = fill[e.id]++;
        item_[p] = static_cast<std::uint32_t>(i);
        weight_[p] = e.weight;
      }
    }
  }

  // dots[i] += dot(items[i], v) for every item sharing a term; indices of
  // touched items are appended to `touched` the first time they are hit.
  void accumulate(const SparseVector& v, std::vector<double>& dots, std::vector<char>& hit,
                  std::vector<std::uint32_t>& touched) const {
    for (const auto& e : v.entries()) {
      if (e.id >= limit_) break;
      for (std::size_t p = offsets_[e.id]; p < offsets_[e.id + 1]; ++p) {
        const auto i = item_[p];
        if (!hit[i]) {
          hit[i] = 1;
          touched.push_back(i);
        }
        dots[i] += weight_[p] * e.weight;
      }
    }
  }

 private:
  TokenId limit_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> item_;
  std::vector<double> weight_;
};

// dot(item, centroid[label]) for every item by scattering each centroid into
// a dense buffer once.
std::vector<double> member_dots(ItemSpan items, std::span<const Label> labels,
                                std::span<const SparseVector> centroids) {
  const std::size_t k = centroids.size();
  std::vector<std::vector<std::uint32_t>> members(k);
  for (std::size_t i = 0; i < items.size(); ++i) members[labels[i]].push_back(static_cast<std::uint32_t>(i));
  std::vector<double> dense;
  std::vector<double> out(items.size(), 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    if (members[c].empty()) continue;
    const auto entries = centroids[c].entries();
    if (!entries.empty() && dense.size() <= entries.back().id) dense.resize(entries.back().id + 1, 0.0);
    for (const auto& e : entries) dense[e.id] = e.weight;
    for (auto i : members[c]) {
      double sum = 0.0;
      for (const auto& e : items[i]->entries()) {
        if (e.id < dense.size()) {
          const double w = dense[e.id];
          if (w != 0.0) sum += e.weight * w;
        }
      }
      out[i] = sum;
    }
    for (const auto& e : entries) dense[e.id] = 0.0;
  }
  return out;
}

double sq_norm(const SparseVector& v) {
  double s = 0.0;
  for (const auto& e : v.entries()) s += e.weight * e.weight;
  return s;
}

struct Nearest {
  Label best = 0;
  double best_score = -kInf;
  double second_score = -kInf;
};

// Highest dot product; ties resolve to the lower index.
Nearest nearest_cosine(const SparseVector& item, const CentroidIndex& index, std::vector<double>& scores) {
  std::fill(scores.begin(), scores.end(), 0.0);
  index.accumulate(item, scores.data());
  Nearest n;
  for (std::size_t c = 0; c < scores.size(); ++c) {
    const double s = scores[c];
    if (s > n.best_score) {
      n.second_score = n.best_score;
      n.best_score = s;
      n.best = static_cast<Label>(c);
    } else if (s > n.second_score) {
      n.second_score = s;
    }
  }
  return n;
}

// Fills `centroids` up to k with k-means++ draws. `mind` holds each item's
// distance to the nearest chosen centroid (already thresholded).
void kpp_fill(ItemSpan items, const ItemIndex& index, std::vector<SparseVector>& centroids,
              std::vector<double>& mind, std::size_t k, Rng& rng, Metric metric) {
  const std::size_t n = items.size();
  std::vector<double> dots(n, 0.0);
  std::vector<char> hit(n, 0);
  std::vector<std::uint32_t> touched;
  std::vector<double> item_sq;
  if (metric == Metric::euclidean) {
    item_sq.resize(n);
    for (std::size_t i = 0; i < n; ++i) item_sq[i] = sq_norm(*items[i]);
  }

  auto absorb = [&](const SparseVector& c) {
    touched.clear();
    index.accumulate(c, dots, hit, touched);
    if (metric == Metric::cosine) {
      // Untouched items are orthogonal to c: distance exactly 1.
      for (std::size_t i = 0; i < n; ++i) mind[i] = std::min(mind[i], 1.0);
      for (auto i : touched) mind[i] = std::min(mind[i], cosine_from_dot(dots[i]));
    } else {
      const double c_sq = sq_norm(c);
      for (std::size_t i = 0; i < n; ++i) {
        double d = item_sq[i] + c_sq - 2.0 * dots[i];
        if (d < kZeroDistance) d = 0.0;
        mind[i] = std::min(mind[i], d);
      }
    }
    for (auto i : touched) {
      dots[i] = 0.0;
      hit[i] = 0;
    }
  };

  if (centroids.empty() && k > 0 && n > 0) {
    const auto first = rng.below(n);
    centroids.push_back(*items[first]);
    absorb(centroids.back());
  }
  while (centroids.size() < k) {
    double total = 0.0;
    for (double d : mind) total += d;
    if (!(total > 0.0)) break;  // every item coincides with a centroid
    const double target = rng.uniform() * total;
    double cum = 0.0;
    std::size_t pick = n;
    std::size_t last_positive = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (mind[i] <= 0.0) continue;
      last_positive = i;
      cum += mind[i];
      if (cum > target) {
        pick = i;
        break;
      }
    }
    if (pick == n) pick = last_positive;
    centroids.push_back(*items[pick]);
    absorb(centroids.back());
  }
}

std::vector<double> initial_mind(std::size_t n) {
  return std::vector<double>(n, kInf);
}

struct PrevSeed {
  std::vector<SparseVector> kept;
  std::vector<double> mind;
};

PrevSeed seed_from_previous(ItemSpan items, std::span<const SparseVector> prev) {
  const Assignment a = assign(items, prev, Metric::cosine);
  std::vector<char> used(prev.size(), 0);
  for (auto l : a.labels) used[l] = 1;
  PrevSeed seed;
  for (std::size_t c = 0; c < prev.size(); ++c)
    if (used[c]) seed.kept.push_back(prev[c]);
  seed.mind.resize(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) seed.mind[i] = cosine_from_dot(a.scores[i]);
  return seed;
}

// Removes empty clusters from a converged-or-capped cosine run and fills in
// the result.
KMeansResult finish(std::vector<SparseVector> centroids, std::vector<Label> labels, std::size_t iter,
                    std::vector<double> trace) {
  auto sizes = cluster_sizes(labels, centroids.size());
  std::vector<Label> remap(centroids.size());
  std::vector<SparseVector> kept;
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    remap[c] = static_cast<Label>(kept.size());
    if (sizes[c] > 0) kept.push_back(std::move(centroids[c]));
  }
  for (auto& l : labels) l = remap[l];
  KMeansResult result;
  result.objective_trace = std::move(trace);
  result.clustering.centroids = std::move(kept);
  result.clustering.sizes = cluster_sizes(labels, result.clustering.centroids.size());
  result.clustering.assignment = std::move(labels);
  result.clustering.iterations = iter;
  return result;
}

double mean_own_similarity(ItemSpan items, std::span<const Label> labels, std::span<const SparseVector> centroids) {
  const auto dots = member_dots(items, labels, centroids);
  double sum = 0.0;
  for (double x : dots) sum += x;
  return items.empty() ? 0.0 : sum / static_cast<double>(items.size());
}

// Textbook alternation, used when the bound matrix would be too large.
KMeansResult kmeans_cosine_plain(ItemSpan items, std::vector<SparseVector> centroids, const ClusterParams& params,
                                 bool trace) {
  std::vector<double> objective;
  Assignment a = assign(items, centroids, Metric::cosine);
  if (trace) objective.push_back(mean_own_similarity(items, a.labels, centroids));
  std::size_t iter = 0;
  while (iter < params.max_iters) {
    ++iter;
    CentroidUpdate upd = update_centroids(items, a.labels, centroids.size(), Metric::cosine);
    centroids = std::move(upd.centroids);
    Assignment next = assign(items, centroids, Metric::cosine);
    const bool changed = next.labels != upd.assignment;
    a = std::move(next);
    if (trace) objective.push_back(mean_own_similarity(items, a.labels, centroids));
    if (!changed) break;
  }
  return finish(std::move(centroids), std::move(a.labels), iter, std::move(objective));
}

// Bound matrices or centroid tables above this many entries fall back to the
// plain loop.
constexpr std::size_t kMaxBoundEntries = std::size_t{64} << 20;
constexpr std::size_t kMaxTableEntries = std::size_t{32} << 20;
// Margin on every bound comparison. It dwarfs float rounding of the stored
// bounds, so pruning never changes a label.
constexpr double kBoundSlack = 1e-5;

// max_c (row[c] + drift[c]) with independent lanes so it vectorizes.
float row_reach(const float* row, const float* drift, std::size_t k) {
  constexpr std::size_t kLanes = 8;
  float lane[kLanes];
  std::fill(lane, lane + kLanes, -std::numeric_limits<float>::infinity());
  std::size_t c = 0;
  for (; c + kLanes <= k; c += kLanes)
    for (std::size_t l = 0; l < kLanes; ++l) {
      const float v = row[c + l] + drift[c + l];
      lane[l] = v > lane[l] ? v : lane[l];
    }
  float reach = *std::max_element(lane, lane + kLanes);
  for (; c < k; ++c) reach = std::max(reach, row[c] + drift[c]);
  return reach;
}

// Lloyd iterations with per-centroid similarity bounds (Elkan style). Items
// are unit vectors, so a centroid that moves by d changes any item's
// similarity to it by at most d. For each item we keep an exact-or-lowered
// similarity to its own centroid, and for every other centroid c an upper
// bound stored as (similarity - total drift of c so far), which stays valid
// without touching it as c keeps moving. Only centroids whose bound reaches
// the item's own similarity are scored exactly, so labels and centroids equal
// plain assign/update alternation.
KMeansResult kmeans_cosine(ItemSpan items, std::vector<SparseVector> centroids, const ClusterParams& params,
                           bool trace) {
  const std::size_t n = items.size();
  std::size_t k = centroids.size();
  std::size_t terms = 0;
  for (const auto* v : items)
    if (!v->empty()) terms = std::max<std::size_t>(terms, v->entries().back().id + 1);
  if (n * k > kMaxBoundEntries || terms * k > kMaxTableEntries)
    return kmeans_cosine_plain(items, std::move(centroids), params, trace);

  std::vector<double> objective;
  std::vector<Label> labels(n);
  std::vector<double> own(n);
  std::vector<float> bound(n * k);
  std::vector<float> total_drift(k, 0.0f);
  constexpr float kNone = -std::numeric_limits<float>::infinity();

  // Stored bounds are rounded up so float conversion never tightens them.
  auto store = [](double sim, float offset) {
    return std::nextafter(static_cast<float>(sim - static_cast<double>(offset)), std::numeric_limits<float>::infinity());
  };

  // Centroids carry no term outside the items' vocabulary except in the
  // initial seeds, which may come from a previous window.
  for (auto& c : centroids) {
    if (!c.empty() && c.entries().back().id >= terms) {
      std::vector<SparseEntry> e;
      for (const auto& x : c.entries())
        if (x.id < terms) e.push_back(x);
      c = SparseVector::from_sorted(std::move(e));
    }
  }
  std::optional<DenseCentroids> table(std::in_place, terms, centroids);
  std::vector<double> scores(k);
  {
    for (std::size_t i = 0; i < n; ++i) {
      std::fill(scores.begin(), scores.end(), 0.0);
      table->score_all(*items[i], scores.data());
      Nearest nn;
      for (std::size_t c = 0; c < k; ++c) {
        if (scores[c] > nn.best_score) {
          nn.best_score = scores[c];
          nn.best = static_cast<Label>(c);
        }
      }
      labels[i] = nn.best;
      own[i] = nn.best_score;
      float* row = &bound[i * k];
      for (std::size_t c = 0; c < k; ++c) row[c] = store(scores[c], 0.0f);
      row[nn.best] = kNone;
    }
  }
  if (trace) objective.push_back(mean_own_similarity(items, labels, centroids));

  std::vector<char> dirty(k, 1);
  std::vector<std::uint32_t> order(n);
  std::vector<Label> candidates;
  std::vector<double> picked(k + 1);
  SparseAccumulator acc;
  std::size_t iter = 0;
  while (iter < params.max_iters) {
    ++iter;
    // Update step: only clusters whose membership changed get a new centroid.
    std::vector<std::size_t> start(k + 1, 0);
    for (auto l : labels) ++start[l + 1];
    std::partial_sum(start.begin(), start.end(), start.begin());
    {
      std::vector<std::size_t> fill(start.begin(), start.end() - 1);
      for (std::size_t i = 0; i < n; ++i) order[fill[labels[i]]++] = static_cast<std::uint32_t>(i);
    }
    std::vector<Label> remap(k);
    std::vector<std::size_t> kept_cols;
    std::vector<SparseVector> next;
    std::vector<double> drift;
    next.reserve(k);
    for (std::size_t c = 0; c < k; ++c) {
      if (start[c] == start[c + 1]) continue;  // empty: removed
      remap[c] = static_cast<Label>(next.size());
      kept_cols.push_back(c);
      if (dirty[c]) {
        for (std::size_t p = start[c]; p < start[c + 1]; ++p) acc.add(*items[order[p]]);
        next.push_back(acc.take().normalized());
        // Seeds may have lost out-of-vocabulary terms, so norms are not assumed.
        const double d2 = sq_norm(next.back()) + sq_norm(centroids[c]) - 2.0 * dot(next.back(), centroids[c]);
        drift.push_back(std::sqrt(std::max(0.0, d2)));
        table->replace(c, centroids[c], next.back());
      } else {
        next.push_back(std::move(centroids[c]));
        drift.push_back(0.0);
      }
    }
    if (next.size() != k) {
      table.reset();
      table.emplace(terms, next);
      const std::size_t k_new = next.size();
      for (auto& l : labels) l = remap[l];
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k_new; ++j) bound[i * k_new + j] = bound[i * k + kept_cols[j]];
      bound.resize(n * k_new);
      std::vector<float> td(k_new);
      for (std::size_t j = 0; j < k_new; ++j) td[j] = total_drift[kept_cols[j]];
      total_drift = std::move(td);
      k = k_new;
      scores.resize(k);
    }
    centroids = std::move(next);
    for (std::size_t c = 0; c < k; ++c) {
      // Round the running total up so it never understates the true drift.
      if (drift[c] > 0.0)
        total_drift[c] = std::nextafter(static_cast<float>(static_cast<double>(total_drift[c]) + drift[c]),
                                        std::numeric_limits<float>::infinity());
    }

    // Assignment step.
    std::fill(dirty.begin(), dirty.end(), 0);
    dirty.resize(k, 0);
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const Label a = labels[i];
      float* row = &bound[i * k];
      const float reach = row_reach(row, total_drift.data(), k);
      own[i] -= drift[a];
      if (static_cast<double>(reach) + kBoundSlack < own[i]) continue;

      // Candidates are tested against the lowered own similarity, a superset
      // of those that can beat the exact one, so a single pass scores both.
      candidates.clear();
      candidates.push_back(a);
      for (std::size_t c = 0; c < k; ++c)
        if (static_cast<double>(row[c] + total_drift[c]) + kBoundSlack >= own[i]) candidates.push_back(static_cast<Label>(c));
      if (4 * candidates.size() > k) {
        std::fill(scores.begin(), scores.end(), 0.0);
        table->score_all(*items[i], scores.data());
        for (std::size_t j = 0; j < candidates.size(); ++j) picked[j] = scores[candidates[j]];
      } else {
        table->score_some(*items[i], candidates, picked.data());
      }
      own[i] = picked[0];
      Label best = a;
      double best_score = own[i];
      for (std::size_t j = 1; j < candidates.size(); ++j) {
        const Label c = candidates[j];
        const double sc = picked[j];
        row[c] = store(sc, total_drift[c]);
        if (sc > best_score || (sc == best_score && c < best)) {
          best_score = sc;
          best = c;
        }
      }
      if (best != a) {
        row[a] = store(own[i], total_drift[a]);
        row[best] = kNone;
        own[i] = best_score;
        labels[i] = best;
        dirty[a] = 1;
        dirty[best] = 1;
        changed = true;
      }
    }
    if (trace) {
      objective.push_back(mean_own_similarity(items, labels, centroids));
#ifndef NDEBUG
      const auto m = objective.size();
      assert(objective[m - 1] >= objective[m - 2] - 1e-9);
#endif
    }
    if (!changed) break;
  }
  return finish(std::move(centroids), std::move(labels), iter, std::move(objective));
}

KMeansResult kmeans_euclidean(ItemSpan items, std::vector<SparseVector> centroids,
                              const ClusterParams& params) {
  KMeansResult result;
  Assignment a = assign(items, centroids, Metric::euclidean);
  std::size_t iter = 0;
  while (iter < params.max_iters) {
    ++iter;
    CentroidUpdate upd = update_centroids(items, a.labels, centroids.size(), Metric::euclidean);
    centroids = std::move(upd.centroids);
    Assignment next = assign(items, centroids, Metric::euclidean);
    const bool changed = next.labels != upd.assignment;
    a = std::move(next);
    if (!changed) break;
  }
  auto sizes = cluster_sizes(a.labels, centroids.size());
  std::vector<Label> remap(centroids.size());
  std::vector<SparseVector> kept;
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    remap[c] = static_cast<Label>(kept.size());
    if (sizes[c] > 0) kept.push_back(std::move(centroids[c]));
  }
  for (auto& l : a.labels) l = remap[l];
  result.clustering.centroids = std::move(kept);
  result.clustering.sizes = cluster_sizes(a.labels, result.clustering.centroids.size());
  result.clustering.assignment = std::move(a.labels);
  result.clustering.iterations = iter;
  return result;
}

}  // namespace

void ClusterParams::validate() const {
  if (k_min < 1 || k_min > k_max) throw std::invalid_argument("cluster params: need 1 <= k_min <= k_max");
  if (restarts < 1) throw std::invalid_argument("cluster params: restarts must be >= 1");
  if (sample_cap < 1) throw std::invalid_argument("cluster params: sample_cap must be >= 1");
  if (max_iters < 1) throw std::invalid_argument("cluster params: max_iters must be >= 1");
}

std::vector<std::optional<Label>> ClusterMatch::curr_to_prev(std::size_t curr_k) const {
  std::vector<std::optional<Label>> out(curr_k);
  for (std::size_t i = 0; i < prev_to_curr.size(); ++i)
    if (prev_to_curr[i] && *prev_to_curr[i] < curr_k) out[*prev_to_curr[i]] = static_cast<Label>(i);
  return out;
}

std::vector<std::size_t> get_cluster_sizes(std::size_t k_min, std::size_t k_max,
                                           std::optional<std::size_t> k_prev) {
  std::size_t k = k_prev ? std::min(*k_prev, k_max) : k_min;
  k = std::max<std::size_t>(k, 1);
  std::vector<std::size_t> out;
  std::size_t step = 1;
  while (k <= k_max) {
    out.push_back(k);
    k += step;
    ++step;
  }
  if (out.empty() || out.back() != k_max) out.push_back(k_max);
  return out;
}

std::vector<SparseVector> init_kpp(ItemSpan items, std::size_t k, Rng& rng, Metric metric) {
  std::vector<SparseVector> centroids;
  if (items.empty() || k == 0) return centroids;
  const ItemIndex index(items);
  auto mind = initial_mind(items.size());
  kpp_fill(items, index, centroids, mind, k, rng, metric);
  return centroids;
}

IncrementalInit init_incremental(ItemSpan items, std::span<const SparseVector> prev_centroids,
                                 std::size_t k, Rng& rng) {
  if (prev_centroids.empty()) throw std::invalid_argument("init_incremental: no previous centroids");
  IncrementalInit out;
  if (items.empty()) return out;
  PrevSeed seed = seed_from_previous(items, prev_centroids);
  out.kept = seed.kept.size();
  out.centroids = std::move(seed.kept);
  if (k > out.centroids.size()) {
    const ItemIndex index(items);
    kpp_fill(items, index, out.centroids, seed.mind, k, rng, Metric::cosine);
  }
  return out;
}

Assignment assign(ItemSpan items, std::span<const SparseVector> centroids, Metric metric) {
  if (centroids.empty()) throw std::invalid_argument("assign: no centroids");
  Assignment out;
  out.labels.resize(items.size());
  out.scores.resize(items.size());
  const CentroidIndex index(centroids);
  std::vector<double> scores(centroids.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (metric == Metric::cosine) {
      const Nearest nn = nearest_cosine(*items[i], index, scores);
      out.labels[i] = nn.best;
      out.scores[i] = nn.best_score;
    } else {
      std::fill(scores.begin(), scores.end(), 0.0);
      index.accumulate(*items[i], scores.data());
      Label best = 0;
      double best_d = kInf;
      for (std::size_t c = 0; c < scores.size(); ++c) {
        const double d = index.sq_norm(c) - 2.0 * scores[c];
        if (d < best_d) {
          best_d = d;
          best = static_cast<Label>(c);
        }
      }
      out.labels[i] = best;
      out.scores[i] = std::max(0.0, sq_norm(*items[i]) + best_d);
    }
  }
  return out;
}

CentroidUpdate update_centroids(ItemSpan items, std::span<const Label> assignment, std::size_t k,
                                Metric metric) {
  std::vector<std::size_t> counts(k, 0);
  for (auto l : assignment) ++counts[l];
  std::vector<std::size_t> start(k + 1, 0);
  for (std::size_t c = 0; c < k; ++c) start[c + 1] = start[c] + counts[c];
  std::vector<std::uint32_t> order(assignment.size());
  {
    std::vector<std::size_t> fill(start.begin(), start.end() - 1);
    for (std::size_t i = 0; i < assignment.size(); ++i) order[fill[assignment[i]]++] = static_cast<std::uint32_t>(i);
  }
  CentroidUpdate out;
  std::vector<Label> remap(k, 0);
  SparseAccumulator acc;
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) {
      out.dropped.push_back(static_cast<Label>(c));
      continue;
    }
    remap[c] = static_cast<Label>(out.centroids.size());
    for (std::size_t p = start[c]; p < start[c + 1]; ++p) acc.add(*items[order[p]]);
    SparseVector sum = acc.take();
    if (metric == Metric::cosine) {
      sum.normalize();
      out.centroids.push_back(std::move(sum));
    } else {
      std::vector<SparseEntry> mean(sum.entries().begin(), sum.entries().end());
      const double inv = 1.0 / static_cast<double>(counts[c]);
      for (auto& e : mean) e.weight *= inv;
      out.centroids.push_back(SparseVector::from_sorted(std::move(mean)));
    }
  }
  out.assignment.resize(assignment.size());
  for (std::size_t i = 0; i < assignment.size(); ++i) out.assignment[i] = remap[assignment[i]];
  return out;
}

KMeansResult kmeans(ItemSpan items, std::vector<SparseVector> init, const ClusterParams& params,
                    const KMeansOptions& options) {
  if (init.empty()) throw std::invalid_argument("kmeans: no initial centroids");
  if (items.empty()) {
    KMeansResult r;
    return r;
  }
  if (params.metric == Metric::euclidean) return kmeans_euclidean(items, std::move(init), params);
#ifndef NDEBUG
  const bool trace = true;
#else
  const bool trace = options.trace_objective;
#endif
  auto r = kmeans_cosine(items, std::move(init), params, trace);
  if (!options.trace_objective) r.objective_trace.clear();
  return r;
}

double davies_bouldin(ItemSpan items, const Clustering& clustering, Metric metric) {
  const std::size_t k = clustering.centroids.size();
  if (k < 2) return kInf;
  const auto dots = member_dots(items, clustering.assignment, clustering.centroids);
  std::vector<double> spread(k, 0.0);
  std::vector<std::size_t> count(k, 0);
  std::vector<double> centroid_sq;
  if (metric == Metric::euclidean) {
    centroid_sq.resize(k);
    for (std::size_t c = 0; c < k; ++c) centroid_sq[c] = sq_norm(clustering.centroids[c]);
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    const Label c = clustering.assignment[i];
    double d;
    if (metric == Metric::cosine) {
      d = cosine_from_dot(dots[i]);
    } else {
      d = std::sqrt(std::max(0.0, sq_norm(*items[i]) + centroid_sq[c] - 2.0 * dots[i]));
    }
    spread[c] += d;
    ++count[c];
  }
  for (std::size_t c = 0; c < k; ++c)
    if (count[c]) spread[c] /= static_cast<double>(count[c]);

  std::vector<double> worst(k, 0.0);
  std::optional<CentroidIndex> index;
  std::vector<double> pair_dots(k);
  if (metric == Metric::cosine) index.emplace(clustering.centroids);
  for (std::size_t i = 0; i < k; ++i) {
    if (index) {
      std::fill(pair_dots.begin(), pair_dots.end(), 0.0);
      index->accumulate(clustering.centroids[i], pair_dots.data());
    }
    for (std::size_t j = i + 1; j < k; ++j) {
      double m;
      if (metric == Metric::cosine) {
        m = std::max(0.0, 1.0 - pair_dots[j]);
      } else {
        m = std::sqrt(squared_euclidean(clustering.centroids[i], clustering.centroids[j]));
      }
      const double r = m <= kZeroDistance ? kInf : (spread[i] + spread[j]) / m;
      worst[i] = std::max(worst[i], r);
      worst[j] = std::max(worst[j], r);
    }
  }
  double sum = 0.0;
  for (double w : worst) sum += w;
  return sum / static_cast<double>(k);
}

std::vector<std::size_t> sample(std::size_t n, std::size_t cap, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (n <= cap) return idx;
  for (std::size_t i = 0; i < cap; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Clustering dynamic_cluster(ItemSpan items, const Clustering* prev, const ClusterParams& params) {
  params.validate();
  if (items.empty()) throw std::invalid_argument("dynamic_cluster: no items");
  const bool incremental = prev != nullptr && !prev->centroids.empty();
  const auto ks = get_cluster_sizes(params.k_min, params.k_max,
                                    incremental ? std::optional<std::size_t>(prev->chosen_k()) : std::nullopt);

  Rng rng(mix_seed(params.rng_seed, 0));
  const auto chosen = sample(items.size(), params.sample_cap, rng);
  const bool identity = chosen.size() == items.size();
  std::vector<const SparseVector*> sub;
  sub.reserve(chosen.size());
  for (auto i : chosen) sub.push_back(items[i]);
  const ItemIndex index(sub);

  PrevSeed seed;
  if (incremental) seed = seed_from_previous(sub, prev->centroids);

  struct Task {
    std::size_t k;
    std::size_t restart;
  };
  std::vector<Task> tasks;
  for (auto k : ks)
    for (std::size_t r = 0; r < params.restarts; ++r) tasks.push_back({k, r});

  struct Candidate {
    bool valid = false;
    Clustering clustering;
  };
  std::vector<Candidate> candidates(tasks.size());

  auto run = [&](std::size_t t) {
    const Task task = tasks[t];
    Rng trng(mix_seed(params.rng_seed, 1 + task.k * 1009 + task.restart));
    std::vector<SparseVector> init;
    if (incremental) {
      init.assign(seed.kept.begin(), seed.kept.begin() + std::min(task.k, seed.kept.size()));
      if (task.k > init.size()) {
        auto mind = seed.mind;
        kpp_fill(sub, index, init, mind, task.k, trng, params.metric);
      }
      // Without random draws every restart starts from the same centroids.
      if (task.restart > 0 && init.size() <= seed.kept.size()) return;
    } else {
      auto mind = initial_mind(sub.size());
      kpp_fill(sub, index, init, mind, task.k, trng, params.metric);
    }
    KMeansResult res = kmeans(sub, std::move(init), params);
    Clustering c = std::move(res.clustering);
    if (!identity) {
      Assignment full = assign(items, c.centroids, params.metric);
      c.assignment = std::move(full.labels);
      c.sizes = cluster_sizes(c.assignment, c.centroids.size());
    }
    c.dbi = davies_bouldin(items, c, params.metric);
    candidates[t].clustering = std::move(c);
    candidates[t].valid = true;
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(params.threads, static_cast<unsigned>(tasks.size())));
  if (threads == 1) {
    for (std::size_t t = 0; t < tasks.size(); ++t) run(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < tasks.size(); t = next++) run(t);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::size_t best = tasks.size();
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (!candidates[t].valid) continue;
    if (best == tasks.size() || candidates[t].clustering.dbi < candidates[best].clustering.dbi) best = t;
  }
  return std::move(candidates[best].clustering);
}

ClusterMatch match_clusters(std::span<const Label> prev_assignment, std::span<const std::string> prev_ids,
                            std::size_t prev_k, std::span<const Label> curr_assignment,
                            std::span<const std::string> curr_ids, std::size_t curr_k) {
  std::unordered_map<std::string_view, Label> curr_of;
  curr_of.reserve(curr_ids.size());
  for (std::size_t i = 0; i < curr_ids.size(); ++i) curr_of.emplace(curr_ids[i], curr_assignment[i]);

  std::vector<std::size_t> flow(prev_k * curr_k, 0);
  std::vector<std::size_t> survivors(prev_k, 0);
  for (std::size_t i = 0; i < prev_ids.size(); ++i) {
    auto it = curr_of.find(prev_ids[i]);
    if (it == curr_of.end()) continue;
    ++survivors[prev_assignment[i]];
    ++flow[prev_assignment[i] * curr_k + it->second];
  }

  // Each previous cluster's strict-majority target, if any.
  std::vector<std::optional<Label>> target(prev_k);
  for (std::size_t i = 0; i < prev_k; ++i) {
    for (std::size_t j = 0; j < curr_k; ++j) {
      if (2 * flow[i * curr_k + j] > survivors[i]) {
        target[i] = static_cast<Label>(j);
        break;
      }
    }
  }
  std::vector<std::optional<Label>> owner(curr_k);
  for (std::size_t i = 0; i < prev_k; ++i) {
    if (!target[i]) continue;
    const Label j = *target[i];
    if (!owner[j] || flow[i * curr_k + j] > flow[*owner[j] * curr_k + j]) owner[j] = static_cast<Label>(i);
  }
  ClusterMatch m;
  m.prev_to_curr.resize(prev_k);
  for (std::size_t j = 0; j < curr_k; ++j)
    if (owner[j]) m.prev_to_curr[*owner[j]] = static_cast<Label>(j);
  return m;
}

std::vector<TokenId> top_term_ids(const SparseVector& centroid, std::size_t n) {
  std::vector<SparseEntry> entries(centroid.entries().begin(), centroid.entries().end());
  const std::size_t take = std::min(n, entries.size());
  std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(take), entries.end(),
                    [](const SparseEntry& a, const SparseEntry& b) {
                      return a.weight != b.weight ? a.weight > b.weight : a.id < b.id;
                    });
  std::vector<TokenId> out;
  for (std::size_t i = 0; i < take; ++i) out.push_back(entries[i].id);
  return out;
}

std::vector<std::string> top_terms(const SparseVector& centroid, const Vocabulary& vocab, std::size_t n) {
  std::vector<std::string> out;
  for (auto id : top_term_ids(centroid, n)) out.push_back(vocab.token_of(id));
  return out;
}

std::vector<std::size_t> cluster_sizes(std::span<const Label> assignment, std::size_t k) {
  std::vector<std::size_t> sizes(k, 0);
  for (auto l : assignment) ++sizes[l];
  return sizes;
}

}  // namespace streamclust
