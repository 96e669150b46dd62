#pragma once

// Reference implementations and data generators shared by the unit and
// acceptance tests. Oracles here are deliberately naive: dense arrays,
// exhaustive scans and direct formulas, written without reusing library code.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "streamclust/cluster.hpp"
#include "streamclust/random.hpp"
#include "streamclust/sparse_vector.hpp"
#include "streamclust/textprep.hpp"
#include "streamclust/window.hpp"

namespace streamclust::testing {

using Dense = std::vector<double>;

inline Dense to_dense(const SparseVector& v, std::size_t dim) {
  Dense d(dim, 0.0);
  for (const auto& e : v.entries()) d.at(e.id) = e.weight;
  return d;
}

inline double dense_dot(const Dense& a, const Dense& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Random unit vector with `nnz` distinct ids below `dim`.
inline SparseVector random_unit(Rng& rng, std::size_t dim, std::size_t nnz) {
  std::set<TokenId> ids;
  while (ids.size() < std::min(nnz, dim)) ids.insert(static_cast<TokenId>(rng.below(dim)));
  std::vector<SparseEntry> e;
  for (auto id : ids) e.push_back({id, 0.05 + rng.uniform()});
  return SparseVector::from_sorted(std::move(e)).normalized();
}

// Unit vector from explicit (id, weight) pairs.
inline SparseVector vec(std::vector<SparseEntry> e) { return SparseVector::from_unsorted(std::move(e)).normalized(); }

inline std::vector<const SparseVector*> pointers(const std::vector<SparseVector>& v) {
  std::vector<const SparseVector*> out;
  for (const auto& x : v) out.push_back(&x);
  return out;
}

// Tweet-like corpus: `groups` topics, each owning a block of `topic_terms`
// ids; every document draws `topical` ids from its topic block and
// `background` ids from a large shared range.
struct SyntheticCorpus {
  std::vector<SparseVector> docs;
  std::vector<std::size_t> group;
};

inline SyntheticCorpus synthetic_corpus(std::size_t n, std::size_t groups, std::uint64_t seed,
                                        std::size_t topical = 12, std::size_t background = 8,
                                        std::size_t topic_terms = 60, std::size_t background_terms = 50000) {
  Rng rng(seed);
  SyntheticCorpus c;
  c.docs.reserve(n);
  const TokenId bg_base = static_cast<TokenId>(groups * topic_terms);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t g = rng.below(groups);
    std::vector<SparseEntry> e;
    for (std::size_t t = 0; t < topical; ++t) {
      // Skewed toward the head of the topic block.
      const double u = rng.uniform();
      const auto off = static_cast<TokenId>(u * u * static_cast<double>(topic_terms));
      e.push_back({static_cast<TokenId>(g * topic_terms) + off, 1.0 + rng.uniform()});
    }
    for (std::size_t t = 0; t < background; ++t)
      e.push_back({bg_base + static_cast<TokenId>(rng.below(background_terms)), 0.5 + rng.uniform()});
    c.docs.push_back(SparseVector::from_unsorted(std::move(e)).normalized());
    c.group.push_back(g);
  }
  return c;
}

// Orthogonal groups: group g uses ids [g*width, (g+1)*width).
inline SyntheticCorpus orthogonal_groups(std::size_t per_group, std::size_t groups, std::uint64_t seed,
                                         std::size_t width = 8, std::size_t nnz = 3) {
  Rng rng(seed);
  SyntheticCorpus c;
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t i = 0; i < per_group; ++i) {
      std::set<TokenId> ids;
      while (ids.size() < nnz) ids.insert(static_cast<TokenId>(g * width + rng.below(width)));
      std::vector<SparseEntry> e;
      for (auto id : ids) e.push_back({id, 0.5 + rng.uniform()});
      c.docs.push_back(SparseVector::from_sorted(std::move(e)).normalized());
      c.group.push_back(g);
    }
  }
  return c;
}

// Tweet-like posts as text. Group g draws `topical` words "t<g>x<j>" from a
// block of `topic_terms`; `background` words "b<j>" come from a shared pool.
// Posts are `step_ms` apart starting at `start_ms`.
struct SyntheticStream {
  std::vector<RawPost> posts;
  std::vector<std::size_t> group;
};

inline SyntheticStream synthetic_posts(std::size_t n, std::size_t groups, std::uint64_t seed,
                                       std::size_t topical = 6, std::size_t background = 2,
                                       std::size_t topic_terms = 12, std::size_t background_terms = 500,
                                       Timestamp start_ms = 1'000'000, Timestamp step_ms = 1000,
                                       const std::string& id_prefix = "p") {
  Rng rng(seed);
  SyntheticStream s;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t g = rng.below(groups);
    std::string text;
    for (std::size_t t = 0; t < topical; ++t)
      text += "t" + std::to_string(g) + "x" + std::to_string(rng.below(topic_terms)) + " ";
    for (std::size_t t = 0; t < background; ++t) text += "b" + std::to_string(rng.below(background_terms)) + " ";
    s.posts.push_back({id_prefix + std::to_string(i), text, {}, start_ms + static_cast<Timestamp>(i) * step_ms, {}});
    s.group.push_back(g);
  }
  return s;
}

// Vectorizes posts and wraps them as a window snapshot in arrival order.
inline WindowSnapshot snapshot_of(const std::vector<RawPost>& posts, const TextPipeline& text,
                                  std::uint64_t generation = 1) {
  std::vector<DocumentPtr> docs;
  Timestamp lo = std::numeric_limits<Timestamp>::max(), hi = std::numeric_limits<Timestamp>::min();
  for (const auto& p : posts) {
    auto d = text.process(p);
    if (!d) continue;
    lo = std::min(lo, p.published_at);
    hi = std::max(hi, p.published_at);
    docs.push_back(std::make_shared<const Document>(std::move(*d)));
  }
  if (docs.empty()) lo = hi = 0;
  return WindowSnapshot(generation, std::move(docs), lo, hi);
}

// Exhaustive nearest centroid by dense dot; ties to the lowest index.
inline std::vector<Label> oracle_assign(const std::vector<SparseVector>& items,
                                        const std::vector<SparseVector>& centroids, std::size_t dim) {
  std::vector<Label> out;
  for (const auto& x : items) {
    const Dense dx = to_dense(x, dim);
    Label best = 0;
    double best_s = -1.0;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double s = dense_dot(dx, to_dense(centroids[c], dim));
      if (s > best_s) {
        best_s = s;
        best = static_cast<Label>(c);
      }
    }
    out.push_back(best);
  }
  return out;
}

// Davies-Bouldin straight from the definition, cosine distance.
inline double oracle_dbi(const std::vector<SparseVector>& items, const std::vector<Label>& labels,
                         const std::vector<SparseVector>& centroids, std::size_t dim) {
  const std::size_t k = centroids.size();
  if (k < 2) return std::numeric_limits<double>::infinity();
  std::vector<Dense> c;
  for (const auto& x : centroids) c.push_back(to_dense(x, dim));
  std::vector<double> s(k, 0.0);
  std::vector<double> cnt(k, 0.0);
  for (std::size_t i = 0; i < items.size(); ++i) {
    s[labels[i]] += std::max(0.0, 1.0 - dense_dot(to_dense(items[i], dim), c[labels[i]]));
    cnt[labels[i]] += 1.0;
  }
  for (std::size_t i = 0; i < k; ++i) s[i] /= cnt[i];
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      const double m = std::max(0.0, 1.0 - dense_dot(c[i], c[j]));
      worst = std::max(worst, m <= 1e-12 ? std::numeric_limits<double>::infinity() : (s[i] + s[j]) / m);
    }
    total += worst;
  }
  return total / static_cast<double>(k);
}

// Checks the matching rule for every (i, j) pair independently.
inline std::vector<std::optional<Label>> oracle_match(const std::vector<Label>& prev, const std::vector<std::string>& prev_ids,
                                                      std::size_t prev_k, const std::vector<Label>& curr,
                                                      const std::vector<std::string>& curr_ids, std::size_t curr_k) {
  std::map<std::string, Label> where;
  for (std::size_t i = 0; i < curr_ids.size(); ++i) where[curr_ids[i]] = curr[i];
  auto flow = [&](std::size_t a, std::size_t b) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < prev_ids.size(); ++i) {
      auto it = where.find(prev_ids[i]);
      if (prev[i] == a && it != where.end() && it->second == b) ++n;
    }
    return n;
  };
  auto surviving = [&](std::size_t a) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < prev_ids.size(); ++i)
      if (prev[i] == a && where.count(prev_ids[i])) ++n;
    return n;
  };
  auto majority = [&](std::size_t a, std::size_t b) { return 2 * flow(a, b) > surviving(a); };
  std::vector<std::optional<Label>> out(prev_k);
  for (std::size_t a = 0; a < prev_k; ++a) {
    for (std::size_t b = 0; b < curr_k; ++b) {
      if (!majority(a, b)) continue;
      bool wins = true;
      for (std::size_t o = 0; o < prev_k; ++o) {
        if (o == a || !majority(o, b)) continue;
        if (flow(o, b) > flow(a, b) || (flow(o, b) == flow(a, b) && o < a)) wins = false;
      }
      if (wins) out[a] = static_cast<Label>(b);
    }
  }
  return out;
}

// Normalized mutual information with arithmetic-mean normalization, from
// contingency counts.
inline double oracle_nmi(const std::vector<int>& a, const std::vector<int>& b) {
  const double n = static_cast<double>(a.size());
  std::map<int, double> pa, pb;
  std::map<std::pair<int, int>, double> pab;
  for (std::size_t i = 0; i < a.size(); ++i) {
    pa[a[i]] += 1;
    pb[b[i]] += 1;
    pab[{a[i], b[i]}] += 1;
  }
  double ha = 0, hb = 0, mi = 0;
  for (auto& [k, v] : pa) ha -= v / n * std::log(v / n);
  for (auto& [k, v] : pb) hb -= v / n * std::log(v / n);
  for (auto& [k, v] : pab) mi += v / n * std::log((v / n) / ((pa[k.first] / n) * (pb[k.second] / n)));
  if (ha == 0 && hb == 0) return 1.0;
  if (ha == 0 || hb == 0) return 0.0;
  return mi / ((ha + hb) / 2);
}

}  // namespace streamclust::testing
