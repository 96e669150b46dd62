#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "streamclust/random.hpp"
#include "streamclust/sparse_vector.hpp"
#include "streamclust/vocabulary.hpp"

namespace streamclust {

enum class Metric { cosine, euclidean };

// Items are passed by pointer so window documents are never copied.
using ItemSpan = std::span<const SparseVector* const>;
using Label = std::uint32_t;

struct ClusterParams {
  std::size_t k_min = 2;
  std::size_t k_max = 10;
  std::size_t restarts = 2;
  std::size_t sample_cap = 100'000;
  std::size_t max_iters = 50;
  std::uint64_t rng_seed = 0;
  Metric metric = Metric::cosine;
  // Worker threads for the (k, restart) candidates. Results do not depend on it.
  unsigned threads = 1;

  // Throws std::invalid_argument.
  void validate() const;
};

struct Clustering {
  std::vector<SparseVector> centroids;
  std::vector<Label> assignment;  // item index -> cluster index
  std::vector<std::size_t> sizes;
  double dbi = 0.0;
  std::size_t iterations = 0;

  std::size_t chosen_k() const { return centroids.size(); }
};

struct Assignment {
  std::vector<Label> labels;
  // Dot product with the chosen centroid (cosine) or squared distance (euclidean).
  std::vector<double> scores;
};

// Partial map previous cluster -> current cluster; injective.
struct ClusterMatch {
  std::vector<std::optional<Label>> prev_to_curr;

  std::vector<std::optional<Label>> curr_to_prev(std::size_t curr_k) const;
};

// Candidate k values: start at k_prev (or k_min on the first run), then add
// 1, 2, 3, ... while <= k_max; k_max is always included.
std::vector<std::size_t> get_cluster_sizes(std::size_t k_min, std::size_t k_max,
                                           std::optional<std::size_t> k_prev);

// k-means++ seeding. Stops early when every item coincides with a chosen
// centroid, so the result may hold fewer than k centroids.
std::vector<SparseVector> init_kpp(ItemSpan items, std::size_t k, Rng& rng,
                                   Metric metric = Metric::cosine);

struct IncrementalInit {
  std::vector<SparseVector> centroids;
  std::size_t kept = 0;  // leading centroids carried over from prev
};

// Keeps the previous centroids that still attract at least one item (in their
// original order) and seeds the rest with k-means++ against the kept set.
IncrementalInit init_incremental(ItemSpan items, std::span<const SparseVector> prev_centroids,
                                 std::size_t k, Rng& rng);

// Nearest centroid per item; ties go to the lowest centroid index.
Assignment assign(ItemSpan items, std::span<const SparseVector> centroids,
                  Metric metric = Metric::cosine);

struct CentroidUpdate {
  std::vector<SparseVector> centroids;
  std::vector<Label> dropped;     // old ids of clusters that had no items
  std::vector<Label> assignment;  // compacted labels
};

// Normalized sums (cosine) or means (euclidean). Empty clusters are removed.
CentroidUpdate update_centroids(ItemSpan items, std::span<const Label> assignment, std::size_t k,
                                Metric metric = Metric::cosine);

struct KMeansOptions {
  // Records the mean similarity to the assigned centroid after every
  // assignment step (cosine only).
  bool trace_objective = false;
};

struct KMeansResult {
  Clustering clustering;
  std::vector<double> objective_trace;
};

// Lloyd iterations until the assignment stops changing or max_iters. The
// cosine path skips items whose bounds prove the label cannot change; the
// result equals plain assign/update alternation.
KMeansResult kmeans(ItemSpan items, std::vector<SparseVector> init, const ClusterParams& params,
                    const KMeansOptions& options = {});

// Mean over clusters of max_j (S_i + S_j) / M_ij. +inf for fewer than two
// clusters or coinciding centroids.
double davies_bouldin(ItemSpan items, const Clustering& clustering, Metric metric = Metric::cosine);

// Uniform sample without replacement of min(cap, n) indices, ascending.
std::vector<std::size_t> sample(std::size_t n, std::size_t cap, Rng& rng);

// The full model-selection loop: sample once, run every (k, restart)
// candidate, extend it to all items and keep the lowest DBI.
Clustering dynamic_cluster(ItemSpan items, const Clustering* prev, const ClusterParams& params);

// Previous cluster i maps to current cluster j when a strict majority of i's
// surviving items now sit in j and no other previous cluster with its
// majority in j sends a larger group there (ties: lowest i).
ClusterMatch match_clusters(std::span<const Label> prev_assignment,
                            std::span<const std::string> prev_ids, std::size_t prev_k,
                            std::span<const Label> curr_assignment,
                            std::span<const std::string> curr_ids, std::size_t curr_k);

// The n heaviest terms, descending; ties by lower token id.
std::vector<std::string> top_terms(const SparseVector& centroid, const Vocabulary& vocab,
                                   std::size_t n);
std::vector<TokenId> top_term_ids(const SparseVector& centroid, std::size_t n);

std::vector<std::size_t> cluster_sizes(std::span<const Label> assignment, std::size_t k);

}  // namespace streamclust
