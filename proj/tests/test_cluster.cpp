#include <gtest/gtest.h>

#include <tuple>

#include <cmath>
#include <limits>
#include <numeric>

#include "streamclust/cluster.hpp"
#include "support.hpp"

using namespace streamclust;
namespace st = streamclust::testing;

TEST(ClusterSizes, StepRule) {
  EXPECT_EQ(get_cluster_sizes(2, 10, std::nullopt), (std::vector<std::size_t>{2, 3, 5, 8, 10}));
  EXPECT_EQ(get_cluster_sizes(2, 10, 4), (std::vector<std::size_t>{4, 5, 7, 10}));
  EXPECT_EQ(get_cluster_sizes(5, 5, std::nullopt), (std::vector<std::size_t>{5}));
  EXPECT_EQ(get_cluster_sizes(2, 100, std::nullopt),
            (std::vector<std::size_t>{2, 3, 5, 8, 12, 17, 23, 30, 38, 47, 57, 68, 80, 93, 100}));
  EXPECT_EQ(get_cluster_sizes(2, 10, 10), (std::vector<std::size_t>{10}));
}

TEST(Params, Validation) {
  ClusterParams p;
  EXPECT_NO_THROW(p.validate());
  p.k_min = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.k_min = 5;
  p.k_max = 4;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = ClusterParams{};
  p.restarts = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(InitKpp, SingleCentroidIsAnItem) {
  const auto c = st::orthogonal_groups(5, 2, 1);
  const auto items = st::pointers(c.docs);
  Rng rng(1);
  const auto init = init_kpp(items, 1, rng);
  ASSERT_EQ(init.size(), 1u);
  EXPECT_NE(std::find(c.docs.begin(), c.docs.end(), init[0]), c.docs.end());
}

TEST(InitKpp, IdenticalItemsStopEarly) {
  const std::vector<SparseVector> docs(3, st::vec({{1, 1.0}, {2, 2.0}}));
  const auto items = st::pointers(docs);
  Rng rng(2);
  EXPECT_EQ(init_kpp(items, 3, rng).size(), 1u);
}

TEST(InitKpp, OrthogonalGroupsGetOneEach) {
  std::vector<SparseVector> docs(6, st::vec({{0, 1.0}, {1, 2.0}}));
  docs.insert(docs.end(), 6, st::vec({{2, 1.0}, {3, 1.0}}));
  const auto items = st::pointers(docs);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const auto init = init_kpp(items, 2, rng);
    ASSERT_EQ(init.size(), 2u);
    EXPECT_EQ(dot(init[0], init[1]), 0.0);
  }
}

TEST(InitKpp, CentroidsPairwiseDistinct) {
  Rng data(9);
  std::vector<SparseVector> docs;
  for (int i = 0; i < 40; ++i) docs.push_back(st::random_unit(data, 12, 2));
  const auto items = st::pointers(docs);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto init = init_kpp(items, 30, rng);
    for (std::size_t i = 0; i < init.size(); ++i)
      for (std::size_t j = i + 1; j < init.size(); ++j) EXPECT_GT(cosine_distance(init[i], init[j]), 1e-12);
  }
}

TEST(InitIncremental, IdentityWhenUnchanged) {
  const auto c = st::orthogonal_groups(5, 3, 4);
  const auto items = st::pointers(c.docs);
  ClusterParams p;
  p.k_min = 3;
  p.k_max = 3;
  const auto first = dynamic_cluster(items, nullptr, p);
  Rng rng(0);
  const auto inc = init_incremental(items, first.centroids, first.chosen_k(), rng);
  EXPECT_EQ(inc.kept, first.chosen_k());
  EXPECT_EQ(inc.centroids, first.centroids);
}

TEST(InitIncremental, DropsUnusedCentroid) {
  const std::vector<SparseVector> docs = {st::vec({{0, 1.0}}), st::vec({{0, 1.0}, {1, 0.1}})};
  const std::vector<SparseVector> prev = {st::vec({{0, 1.0}}), st::vec({{5, 1.0}}), st::vec({{1, 1.0}})};
  const auto items = st::pointers(docs);
  Rng rng(0);
  const auto inc = init_incremental(items, prev, 1, rng);
  EXPECT_EQ(inc.kept, 1u);
  ASSERT_EQ(inc.centroids.size(), 1u);
  EXPECT_EQ(inc.centroids[0], prev[0]);
}

TEST(InitIncremental, FillWeightsMatchEnumeration) {
  // One kept centroid on id 0; items at known cosine distances. The fill
  // probability of each item must be distance / total.
  const std::vector<SparseVector> docs = {st::vec({{0, 1.0}}), st::vec({{0, 1.0}, {1, 1.0}}), st::vec({{2, 1.0}}),
                                          st::vec({{3, 1.0}})};
  const std::vector<SparseVector> prev = {st::vec({{0, 1.0}})};
  const auto items = st::pointers(docs);
  std::vector<double> dist;
  double total = 0.0;
  for (const auto& d : docs) {
    dist.push_back(std::max(0.0, 1.0 - dot(d, prev[0])));
    total += dist.back();
  }
  std::vector<int> hits(docs.size(), 0);
  const int trials = 40000;
  for (int t = 0; t < trials; ++t) {
    Rng rng(static_cast<std::uint64_t>(t) * 7919 + 1);
    const auto inc = init_incremental(items, prev, 2, rng);
    ASSERT_EQ(inc.centroids.size(), 2u);
    for (std::size_t i = 0; i < docs.size(); ++i)
      if (inc.centroids[1] == docs[i]) ++hits[i];
  }
  for (std::size_t i = 0; i < docs.size(); ++i)
    EXPECT_NEAR(static_cast<double>(hits[i]) / trials, dist[i] / total, 0.01) << i;
}

TEST(Assign, TieGoesToLowestIndex) {
  const std::vector<SparseVector> cents = {st::vec({{0, 1.0}}), st::vec({{1, 1.0}}), st::vec({{2, 1.0}})};
  const std::vector<SparseVector> docs = {st::vec({{0, 1.0}, {1, 1.0}}), cents[2], st::vec({{9, 1.0}})};
  const auto a = assign(st::pointers(docs), cents);
  EXPECT_EQ(a.labels, (std::vector<Label>{0, 2, 0}));
}

TEST(Assign, MatchesExhaustiveScan) {
  Rng rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<SparseVector> docs, cents;
    for (int i = 0; i < 20; ++i) docs.push_back(st::random_unit(rng, 15, 1 + rng.below(6)));
    for (int i = 0; i < 3; ++i) cents.push_back(st::random_unit(rng, 15, 1 + rng.below(8)));
    const auto a = assign(st::pointers(docs), cents);
    const auto expected = st::oracle_assign(docs, cents, 15);
    for (std::size_t i = 0; i < docs.size(); ++i) {
      // A near-tie may legitimately resolve differently under dense summation order.
      if (a.labels[i] != expected[i])
        EXPECT_NEAR(dot(docs[i], cents[a.labels[i]]), dot(docs[i], cents[expected[i]]), 1e-12);
    }
  }
}

TEST(Assign, EuclideanNearest) {
  const std::vector<SparseVector> cents = {SparseVector::from_sorted({{0, 1.0}}), SparseVector::from_sorted({{0, 3.0}})};
  const std::vector<SparseVector> docs = {SparseVector::from_sorted({{0, 2.5}}), SparseVector::from_sorted({{0, 1.2}})};
  const auto a = assign(st::pointers(docs), cents, Metric::euclidean);
  EXPECT_EQ(a.labels, (std::vector<Label>{1, 0}));
  EXPECT_NEAR(a.scores[0], 0.25, 1e-12);
}

TEST(UpdateCentroids, Rules) {
  const auto v1 = st::vec({{0, 1.0}});
  const auto v2 = st::vec({{1, 1.0}});
  const std::vector<SparseVector> docs = {v1, v2, v1, v1};
  const std::vector<Label> labels = {0, 0, 2, 2};
  const auto u = update_centroids(st::pointers(docs), labels, 3);
  ASSERT_EQ(u.centroids.size(), 2u);
  EXPECT_EQ(u.dropped, (std::vector<Label>{1}));
  EXPECT_EQ(u.assignment, (std::vector<Label>{0, 0, 1, 1}));
  EXPECT_NEAR(u.centroids[0].weight_of(0), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(u.centroids[0].weight_of(1), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_EQ(u.centroids[1], v1);

  const std::vector<SparseVector> raw = {SparseVector::from_sorted({{0, 1.0}}), SparseVector::from_sorted({{0, 3.0}})};
  const std::vector<Label> one = {0, 0};
  const auto e = update_centroids(st::pointers(raw), one, 1, Metric::euclidean);
  EXPECT_DOUBLE_EQ(e.centroids[0].weight_of(0), 2.0);
}

TEST(KMeans, IdenticalItemsConvergeToOne) {
  const std::vector<SparseVector> docs(10, st::vec({{3, 1.0}, {4, 1.0}}));
  const auto items = st::pointers(docs);
  std::vector<SparseVector> init = {docs[0], st::vec({{7, 1.0}})};
  const auto r = kmeans(items, init, ClusterParams{});
  EXPECT_EQ(r.clustering.chosen_k(), 1u);
  EXPECT_LE(r.clustering.iterations, 2u);
}

TEST(KMeans, OrthogonalGroupsPerfectSplitMatchesExhaustive) {
  const auto c = st::orthogonal_groups(6, 2, 3);
  const auto items = st::pointers(c.docs);
  const std::vector<SparseVector> init = {c.docs[0], c.docs[6]};
  const auto r = kmeans(items, init, ClusterParams{});
  // Exhaustive 2-partition search for the best spherical objective.
  const std::size_t n = c.docs.size();
  double best = -1.0;
  std::uint32_t best_mask = 0;
  for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
    SparseAccumulator a, b;
    for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1 ? a : b).add(c.docs[i]);
    const double obj = a.take().norm() + b.take().norm();
    if (obj > best + 1e-12) {
      best = obj;
      best_mask = mask;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const bool side = (best_mask >> i) & 1;
    const bool first = (best_mask >> 0) & 1;
    EXPECT_EQ(r.clustering.assignment[i] == r.clustering.assignment[0], side == first);
    EXPECT_EQ(r.clustering.assignment[i], c.group[i]);
  }
}

TEST(KMeans, ObjectiveNonDecreasing) {
  const auto c = st::synthetic_corpus(3000, 15, 8);
  const auto items = st::pointers(c.docs);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    auto init = init_kpp(items, 25, rng);
    KMeansOptions opt;
    opt.trace_objective = true;
    const auto r = kmeans(items, init, ClusterParams{}, opt);
    ASSERT_GE(r.objective_trace.size(), 2u);
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
      EXPECT_GE(r.objective_trace[i], r.objective_trace[i - 1] - 1e-12);
  }
}

namespace {

// Plain Lloyd loop using only the public assign/update primitives.
Clustering plain_lloyd(ItemSpan items, std::vector<SparseVector> cents, std::size_t max_iters) {
  auto labels = assign(items, cents).labels;
  for (std::size_t it = 0; it < max_iters; ++it) {
    auto u = update_centroids(items, labels, cents.size());
    cents = std::move(u.centroids);
    auto next = assign(items, cents).labels;
    const bool changed = next != u.assignment;
    labels = std::move(next);
    if (!changed) break;
  }
  Clustering c;
  c.centroids = std::move(cents);
  c.assignment = std::move(labels);
  return c;
}

}  // namespace

TEST(KMeans, PrunedEqualsPlainAlternation) {
  for (const auto& [n, groups, k, seed] : std::vector<std::tuple<std::size_t, std::size_t, std::size_t, std::uint64_t>>{
           {2000, 12, 20, 14}, {1500, 5, 30, 3}, {800, 40, 25, 9}, {3000, 20, 2, 21}}) {
    const auto c = st::synthetic_corpus(n, groups, seed, 12, 8, 60, 2000);
    const auto items = st::pointers(c.docs);
    Rng rng(seed);
    const auto init = init_kpp(items, k, rng);
    ClusterParams p;
    const auto fast = kmeans(items, init, p).clustering;
    const auto plain = plain_lloyd(items, init, p.max_iters);
    EXPECT_EQ(fast.centroids, plain.centroids) << n << " " << k;
    EXPECT_EQ(fast.assignment, plain.assignment) << n << " " << k;
  }
}

TEST(KMeans, SeedsWithUnseenTermsMatchPlainAlternation) {
  const auto c = st::synthetic_corpus(1000, 6, 5, 12, 8, 60, 500);
  const auto items = st::pointers(c.docs);
  Rng rng(2);
  auto init = init_kpp(items, 8, rng);
  // Previous-window centroids can carry terms no current item has.
  for (auto& v : init) {
    std::vector<SparseEntry> e(v.entries().begin(), v.entries().end());
    e.push_back({1'000'000, 0.8});
    v = SparseVector::from_sorted(std::move(e)).normalized();
  }
  ClusterParams p;
  const auto fast = kmeans(items, init, p).clustering;
  const auto plain = plain_lloyd(items, init, p.max_iters);
  EXPECT_EQ(fast.centroids, plain.centroids);
  EXPECT_EQ(fast.assignment, plain.assignment);
}

TEST(KMeans, NoEmptyClustersAndUnitCentroids) {
  const auto c = st::synthetic_corpus(1500, 8, 2);
  const auto items = st::pointers(c.docs);
  Rng rng(1);
  const auto r = kmeans(items, init_kpp(items, 40, rng), ClusterParams{}).clustering;
  EXPECT_EQ(r.sizes.size(), r.chosen_k());
  for (auto s : r.sizes) EXPECT_GT(s, 0u);
  for (const auto& v : r.centroids) EXPECT_NEAR(v.norm(), 1.0, 1e-9);
  EXPECT_EQ(std::accumulate(r.sizes.begin(), r.sizes.end(), std::size_t{0}), c.docs.size());
}

TEST(Dbi, SingletonsAndDuplicates) {
  const std::vector<SparseVector> docs = {st::vec({{0, 1.0}}), st::vec({{0, 1.0}, {1, 1.0}})};
  Clustering c;
  c.centroids = docs;
  c.assignment = {0, 1};
  EXPECT_EQ(davies_bouldin(st::pointers(docs), c), 0.0);
  c.centroids = {docs[0], docs[0]};
  c.assignment = {0, 1};
  EXPECT_TRUE(std::isinf(davies_bouldin(st::pointers(docs), c)));
  c.centroids = {docs[0]};
  c.assignment = {0, 0};
  EXPECT_TRUE(std::isinf(davies_bouldin(st::pointers(docs), c)));
}

TEST(Dbi, MatchesDirectFormula) {
  Rng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 6 + rng.below(45);
    const std::size_t k = 2 + rng.below(4);
    std::vector<SparseVector> docs;
    for (std::size_t i = 0; i < n; ++i) docs.push_back(st::random_unit(rng, 20, 1 + rng.below(5)));
    const auto items = st::pointers(docs);
    Rng init_rng(trial);
    auto init = init_kpp(items, k, init_rng);
    const auto r = kmeans(items, init, ClusterParams{}).clustering;
    if (r.chosen_k() < 2) continue;
    const double expected = st::oracle_dbi(docs, r.assignment, r.centroids, 20);
    const double got = davies_bouldin(items, r);
    if (std::isinf(expected))
      EXPECT_TRUE(std::isinf(got));
    else
      EXPECT_NEAR(got, expected, 1e-9);
  }
}

TEST(Sample, IdentityAndCardinality) {
  Rng rng(0);
  auto s = sample(50, 100000, rng);
  ASSERT_EQ(s.size(), 50u);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(s[i], i);
  s = sample(10, 3, rng);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
  EXPECT_EQ(std::adjacent_find(s.begin(), s.end()), s.end());
}

TEST(Sample, UniformFrequencies) {
  Rng rng(12345);
  std::vector<int> counts(10, 0);
  const int trials = 100000;
  for (int t = 0; t < trials; ++t)
    for (auto i : sample(10, 3, rng)) ++counts[i];
  for (int c : counts) EXPECT_NEAR(static_cast<double>(c) / trials, 0.3, 0.03);
}

TEST(DynamicCluster, ThreeOrthogonalGroupsPickThree) {
  const auto c = st::orthogonal_groups(20, 3, 6, 4, 4);
  const auto items = st::pointers(c.docs);
  ClusterParams p;
  p.k_min = 2;
  p.k_max = 6;
  const auto r = dynamic_cluster(items, nullptr, p);
  EXPECT_EQ(r.chosen_k(), 3u);

  // Exhaustive check: no k in K with many restarts beats the chosen DBI.
  double best = std::numeric_limits<double>::infinity();
  for (auto k : get_cluster_sizes(2, 6, std::nullopt)) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      Rng rng(seed);
      const auto res = kmeans(items, init_kpp(items, k, rng), p).clustering;
      best = std::min(best, davies_bouldin(items, res));
    }
  }
  EXPECT_NEAR(r.dbi, best, 1e-9);
}

TEST(DynamicCluster, SingleDistinctVectorGivesOne) {
  const std::vector<SparseVector> docs(25, st::vec({{4, 1.0}, {8, 0.5}}));
  ClusterParams p;
  p.k_min = 3;
  p.k_max = 8;
  const auto r = dynamic_cluster(st::pointers(docs), nullptr, p);
  EXPECT_EQ(r.chosen_k(), 1u);
}

TEST(DynamicCluster, FixedPointOnUnchangedItems) {
  const auto c = st::synthetic_corpus(3000, 6, 17);
  const auto items = st::pointers(c.docs);
  ClusterParams p;
  p.k_max = 10;
  const auto first = dynamic_cluster(items, nullptr, p);
  p.rng_seed = 99;
  const auto second = dynamic_cluster(items, &first, p);
  ASSERT_EQ(second.chosen_k(), first.chosen_k());
  for (std::size_t i = 0; i < first.chosen_k(); ++i) EXPECT_LE(cosine_distance(first.centroids[i], second.centroids[i]), 1e-6);
  EXPECT_EQ(second.assignment, first.assignment);
}

// Lowest-DBI selection may leave the previous solution for a strictly better
// one; with an unchanged k the previous solution is the only candidate.
TEST(DynamicCluster, UnchangedItemsKeepOrImproveTheClustering) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto c = st::synthetic_corpus(400 + 20 * seed, 3 + seed % 6, seed, 6, 4, 12, 500);
    const auto items = st::pointers(c.docs);
    ClusterParams p;
    p.k_max = 10;
    p.rng_seed = seed;
    const auto first = dynamic_cluster(items, nullptr, p);
    p.rng_seed = seed + 1000;
    const auto second = dynamic_cluster(items, &first, p);
    if (second.chosen_k() == first.chosen_k()) {
      EXPECT_EQ(second.assignment, first.assignment) << "seed " << seed;
      for (std::size_t i = 0; i < first.chosen_k(); ++i)
        EXPECT_LE(cosine_distance(first.centroids[i], second.centroids[i]), 1e-6) << "seed " << seed;
    } else {
      EXPECT_LT(second.dbi, first.dbi) << "seed " << seed;
    }
  }
}

TEST(DynamicCluster, DeterministicAndThreadIndependent) {
  const auto c = st::synthetic_corpus(4000, 10, 23);
  const auto items = st::pointers(c.docs);
  ClusterParams p;
  p.k_max = 20;
  p.rng_seed = 99;
  const auto a = dynamic_cluster(items, nullptr, p);
  const auto b = dynamic_cluster(items, nullptr, p);
  p.threads = 3;
  const auto t = dynamic_cluster(items, nullptr, p);
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_EQ(a.assignment, b.assignment);
  EXPECT_EQ(a.centroids, t.centroids);
  EXPECT_EQ(a.dbi, t.dbi);
}

TEST(DynamicCluster, SampledExtensionEqualsAssign) {
  const auto c = st::synthetic_corpus(3000, 8, 29);
  const auto items = st::pointers(c.docs);
  ClusterParams p;
  p.sample_cap = 700;
  p.k_max = 12;
  const auto r = dynamic_cluster(items, nullptr, p);
  EXPECT_EQ(r.assignment, assign(items, r.centroids).labels);
  EXPECT_LE(r.chosen_k(), p.k_max);
  for (auto s : r.sizes) EXPECT_GT(s, 0u);
}

TEST(DynamicCluster, IncrementalKeepsSurvivorsFirst) {
  const auto c = st::synthetic_corpus(2000, 6, 41);
  const auto items = st::pointers(c.docs);
  ClusterParams p;
  p.k_max = 10;
  const auto first = dynamic_cluster(items, nullptr, p);
  Rng rng(3);
  const auto inc = init_incremental(items, first.centroids, first.chosen_k() + 3, rng);
  ASSERT_GE(inc.centroids.size(), inc.kept);
  for (std::size_t i = 0; i < inc.kept; ++i) EXPECT_EQ(inc.centroids[i], first.centroids[i]);
}

TEST(Match, IdentityAndSplit) {
  const std::vector<std::string> ids = {"a", "b", "c", "d"};
  const std::vector<Label> l = {0, 0, 1, 1};
  auto m = match_clusters(l, ids, 2, l, ids, 2);
  EXPECT_EQ(m.prev_to_curr[0], 0u);
  EXPECT_EQ(m.prev_to_curr[1], 1u);

  const std::vector<Label> split = {0, 2, 1, 1};
  m = match_clusters(l, ids, 2, split, ids, 3);
  EXPECT_FALSE(m.prev_to_curr[0]);
  EXPECT_EQ(m.prev_to_curr[1], 1u);
  const auto back = m.curr_to_prev(3);
  EXPECT_EQ(back[1], 1u);
  EXPECT_FALSE(back[0]);
}

TEST(Match, EqualsRuleCheckOracle) {
  Rng rng(8);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(30);
    const std::size_t pk = 1 + rng.below(5), ck = 1 + rng.below(5);
    std::vector<std::string> prev_ids, curr_ids;
    std::vector<Label> prev, curr;
    for (std::size_t i = 0; i < n; ++i) {
      prev_ids.push_back("p" + std::to_string(i));
      prev.push_back(static_cast<Label>(rng.below(pk)));
      if (rng.below(4) != 0) {
        curr_ids.push_back(prev_ids.back());
        curr.push_back(static_cast<Label>(rng.below(ck)));
      }
    }
    for (std::size_t i = 0; i < rng.below(5); ++i) {
      curr_ids.push_back("n" + std::to_string(i));
      curr.push_back(static_cast<Label>(rng.below(ck)));
    }
    const auto m = match_clusters(prev, prev_ids, pk, curr, curr_ids, ck);
    EXPECT_EQ(m.prev_to_curr, st::oracle_match(prev, prev_ids, pk, curr, curr_ids, ck));
    std::vector<int> used(ck, 0);
    for (const auto& t : m.prev_to_curr)
      if (t) EXPECT_EQ(used[*t]++, 0);
  }
}

TEST(TopTerms, OrderAndTruncation) {
  Vocabulary vocab;
  for (const char* t : {"a", "b", "c", "d"}) vocab.get_or_add(t);
  const auto c = SparseVector::from_sorted({{0, 0.1}, {1, 0.9}, {2, 0.3}});
  EXPECT_EQ(top_terms(c, vocab, 2), (std::vector<std::string>{"b", "c"}));
  EXPECT_EQ(top_terms(SparseVector::from_sorted({{0, 0.5}, {3, 0.5}}), vocab, 5), (std::vector<std::string>{"a", "d"}));
}

TEST(TopTerms, MatchesFullSort) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<SparseEntry> e;
    for (TokenId id = 0; id < 40; ++id)
      if (rng.below(2)) e.push_back({id, static_cast<double>(1 + rng.below(6))});
    const auto v = SparseVector::from_sorted(e);
    auto sorted = e;
    std::sort(sorted.begin(), sorted.end(),
              [](auto& a, auto& b) { return a.weight != b.weight ? a.weight > b.weight : a.id < b.id; });
    const auto got = top_term_ids(v, 5);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i], sorted[i].id);
    EXPECT_EQ(got.size(), std::min<std::size_t>(5, e.size()));
  }
}
