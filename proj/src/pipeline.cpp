#include "streamclust/pipeline.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace streamclust {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Label nearest(const SparseVector& v, const std::vector<SparseVector>& centroids) {
  Label best = 0;
  double best_score = -1.0;
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double s = dot(v, centroids[c]);
    if (s > best_score) {
      best_score = s;
      best = static_cast<Label>(c);
    }
  }
  return best;
}

// Counts, per query vector, the items with dot >= theta. Scores are summed in
// ascending term order like dot(), so the counts agree with similar_posts.
std::vector<std::size_t> count_similar(std::span<const SparseVector* const> queries, ItemSpan items,
                                       double theta) {
  const std::size_t q = queries.size();
  std::vector<std::size_t> out(q, 0);
  if (q == 0) return out;
  TokenId limit = 0;
  for (const auto* v : queries)
    if (!v->empty()) limit = std::max<TokenId>(limit, v->entries().back().id + 1);
  std::vector<std::size_t> offsets(static_cast<std::size_t>(limit) + 1, 0);
  for (const auto* v : queries)
    for (const auto& e : v->entries()) ++offsets[e.id + 1];
  for (std::size_t t = 0; t < limit; ++t) offsets[t + 1] += offsets[t];
  std::vector<std::uint32_t> who(offsets.back());
  std::vector<double> weight(offsets.back());
  {
    std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
    for (std::size_t j = 0; j < q; ++j) {
      for (const auto& e : queries[j]->entries()) {
        const std::size_t p = fill[e.id]++;
        who[p] = static_cast<std::uint32_t>(j);
        weight[p] = e.weight;
      }
    }
  }
  std::vector<double> scores(q, 0.0);
  std::vector<std::uint32_t> touched;
  for (const auto* item : items) {
    touched.clear();
    for (const auto& e : item->entries()) {
      if (e.id >= limit) break;
      for (std::size_t p = offsets[e.id]; p < offsets[e.id + 1]; ++p) {
        if (scores[who[p]] == 0.0) touched.push_back(who[p]);
        scores[who[p]] += e.weight * weight[p];
      }
    }
    for (const auto j : touched) {
      if (scores[j] >= theta) ++out[j];
      scores[j] = 0.0;
    }
    // theta <= 0 admits orthogonal items too.
    if (theta <= 0.0)
      for (std::size_t j = 0; j < q; ++j)
        if (std::find(touched.begin(), touched.end(), j) == touched.end()) ++out[j];
  }
  return out;
}

}  // namespace

void PipelineConfig::validate() const {
  coarse.validate();
  fine.validate();
  if (timeline_bins < 1) throw std::invalid_argument("pipeline: timeline_bins must be >= 1");
  if (history_depth < 1) throw std::invalid_argument("pipeline: history_depth must be >= 1");
}

// ---- filters ----------------------------------------------------------------

QueryFilter make_query_filter(std::string_view query, const TextPipeline& text) {
  QueryFilter f;
  for (auto& t : text.analyze(query)) {
    if (std::find(f.terms.begin(), f.terms.end(), t) != f.terms.end()) continue;
    f.tokens.push_back(text.vocabulary().get_or_add(t));
    f.terms.push_back(std::move(t));
  }
  if (f.terms.empty()) throw std::invalid_argument("search: query has no content tokens");
  std::sort(f.tokens.begin(), f.tokens.end());
  return f;
}

CentroidFilter make_centroid_filter(std::vector<SparseVector> centroids, std::vector<Label> selected) {
  std::sort(selected.begin(), selected.end());
  selected.erase(std::unique(selected.begin(), selected.end()), selected.end());
  if (selected.empty()) throw std::invalid_argument("dive-in: empty topic selection");
  if (selected.back() >= centroids.size()) throw std::invalid_argument("dive-in: unknown topic");
  return {std::make_shared<const std::vector<SparseVector>>(std::move(centroids)), std::move(selected)};
}

bool passes(const Filter& filter, const Document& doc) {
  return std::visit(Overloaded{
                        [&](const QueryFilter& q) {
                          return std::all_of(q.tokens.begin(), q.tokens.end(),
                                             [&](TokenId t) { return doc.vector.contains(t); });
                        },
                        [&](const CentroidFilter& c) {
                          const Label l = nearest(doc.vector, *c.centroids);
                          return std::binary_search(c.selected.begin(), c.selected.end(), l);
                        },
                    },
                    filter);
}

bool apply_filters(std::span<const Filter> chain, const Document& doc) {
  return std::all_of(chain.begin(), chain.end(), [&](const Filter& f) { return passes(f, doc); });
}

// ---- per-update computations --------------------------------------------------

UpdateDelta compute_delta(std::span<const std::string> prev_ids, std::span<const Label> prev_labels,
                          std::size_t prev_k, std::span<const std::string> curr_ids,
                          std::span<const Label> curr_labels, std::size_t curr_k, const ClusterMatch& match,
                          bool first) {
  UpdateDelta d;
  d.first = first;
  const auto back = match.curr_to_prev(curr_k);
  auto forward = [&](Label i) -> std::optional<Label> {
    return i < match.prev_to_curr.size() ? match.prev_to_curr[i] : std::nullopt;
  };

  std::unordered_map<std::string_view, Label> curr_of, prev_of;
  curr_of.reserve(curr_ids.size());
  prev_of.reserve(prev_ids.size());
  for (std::size_t i = 0; i < curr_ids.size(); ++i) curr_of.emplace(curr_ids[i], curr_labels[i]);
  for (std::size_t i = 0; i < prev_ids.size(); ++i) prev_of.emplace(prev_ids[i], prev_labels[i]);

  d.prev.resize(prev_k);
  std::vector<std::map<Label, std::size_t>> moved(prev_k);
  for (std::size_t i = 0; i < prev_k; ++i) {
    d.prev[i].topic = static_cast<Label>(i);
    d.prev[i].matched = forward(static_cast<Label>(i));
  }
  for (std::size_t i = 0; i < prev_ids.size(); ++i) {
    auto& p = d.prev[prev_labels[i]];
    ++p.prev_size;
    const auto it = curr_of.find(prev_ids[i]);
    if (it == curr_of.end())
      ++p.removed;
    else if (p.matched == it->second)
      ++p.retained;
    else
      ++moved[prev_labels[i]][it->second];
  }
  for (std::size_t i = 0; i < prev_k; ++i)
    for (const auto& [target, count] : moved[i]) d.prev[i].moved_out.push_back({target, count});

  d.curr.resize(curr_k);
  for (std::size_t j = 0; j < curr_k; ++j) {
    d.curr[j].topic = static_cast<Label>(j);
    d.curr[j].matched = back[j];
  }
  for (std::size_t i = 0; i < curr_ids.size(); ++i) {
    auto& c = d.curr[curr_labels[i]];
    ++c.size;
    const auto it = prev_of.find(curr_ids[i]);
    if (it == prev_of.end())
      ++c.added;
    else if (c.matched == it->second)
      ++c.retained;
    else
      ++c.moved_in;
  }
  for (std::size_t i = 0; i < prev_k; ++i)
    if (!d.prev[i].matched) d.unmatched_prev.push_back(static_cast<Label>(i));
  for (std::size_t j = 0; j < curr_k; ++j)
    if (!d.curr[j].matched) d.unmatched_curr.push_back(static_cast<Label>(j));
  return d;
}

std::size_t coverage_bucket(double s) {
  if (s < 0.2) return 0;
  if (s < 0.4) return 1;
  if (s < 0.6) return 2;
  if (s < 0.8) return 3;
  return 4;
}

std::vector<std::size_t> extract_representatives(const Clustering& fine, ItemSpan items) {
  const std::size_t k = fine.centroids.size();
  std::vector<std::size_t> best(k, items.size());
  std::vector<double> best_score(k, -1.0);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const Label c = fine.assignment[i];
    const double s = dot(*items[i], fine.centroids[c]);
    if (s > best_score[c]) {
      best_score[c] = s;
      best[c] = i;
    }
  }
  return best;
}

std::vector<bool> representative_novelty(std::span<const SparseVector* const> prev_reps,
                                         std::span<const SparseVector* const> curr_reps,
                                         const ClusterMatch& fine_match, double theta_new) {
  const auto back = fine_match.curr_to_prev(curr_reps.size());
  std::vector<bool> out(curr_reps.size(), true);
  for (std::size_t j = 0; j < curr_reps.size(); ++j) {
    if (!back[j] || *back[j] >= prev_reps.size()) continue;
    out[j] = dot(*curr_reps[j], *prev_reps[*back[j]]) < theta_new;
  }
  return out;
}

CoverageHistogram coverage(std::span<const Label> selection, const Clustering& coarse, const Clustering& fine,
                           std::span<const std::size_t> reps, ItemSpan items) {
  std::vector<char> selected(coarse.centroids.size(), 0);
  for (auto t : selection) selected.at(t) = 1;
  CoverageHistogram h{};
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!selected[coarse.assignment[i]]) continue;
    const std::size_t rep = reps[fine.assignment[i]];
    ++h[coverage_bucket(dot(*items[i], *items[rep]))];
  }
  return h;
}

std::vector<SimilarPost> similar_posts(const SparseVector& rep, ItemSpan items, double theta) {
  std::vector<SimilarPost> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const double s = dot(rep, *items[i]);
    if (s >= theta) out.push_back({i, s});
  }
  std::sort(out.begin(), out.end(), [](const SimilarPost& a, const SimilarPost& b) {
    return a.similarity != b.similarity ? a.similarity > b.similarity : a.index < b.index;
  });
  return out;
}

std::vector<std::size_t> timeline(std::span<const Timestamp> dates, Timestamp start, Timestamp end,
                                  std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("timeline: bins must be >= 1");
  std::vector<std::size_t> out(bins, 0);
  const Timestamp span = end - start;
  for (const Timestamp t : dates) {
    std::size_t b;
    if (span <= 0 || t >= end) {
      b = bins - 1;
    } else if (t <= start) {
      b = 0;
    } else {
      // (t - start) / span scaled to bins, exact in integers.
      const auto num = static_cast<unsigned __int128>(t - start) * bins;
      b = std::min<std::size_t>(bins - 1, static_cast<std::size_t>(num / static_cast<unsigned __int128>(span)));
    }
    ++out[b];
  }
  return out;
}

// ---- sessions -----------------------------------------------------------------

Session::Session(std::uint64_t id, std::optional<std::uint64_t> parent, std::vector<Filter> chain,
                 PipelineConfig config)
    : id_(id), parent_(parent), chain_(std::move(chain)), config_(std::move(config)) {
  config_.validate();
}

UpdateResult Session::run_update(const WindowSnapshot& snapshot, const Vocabulary& vocab) {
  if (!active_) throw std::logic_error("run_update: session is paused");
  ++updates_;

  SessionItems next;
  next.start = snapshot.start();
  next.end = snapshot.end();
  for (const auto& d : snapshot.items()) {
    if (!apply_filters(chain_, *d)) continue;
    next.docs.push_back(d);
    next.vectors.push_back(&d->vector);
    next.ids.push_back(d->post.id);
  }

  UpdateResult result;
  if (next.docs.empty()) {
    // Nothing to cluster: topics are gone and the next update starts afresh.
    result.empty = true;
    coarse_.reset();
    fine_.reset();
    items_ = std::move(next);
    reps_.clear();
    rep_index_.clear();
    summaries_.clear();
    delta_ = {};
    selection_.clear();
    history_.push_back({updates_, {}, {}});
    while (history_.size() > config_.history_depth) history_.pop_front();
    return result;
  }

  ClusterParams coarse_params = config_.coarse;
  ClusterParams fine_params = config_.fine;
  coarse_params.rng_seed = mix_seed(config_.coarse.rng_seed, 2 * updates_);
  fine_params.rng_seed = mix_seed(config_.fine.rng_seed, 2 * updates_ + 1);
  const Clustering* prev_coarse = coarse_ ? &*coarse_ : nullptr;
  const Clustering* prev_fine = fine_ ? &*fine_ : nullptr;
  Clustering coarse, fine;
  if (config_.parallel) {
    std::thread worker([&] { fine = dynamic_cluster(next.vectors, prev_fine, fine_params); });
    try {
      coarse = dynamic_cluster(next.vectors, prev_coarse, coarse_params);
    } catch (...) {
      worker.join();
      throw;
    }
    worker.join();
  } else {
    coarse = dynamic_cluster(next.vectors, prev_coarse, coarse_params);
    fine = dynamic_cluster(next.vectors, prev_fine, fine_params);
  }

  const bool first = prev_coarse == nullptr;
  ClusterMatch coarse_match, fine_match;
  if (!first) {
    coarse_match = match_clusters(prev_coarse->assignment, items_.ids, prev_coarse->chosen_k(), coarse.assignment,
                                  next.ids, coarse.chosen_k());
    fine_match = match_clusters(prev_fine->assignment, items_.ids, prev_fine->chosen_k(), fine.assignment, next.ids,
                                fine.chosen_k());
  }
  UpdateDelta delta = first ? compute_delta({}, {}, 0, next.ids, coarse.assignment, coarse.chosen_k(), {}, true)
                            : compute_delta(items_.ids, prev_coarse->assignment, prev_coarse->chosen_k(), next.ids,
                                            coarse.assignment, coarse.chosen_k(), coarse_match, false);

  // Representatives and their novelty against the previous ones.
  const auto rep_index = extract_representatives(fine, next.vectors);
  std::vector<const SparseVector*> prev_rep_vectors, curr_rep_vectors;
  for (const auto& r : reps_) prev_rep_vectors.push_back(&r.doc->vector);
  for (auto i : rep_index) curr_rep_vectors.push_back(next.vectors[i]);
  const auto novelty = representative_novelty(prev_rep_vectors, curr_rep_vectors, fine_match, config_.theta_new);
  std::vector<RepresentativeItem> reps;
  for (std::size_t j = 0; j < rep_index.size(); ++j) {
    RepresentativeItem r;
    r.doc = next.docs[rep_index[j]];
    r.subtopic = static_cast<Label>(j);
    r.subtopic_terms = top_terms(fine.centroids[j], vocab, config_.label_terms);
    r.topic = coarse.assignment[rep_index[j]];
    r.similarity = dot(r.doc->vector, fine.centroids[j]);
    r.is_new = novelty[j];
    reps.push_back(std::move(r));
  }

  // Topic summaries; colors follow the matching.
  const auto back = coarse_match.curr_to_prev(coarse.chosen_k());
  std::vector<std::vector<Timestamp>> dates(coarse.chosen_k());
  for (std::size_t i = 0; i < next.size(); ++i)
    dates[coarse.assignment[i]].push_back(next.docs[i]->post.effective_date());
  std::vector<TopicSummary> summaries(coarse.chosen_k());
  std::unordered_set<std::size_t> used_colors;
  for (std::size_t j = 0; j < summaries.size(); ++j) {
    auto& s = summaries[j];
    s.id = static_cast<Label>(j);
    s.label = top_terms(coarse.centroids[j], vocab, config_.label_terms);
    s.size = coarse.sizes[j];
    s.timeline = timeline(dates[j], next.start, next.end, config_.timeline_bins);
    s.prev_id = back[j];
    if (s.prev_id && *s.prev_id < summaries_.size()) {
      const auto& old = summaries_[*s.prev_id];
      for (const auto& t : s.label)
        if (std::find(old.label.begin(), old.label.end(), t) == old.label.end()) s.new_terms.push_back(t);
      s.color = old.color;
      used_colors.insert(s.color);
    } else {
      s.new_terms = s.label;
    }
  }
  std::size_t next_color = 0;
  for (auto& s : summaries) {
    if (s.prev_id && *s.prev_id < summaries_.size()) continue;
    while (used_colors.count(next_color)) ++next_color;
    s.color = next_color;
    used_colors.insert(next_color);
  }

  std::vector<Label> selection;
  for (auto t : selection_)
    if (t < coarse_match.prev_to_curr.size() && coarse_match.prev_to_curr[t])
      selection.push_back(*coarse_match.prev_to_curr[t]);
  std::sort(selection.begin(), selection.end());

  coarse_ = std::move(coarse);
  fine_ = std::move(fine);
  items_ = std::move(next);
  reps_ = std::move(reps);
  rep_index_ = rep_index;
  summaries_ = std::move(summaries);
  delta_ = std::move(delta);
  selection_ = std::move(selection);
  refresh_similar_counts();

  history_.push_back({updates_, summaries_, delta_});
  while (history_.size() > config_.history_depth) history_.pop_front();

  result.delta = delta_;
  result.summaries = summaries_;
  result.representatives = reps_;
  for (std::size_t j = 0; j < reps_.size(); ++j)
    if (reps_[j].is_new) result.new_representatives.push_back(j);
  result.coverage = selection_coverage();
  return result;
}

void Session::select(std::vector<Label> topics) {
  const std::size_t k = coarse_ ? coarse_->chosen_k() : 0;
  for (auto t : topics)
    if (t >= k) throw std::out_of_range("select: unknown topic " + std::to_string(t));
  std::sort(topics.begin(), topics.end());
  topics.erase(std::unique(topics.begin(), topics.end()), topics.end());
  selection_ = std::move(topics);
  refresh_similar_counts();
}

std::vector<std::size_t> Session::selection_indices() const {
  std::vector<std::size_t> out;
  if (!coarse_) return out;
  for (std::size_t i = 0; i < items_.size(); ++i)
    if (selection_.empty() || std::binary_search(selection_.begin(), selection_.end(), coarse_->assignment[i]))
      out.push_back(i);
  return out;
}

CoverageHistogram Session::selection_coverage() const {
  if (!coarse_) return {};
  std::vector<Label> topics = selection_;
  if (topics.empty())
    for (std::size_t t = 0; t < coarse_->chosen_k(); ++t) topics.push_back(static_cast<Label>(t));
  return coverage(topics, *coarse_, *fine_, rep_index_, items_.vectors);
}

std::vector<SimilarPost> Session::similar_to(std::size_t rep) const {
  if (rep >= reps_.size()) throw std::out_of_range("similar: unknown representative");
  const auto idx = selection_indices();
  std::vector<const SparseVector*> subset;
  subset.reserve(idx.size());
  for (auto i : idx) subset.push_back(items_.vectors[i]);
  auto out = similar_posts(reps_[rep].doc->vector, subset, config_.theta_sim);
  for (auto& p : out) p.index = idx[p.index];
  return out;
}

void Session::refresh_similar_counts() {
  const auto idx = selection_indices();
  std::vector<const SparseVector*> subset;
  subset.reserve(idx.size());
  for (auto i : idx) subset.push_back(items_.vectors[i]);
  std::vector<const SparseVector*> queries;
  for (const auto& r : reps_) queries.push_back(&r.doc->vector);
  const auto counts = count_similar(queries, subset, config_.theta_sim);
  for (std::size_t j = 0; j < reps_.size(); ++j) reps_[j].similar_count = counts[j];
}

const TopicOverviewState& Session::history_at(std::size_t index) const {
  if (index >= history_.size()) throw std::out_of_range("history: index out of range");
  return history_[index];
}

SessionTree::SessionTree(PipelineConfig config) : config_(std::move(config)) { push({}); }

Session& SessionTree::push(std::vector<Filter> chain) {
  std::optional<std::uint64_t> parent;
  if (!stack_.empty()) {
    parent = stack_.back()->id();
    stack_.back()->set_active(false);
  }
  stack_.push_back(std::make_unique<Session>(next_id_++, parent, std::move(chain), config_));
  return *stack_.back();
}

Session& SessionTree::dive_in(std::span<const Label> topics) {
  const Session& cur = active();
  if (!cur.coarse()) throw std::invalid_argument("dive-in: no topics yet");
  auto filter = make_centroid_filter(cur.coarse()->centroids, std::vector<Label>(topics.begin(), topics.end()));
  auto chain = cur.filters();
  chain.emplace_back(std::move(filter));
  return push(std::move(chain));
}

Session& SessionTree::search(std::string_view query, const TextPipeline& text) {
  auto filter = make_query_filter(query, text);
  auto chain = active().filters();
  chain.emplace_back(std::move(filter));
  return push(std::move(chain));
}

bool SessionTree::go_back() {
  if (stack_.size() < 2) return false;
  stack_.pop_back();
  stack_.back()->set_active(true);
  return true;
}

}  // namespace streamclust
