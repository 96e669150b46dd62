#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "streamclust/cluster.hpp"
#include "streamclust/textprep.hpp"
#include "streamclust/window.hpp"

namespace streamclust {

struct PipelineConfig {
  ClusterParams coarse = [] {
    ClusterParams p;
    p.k_max = 10;
    return p;
  }();
  ClusterParams fine = [] {
    ClusterParams p;
    p.k_max = 100;
    return p;
  }();
  // Similarity at which a post counts as similar to a representative.
  double theta_sim = 0.5;
  // A changed representative is new when its similarity to the previous one
  // falls below this.
  double theta_new = 0.7;
  std::size_t timeline_bins = 20;
  std::size_t history_depth = 60;
  std::size_t label_terms = 5;
  // Run the coarse and fine clusterings on separate threads.
  bool parallel = true;

  // Throws std::invalid_argument.
  void validate() const;
};

// ---- filters ---------------------------------------------------------------

// Passes posts containing every query token.
struct QueryFilter {
  std::vector<std::string> terms;
  std::vector<TokenId> tokens;  // sorted, unique
};

// Passes posts whose nearest parent centroid is selected. The centroids are
// frozen when the filter is created.
struct CentroidFilter {
  std::shared_ptr<const std::vector<SparseVector>> centroids;
  std::vector<Label> selected;  // sorted, unique
};

using Filter = std::variant<QueryFilter, CentroidFilter>;

QueryFilter make_query_filter(std::string_view query, const TextPipeline& text);
CentroidFilter make_centroid_filter(std::vector<SparseVector> centroids, std::vector<Label> selected);

bool passes(const Filter& filter, const Document& doc);
bool apply_filters(std::span<const Filter> chain, const Document& doc);

// ---- per-update results ----------------------------------------------------

struct TopicFlow {
  Label target = 0;
  std::size_t count = 0;
  bool operator==(const TopicFlow&) const = default;
};

// Accounting for one previous topic. For a matched topic
// prev_size = retained + removed + sum(moved_out).
struct PrevTopicDelta {
  Label topic = 0;
  std::optional<Label> matched;
  std::size_t prev_size = 0;
  std::size_t retained = 0;  // now in the matched topic
  std::size_t removed = 0;   // no longer in the window
  std::vector<TopicFlow> moved_out;  // now in some other topic, by target
  bool operator==(const PrevTopicDelta&) const = default;
};

// Accounting for one current topic: size = retained + moved_in + added.
struct CurrTopicDelta {
  Label topic = 0;
  std::optional<Label> matched;
  std::size_t size = 0;
  std::size_t retained = 0;  // came from the matched previous topic
  std::size_t moved_in = 0;  // came from any other previous topic
  std::size_t added = 0;     // were not in the previous window
  bool operator==(const CurrTopicDelta&) const = default;
};

struct UpdateDelta {
  bool first = true;
  std::vector<PrevTopicDelta> prev;
  std::vector<CurrTopicDelta> curr;
  std::vector<Label> unmatched_prev;
  std::vector<Label> unmatched_curr;
  bool operator==(const UpdateDelta&) const = default;
};

// Delta between two labelings of two item sets joined by id. An empty
// previous labeling yields a first-update delta where everything is added.
UpdateDelta compute_delta(std::span<const std::string> prev_ids, std::span<const Label> prev_labels,
                          std::size_t prev_k, std::span<const std::string> curr_ids,
                          std::span<const Label> curr_labels, std::size_t curr_k, const ClusterMatch& match,
                          bool first);

struct TopicSummary {
  Label id = 0;
  std::vector<std::string> label;      // heaviest centroid terms, descending
  std::vector<std::string> new_terms;  // label terms the matched previous topic lacked
  std::size_t size = 0;
  std::vector<std::size_t> timeline;
  std::size_t color = 0;  // carried over from the matched previous topic
  std::optional<Label> prev_id;
  bool operator==(const TopicSummary&) const = default;
};

struct RepresentativeItem {
  DocumentPtr doc;
  Label subtopic = 0;
  std::vector<std::string> subtopic_terms;
  Label topic = 0;  // the post's own coarse assignment
  double similarity = 0.0;  // to the subtopic centroid
  std::size_t similar_count = 0;
  bool is_new = false;
  const std::string& post_id() const { return doc->post.id; }
};

// Five equal-width similarity buckets; the last one is closed at 1.
using CoverageHistogram = std::array<std::size_t, 5>;

std::size_t coverage_bucket(double similarity);

// Per subtopic, the index of the member with the largest dot product to the
// centroid; ties go to the earliest item.
std::vector<std::size_t> extract_representatives(const Clustering& fine, ItemSpan items);

// is_new per current subtopic: unmatched, or the representative changed by
// more than theta_new allows.
std::vector<bool> representative_novelty(std::span<const SparseVector* const> prev_reps,
                                         std::span<const SparseVector* const> curr_reps,
                                         const ClusterMatch& fine_match, double theta_new);

// Buckets every post whose coarse topic is selected by its similarity to the
// representative of its subtopic.
CoverageHistogram coverage(std::span<const Label> selection, const Clustering& coarse, const Clustering& fine,
                           std::span<const std::size_t> reps, ItemSpan items);

struct SimilarPost {
  std::size_t index = 0;
  double similarity = 0.0;
  bool operator==(const SimilarPost&) const = default;
};

// Items with dot >= theta, by descending similarity, then ascending index.
std::vector<SimilarPost> similar_posts(const SparseVector& rep, ItemSpan items, double theta);

// Equal-width bins over [start, end] by effective date; dates outside are
// clamped into the edge bins. Throws on bins == 0.
std::vector<std::size_t> timeline(std::span<const Timestamp> dates, Timestamp start, Timestamp end,
                                  std::size_t bins);

// ---- sessions --------------------------------------------------------------

struct TopicOverviewState {
  std::uint64_t update = 0;
  std::vector<TopicSummary> summaries;
  UpdateDelta delta;
};

struct UpdateResult {
  // The filtered snapshot was empty; nothing else is filled in.
  bool empty = false;
  UpdateDelta delta;
  std::vector<TopicSummary> summaries;
  std::vector<RepresentativeItem> representatives;
  std::vector<std::size_t> new_representatives;  // indices into representatives
  CoverageHistogram coverage{};                  // for the current selection
};

// The items one session clustered in its latest update.
struct SessionItems {
  std::vector<DocumentPtr> docs;
  std::vector<const SparseVector*> vectors;
  std::vector<std::string> ids;
  Timestamp start = 0;
  Timestamp end = 0;

  std::size_t size() const { return docs.size(); }
};

class Session {
 public:
  Session(std::uint64_t id, std::optional<std::uint64_t> parent, std::vector<Filter> chain,
          PipelineConfig config);

  std::uint64_t id() const { return id_; }
  std::optional<std::uint64_t> parent() const { return parent_; }
  const std::vector<Filter>& filters() const { return chain_; }
  const PipelineConfig& config() const { return config_; }
  bool active() const { return active_; }
  void set_active(bool a) { active_ = a; }

  // Filters the snapshot, runs both clusterings and refreshes everything
  // derived from them. Throws std::logic_error when the session is paused.
  UpdateResult run_update(const WindowSnapshot& snapshot, const Vocabulary& vocab);

  const std::optional<Clustering>& coarse() const { return coarse_; }
  const std::optional<Clustering>& fine() const { return fine_; }
  const SessionItems& items() const { return items_; }
  const std::vector<RepresentativeItem>& representatives() const { return reps_; }
  const std::vector<TopicSummary>& summaries() const { return summaries_; }
  const UpdateDelta& delta() const { return delta_; }
  std::uint64_t updates() const { return updates_; }

  // Selected coarse topics; kept across updates through the topic matching.
  const std::vector<Label>& selection() const { return selection_; }
  // Throws std::out_of_range on an unknown topic.
  void select(std::vector<Label> topics);
  // Coverage and similar counts for the current selection (every post when
  // nothing is selected).
  CoverageHistogram selection_coverage() const;
  std::vector<std::size_t> selection_indices() const;
  std::vector<SimilarPost> similar_to(std::size_t rep) const;

  std::size_t history_size() const { return history_.size(); }
  // 0 is the oldest stored state. Throws std::out_of_range.
  const TopicOverviewState& history_at(std::size_t index) const;

 private:
  void refresh_similar_counts();

  std::uint64_t id_;
  std::optional<std::uint64_t> parent_;
  std::vector<Filter> chain_;
  PipelineConfig config_;
  bool active_ = true;

  std::optional<Clustering> coarse_;
  std::optional<Clustering> fine_;
  SessionItems items_;
  std::vector<RepresentativeItem> reps_;
  std::vector<std::size_t> rep_index_;  // item index per subtopic
  std::vector<TopicSummary> summaries_;
  UpdateDelta delta_;
  std::vector<Label> selection_;
  std::uint64_t updates_ = 0;
  std::deque<TopicOverviewState> history_;
};

// The chain of sessions from the root to the active one. Diving in or
// searching pushes a child and pauses its parent; going back discards the
// child and resumes the parent with its clustering untouched.
class SessionTree {
 public:
  explicit SessionTree(PipelineConfig config);

  Session& active() { return *stack_.back(); }
  const Session& active() const { return *stack_.back(); }
  const Session& at_depth(std::size_t depth) const { return *stack_.at(depth); }
  std::size_t depth() const { return stack_.size() - 1; }

  // Throws std::invalid_argument on an empty selection, an unknown topic or
  // a session without a coarse clustering.
  Session& dive_in(std::span<const Label> topics);
  // Throws std::invalid_argument when the query has no content token.
  Session& search(std::string_view query, const TextPipeline& text);
  // Returns false at the root.
  bool go_back();

 private:
  Session& push(std::vector<Filter> chain);

  PipelineConfig config_;
  std::uint64_t next_id_ = 0;
  std::vector<std::unique_ptr<Session>> stack_;
};

}  // namespace streamclust
