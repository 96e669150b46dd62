#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "streamclust/cluster.hpp"
#include "streamclust/text.hpp"

namespace streamclust {

// ---- corpora ---------------------------------------------------------------

struct LabeledDoc {
  std::string id;
  std::string text;
  std::string label;
  std::optional<Timestamp> date;
};

struct LabeledCorpus {
  // Ordered by date; undated documents last, in load order.
  std::vector<LabeledDoc> docs;
  std::size_t skipped = 0;  // unreadable or unparsable inputs

  std::vector<std::string> classes() const;  // sorted, unique
};

enum class CorpusFormat { newsgroups_dir, jsonl };

// newsgroups_dir: every regular file below `path`, labeled by its parent
// folder; text is the Subject line plus the body, the Date header orders it.
// jsonl: one object per line with `text`, `label` and optional `date`
// (ISO-8601 string or epoch milliseconds).
// Throws std::runtime_error when the path is missing or yields no document.
LabeledCorpus load_corpus(const std::filesystem::path& path, CorpusFormat format);

// Stable sort by date with undated documents last.
void order_by_date(LabeledCorpus& corpus);

// Splits a raw newsgroup message into (subject + body, Date header).
// Returns nullopt when there is no header block.
std::optional<LabeledDoc> parse_newsgroup_message(std::string_view raw);

// Vectors with IDF computed over the corpus itself; documents left without a
// content token are dropped.
struct VectorizedCorpus {
  std::vector<SparseVector> vectors;
  std::vector<Label> labels;  // index into classes
  std::vector<std::string> classes;
  std::size_t dropped = 0;

  std::size_t size() const { return vectors.size(); }
  std::vector<const SparseVector*> pointers() const;
};

VectorizedCorpus vectorize_corpus(const LabeledCorpus& corpus, const StopwordSet& stopwords);

// ---- metrics ---------------------------------------------------------------

// Mutual information over the arithmetic mean of the two entropies. Two
// constant labelings score 1; one constant labeling scores 0.
// Throws std::invalid_argument on empty or unequal inputs.
double nmi(std::span<const Label> a, std::span<const Label> b);

// Mean over both sets of each centroid's best dot product in the other set.
// Throws std::invalid_argument when either set is empty.
double coherence(std::span<const SparseVector> c1, std::span<const SparseVector> c2);

// ---- reports ---------------------------------------------------------------

struct Summary {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr() const { return q3 - q1; }
};

// Linear-interpolation quartiles. Throws std::invalid_argument when empty.
Summary summarize(std::vector<double> values);

struct RunRecord {
  std::string config;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  double nmi = 0.0;
  std::optional<double> coherence;
  double seconds = 0.0;
  std::size_t clusters = 0;  // final clustering
};

struct ConfigReport {
  std::string name;
  Summary nmi;
  std::optional<Summary> coherence;
  Summary seconds;
  std::vector<RunRecord> runs;
};

struct BenchReport {
  std::string kind;  // "batch" or "stream"
  std::size_t documents = 0;
  std::size_t classes = 0;
  std::vector<ConfigReport> configs;

  const ConfigReport* find(std::string_view name) const;
};

ConfigReport aggregate(std::string name, std::vector<RunRecord> runs);

std::string report_json(const BenchReport& report);
// Aligned text table, one row per configuration.
std::string report_table(const BenchReport& report);
// One JSON object per run.
std::string run_log_jsonl(const BenchReport& report);

// ---- benchmarks ------------------------------------------------------------

struct BatchBenchParams {
  std::size_t k = 20;
  std::size_t runs = 5;
  std::size_t max_iters = 100;
  std::uint64_t seed = 0;
};

// Spherical ("skmeans++") and euclidean ("kmeans++") k-means with one
// k-means++ seeding per run.
BenchReport run_batch_bench(const VectorizedCorpus& corpus, const BatchBenchParams& params);

struct StreamBenchParams {
  std::size_t batches = 10;
  std::size_t runs = 5;
  std::vector<std::size_t> max_clusters = {10, 20};
  // Fractions of the window shared by consecutive windows.
  std::vector<double> overlaps = {0.75, 0.5};
  std::size_t restarts = 2;
  std::size_t max_iters = 50;
  std::uint64_t seed = 0;
};

// Config names: "baseline" and "dynamic-k<max>-o<percent>". The baseline
// clusters each of the distinct batches with k set to its class count. The
// dynamic runs slide a batch-sized window and carry the clustering over.
// NMI is taken on the final batch; coherence is averaged over consecutive
// distinct batches.
BenchReport run_stream_bench(const VectorizedCorpus& corpus, const StreamBenchParams& params);

std::string stream_config_name(std::size_t max_clusters, double overlap);

}  // namespace streamclust
