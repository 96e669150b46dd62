#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "streamclust/sparse_vector.hpp"
#include "streamclust/text.hpp"
#include "streamclust/vocabulary.hpp"

namespace streamclust {

// Document frequencies over a reference corpus.
class IdfModel {
 public:
  IdfModel() = default;
  IdfModel(std::unordered_map<std::string, std::uint64_t> df, std::uint64_t n_ref);

  // ln((1 + N_ref) / (1 + df)) + 1; unseen tokens use df = 0.
  double idf(std::string_view token) const;
  std::uint64_t df(std::string_view token) const;
  std::uint64_t reference_size() const { return n_ref_; }
  std::size_t token_count() const { return df_.size(); }

  // "#N_REF <count>" header, then "<token>\t<df>" lines sorted by token.
  void save(const std::filesystem::path& path) const;
  static IdfModel load(const std::filesystem::path& path);

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::unordered_map<std::string, std::uint64_t, Hash, std::equal_to<>> df_;
  std::uint64_t n_ref_ = 0;
};

// Throws std::invalid_argument on an empty corpus.
IdfModel build_idf(std::span<const RawPost> corpus, const StopwordSet& stopwords);
IdfModel build_idf_from_texts(std::span<const std::string> texts, const StopwordSet& stopwords);

// A vectorized post: the unit TF-IDF vector plus its token ids in text order
// (phrase mining and query filters need the order).
struct Document {
  RawPost post;
  SparseVector vector;
  std::vector<TokenId> tokens;
};

// tf * idf per token, L2-normalized. Absent when no token survives
// stopword removal. Novel tokens are appended to the vocabulary.
std::optional<SparseVector> vectorize(const RawPost& post, Vocabulary& vocab, const IdfModel& idf,
                                      const StopwordSet& stopwords);

// Bundles the analysis state shared by ingestion, clustering and phrase
// extraction. vectorize may be called from several threads.
class TextPipeline {
 public:
  TextPipeline(StopwordSet stopwords, IdfModel idf);

  std::optional<Document> process(RawPost post) const;
  std::optional<SparseVector> vectorize_text(std::string_view text) const;

  std::vector<std::string> analyze(std::string_view text) const;
  const StopwordSet& stopwords() const { return stopwords_; }
  const IdfModel& idf() const { return idf_; }
  Vocabulary& vocabulary() const { return *vocab_; }
  double idf_of(TokenId id) const;

 private:
  StopwordSet stopwords_;
  IdfModel idf_;
  std::unique_ptr<Vocabulary> vocab_;
};

}  // namespace streamclust
