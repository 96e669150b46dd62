#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "streamclust/textprep.hpp"
#include "streamclust/window.hpp"

namespace streamclust {

struct PhraseConfig {
  std::size_t top_n = 10;
  std::size_t max_len = 5;
  // Minimum document frequency: max(min_support, ceil(support_fraction * n)).
  std::size_t min_support = 5;
  double support_fraction = 0.005;
  // p is dropped when a longer phrase containing it reaches this fraction of
  // p's document frequency.
  double subsumption = 0.8;
  std::size_t barcode_bins = 100;
};

struct PhraseStats {
  std::vector<TokenId> tokens;
  std::string display;
  std::size_t doc_freq = 0;
  double score = 0.0;  // doc_freq times the mean idf of the tokens
  std::array<double, 5> temporal{};
  std::vector<double> barcode;
  bool is_new = false;
};

// Greedy slot assignment; slot[i] is post i's position in [0, n).
struct BarcodeLayout {
  std::vector<std::size_t> slot;
};

// True when `phrase` occurs contiguously in `stream`.
bool contains_phrase(std::span<const TokenId> stream, std::span<const TokenId> phrase);

std::size_t min_support_for(std::size_t posts, const PhraseConfig& config);

// Frequent contiguous n-grams after subsumption pruning, by document
// frequency descending (then longer first, then display order). Only
// tokens, display, doc_freq and score are filled in.
std::vector<PhraseStats> extract_phrases(std::span<const DocumentPtr> posts, const TextPipeline& text,
                                         const PhraseConfig& config = {});

// Fraction of the dates falling in each fifth of [start, end].
std::array<double, 5> temporal_bins(std::span<const Timestamp> dates, Timestamp start, Timestamp end);

// members[p] lists, ascending, the posts containing phrase p; phrases are in
// document-frequency order. Each phrase claims the next free slots for its
// unassigned posts; leftovers take the trailing slots in arrival order.
BarcodeLayout barcode_layout(std::size_t n, std::span<const std::vector<std::size_t>> members);

// Shade per bin: the fraction of the posts mapped into the bin that contain
// the phrase. Slot s falls in bin floor(s * bins / n).
std::vector<double> barcode_shades(const BarcodeLayout& layout, std::span<const std::size_t> members,
                                   std::size_t bins);

// Indices of the posts containing every phrase.
std::vector<std::size_t> phrase_intersection(std::span<const std::vector<TokenId>> phrases,
                                             std::span<const DocumentPtr> posts);

// is_new for every current phrase missing from the previous list.
std::vector<bool> mark_new_phrases(std::span<const PhraseStats> prev, std::span<const PhraseStats> curr);

// extract_phrases plus temporal bins, barcode shades and new flags.
std::vector<PhraseStats> summarize_phrases(std::span<const DocumentPtr> posts, Timestamp start, Timestamp end,
                                           const TextPipeline& text, std::span<const PhraseStats> prev,
                                           const PhraseConfig& config = {});

}  // namespace streamclust
