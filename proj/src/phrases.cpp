#include "streamclust/phrases.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "streamclust/pipeline.hpp"

namespace streamclust {

namespace {

constexpr std::size_t kMaxGram = 8;

// Fixed-capacity n-gram key, so counting never allocates per window.
struct Gram {
  std::array<TokenId, kMaxGram> t{};
  std::uint8_t len = 0;

  Gram() = default;
  Gram(std::span<const TokenId> s) : len(static_cast<std::uint8_t>(s.size())) {
    std::copy(s.begin(), s.end(), t.begin());
  }
  std::span<const TokenId> tokens() const { return {t.data(), len}; }
  bool operator==(const Gram& o) const {
    return len == o.len && std::equal(t.begin(), t.begin() + len, o.t.begin());
  }
};

struct GramHash {
  std::size_t operator()(const Gram& g) const {
    std::uint64_t h = 1469598103934665603ull ^ g.len;
    for (std::size_t i = 0; i < g.len; ++i) {
      h ^= g.t[i];
      h *= 1099511628211ull;
      h ^= h >> 29;
    }
    return static_cast<std::size_t>(h);
  }
};

struct Count {
  std::size_t df = 0;
  std::size_t last_post = static_cast<std::size_t>(-1);
};

using GramMap = std::unordered_map<Gram, Count, GramHash>;

std::string join_tokens(std::span<const TokenId> tokens, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += vocab.token_of(tokens[i]);
  }
  return out;
}

}  // namespace

bool contains_phrase(std::span<const TokenId> stream, std::span<const TokenId> phrase) {
  if (phrase.empty()) return true;
  return std::search(stream.begin(), stream.end(), phrase.begin(), phrase.end()) != stream.end();
}

std::size_t min_support_for(std::size_t posts, const PhraseConfig& config) {
  const auto frac = static_cast<std::size_t>(std::ceil(config.support_fraction * static_cast<double>(posts)));
  return std::max(config.min_support, frac);
}

std::vector<PhraseStats> extract_phrases(std::span<const DocumentPtr> posts, const TextPipeline& text,
                                         const PhraseConfig& config) {
  if (config.max_len == 0 || config.max_len > kMaxGram)
    throw std::invalid_argument("extract_phrases: max_len must be in [1, 8]");
  const std::size_t support = min_support_for(posts.size(), config);

  // Level-wise counting: an n-gram can only be frequent when both of its
  // (n-1)-gram halves are.
  std::vector<GramMap> levels(config.max_len + 1);
  for (std::size_t len = 1; len <= config.max_len; ++len) {
    GramMap& level = levels[len];
    const GramMap* shorter = len > 1 ? &levels[len - 1] : nullptr;
    if (shorter && shorter->empty()) break;
    for (std::size_t p = 0; p < posts.size(); ++p) {
      const std::vector<TokenId>& toks = posts[p]->tokens;
      for (std::size_t i = 0; i + len <= toks.size(); ++i) {
        const std::span<const TokenId> window(toks.data() + i, len);
        if (shorter && (!shorter->contains(Gram(window.first(len - 1))) ||
                        !shorter->contains(Gram(window.last(len - 1)))))
          continue;
        Count& c = level[Gram(window)];
        if (c.last_post != p) {
          c.last_post = p;
          ++c.df;
        }
      }
    }
    std::erase_if(level, [&](const auto& kv) { return kv.second.df < support; });
  }

  // Prune every candidate some longer candidate nearly always extends.
  std::unordered_map<Gram, bool, GramHash> pruned;
  for (std::size_t len = 2; len <= config.max_len; ++len) {
    for (const auto& [q, qc] : levels[len]) {
      for (std::size_t sub = 1; sub < len; ++sub) {
        for (std::size_t off = 0; off + sub <= len; ++off) {
          const Gram p(q.tokens().subspan(off, sub));
          const auto it = levels[sub].find(p);
          if (it != levels[sub].end() &&
              static_cast<double>(qc.df) >= config.subsumption * static_cast<double>(it->second.df))
            pruned[p] = true;
        }
      }
    }
  }

  const Vocabulary& vocab = text.vocabulary();
  std::vector<PhraseStats> out;
  for (std::size_t len = 1; len <= config.max_len; ++len) {
    for (const auto& [g, c] : levels[len]) {
      if (pruned.contains(g)) continue;
      PhraseStats s;
      s.tokens.assign(g.tokens().begin(), g.tokens().end());
      s.display = join_tokens(s.tokens, vocab);
      s.doc_freq = c.df;
      double idf = 0.0;
      for (const TokenId t : s.tokens) idf += text.idf_of(t);
      s.score = static_cast<double>(c.df) * idf / static_cast<double>(len);
      out.push_back(std::move(s));
    }
  }
  std::sort(out.begin(), out.end(), [](const PhraseStats& a, const PhraseStats& b) {
    if (a.doc_freq != b.doc_freq) return a.doc_freq > b.doc_freq;
    if (a.tokens.size() != b.tokens.size()) return a.tokens.size() > b.tokens.size();
    if (a.display != b.display) return a.display < b.display;
    return a.tokens < b.tokens;
  });
  if (out.size() > config.top_n) out.resize(config.top_n);
  return out;
}

std::array<double, 5> temporal_bins(std::span<const Timestamp> dates, Timestamp start, Timestamp end) {
  std::array<double, 5> out{};
  if (dates.empty()) return out;
  const std::vector<std::size_t> counts = timeline(dates, start, end, out.size());
  for (std::size_t b = 0; b < out.size(); ++b)
    out[b] = static_cast<double>(counts[b]) / static_cast<double>(dates.size());
  return out;
}

BarcodeLayout barcode_layout(std::size_t n, std::span<const std::vector<std::size_t>> members) {
  constexpr auto kFree = static_cast<std::size_t>(-1);
  BarcodeLayout layout;
  layout.slot.assign(n, kFree);
  std::size_t next = 0;
  for (const auto& posts : members) {
    for (const std::size_t i : posts) {
      if (i >= n) throw std::out_of_range("barcode_layout: post index out of range");
      if (layout.slot[i] == kFree) layout.slot[i] = next++;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (layout.slot[i] == kFree) layout.slot[i] = next++;
  return layout;
}

std::vector<double> barcode_shades(const BarcodeLayout& layout, std::span<const std::size_t> members,
                                   std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("barcode_shades: bins must be >= 1");
  const std::size_t n = layout.slot.size();
  std::vector<double> shades(bins, 0.0);
  if (n == 0) return shades;
  const auto bin_of = [&](std::size_t slot) { return slot * bins / n; };
  std::vector<std::size_t> total(bins, 0), hit(bins, 0);
  for (const std::size_t s : layout.slot) ++total[bin_of(s)];
  for (const std::size_t i : members) ++hit[bin_of(layout.slot.at(i))];
  for (std::size_t b = 0; b < bins; ++b)
    if (total[b]) shades[b] = static_cast<double>(hit[b]) / static_cast<double>(total[b]);
  return shades;
}

std::vector<std::size_t> phrase_intersection(std::span<const std::vector<TokenId>> phrases,
                                             std::span<const DocumentPtr> posts) {
  if (phrases.empty()) throw std::invalid_argument("phrase_intersection: no phrase selected");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    const bool all = std::all_of(phrases.begin(), phrases.end(),
                                 [&](const auto& ph) { return contains_phrase(posts[i]->tokens, ph); });
    if (all) out.push_back(i);
  }
  return out;
}

std::vector<bool> mark_new_phrases(std::span<const PhraseStats> prev, std::span<const PhraseStats> curr) {
  std::vector<bool> out;
  out.reserve(curr.size());
  for (const PhraseStats& c : curr) {
    const bool seen =
        std::any_of(prev.begin(), prev.end(), [&](const PhraseStats& p) { return p.tokens == c.tokens; });
    out.push_back(!seen);
  }
  return out;
}

std::vector<PhraseStats> summarize_phrases(std::span<const DocumentPtr> posts, Timestamp start, Timestamp end,
                                           const TextPipeline& text, std::span<const PhraseStats> prev,
                                           const PhraseConfig& config) {
  if (posts.empty()) return {};
  std::vector<PhraseStats> out = extract_phrases(posts, text, config);
  std::vector<std::vector<std::size_t>> members(out.size());
  for (std::size_t p = 0; p < out.size(); ++p)
    for (std::size_t i = 0; i < posts.size(); ++i)
      if (contains_phrase(posts[i]->tokens, out[p].tokens)) members[p].push_back(i);

  const BarcodeLayout layout = barcode_layout(posts.size(), members);
  const std::vector<bool> fresh = mark_new_phrases(prev, out);
  for (std::size_t p = 0; p < out.size(); ++p) {
    std::vector<Timestamp> dates;
    dates.reserve(members[p].size());
    for (const std::size_t i : members[p]) dates.push_back(posts[i]->post.effective_date());
    out[p].temporal = temporal_bins(dates, start, end);
    out[p].barcode = barcode_shades(layout, members[p], config.barcode_bins);
    out[p].is_new = fresh[p];
  }
  return out;
}

}  // namespace streamclust
