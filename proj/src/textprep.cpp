#include "streamclust/textprep.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace streamclust {

IdfModel::IdfModel(std::unordered_map<std::string, std::uint64_t> df, std::uint64_t n_ref)
    : n_ref_(n_ref) {
  for (auto& [token, count] : df) {
    if (count == 0 || count > n_ref)
      throw std::invalid_argument("document frequency of '" + token + "' outside [1, N_ref]");
    df_.emplace(token, count);
  }
}

std::uint64_t IdfModel::df(std::string_view token) const {
  auto it = df_.find(token);
  return it == df_.end() ? 0 : it->second;
}

double IdfModel::idf(std::string_view token) const {
  const double n = static_cast<double>(n_ref_);
  return std::log((1.0 + n) / (1.0 + static_cast<double>(df(token)))) + 1.0;
}

void IdfModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write IDF model to " + path.string());
  std::vector<std::pair<std::string_view, std::uint64_t>> rows(df_.begin(), df_.end());
  std::sort(rows.begin(), rows.end());
  out << "#N_REF " << n_ref_ << '\n';
  for (const auto& [token, count] : rows) out << token << '\t' << count << '\n';
}

IdfModel IdfModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open IDF model " + path.string());
  std::string line;
  if (!std::getline(in, line) || !line.starts_with("#N_REF "))
    throw std::runtime_error(path.string() + ": missing '#N_REF <count>' header");
  const std::uint64_t n_ref = std::stoull(line.substr(7));
  std::unordered_map<std::string, std::uint64_t> df;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected <token>\\t<df>");
    df[line.substr(0, tab)] = std::stoull(line.substr(tab + 1));
  }
  return IdfModel(std::move(df), n_ref);
}

IdfModel build_idf_from_texts(std::span<const std::string> texts, const StopwordSet& stopwords) {
  if (texts.empty()) throw std::invalid_argument("cannot build IDF from an empty corpus");
  std::unordered_map<std::string, std::uint64_t> df;
  std::unordered_set<std::string> seen;
  for (const auto& text : texts) {
    seen.clear();
    for (auto& token : analyze(text, stopwords)) seen.insert(std::move(token));
    for (const auto& token : seen) ++df[token];
  }
  return IdfModel(std::move(df), texts.size());
}

IdfModel build_idf(std::span<const RawPost> corpus, const StopwordSet& stopwords) {
  std::vector<std::string> texts;
  texts.reserve(corpus.size());
  for (const auto& post : corpus) texts.push_back(post.text);
  return build_idf_from_texts(texts, stopwords);
}

namespace {

std::optional<SparseVector> weigh_tokens(const std::vector<std::string>& tokens, Vocabulary& vocab,
                                         const IdfModel& idf, std::vector<TokenId>* ids_out) {
  if (tokens.empty()) return std::nullopt;
  std::vector<std::pair<TokenId, std::size_t>> ids;  // (id, index into tokens)
  ids.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) ids.emplace_back(vocab.get_or_add(tokens[i]), i);
  if (ids_out) {
    ids_out->clear();
    for (const auto& [id, _] : ids) ids_out->push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  std::vector<SparseEntry> entries;
  for (std::size_t i = 0; i < ids.size();) {
    std::size_t j = i;
    while (j < ids.size() && ids[j].first == ids[i].first) ++j;
    const double tf = static_cast<double>(j - i);
    entries.push_back({ids[i].first, tf * idf.idf(tokens[ids[i].second])});
    i = j;
  }
  auto v = SparseVector::from_sorted(std::move(entries));
  v.normalize();
  return v;
}

}  // namespace

std::optional<SparseVector> vectorize(const RawPost& post, Vocabulary& vocab, const IdfModel& idf,
                                      const StopwordSet& stopwords) {
  return weigh_tokens(analyze(post.text, stopwords), vocab, idf, nullptr);
}

TextPipeline::TextPipeline(StopwordSet stopwords, IdfModel idf)
    : stopwords_(std::move(stopwords)), idf_(std::move(idf)), vocab_(std::make_unique<Vocabulary>()) {}

std::vector<std::string> TextPipeline::analyze(std::string_view text) const {
  return streamclust::analyze(text, stopwords_);
}

std::optional<Document> TextPipeline::process(RawPost post) const {
  std::vector<TokenId> ids;
  auto v = weigh_tokens(analyze(post.text), *vocab_, idf_, &ids);
  if (!v) return std::nullopt;
  return Document{std::move(post), std::move(*v), std::move(ids)};
}

std::optional<SparseVector> TextPipeline::vectorize_text(std::string_view text) const {
  return weigh_tokens(analyze(text), *vocab_, idf_, nullptr);
}

double TextPipeline::idf_of(TokenId id) const { return idf_.idf(vocab_->token_of(id)); }

}  // namespace streamclust
