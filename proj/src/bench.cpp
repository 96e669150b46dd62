#include "streamclust/bench.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "streamclust/textprep.hpp"
#include "streamclust/timefmt.hpp"

namespace streamclust {

namespace {

using json = nlohmann::json;

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool starts_with_ci(std::string_view line, std::string_view prefix) {
  if (line.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(line[i])) != std::tolower(static_cast<unsigned char>(prefix[i])))
      return false;
  return true;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Entropy of a count distribution; terms summed in ascending count order so
// equal multisets of counts give bit-identical results.
double entropy(std::vector<std::size_t> counts, std::size_t total) {
  std::sort(counts.begin(), counts.end());
  const double n = static_cast<double>(total);
  double h = 0.0;
  for (const std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<const SparseVector*> slice(const VectorizedCorpus& c, std::size_t begin, std::size_t end) {
  std::vector<const SparseVector*> out;
  out.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) out.push_back(&c.vectors[i]);
  return out;
}

std::vector<Label> label_slice(const VectorizedCorpus& c, std::size_t begin, std::size_t end) {
  return {c.labels.begin() + static_cast<std::ptrdiff_t>(begin), c.labels.begin() + static_cast<std::ptrdiff_t>(end)};
}

std::size_t distinct(std::span<const Label> labels) { return std::set<Label>(labels.begin(), labels.end()).size(); }

double mean_coherence(const std::vector<std::vector<SparseVector>>& seq) {
  if (seq.size() < 2) return 0.0;
  double s = 0.0;
  for (std::size_t i = 1; i < seq.size(); ++i) s += coherence(seq[i - 1], seq[i]);
  return s / static_cast<double>(seq.size() - 1);
}

json summary_json(const Summary& s) {
  return {{"median", s.median}, {"q1", s.q1}, {"q3", s.q3}, {"iqr", s.iqr()}};
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string cell(const Summary& s, int digits) {
  return fixed(s.median, digits) + " [" + fixed(s.q1, digits) + ", " + fixed(s.q3, digits) + "]";
}

}  // namespace

// ---- corpora --------------------------------------------------------------------

std::vector<std::string> LabeledCorpus::classes() const {
  std::set<std::string> s;
  for (const auto& d : docs) s.insert(d.label);
  return {s.begin(), s.end()};
}

void order_by_date(LabeledCorpus& corpus) {
  std::stable_sort(corpus.docs.begin(), corpus.docs.end(), [](const LabeledDoc& a, const LabeledDoc& b) {
    if (a.date.has_value() != b.date.has_value()) return a.date.has_value();
    return a.date.has_value() && *a.date < *b.date;
  });
}

std::optional<LabeledDoc> parse_newsgroup_message(std::string_view raw) {
  std::size_t split = raw.find("\n\n");
  std::size_t body_at = split == std::string_view::npos ? split : split + 2;
  const std::size_t crlf = raw.find("\r\n\r\n");
  if (crlf != std::string_view::npos && (split == std::string_view::npos || crlf < split)) {
    split = crlf;
    body_at = crlf + 4;
  }
  if (split == std::string_view::npos) return std::nullopt;

  LabeledDoc doc;
  std::string subject;
  std::string_view headers = raw.substr(0, split);
  while (!headers.empty()) {
    const std::size_t nl = headers.find('\n');
    const std::string_view line = headers.substr(0, nl);
    headers.remove_prefix(nl == std::string_view::npos ? headers.size() : nl + 1);
    if (starts_with_ci(line, "subject:")) subject = std::string(trim(line.substr(8)));
    if (starts_with_ci(line, "date:")) doc.date = parse_mail_date(trim(line.substr(5)));
  }
  doc.text = subject + "\n" + std::string(raw.substr(body_at));
  return doc;
}

LabeledCorpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) throw std::runtime_error("corpus not found: " + path.string());
  LabeledCorpus corpus;

  if (format == CorpusFormat::newsgroups_dir) {
    if (!fs::is_directory(path)) throw std::runtime_error("not a directory: " + path.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(path))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      std::optional<LabeledDoc> doc;
      try {
        doc = parse_newsgroup_message(read_file(f));
      } catch (const std::exception&) {
      }
      if (!doc) {
        ++corpus.skipped;
        continue;
      }
      doc->label = f.parent_path().filename().string();
      doc->id = fs::relative(f, path).generic_string();
      corpus.docs.push_back(std::move(*doc));
    }
  } else {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (trim(line).empty()) continue;
      try {
        const json j = json::parse(line);
        LabeledDoc doc;
        doc.text = j.at("text").get<std::string>();
        const json& label = j.at("label");
        doc.label = label.is_string() ? label.get<std::string>() : label.dump();
        doc.id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>() : std::to_string(n);
        if (j.contains("date")) {
          const json& d = j["date"];
          if (d.is_number_integer()) doc.date = d.get<Timestamp>();
          else if (d.is_string()) doc.date = parse_iso8601(d.get<std::string>());
        }
        corpus.docs.push_back(std::move(doc));
      } catch (const json::exception&) {
        ++corpus.skipped;
      }
    }
  }
  if (corpus.docs.empty()) throw std::runtime_error("no documents in " + path.string());
  order_by_date(corpus);
  return corpus;
}

std::vector<const SparseVector*> VectorizedCorpus::pointers() const {
  std::vector<const SparseVector*> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) out.push_back(&v);
  return out;
}

VectorizedCorpus vectorize_corpus(const LabeledCorpus& corpus, const StopwordSet& stopwords) {
  std::vector<std::string> texts;
  texts.reserve(corpus.docs.size());
  for (const auto& d : corpus.docs) texts.push_back(d.text);
  const TextPipeline text(stopwords, build_idf_from_texts(texts, stopwords));

  VectorizedCorpus out;
  std::vector<std::string> labels;
  for (const auto& d : corpus.docs) {
    auto v = text.vectorize_text(d.text);
    if (!v) {
      ++out.dropped;
      continue;
    }
    out.vectors.push_back(std::move(*v));
    labels.push_back(d.label);
  }
  std::set<std::string> classes(labels.begin(), labels.end());
  out.classes.assign(classes.begin(), classes.end());
  for (const auto& l : labels)
    out.labels.push_back(static_cast<Label>(std::lower_bound(out.classes.begin(), out.classes.end(), l) -
                                            out.classes.begin()));
  return out;
}

// ---- metrics --------------------------------------------------------------------

double nmi(std::span<const Label> a, std::span<const Label> b) {
  if (a.empty() || a.size() != b.size()) throw std::invalid_argument("nmi: labelings must be non-empty and equal length");
  std::map<Label, std::size_t> ca, cb;
  std::map<std::pair<Label, Label>, std::size_t> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++ca[a[i]];
    ++cb[b[i]];
    ++joint[{a[i], b[i]}];
  }
  const auto values = [](const auto& m) {
    std::vector<std::size_t> v;
    for (const auto& kv : m) v.push_back(kv.second);
    return v;
  };
  const double ha = entropy(values(ca), a.size());
  const double hb = entropy(values(cb), a.size());
  const double hab = entropy(values(joint), a.size());
  if (ha == 0.0 && hb == 0.0) return 1.0;
  if (ha == 0.0 || hb == 0.0) return 0.0;
  const double mi = ha + hb - hab;
  return std::clamp(mi / ((ha + hb) / 2.0), 0.0, 1.0);
}

double coherence(std::span<const SparseVector> c1, std::span<const SparseVector> c2) {
  if (c1.empty() || c2.empty()) throw std::invalid_argument("coherence: centroid sets must be non-empty");
  std::vector<double> best1(c1.size(), -std::numeric_limits<double>::infinity());
  std::vector<double> best2(c2.size(), -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < c1.size(); ++i) {
    for (std::size_t j = 0; j < c2.size(); ++j) {
      const double d = dot(c1[i], c2[j]);
      best1[i] = std::max(best1[i], d);
      best2[j] = std::max(best2[j], d);
    }
  }
  const double s1 = std::accumulate(best1.begin(), best1.end(), 0.0);
  const double s2 = std::accumulate(best2.begin(), best2.end(), 0.0);
  return (s1 + s2) / static_cast<double>(c1.size() + c2.size());
}

// ---- reports --------------------------------------------------------------------

Summary summarize(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("summarize: no values");
  std::sort(values.begin(), values.end());
  const auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return {quantile(0.5), quantile(0.25), quantile(0.75)};
}

ConfigReport aggregate(std::string name, std::vector<RunRecord> runs) {
  ConfigReport r;
  r.name = std::move(name);
  std::vector<double> nmis, coh, secs;
  for (const auto& x : runs) {
    nmis.push_back(x.nmi);
    secs.push_back(x.seconds);
    if (x.coherence) coh.push_back(*x.coherence);
  }
  r.nmi = summarize(nmis);
  r.seconds = summarize(secs);
  if (!coh.empty()) r.coherence = summarize(coh);
  r.runs = std::move(runs);
  return r;
}

const ConfigReport* BenchReport::find(std::string_view name) const {
  for (const auto& c : configs)
    if (c.name == name) return &c;
  return nullptr;
}

std::string report_json(const BenchReport& report) {
  json j = {{"kind", report.kind}, {"documents", report.documents}, {"classes", report.classes}};
  j["configs"] = json::array();
  for (const auto& c : report.configs) {
    json cj = {{"name", c.name}, {"runs", c.runs.size()}, {"nmi", summary_json(c.nmi)},
               {"seconds", summary_json(c.seconds)}};
    cj["coherence"] = c.coherence ? summary_json(*c.coherence) : json(nullptr);
    j["configs"].push_back(std::move(cj));
  }
  return j.dump(2) + "\n";
}

std::string report_table(const BenchReport& report) {
  std::vector<std::array<std::string, 4>> rows = {{"config", "NMI median [q1, q3]", "coherence", "seconds"}};
  for (const auto& c : report.configs)
    rows.push_back({c.name, cell(c.nmi, 3), c.coherence ? cell(*c.coherence, 3) : "-", cell(c.seconds, 2)});
  std::array<std::size_t, 4> width{};
  for (const auto& r : rows)
    for (std::size_t i = 0; i < 4; ++i) width[i] = std::max(width[i], r[i].size());
  std::string out = report.kind + " benchmark: " + std::to_string(report.documents) + " documents, " +
                    std::to_string(report.classes) + " classes\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < 4; ++i) {
      out += r[i];
      if (i + 1 < 4) out += std::string(width[i] - r[i].size() + 2, ' ');
    }
    out += '\n';
  }
  return out;
}

std::string run_log_jsonl(const BenchReport& report) {
  std::string out;
  for (const auto& c : report.configs) {
    for (const auto& r : c.runs) {
      json j = {{"config", r.config}, {"run", r.run},       {"seed", r.seed},
                {"nmi", r.nmi},       {"seconds", r.seconds}, {"clusters", r.clusters}};
      j["coherence"] = r.coherence ? json(*r.coherence) : json(nullptr);
      out += j.dump() + "\n";
    }
  }
  return out;
}

// ---- benchmarks -----------------------------------------------------------------

BenchReport run_batch_bench(const VectorizedCorpus& corpus, const BatchBenchParams& params) {
  if (params.runs == 0 || params.k == 0) throw std::invalid_argument("run_batch_bench: runs and k must be >= 1");
  const auto items = corpus.pointers();
  BenchReport report{"batch", corpus.size(), corpus.classes.size(), {}};
  const std::array<std::pair<const char*, Metric>, 2> variants = {
      {{"skmeans++", Metric::cosine}, {"kmeans++", Metric::euclidean}}};
  for (std::size_t v = 0; v < variants.size(); ++v) {
    std::vector<RunRecord> runs;
    for (std::size_t r = 0; r < params.runs; ++r) {
      RunRecord rec;
      rec.config = variants[v].first;
      rec.run = r;
      rec.seed = mix_seed(params.seed, r);
      ClusterParams cp;
      cp.metric = variants[v].second;
      cp.max_iters = params.max_iters;
      const auto t0 = std::chrono::steady_clock::now();
      Rng rng(mix_seed(rec.seed, v));
      auto init = init_kpp(items, params.k, rng, cp.metric);
      const KMeansResult res = kmeans(items, std::move(init), cp);
      rec.seconds = seconds_since(t0);
      rec.nmi = nmi(corpus.labels, res.clustering.assignment);
      rec.clusters = res.clustering.chosen_k();
      runs.push_back(std::move(rec));
    }
    report.configs.push_back(aggregate(variants[v].first, std::move(runs)));
  }
  return report;
}

std::string stream_config_name(std::size_t max_clusters, double overlap) {
  return "dynamic-k" + std::to_string(max_clusters) + "-o" + std::to_string(std::lround(overlap * 100));
}

BenchReport run_stream_bench(const VectorizedCorpus& corpus, const StreamBenchParams& params) {
  if (params.batches < 2 || params.runs == 0)
    throw std::invalid_argument("run_stream_bench: need >= 2 batches and >= 1 run");
  // Windows per batch for each overlap; the batch size is a multiple of all.
  std::vector<std::size_t> steps;
  std::size_t common = 1;
  for (const double o : params.overlaps) {
    if (!(o >= 0.0 && o < 1.0)) throw std::invalid_argument("run_stream_bench: overlap must be in [0, 1)");
    const auto m = static_cast<std::size_t>(std::lround(1.0 / (1.0 - o)));
    steps.push_back(m);
    common = std::lcm(common, m);
  }
  const std::size_t batch = corpus.size() / params.batches / common * common;
  if (batch == 0) throw std::invalid_argument("run_stream_bench: corpus too small");
  const std::size_t last = (params.batches - 1) * batch;

  BenchReport report{"stream", corpus.size(), corpus.classes.size(), {}};

  std::vector<RunRecord> base_runs;
  for (std::size_t r = 0; r < params.runs; ++r) {
    RunRecord rec{"baseline", r, mix_seed(params.seed, r), 0.0, std::nullopt, 0.0, 0};
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::vector<SparseVector>> seq;
    Clustering final_batch;
    for (std::size_t b = 0; b < params.batches; ++b) {
      const auto items = slice(corpus, b * batch, (b + 1) * batch);
      const auto truth = label_slice(corpus, b * batch, (b + 1) * batch);
      ClusterParams cp;
      cp.max_iters = params.max_iters;
      Rng rng(mix_seed(rec.seed, b));
      auto init = init_kpp(items, distinct(truth), rng);
      final_batch = kmeans(items, std::move(init), cp).clustering;
      seq.push_back(final_batch.centroids);
    }
    rec.seconds = seconds_since(t0);
    rec.nmi = nmi(label_slice(corpus, last, last + batch), final_batch.assignment);
    rec.coherence = mean_coherence(seq);
    rec.clusters = final_batch.chosen_k();
    base_runs.push_back(std::move(rec));
  }
  report.configs.push_back(aggregate("baseline", std::move(base_runs)));

  for (const std::size_t kmax : params.max_clusters) {
    for (std::size_t o = 0; o < params.overlaps.size(); ++o) {
      const std::string name = stream_config_name(kmax, params.overlaps[o]);
      const std::size_t m = steps[o];
      const std::size_t stride = batch / m;
      std::vector<RunRecord> runs;
      for (std::size_t r = 0; r < params.runs; ++r) {
        RunRecord rec{name, r, mix_seed(params.seed, r), 0.0, std::nullopt, 0.0, 0};
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<std::vector<SparseVector>> seq;
        std::optional<Clustering> prev;
        const std::size_t windows = (params.batches - 1) * m + 1;
        for (std::size_t w = 0; w < windows; ++w) {
          const auto items = slice(corpus, w * stride, w * stride + batch);
          ClusterParams cp;
          cp.k_max = kmax;
          cp.restarts = params.restarts;
          cp.max_iters = params.max_iters;
          cp.rng_seed = mix_seed(rec.seed, w);
          prev = dynamic_cluster(items, prev ? &*prev : nullptr, cp);
          if (w % m == 0) seq.push_back(prev->centroids);
        }
        rec.seconds = seconds_since(t0);
        rec.nmi = nmi(label_slice(corpus, last, last + batch), prev->assignment);
        rec.coherence = mean_coherence(seq);
        rec.clusters = prev->chosen_k();
        runs.push_back(std::move(rec));
      }
      report.configs.push_back(aggregate(name, std::move(runs)));
    }
  }
  return report;
}

}  // namespace streamclust
