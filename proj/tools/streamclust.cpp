// Command-line entry point: serve, replay, bench and build-idf.
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "streamclust/bench.hpp"
#include "streamclust/config.hpp"
#include "streamclust/server.hpp"
#include "streamclust/service.hpp"
#include "streamclust/textprep.hpp"

namespace sc = streamclust;
namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

sc::ServiceConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
  sc::ServiceConfig c = path.empty() ? sc::ServiceConfig{} : sc::ServiceConfig::load(path);
  if (seed) c.set("seed", std::to_string(*seed));
  c.validate();
  return c;
}

sc::CorpusFormat corpus_format(const std::string& name, const fs::path& corpus) {
  if (name == "newsgroups") return sc::CorpusFormat::newsgroups_dir;
  if (name == "jsonl") return sc::CorpusFormat::jsonl;
  return fs::is_directory(corpus) ? sc::CorpusFormat::newsgroups_dir : sc::CorpusFormat::jsonl;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

void run_serve(sc::ServiceConfig config, const std::string& record) {
  sc::Engine engine(std::move(config));
  std::ofstream log;
  if (!record.empty()) {
    log.open(record, std::ios::app);
    if (!log) throw std::runtime_error("cannot write " + record);
    engine.subscribe(sc::event_recorder(log));
  }
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "listening on " << engine.config().listen_addr << '\n';
  sc::serve(engine, g_stop);
}

std::vector<std::string> idf_texts(const fs::path& corpus, const std::string& format) {
  std::vector<std::string> texts;
  if (corpus_format(format, corpus) == sc::CorpusFormat::newsgroups_dir) {
    for (auto& d : sc::load_corpus(corpus, sc::CorpusFormat::newsgroups_dir).docs) texts.push_back(std::move(d.text));
    return texts;
  }
  // Ingest records or labeled records; only "text" is read.
  std::ifstream in(corpus);
  if (!in) throw std::runtime_error("cannot read " + corpus.string());
  std::string line;
  std::size_t skipped = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      texts.push_back(j.at("text").get<std::string>());
    } catch (const nlohmann::json::exception&) {
      ++skipped;
    }
  }
  if (skipped) std::cerr << "skipped " << skipped << " malformed lines\n";
  if (texts.empty()) throw std::runtime_error("no documents in " + corpus.string());
  return texts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming short-text topic clustering", "streamclust"};
  // --seed may appear before or after the subcommand.
  app.fallthrough();
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;
  app.add_option("--seed", seed, "Seed for every random choice");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the service");
  std::string serve_config, record;
  serve->add_option("--config", serve_config, "Config file (key = value lines)")->required()->check(CLI::ExistingFile);
  serve->add_option("--record", record, "Append every client event to this JSONL file");

  // replay
  auto* replay = app.add_subcommand("replay", "Replay a JSONL post file");
  std::string replay_input, replay_config, replay_record;
  double speed = 1.0;
  bool headless = false;
  replay->add_option("--input", replay_input, "JSONL ingest records")->required()->check(CLI::ExistingFile);
  replay->add_option("--speed", speed, "Time multiplier; 0 replays as fast as possible")
      ->required()
      ->check(CLI::NonNegativeNumber);
  replay->add_flag("--headless", headless, "Print per-update topic summaries instead of serving");
  replay->add_option("--config", replay_config, "Config file")->check(CLI::ExistingFile);
  replay->add_option("--record", replay_record, "Append every client event to this JSONL file");

  // bench
  auto* bench = app.add_subcommand("bench", "Clustering benchmarks on a labeled corpus");
  bench->require_subcommand(1);
  bench->fallthrough();
  std::string corpus, format = "auto", json_out, log_out;
  std::size_t runs = 5;
  const auto corpus_options = [&](CLI::App* sub) {
    sub->add_option("--corpus", corpus, "Newsgroups directory or labeled JSONL")->required()->check(CLI::ExistingPath);
    sub->add_option("--format", format, "Corpus format")->check(CLI::IsMember({"auto", "newsgroups", "jsonl"}));
    sub->add_option("--runs", runs, "Runs per configuration")->check(CLI::PositiveNumber);
    sub->add_option("--json", json_out, "Write the report as JSON");
    sub->add_option("--log", log_out, "Write per-run records as JSONL");
  };
  auto* batch = bench->add_subcommand("batch", "Spherical vs euclidean k-means++");
  corpus_options(batch);
  std::size_t k = 20;
  batch->add_option("--k", k, "Cluster count")->check(CLI::PositiveNumber);
  auto* stream = bench->add_subcommand("stream", "Dynamic clustering vs per-batch baseline");
  corpus_options(stream);
  std::optional<int> overlap, kmax;
  stream->add_option("--overlap", overlap, "Window overlap in percent")->check(CLI::IsMember({75, 50}));
  stream->add_option("--kmax", kmax, "Maximum cluster count")->check(CLI::IsMember({10, 20}));

  // build-idf
  auto* idf = app.add_subcommand("build-idf", "Count document frequencies over a reference corpus");
  std::string idf_corpus, idf_out, idf_format = "auto", stopwords;
  idf->add_option("--corpus", idf_corpus, "Newsgroups directory or JSONL with a text field")
      ->required()
      ->check(CLI::ExistingPath);
  idf->add_option("--out", idf_out, "Output file")->required();
  idf->add_option("--format", idf_format, "Corpus format")->check(CLI::IsMember({"auto", "newsgroups", "jsonl"}));
  idf->add_option("--stopwords", stopwords, "Stopword list (default: built-in English)")->check(CLI::ExistingFile);

  if (argc < 2) {
    std::cerr << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*serve) {
      run_serve(load_config(serve_config, seed), record);
    } else if (*replay) {
      sc::ServiceConfig config = load_config(replay_config, seed);
      config.ingest_speed = speed;
      if (headless) {
        std::ifstream in(replay_input);
        if (!in) throw std::runtime_error("cannot read " + replay_input);
        sc::Engine engine(std::move(config));
        std::ofstream log;
        if (!replay_record.empty()) {
          log.open(replay_record, std::ios::app);
          if (!log) throw std::runtime_error("cannot write " + replay_record);
          engine.subscribe(sc::event_recorder(log));
        }
        sc::run_headless_replay(in, engine, speed, std::cout);
        const auto s = engine.ingestor().stats();
        std::cout << "ingested " << s.lines << " accepted " << s.accepted << " malformed " << s.malformed
                  << " filtered " << s.filtered << " empty " << s.empty << '\n';
      } else {
        config.replay_path = replay_input;
        run_serve(std::move(config), replay_record);
      }
    } else if (*bench) {
      const auto loaded = sc::load_corpus(corpus, corpus_format(format, corpus));
      const auto vectors = sc::vectorize_corpus(loaded, sc::StopwordSet::english());
      sc::BenchReport report;
      if (*batch) {
        sc::BatchBenchParams p;
        p.k = k;
        p.runs = runs;
        if (seed) p.seed = *seed;
        report = sc::run_batch_bench(vectors, p);
      } else {
        sc::StreamBenchParams p;
        p.runs = runs;
        if (seed) p.seed = *seed;
        if (overlap) p.overlaps = {*overlap / 100.0};
        if (kmax) p.max_clusters = {static_cast<std::size_t>(*kmax)};
        report = sc::run_stream_bench(vectors, p);
      }
      std::cout << sc::report_table(report);
      if (!json_out.empty()) write_file(json_out, sc::report_json(report));
      if (!log_out.empty()) write_file(log_out, sc::run_log_jsonl(report));
    } else if (*idf) {
      const auto stop = stopwords.empty() ? sc::StopwordSet::english() : sc::StopwordSet::load(stopwords);
      const auto model = sc::build_idf_from_texts(idf_texts(idf_corpus, idf_format), stop);
      model.save(idf_out);
      std::cerr << "wrote " << model.token_count() << " tokens over " << model.reference_size() << " documents\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
