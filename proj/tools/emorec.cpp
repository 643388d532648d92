// Command-line front end: train, predict, evaluate, report, serve.

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <functional>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "emorec/emorec.hpp"
#include "emorec/service.hpp"

namespace fs = std::filesystem;
using namespace emorec;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;
constexpr int kExitEmptyPrediction = 3;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::no_modelled_tokens:
    case Errc::zero_likelihood:
      return kExitEmptyPrediction;
    default:
      return kExitInput;
  }
}

struct GlobalOptions {
  std::uint64_t seed = 0;
  double epsilon = kDefaultEpsilon;
  std::string stopwords;
  std::string format = "text";
};

PreprocessConfig preprocess_config(const GlobalOptions& g, std::int64_t min_count, bool keep_digits = false) {
  PreprocessConfig cfg;
  cfg.min_count = min_count;
  cfg.keep_digits = keep_digits;
  cfg.stopwords = g.stopwords.empty() ? default_stopwords() : load_stopwords(g.stopwords);
  return cfg;
}

CorpusFormat format_for(const std::string& path, const std::string& declared) {
  if (declared == "jsonl") return CorpusFormat::jsonl;
  if (declared == "tsv") return CorpusFormat::tsv;
  return corpus_format_from_path(path);
}

// NAME=PATH, or PATH alone (name taken from the file stem).
std::pair<std::string, std::string> named_path(const std::string& spec) {
  auto eq = spec.find('=');
  if (eq == std::string::npos) return {fs::path(spec).stem().string(), spec};
  return {spec.substr(0, eq), spec.substr(eq + 1)};
}

void print_summary(std::ostream& out, const std::vector<RawDocument>& raws, const Corpus& corpus,
                   const PolarityMap& pol) {
  write_sentiment_summary(out, sentiment_summary(raws, pol));
  out << "documents\t" << corpus.documents.size() << " of " << raws.size() << " kept\n";
  out << "vocabulary\t" << corpus.vocabulary.size() << '\n';
  out << "emotions\t" << emotion_universe(corpus.documents).size() << '\n';
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  auto out = util::open_output(path.string());
  body(out);
}

// ---------------------------------------------------------------------------

struct TrainOptions {
  std::string corpus, corpus_format = "auto", polarity, partition, variant = "topic", out, save_partition;
  std::int64_t min_count = 5;
  int baseline_topics = 0;
  bool keep_digits = false;
};

int run_train(const GlobalOptions& g, const TrainOptions& o) {
  auto pol = load_polarity(o.polarity);
  auto raws = ingest(o.corpus, format_for(o.corpus, o.corpus_format));
  const auto prep = preprocess_config(g, o.min_count, o.keep_digits);
  auto corpus = build_corpus(raws, prep);
  const Variant variant = parse_variant(o.variant);

  std::optional<TopicPartition> part;
  if (variant == Variant::topic) {
    if (!o.partition.empty()) {
      part = load_partition(o.partition, corpus.vocabulary);
      if (part->n_unassigned > 0)
        std::cerr << "note: " << part->n_unassigned << " vocabulary word(s) missing from " << o.partition
                  << " were placed in reserved topic " << *part->reserved_topic << '\n';
    } else if (o.baseline_topics > 0) {
      part = baseline_partition(corpus.documents, corpus.vocabulary, o.baseline_topics, g.seed);
      std::cerr << "note: using " << kBaselinePartitionLabel << " with " << part->n_topics << " topics\n";
    } else {
      throw Error(Errc::invalid_argument, "topic variant needs --partition or --baseline-topics");
    }
    if (!o.save_partition.empty()) save_partition(o.save_partition, *part);
  }
  auto model = train(corpus.documents, part, pol, g.epsilon, variant);
  model.preprocess = prep;
  save_model(model, o.out);

  print_summary(std::cout, raws, corpus, pol);
  std::cout << "variant\t" << variant_name(model.variant) << '\n';
  if (part) std::cout << "topics\t" << part->n_topics << '\n';
  std::cout << "epsilon\t" << util::format_sig(model.epsilon, 6) << '\n';
  std::cout << "model\t" << o.out << '\n';
  return kExitOk;
}

struct PredictOptions {
  std::string model, text;
  bool has_text = false;
  std::size_t top_k = 3;
};

int run_predict(const GlobalOptions& g, const PredictOptions& o) {
  // requests are tokenised with the configuration stored in the model
  std::string text = o.text;
  if (!o.has_text) text.assign(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
  Predictor predictor(load_model(o.model));
  auto resp = predictor.predict({text, o.top_k});
  if (g.format == "json")
    std::cout << to_json(resp).dump(1) << '\n';
  else
    write_prediction_text(std::cout, resp);
  return kExitOk;
}

struct EvaluateOptions {
  std::string corpus, corpus_format = "auto", polarity, out_dir;
  std::vector<std::string> partitions, lexicons;
  std::size_t folds = 10, max_rank = 0;
  std::int64_t min_count = 5;
  int baseline_topics = 0;
  bool no_full_vocab = false;
  bool keep_digits = false;
};

int run_evaluate(const GlobalOptions& g, const EvaluateOptions& o) {
  if (o.folds < 2) throw Error(Errc::invalid_argument, "--folds must be >= 2");
  auto pol = load_polarity(o.polarity);
  auto raws = ingest(o.corpus, format_for(o.corpus, o.corpus_format));
  auto corpus = build_corpus(raws, preprocess_config(g, o.min_count, o.keep_digits));

  std::vector<NamedPartition> partitions;
  for (const auto& spec : o.partitions) {
    auto [name, path] = named_path(spec);
    partitions.push_back({name, load_partition(path, corpus.vocabulary)});
  }
  if (partitions.empty() && o.baseline_topics > 0)
    partitions.push_back({std::string("topic (") + std::string(kBaselinePartitionLabel) + ")",
                          baseline_partition(corpus.documents, corpus.vocabulary, o.baseline_topics, g.seed)});

  CvConfig cfg;
  cfg.folds = o.folds;
  cfg.seed = g.seed;
  cfg.epsilon = g.epsilon;
  cfg.full_vocab = !o.no_full_vocab;
  cfg.max_rank = o.max_rank;
  for (const auto& spec : o.lexicons) {
    auto [name, path] = named_path(spec);
    cfg.lexicons.push_back({name, load_lexicon(path)});
  }
  auto report = run_cv(corpus.documents, partitions, pol, cfg);
  write_report_files(report, o.out_dir);
  write_file(fs::path(o.out_dir) / "corpus_summary.tsv",
             [&](std::ostream& out) { write_sentiment_summary(out, sentiment_summary(raws, pol)); });

  write_binary_table(std::cout, report);
  std::cout << "report\t" << (fs::path(o.out_dir) / "report.json").string() << '\n';
  return kExitOk;
}

struct ReportOptions {
  std::string model, corpus, corpus_format = "auto", polarity, out_dir;
  std::size_t top_words = 4;
};

int run_report(const GlobalOptions&, const ReportOptions& o) {
  auto model = load_model(o.model);
  if (model.variant != Variant::topic) throw Error(Errc::invalid_argument, "report requires topic variant");
  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);

  auto table = topic_positivity_table(model, o.top_words);
  write_file(dir / "topic_positivity.tsv", [&](std::ostream& out) { write_topic_table(out, table); });
  write_file(dir / "emotion_profiles.tsv", [&](std::ostream& out) { write_emotion_profiles(out, model); });
  write_file(dir / "distances.tsv",
             [&](std::ostream& out) { write_distance_matrix(out, model_distance_matrix(model)); });

  if (!o.corpus.empty()) {
    auto pol = o.polarity.empty() ? model.polarity : load_polarity(o.polarity);
    auto raws = ingest(o.corpus, format_for(o.corpus, o.corpus_format));
    auto corpus = build_corpus(raws, model.preprocess);
    auto summary = sentiment_summary(raws, pol);
    auto activity = activity_report(raws);
    write_file(dir / "corpus_summary.tsv", [&](std::ostream& out) { write_sentiment_summary(out, summary); });
    write_file(dir / "rank_frequency.tsv",
               [&](std::ostream& out) { write_rank_frequency(out, rank_frequency(corpus.documents, pol)); });
    write_file(dir / "activity_month.tsv", [&](std::ostream& out) {
      out << "month\tcount\n";
      for (const auto& [m, c] : activity.by_month) out << m << '\t' << c << '\n';
    });
    write_file(dir / "activity_region.tsv", [&](std::ostream& out) {
      out << "region\tcount\n";
      for (const auto& [r, c] : activity.by_region) out << r << '\t' << c << '\n';
    });
  }
  if (model.partition && model.partition->name == kBaselinePartitionLabel)
    std::cout << "# topics from " << kBaselinePartitionLabel << '\n';
  write_topic_table(std::cout, table);
  return kExitOk;
}

struct ServeOptions {
  std::string model, bind = "127.0.0.1:8080";
  std::size_t max_bytes = 64 * 1024, top_k_cap = 50;
};

std::atomic<bool> g_stop{false};

int run_serve(const GlobalOptions&, const ServeOptions& o) {
  auto colon = o.bind.rfind(':');
  if (colon == std::string::npos) throw Error(Errc::invalid_argument, "--bind must be HOST:PORT");
  const std::string host = o.bind.substr(0, colon);
  const int port = static_cast<int>(util::parse_int(o.bind.substr(colon + 1)));

  ServiceConfig cfg;
  cfg.max_request_bytes = o.max_bytes;
  cfg.top_k_cap = o.top_k_cap;
  Predictor predictor(load_model(o.model), cfg);
  ServiceHandlers handlers(predictor);
  httplib::Server server;
  install_routes(server, handlers);

  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  std::thread watcher([&] {
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
  });
  std::cerr << "serving " << o.model << " on " << host << ':' << port << '\n';
  bool ok = server.listen(host, port);
  g_stop = true;
  watcher.join();
  if (!ok) throw Error(Errc::io_error, "cannot listen on " + o.bind);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emorec: context-specific emotion recommender and sentiment classifier"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Random seed")->envname("EMOREC_SEED");
  app.add_option("--epsilon", g.epsilon, "Smoothing constant for zero densities")->envname("EMOREC_EPSILON");
  app.add_option("--stopwords", g.stopwords, "Stopword file (one word per line)")->envname("EMOREC_STOPWORDS");
  app.add_option("--format", g.format, "Output format")
      ->check(CLI::IsMember({"text", "json"}))
      ->envname("EMOREC_FORMAT");

  TrainOptions to;
  auto* train_cmd = app.add_subcommand("train", "Train a model from a labelled corpus");
  train_cmd->add_option("--corpus", to.corpus, "Corpus file (.jsonl or .tsv)")->required();
  train_cmd->add_option("--corpus-format", to.corpus_format)->check(CLI::IsMember({"auto", "jsonl", "tsv"}));
  train_cmd->add_option("--polarity", to.polarity, "emotion<TAB>polarity file")->required();
  train_cmd->add_option("--partition", to.partition, "word<TAB>topic_id file");
  train_cmd->add_option("--baseline-topics", to.baseline_topics, "Infer a baseline partition with N topics");
  train_cmd->add_option("--save-partition", to.save_partition, "Write the partition used");
  train_cmd->add_option("--variant", to.variant)->check(CLI::IsMember({"topic", "full-vocab", "full_vocab"}));
  train_cmd->add_option("--min-count", to.min_count)->check(CLI::PositiveNumber);
  train_cmd->add_flag("--keep-digits", to.keep_digits, "Keep digits inside tokens");
  train_cmd->add_option("--out", to.out, "Model output path")->required();

  PredictOptions po;
  auto* predict_cmd = app.add_subcommand("predict", "Rank emotions for a text");
  predict_cmd->add_option("--model", po.model)->required();
  auto* text_opt = predict_cmd->add_option("--text", po.text, "Text to score (default: stdin)");
  predict_cmd->add_option("--top-k", po.top_k)->check(CLI::PositiveNumber);

  EvaluateOptions eo;
  auto* eval_cmd = app.add_subcommand("evaluate", "Cross-validate models and baselines");
  eval_cmd->add_option("--corpus", eo.corpus)->required();
  eval_cmd->add_option("--corpus-format", eo.corpus_format)->check(CLI::IsMember({"auto", "jsonl", "tsv"}));
  eval_cmd->add_option("--polarity", eo.polarity)->required();
  eval_cmd->add_option("--partition", eo.partitions, "NAME=PATH, repeatable; the first drives relevance");
  eval_cmd->add_option("--baseline-topics", eo.baseline_topics, "Baseline partition when none is given");
  eval_cmd->add_option("--lexicon", eo.lexicons, "NAME=PATH word<TAB>score lexicon, repeatable");
  eval_cmd->add_option("--folds", eo.folds);
  eval_cmd->add_option("--max-rank", eo.max_rank, "Deepest rank for curves (0: all)");
  eval_cmd->add_option("--min-count", eo.min_count)->check(CLI::PositiveNumber);
  eval_cmd->add_flag("--keep-digits", eo.keep_digits, "Keep digits inside tokens");
  eval_cmd->add_flag("--no-full-vocab", eo.no_full_vocab);
  eval_cmd->add_option("--out-dir", eo.out_dir)->required();

  ReportOptions ro;
  auto* report_cmd = app.add_subcommand("report", "Topic positivity, emotion profiles and distances");
  report_cmd->add_option("--model", ro.model)->required();
  report_cmd->add_option("--corpus", ro.corpus, "Corpus for descriptive tables");
  report_cmd->add_option("--corpus-format", ro.corpus_format)->check(CLI::IsMember({"auto", "jsonl", "tsv"}));
  report_cmd->add_option("--polarity", ro.polarity);
  report_cmd->add_option("--top-words", ro.top_words);
  report_cmd->add_option("--out-dir", ro.out_dir)->required();

  ServeOptions so;
  auto* serve_cmd = app.add_subcommand("serve", "Serve predictions over HTTP");
  serve_cmd->add_option("--model", so.model)->required();
  serve_cmd->add_option("--bind", so.bind, "HOST:PORT");
  serve_cmd->add_option("--max-bytes", so.max_bytes);
  serve_cmd->add_option("--top-k-cap", so.top_k_cap);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*train_cmd) return run_train(g, to);
    if (*predict_cmd) {
      po.has_text = text_opt->count() > 0;
      return run_predict(g, po);
    }
    if (*eval_cmd) return run_evaluate(g, eo);
    if (*report_cmd) return run_report(g, ro);
    if (*serve_cmd) return run_serve(g, so);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}
