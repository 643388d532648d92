#pragma once

// k-fold cross-validation of the recommender variants against the MLE and
// uniform baselines and lexicon sentiment classifiers.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "emorec/corpus.hpp"
#include "emorec/error.hpp"
#include "emorec/metrics.hpp"
#include "emorec/model.hpp"
#include "emorec/topics.hpp"
#include "emorec/util.hpp"

namespace emorec {

struct FoldAssignment {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> fold;  // parallel to the input ids

  std::vector<std::size_t> members(std::size_t f) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold.size(); ++i)
      if (fold[i] == f) out.push_back(i);
    return out;
  }
};

// Seeded shuffle, then round-robin.
inline FoldAssignment kfold_split(std::span<const std::string> ids, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(Errc::invalid_argument, "fold count must be >= 2");
  if (k > ids.size())
    throw Error(Errc::invalid_argument,
                "fold count " + std::to_string(k) + " exceeds document count " + std::to_string(ids.size()));
  FoldAssignment fa{k, seed, std::vector<std::size_t>(ids.size())};
  util::Rng rng(seed);
  auto order = rng.permutation(ids.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) fa.fold[order[pos]] = pos % k;
  return fa;
}

// ---------------------------------------------------------------------------
// Baselines

inline RankedPrediction mle_baseline(const std::vector<Document>& train_docs, const PolarityMap& pol) {
  if (train_docs.empty()) throw Error(Errc::empty_corpus, "MLE baseline needs training documents");
  auto priors = emotion_priors(train_docs);
  std::vector<std::string> labels;
  std::vector<double> probs;
  for (const auto& [e, p] : priors) {
    labels.push_back(e);
    probs.push_back(p);
  }
  return rank_distribution(labels, probs, pol);
}

// Uniform probabilities in a random order fixed by (seed, query_index).
inline RankedPrediction uniform_baseline(const std::vector<std::string>& universe, std::uint64_t seed,
                                         std::uint64_t query_index, const PolarityMap& pol) {
  if (universe.empty()) throw Error(Errc::invalid_argument, "uniform baseline needs a non-empty emotion universe");
  std::vector<std::string> labels(universe);
  std::sort(labels.begin(), labels.end());
  util::Rng rng(util::mix_seed(seed, query_index));
  rng.shuffle(labels);
  RankedPrediction pred;
  const double p = 1.0 / static_cast<double>(labels.size());
  for (auto& l : labels) {
    (pol.is_positive(l) ? pred.positive_posterior : pred.negative_posterior) += p;
    pred.ranking.push_back({std::move(l), p});
  }
  return pred;
}

// ---------------------------------------------------------------------------
// Lexicon classifier

using Lexicon = std::map<std::string, double>;

inline Lexicon read_lexicon(std::istream& in) {
  Lexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    util::strip_cr(line);
    if (util::trim(line).empty() || line[0] == '#') continue;
    auto cols = util::split(line, '\t');
    if (cols.size() != 2)
      throw Error(Errc::parse_error, "line " + std::to_string(lineno) + ": expected word<TAB>score");
    if (lineno == 1 && cols[0] == "word" && cols[1] == "score") continue;
    try {
      lex[cols[0]] = util::parse_double(cols[1]);
    } catch (const Error& e) {
      throw Error(Errc::parse_error, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return lex;
}

inline Lexicon load_lexicon(const std::string& path) {
  auto in = util::open_input(path);
  try {
    auto lex = read_lexicon(in);
    if (lex.empty()) throw Error(Errc::parse_error, "lexicon is empty");
    return lex;
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

// Mean score over tokens found in the lexicon; a non-negative mean (or no
// hits at all) is positive.
inline Polarity lexicon_classify(std::span<const std::string> tokens, const Lexicon& lexicon) {
  double sum = 0;
  std::size_t hits = 0;
  for (const auto& t : tokens) {
    if (auto it = lexicon.find(t); it != lexicon.end()) {
      sum += it->second;
      ++hits;
    }
  }
  if (hits == 0) return Polarity::positive;
  return sum / static_cast<double>(hits) >= 0 ? Polarity::positive : Polarity::negative;
}

inline Polarity lexicon_classify(const BagOfWords& bow, const Lexicon& lexicon) {
  double sum = 0;
  std::int64_t hits = 0;
  for (const auto& [w, c] : bow) {
    if (auto it = lexicon.find(w); it != lexicon.end()) {
      sum += it->second * static_cast<double>(c);
      hits += c;
    }
  }
  if (hits == 0) return Polarity::positive;
  return sum / static_cast<double>(hits) >= 0 ? Polarity::positive : Polarity::negative;
}

// ---------------------------------------------------------------------------
// Cross-validation

struct NamedPartition {
  std::string name;
  TopicPartition partition;
};

struct NamedLexicon {
  std::string name;
  Lexicon lexicon;
};

struct CvConfig {
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  double epsilon = kDefaultEpsilon;
  bool full_vocab = true;
  bool baselines = true;
  // Deepest rank for the Q/nDCG/recall curves; 0 means the whole emotion
  // universe (capped by the smallest training-fold universe).
  std::size_t max_rank = 0;
  std::vector<NamedLexicon> lexicons;
  bool parallel = true;
};

inline constexpr std::string_view kFullVocabModel = "full_vocab";
inline constexpr std::string_view kMleModel = "mle_baseline";
inline constexpr std::string_view kUniformModel = "uniform_baseline";

struct ModelMetrics {
  bool graded = false;           // produced rankings
  std::vector<double> q_measure;  // index r-1
  std::vector<double> ndcg;
  std::vector<double> recall_at_k;
  std::vector<double> interpolated_precision;  // recall grid 0.00 .. 1.00
  BinaryMetrics binary;
  std::size_t queries = 0;    // scored ranking queries
  std::size_t fallbacks = 0;  // test documents answered with the prior
};

struct FoldReport {
  std::size_t fold = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::size_t universe_size = 0;
  std::size_t skipped_queries = 0;  // test documents whose labels are unseen in training
  std::map<std::string, ModelMetrics> models;
};

struct MetricReport {
  std::uint64_t seed = 0;
  std::size_t folds = 0;
  double epsilon = 0;
  std::size_t max_rank = 0;
  std::size_t documents = 0;
  std::vector<std::string> partitions;
  std::string relevance_partition;
  std::vector<std::string> models;  // report order
  std::vector<FoldReport> per_fold;
  std::map<std::string, ModelMetrics> mean;
};

namespace detail {

inline void accumulate(std::vector<double>& into, const std::vector<double>& v) {
  if (into.empty()) into.assign(v.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) into[i] += v[i];
}

inline void scale(std::vector<double>& v, double s) {
  for (auto& x : v) x *= s;
}

class RankingAccumulator {
 public:
  explicit RankingAccumulator(std::size_t depth) : depth_(depth) {
    m_.graded = true;
    m_.q_measure.assign(depth, 0.0);
    m_.ndcg.assign(depth, 0.0);
    m_.recall_at_k.assign(depth, 0.0);
    m_.interpolated_precision.assign(kRecallGridPoints, 0.0);
  }

  void add(const std::vector<std::string>& ranking, const std::set<std::string>& labels,
           const RelevanceContext& ctx, const std::vector<double>& ideal) {
    auto gains = ranking_gains(ranking, labels, ctx);
    Query q{ranking, labels};
    for (std::size_t r = 1; r <= depth_; ++r) {
      m_.q_measure[r - 1] += q_measure(gains, ideal, r);
      m_.ndcg[r - 1] += ndcg(gains, ideal, r);
      m_.recall_at_k[r - 1] += recall_at_k(q, r);
    }
    accumulate(m_.interpolated_precision, interpolated_precision(q));
    ++m_.queries;
  }

  ModelMetrics finish() {
    if (m_.queries > 0) {
      double s = 1.0 / static_cast<double>(m_.queries);
      scale(m_.q_measure, s);
      scale(m_.ndcg, s);
      scale(m_.recall_at_k, s);
      scale(m_.interpolated_precision, s);
    }
    return m_;
  }

  ModelMetrics& metrics() { return m_; }

 private:
  std::size_t depth_;
  ModelMetrics m_;
};

}  // namespace detail

inline std::vector<std::string> cv_model_names(const std::vector<NamedPartition>& partitions, const CvConfig& cfg) {
  std::vector<std::string> names;
  for (const auto& p : partitions) names.push_back(p.name);
  if (cfg.full_vocab) names.emplace_back(kFullVocabModel);
  if (cfg.baselines) {
    names.emplace_back(kMleModel);
    names.emplace_back(kUniformModel);
  }
  for (const auto& l : cfg.lexicons) names.push_back("lexicon:" + l.name);
  return names;
}

inline FoldReport evaluate_fold(const std::vector<Document>& docs, const FoldAssignment& fa, std::size_t fold,
                                const std::vector<NamedPartition>& partitions, const PolarityMap& pol,
                                const CvConfig& cfg, std::size_t depth) {
  std::vector<Document> train_docs, test_docs;
  std::vector<std::size_t> test_index;  // global document index, for the uniform baseline stream
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (fa.fold[i] == fold) {
      test_docs.push_back(docs[i]);
      test_index.push_back(i);
    } else {
      train_docs.push_back(docs[i]);
    }
  }
  FoldReport rep;
  rep.fold = fold;
  rep.train_size = train_docs.size();
  rep.test_size = test_docs.size();

  RelevanceContext ctx(emotion_topic_profiles(train_docs, partitions.front().partition), pol);
  const auto& universe = ctx.emotions();
  rep.universe_size = universe.size();

  // Ranking models in report order.
  std::vector<std::pair<std::string, EmotionModel>> models;
  for (const auto& p : partitions)
    models.emplace_back(p.name, train(train_docs, p.partition, pol, cfg.epsilon, Variant::topic));
  if (cfg.full_vocab)
    models.emplace_back(std::string(kFullVocabModel),
                        train(train_docs, std::nullopt, pol, cfg.epsilon, Variant::full_vocab));
  const auto prior_prediction = mle_baseline(train_docs, pol);

  std::map<std::string, detail::RankingAccumulator> acc;
  std::map<std::string, std::vector<Polarity>> sentiment;
  auto touch = [&](const std::string& name) -> detail::RankingAccumulator& {
    return acc.try_emplace(name, depth).first->second;
  };
  std::vector<Polarity> truths;

  for (std::size_t t = 0; t < test_docs.size(); ++t) {
    const auto& doc = test_docs[t];
    truths.push_back(empirical_sentiment(doc, pol));

    std::set<std::string> labels;
    for (const auto& e : doc.emotions)
      if (ctx.contains(e)) labels.insert(e);
    const bool scored = !labels.empty();
    if (!scored) ++rep.skipped_queries;
    const auto ideal = scored ? ideal_gains(labels, ctx) : std::vector<double>{};

    auto record = [&](const std::string& name, const RankedPrediction& pred) {
      auto& a = touch(name);
      if (scored) a.add(pred.labels(), labels, ctx, ideal);
      sentiment[name].push_back(classify_sentiment(pred));
    };

    for (const auto& [name, model] : models) {
      try {
        record(name, posterior(model, doc.bow));
      } catch (const Error& e) {
        if (e.code() != Errc::no_modelled_tokens && e.code() != Errc::zero_likelihood) throw;
        ++touch(name).metrics().fallbacks;
        record(name, prior_prediction);
      }
    }
    if (cfg.baselines) {
      record(std::string(kMleModel), prior_prediction);
      record(std::string(kUniformModel), uniform_baseline(universe, cfg.seed, test_index[t], pol));
    }
    for (const auto& l : cfg.lexicons) sentiment["lexicon:" + l.name].push_back(lexicon_classify(doc.bow, l.lexicon));
  }

  for (auto& [name, a] : acc) rep.models[name] = a.finish();
  for (const auto& [name, preds] : sentiment) rep.models[name].binary = binary_metrics(preds, truths);
  return rep;
}

inline MetricReport run_cv(const std::vector<Document>& docs, const std::vector<NamedPartition>& partitions,
                           const PolarityMap& pol, const CvConfig& cfg) {
  if (partitions.empty())
    throw Error(Errc::invalid_argument, "cross-validation needs at least one topic partition (used for relevance)");
  if (docs.size() < cfg.folds)
    throw Error(Errc::invalid_argument, "insufficient data: " + std::to_string(docs.size()) + " documents for " +
                                            std::to_string(cfg.folds) + " folds");
  std::set<std::string> names;
  for (const auto& p : partitions) {
    validate_partition(p.partition);
    if (!names.insert(p.name).second) throw Error(Errc::invalid_argument, "duplicate partition name '" + p.name + "'");
  }
  for (const auto& d : docs) pol.require_all(d.emotions);

  std::vector<std::string> ids;
  for (const auto& d : docs) ids.push_back(d.id);
  auto fa = kfold_split(ids, cfg.folds, cfg.seed);

  // Curve depth: bounded by the smallest training-fold emotion universe.
  std::size_t depth = cfg.max_rank == 0 ? SIZE_MAX : cfg.max_rank;
  for (std::size_t f = 0; f < cfg.folds; ++f) {
    std::set<std::string> universe;
    for (std::size_t i = 0; i < docs.size(); ++i)
      if (fa.fold[i] != f) universe.insert(docs[i].emotions.begin(), docs[i].emotions.end());
    depth = std::min(depth, universe.size());
  }
  if (depth == 0) throw Error(Errc::invalid_argument, "a training fold has no emotions");

  MetricReport rep;
  rep.seed = cfg.seed;
  rep.folds = cfg.folds;
  rep.epsilon = cfg.epsilon;
  rep.max_rank = depth;
  rep.documents = docs.size();
  for (const auto& p : partitions) rep.partitions.push_back(p.name);
  rep.relevance_partition = partitions.front().name;
  rep.models = cv_model_names(partitions, cfg);

  rep.per_fold.resize(cfg.folds);
  if (cfg.parallel) {
    std::vector<std::future<FoldReport>> jobs;
    for (std::size_t f = 0; f < cfg.folds; ++f)
      jobs.push_back(std::async(std::launch::async, [&, f] {
        return evaluate_fold(docs, fa, f, partitions, pol, cfg, depth);
      }));
    for (std::size_t f = 0; f < cfg.folds; ++f) rep.per_fold[f] = jobs[f].get();
  } else {
    for (std::size_t f = 0; f < cfg.folds; ++f) rep.per_fold[f] = evaluate_fold(docs, fa, f, partitions, pol, cfg, depth);
  }

  // Macro averages over folds, reduced in fold order.
  const double inv = 1.0 / static_cast<double>(cfg.folds);
  for (const auto& name : rep.models) {
    ModelMetrics m;
    for (const auto& fr : rep.per_fold) {
      const auto& x = fr.models.at(name);
      m.graded = x.graded;
      if (x.graded) {
        detail::accumulate(m.q_measure, x.q_measure);
        detail::accumulate(m.ndcg, x.ndcg);
        detail::accumulate(m.recall_at_k, x.recall_at_k);
        detail::accumulate(m.interpolated_precision, x.interpolated_precision);
      }
      m.binary.accuracy += x.binary.accuracy;
      m.binary.balanced_accuracy += x.binary.balanced_accuracy;
      m.binary.f1 += x.binary.f1;
      m.binary.precision += x.binary.precision;
      m.binary.recall += x.binary.recall;
      m.queries += x.queries;
      m.fallbacks += x.fallbacks;
    }
    detail::scale(m.q_measure, inv);
    detail::scale(m.ndcg, inv);
    detail::scale(m.recall_at_k, inv);
    detail::scale(m.interpolated_precision, inv);
    m.binary.accuracy *= inv;
    m.binary.balanced_accuracy *= inv;
    m.binary.f1 *= inv;
    m.binary.precision *= inv;
    m.binary.recall *= inv;
    rep.mean[name] = std::move(m);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Report output

inline constexpr int kReportSchemaVersion = 1;

inline nlohmann::json to_json(const BinaryMetrics& b) {
  return {{"accuracy", b.accuracy},
          {"balanced_accuracy", b.balanced_accuracy},
          {"f1", b.f1},
          {"precision", b.precision},
          {"recall", b.recall}};
}

inline nlohmann::json to_json(const ModelMetrics& m) {
  nlohmann::json j;
  j["binary"] = to_json(m.binary);
  if (m.graded) {
    j["q_measure"] = m.q_measure;
    j["ndcg"] = m.ndcg;
    j["recall_at_k"] = m.recall_at_k;
    j["interpolated_precision"] = m.interpolated_precision;
    j["queries"] = m.queries;
    j["fallbacks"] = m.fallbacks;
  }
  return j;
}

inline nlohmann::json report_to_json(const MetricReport& r) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["config"] = {{"seed", r.seed},
                 {"folds", r.folds},
                 {"epsilon", r.epsilon},
                 {"max_rank", r.max_rank},
                 {"documents", r.documents},
                 {"partitions", r.partitions},
                 {"relevance_partition", r.relevance_partition},
                 {"models", r.models}};
  j["per_fold"] = nlohmann::json::array();
  for (const auto& f : r.per_fold) {
    nlohmann::json jf{{"fold", f.fold},
                      {"train_size", f.train_size},
                      {"test_size", f.test_size},
                      {"universe_size", f.universe_size},
                      {"skipped_queries", f.skipped_queries}};
    for (const auto& [name, m] : f.models) jf["models"][name] = to_json(m);
    j["per_fold"].push_back(std::move(jf));
  }
  for (const auto& [name, m] : r.mean) j["mean"][name] = to_json(m);
  return j;
}

// metric<TAB>x<TAB>value<TAB>fold rows; the fold column is "mean" for the
// macro averages. Metric names are prefixed with the model name.
inline void write_curves(std::ostream& out, const MetricReport& r) {
  out << "metric\tx\tvalue\tfold\n";
  auto emit = [&](const std::string& model, const ModelMetrics& m, const std::string& fold) {
    if (!m.graded) return;
    auto rows = [&](const char* metric, const std::vector<double>& v, bool grid) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        std::string x = grid ? util::format_sig(static_cast<double>(i) / 100.0, 3) : std::to_string(i + 1);
        out << model << '/' << metric << '\t' << x << '\t' << util::format_sig(v[i], 17) << '\t' << fold << '\n';
      }
    };
    rows("q_measure", m.q_measure, false);
    rows("ndcg", m.ndcg, false);
    rows("recall_at_k", m.recall_at_k, false);
    rows("interpolated_precision", m.interpolated_precision, true);
  };
  for (const auto& name : r.models) {
    for (const auto& f : r.per_fold) emit(name, f.models.at(name), std::to_string(f.fold));
    emit(name, r.mean.at(name), "mean");
  }
}

// Model / Accuracy / Balanced accuracy / F1 / Precision / Recall, macro
// averaged over folds.
inline void write_binary_table(std::ostream& out, const MetricReport& r) {
  out << "model\taccuracy\tbalanced_accuracy\tf1\tprecision\trecall\n";
  for (const auto& name : r.models) {
    const auto& b = r.mean.at(name).binary;
    out << name << '\t' << util::format_sig(b.accuracy, 6) << '\t' << util::format_sig(b.balanced_accuracy, 6) << '\t'
        << util::format_sig(b.f1, 6) << '\t' << util::format_sig(b.precision, 6) << '\t'
        << util::format_sig(b.recall, 6) << '\n';
  }
}

inline void write_report_files(const MetricReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = util::open_output((dir / "report.json").string());
    out << report_to_json(r).dump(1) << '\n';
  }
  {
    auto out = util::open_output((dir / "curves.tsv").string());
    write_curves(out, r);
  }
  {
    auto out = util::open_output((dir / "binary_metrics.tsv").string());
    write_binary_table(out, r);
  }
}

}  // namespace emorec
