#pragma once

// Naive Bayes emotion recommender over topic-reduced or full-vocabulary
// features, with sentiment marginalisation and model persistence.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "emorec/corpus.hpp"
#include "emorec/error.hpp"
#include "emorec/topics.hpp"
#include "emorec/util.hpp"

namespace emorec {

enum class Variant { topic, full_vocab };

inline std::string_view variant_name(Variant v) { return v == Variant::topic ? "topic" : "full_vocab"; }

inline Variant parse_variant(std::string_view s) {
  if (s == "topic") return Variant::topic;
  if (s == "full_vocab" || s == "full-vocab") return Variant::full_vocab;
  throw Error(Errc::invalid_argument, "unknown model variant '" + std::string(s) + "'");
}

inline constexpr double kDefaultEpsilon = 1e-10;
inline constexpr int kModelFormatVersion = 1;

struct EmotionModel {
  Variant variant = Variant::topic;
  std::vector<std::string> emotions;  // sorted
  std::vector<double> priors;         // parallel to emotions
  // profiles[e][f]: p(topic f | e) or p(word f | e), each row on the simplex.
  std::vector<std::vector<double>> profiles;
  std::optional<TopicPartition> partition;  // topic variant only
  std::vector<std::string> features;        // full_vocab only, sorted
  PolarityMap polarity;
  double epsilon = kDefaultEpsilon;
  int format_version = kModelFormatVersion;
  // Training token counts, used for topic labels.
  std::map<std::string, std::int64_t> word_counts;
  // Tokenisation used for the training corpus; prediction reuses it.
  PreprocessConfig preprocess;

  std::size_t n_emotions() const { return emotions.size(); }
  std::size_t n_features() const { return profiles.empty() ? 0 : profiles.front().size(); }

  std::optional<std::size_t> emotion_index(const std::string& e) const {
    auto it = std::lower_bound(emotions.begin(), emotions.end(), e);
    if (it == emotions.end() || *it != e) return std::nullopt;
    return static_cast<std::size_t>(it - emotions.begin());
  }

  std::optional<std::size_t> feature_of(const std::string& word) const {
    if (variant == Variant::topic) {
      auto k = partition->topic_of(word);
      if (!k) return std::nullopt;
      return static_cast<std::size_t>(*k);
    }
    auto it = std::lower_bound(features.begin(), features.end(), word);
    if (it == features.end() || *it != word) return std::nullopt;
    return static_cast<std::size_t>(it - features.begin());
  }

  std::map<std::string, double> prior_map() const {
    std::map<std::string, double> m;
    for (std::size_t i = 0; i < emotions.size(); ++i) m[emotions[i]] = priors[i];
    return m;
  }

  std::vector<EmotionTopicProfile> topic_profiles() const {
    std::vector<EmotionTopicProfile> out;
    for (std::size_t i = 0; i < emotions.size(); ++i) out.push_back({emotions[i], profiles[i], 0});
    return out;
  }
};

// Raises exact zeros to epsilon and renormalises; epsilon == 0 leaves the
// profile untouched.
inline void smooth_profile(std::vector<double>& profile, double epsilon) {
  if (epsilon <= 0) return;
  bool touched = false;
  for (auto& v : profile) {
    if (v == 0.0) {
      v = epsilon;
      touched = true;
    }
  }
  if (!touched) return;
  double s = 0;
  for (double v : profile) s += v;
  for (auto& v : profile) v /= s;
}

// Tag-level maximum-likelihood emotion frequencies.
inline std::map<std::string, double> emotion_priors(const std::vector<Document>& docs) {
  std::map<std::string, double> counts;
  double total = 0;
  for (const auto& d : docs)
    for (const auto& e : d.emotions) {
      counts[e] += 1.0;
      total += 1.0;
    }
  for (auto& [e, c] : counts) c /= total;
  return counts;
}

inline EmotionModel train(const std::vector<Document>& docs, const std::optional<TopicPartition>& part,
                          const PolarityMap& pol, double epsilon, Variant variant) {
  if (docs.empty()) throw Error(Errc::empty_corpus, "cannot train on an empty document set");
  if (variant == Variant::topic && !part)
    throw Error(Errc::invalid_argument, "topic variant requires a topic partition");
  if (epsilon < 0 || epsilon >= 1) throw Error(Errc::invalid_argument, "epsilon must lie in [0, 1)");

  EmotionModel m;
  m.variant = variant;
  m.epsilon = epsilon;
  auto priors = emotion_priors(docs);
  for (const auto& [e, p] : priors) {
    pol.at(e);
    m.emotions.push_back(e);
    m.priors.push_back(p);
  }
  for (const auto& [e, p] : pol.entries())
    if (priors.count(e)) m.polarity.set(e, p);
  for (const auto& d : docs)
    for (const auto& [w, c] : d.bow) m.word_counts[w] += c;

  if (variant == Variant::topic) {
    m.partition = *part;
    validate_partition(*m.partition);
    for (const auto& prof : emotion_topic_profiles(docs, *m.partition)) m.profiles.push_back(prof.density);
  } else {
    for (const auto& [w, c] : m.word_counts) m.features.push_back(w);
    const std::size_t F = m.features.size();
    std::map<std::string, std::size_t> index;
    for (std::size_t f = 0; f < F; ++f) index.emplace(m.features[f], f);
    std::vector<std::vector<double>> counts(m.emotions.size(), std::vector<double>(F, 0.0));
    std::vector<double> totals(m.emotions.size(), 0.0);
    for (const auto& d : docs) {
      for (const auto& e : d.emotions) {
        auto ei = *m.emotion_index(e);
        for (const auto& [w, c] : d.bow) {
          counts[ei][index.at(w)] += static_cast<double>(c);
          totals[ei] += static_cast<double>(c);
        }
      }
    }
    for (std::size_t ei = 0; ei < counts.size(); ++ei) {
      for (auto& v : counts[ei]) v /= totals[ei];
      m.profiles.push_back(std::move(counts[ei]));
    }
  }
  for (auto& row : m.profiles) smooth_profile(row, epsilon);
  return m;
}

// ---------------------------------------------------------------------------
// Inference

inline double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw Error(Errc::invalid_argument, "log_sum_exp of an empty list");
  double hi = *std::max_element(values.begin(), values.end());
  if (std::isinf(hi)) return hi;  // all -inf, or a +inf term
  double s = 0;
  for (double v : values) s += std::exp(v - hi);
  return hi + std::log(s);
}

struct ScoredEmotion {
  std::string label;
  double probability = 0;
};

struct RankedPrediction {
  // Sorted by descending probability, label ascending on ties.
  std::vector<ScoredEmotion> ranking;
  double positive_posterior = 0;
  double negative_posterior = 0;
  std::int64_t modelled_tokens = 0;
  std::vector<std::string> dropped_words;

  double probability(const std::string& label) const {
    for (const auto& s : ranking)
      if (s.label == label) return s.probability;
    throw Error(Errc::unknown_emotion, "unknown emotion '" + label + "'");
  }
  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    out.reserve(ranking.size());
    for (const auto& s : ranking) out.push_back(s.label);
    return out;
  }
};

// Per-feature token counts of a bag of words under the model; words outside
// the model's domain are reported in *dropped.
inline std::vector<std::int64_t> feature_counts(const EmotionModel& model, const BagOfWords& bow,
                                                std::vector<std::string>* dropped = nullptr) {
  std::vector<std::int64_t> counts(model.n_features(), 0);
  for (const auto& [w, c] : bow) {
    if (c <= 0) continue;
    if (auto f = model.feature_of(w)) {
      counts[*f] += c;
    } else if (dropped) {
      dropped->push_back(w);
    }
  }
  return counts;
}

// log p(e) + sum_f n_f log p(f | e) for every emotion. Counts are aggregated
// per feature first, so swapping a word for another word of the same topic
// leaves these values bit-identical.
inline std::vector<double> log_numerators(const EmotionModel& model, std::span<const std::int64_t> counts) {
  std::vector<double> out(model.n_emotions());
  for (std::size_t e = 0; e < out.size(); ++e) {
    double s = std::log(model.priors[e]);
    const auto& prof = model.profiles[e];
    for (std::size_t f = 0; f < counts.size(); ++f) {
      if (counts[f] == 0) continue;
      s += static_cast<double>(counts[f]) * std::log(prof[f]);
    }
    out[e] = s;
  }
  return out;
}

inline RankedPrediction rank_distribution(const std::vector<std::string>& labels, std::span<const double> probs,
                                          const PolarityMap& pol) {
  RankedPrediction pred;
  pred.ranking.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) pred.ranking.push_back({labels[i], probs[i]});
  std::sort(pred.ranking.begin(), pred.ranking.end(), [](const ScoredEmotion& a, const ScoredEmotion& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    return a.label < b.label;
  });
  for (const auto& s : pred.ranking) {
    if (pol.is_positive(s.label))
      pred.positive_posterior += s.probability;
    else
      pred.negative_posterior += s.probability;
  }
  return pred;
}

inline RankedPrediction posterior(const EmotionModel& model, const BagOfWords& bow) {
  std::vector<std::string> dropped;
  auto counts = feature_counts(model, bow, &dropped);
  std::int64_t modelled = 0;
  for (auto c : counts) modelled += c;
  if (modelled == 0) throw Error(Errc::no_modelled_tokens, "no modelled tokens in the input");

  auto logs = log_numerators(model, counts);
  double norm = log_sum_exp(logs);
  if (!std::isfinite(norm))
    throw Error(Errc::zero_likelihood, "every emotion has zero likelihood for this input (epsilon = 0?)");
  std::vector<double> probs(logs.size());
  for (std::size_t e = 0; e < logs.size(); ++e) probs[e] = std::exp(logs[e] - norm);

  auto pred = rank_distribution(model.emotions, probs, model.polarity);
  pred.modelled_tokens = modelled;
  pred.dropped_words = std::move(dropped);
  return pred;
}

inline double sentiment_posterior(const RankedPrediction& pred, const PolarityMap& pol) {
  double p = 0;
  for (const auto& s : pred.ranking)
    if (pol.is_positive(s.label)) p += s.probability;
  return p;
}

// Ties go to positive.
inline Polarity classify_sentiment(double positive_posterior) {
  return positive_posterior >= 0.5 ? Polarity::positive : Polarity::negative;
}

inline Polarity classify_sentiment(const RankedPrediction& pred) { return classify_sentiment(pred.positive_posterior); }

inline Polarity classify_sentiment(const RankedPrediction& pred, const PolarityMap& pol) {
  return classify_sentiment(sentiment_posterior(pred, pol));
}

inline Polarity empirical_sentiment(const std::set<std::string>& emotions, const PolarityMap& pol) {
  std::size_t pos = 0, neg = 0;
  for (const auto& e : emotions) (pol.is_positive(e) ? pos : neg) += 1;
  return pos >= neg ? Polarity::positive : Polarity::negative;
}

inline Polarity empirical_sentiment(const Document& doc, const PolarityMap& pol) {
  return empirical_sentiment(doc.emotions, pol);
}

inline std::vector<ScoredEmotion> top_k(const RankedPrediction& pred, std::size_t k) {
  if (k < 1 || k > pred.ranking.size())
    throw Error(Errc::invalid_argument, "k must lie in [1, " + std::to_string(pred.ranking.size()) + "]");
  return {pred.ranking.begin(), pred.ranking.begin() + static_cast<std::ptrdiff_t>(k)};
}

// ---------------------------------------------------------------------------
// Persistence. nlohmann::json writes doubles in shortest round-trip form, so
// probabilities reload bit-exactly.

inline nlohmann::json model_to_json(const EmotionModel& m) {
  nlohmann::json j;
  j["format_version"] = m.format_version;
  j["variant"] = variant_name(m.variant);
  j["epsilon"] = m.epsilon;
  j["emotions"] = m.emotions;
  j["priors"] = nlohmann::json::object();
  j["profiles"] = nlohmann::json::object();
  for (std::size_t i = 0; i < m.emotions.size(); ++i) {
    j["priors"][m.emotions[i]] = m.priors[i];
    j["profiles"][m.emotions[i]] = m.profiles[i];
  }
  j["polarity"] = nlohmann::json::object();
  for (const auto& [e, p] : m.polarity.entries()) j["polarity"][e] = polarity_name(p);
  if (m.partition) {
    j["partition"]["name"] = m.partition->name;
    j["partition"]["n_topics"] = m.partition->n_topics;
    j["partition"]["assignment"] = m.partition->assignment;
    if (m.partition->reserved_topic) j["partition"]["reserved_topic"] = *m.partition->reserved_topic;
  }
  if (m.variant == Variant::full_vocab) j["features"] = m.features;
  j["word_counts"] = m.word_counts;
  j["preprocess"] = {{"lowercase", m.preprocess.lowercase},
                     {"keep_digits", m.preprocess.keep_digits},
                     {"min_count", m.preprocess.min_count},
                     {"stopwords", m.preprocess.stopwords}};
  return j;
}

inline EmotionModel model_from_json(const nlohmann::json& j) {
  try {
    EmotionModel m;
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kModelFormatVersion)
      throw Error(Errc::version_mismatch, "model format version " + std::to_string(m.format_version) +
                                              " is not supported (this build reads version " +
                                              std::to_string(kModelFormatVersion) + ")");
    m.variant = parse_variant(j.at("variant").get<std::string>());
    m.epsilon = j.at("epsilon").get<double>();
    m.emotions = j.at("emotions").get<std::vector<std::string>>();
    if (!std::is_sorted(m.emotions.begin(), m.emotions.end()))
      throw Error(Errc::parse_error, "emotion list is not sorted");
    for (const auto& e : m.emotions) {
      m.priors.push_back(j.at("priors").at(e).get<double>());
      m.profiles.push_back(j.at("profiles").at(e).get<std::vector<double>>());
    }
    for (const auto& [e, p] : j.at("polarity").items()) m.polarity.set(e, parse_polarity(p.get<std::string>()));
    m.polarity.require_all(m.emotions);
    if (m.variant == Variant::topic) {
      const auto& jp = j.at("partition");
      TopicPartition p;
      p.name = jp.at("name").get<std::string>();
      p.n_topics = jp.at("n_topics").get<int>();
      p.assignment = jp.at("assignment").get<std::map<std::string, TopicId>>();
      if (jp.contains("reserved_topic")) p.reserved_topic = jp.at("reserved_topic").get<TopicId>();
      validate_partition(p);
      m.partition = std::move(p);
    } else {
      m.features = j.at("features").get<std::vector<std::string>>();
    }
    if (j.contains("word_counts")) m.word_counts = j.at("word_counts").get<std::map<std::string, std::int64_t>>();
    if (j.contains("preprocess")) {
      const auto& jp = j.at("preprocess");
      m.preprocess.lowercase = jp.value("lowercase", true);
      m.preprocess.keep_digits = jp.value("keep_digits", false);
      m.preprocess.min_count = jp.value("min_count", std::int64_t{5});
      if (jp.contains("stopwords")) m.preprocess.stopwords = jp.at("stopwords").get<std::set<std::string>>();
    }
    for (const auto& row : m.profiles)
      if (row.size() != m.profiles.front().size()) throw Error(Errc::parse_error, "ragged profile matrix");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("malformed model: ") + e.what());
  }
}

inline void save_model(const EmotionModel& m, const std::string& path) {
  auto out = util::open_output(path);
  out << model_to_json(m).dump(1) << '\n';
  if (!out) throw Error(Errc::io_error, "failed writing '" + path + "'");
}

inline EmotionModel parse_model(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::parse_error, "model parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  return model_from_json(j);
}

inline EmotionModel load_model(const std::string& path) {
  try {
    return parse_model(util::read_file(path));
  } catch (const Error& e) {
    if (e.code() == Errc::io_error) throw;
    throw Error(e.code(), path + ": " + e.what());
  }
}

}  // namespace emorec
