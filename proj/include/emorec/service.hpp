#pragma once

// Prediction and reporting surface shared by the command-line tool and the
// HTTP service, plus the HTTP route table.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "emorec/corpus.hpp"
#include "emorec/error.hpp"
#include "emorec/model.hpp"
#include "emorec/topics.hpp"
#include "emorec/util.hpp"

namespace emorec {

inline constexpr int kApiSchemaVersion = 1;

struct PredictRequest {
  std::string text;
  std::size_t top_k = 3;
};

struct EmotionRow {
  std::string label;
  double prior = 0;
  double posterior = 0;
};

struct TopicAttribution {
  TopicId topic = 0;
  std::vector<std::string> top_words;
  double density = 0;
};

struct PredictResponse {
  double positive_posterior = 0;
  std::vector<EmotionRow> emotions;
  std::vector<TopicAttribution> topic_attribution;
  std::vector<std::string> warnings;
};

struct TopicRow {
  TopicId topic = 0;
  std::vector<std::string> top_words;
  double positive = 0;
  double negative = 0;
  std::optional<double> positivity;  // nullopt: both likelihoods zero
};

// Topic id -> words ordered by descending training count, then label.
inline std::vector<std::vector<std::string>> ranked_topic_words(const EmotionModel& model) {
  std::vector<std::vector<std::string>> words = model.partition->topic_words();
  for (auto& ws : words) {
    std::stable_sort(ws.begin(), ws.end(), [&](const std::string& a, const std::string& b) {
      auto ca = model.word_counts.count(a) ? model.word_counts.at(a) : 0;
      auto cb = model.word_counts.count(b) ? model.word_counts.at(b) : 0;
      return ca > cb;
    });
  }
  return words;
}

// Positive and negative topic likelihoods and positivity for every topic,
// sorted by ascending positivity (undefined last, then topic id).
inline std::vector<TopicRow> topic_positivity_table(const EmotionModel& model, std::size_t n_words = 4) {
  if (model.variant != Variant::topic) throw Error(Errc::invalid_argument, "report requires topic variant");
  auto profiles = model.topic_profiles();
  auto priors = model.prior_map();
  auto pos = sentiment_topic_density(profiles, priors, Polarity::positive, model.polarity);
  auto neg = sentiment_topic_density(profiles, priors, Polarity::negative, model.polarity);
  auto words = ranked_topic_words(model);
  std::vector<TopicRow> rows;
  for (std::size_t k = 0; k < pos.size(); ++k) {
    TopicRow r;
    r.topic = static_cast<TopicId>(k);
    r.positive = pos[k];
    r.negative = neg[k];
    r.positivity = topic_positivity(k, pos, neg);
    const auto& ws = words[k];
    r.top_words.assign(ws.begin(), ws.begin() + static_cast<std::ptrdiff_t>(std::min(n_words, ws.size())));
    rows.push_back(std::move(r));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const TopicRow& a, const TopicRow& b) {
    if (a.positivity.has_value() != b.positivity.has_value()) return a.positivity.has_value();
    if (!a.positivity) return false;
    return *a.positivity < *b.positivity;
  });
  return rows;
}

inline std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += v[i];
  }
  return s;
}

// Topic / Positive / Negative / Positivity.
inline void write_topic_table(std::ostream& out, const std::vector<TopicRow>& rows) {
  out << "topic\twords\tpositive\tnegative\tpositivity\n";
  for (const auto& r : rows) {
    out << r.topic << '\t' << join(r.top_words, ", ") << '\t' << util::format_sig(r.positive, 10) << '\t'
        << util::format_sig(r.negative, 10) << '\t'
        << (r.positivity ? util::format_sig(*r.positivity, 10) : std::string("undefined")) << '\n';
  }
}

inline void write_emotion_profiles(std::ostream& out, const EmotionModel& model) {
  out << "emotion\tprior\tpolarity";
  for (std::size_t k = 0; k < model.n_features(); ++k) out << "\ttopic_" << k;
  out << '\n';
  for (std::size_t e = 0; e < model.n_emotions(); ++e) {
    out << model.emotions[e] << '\t' << util::format_sig(model.priors[e], 17) << '\t'
        << polarity_name(model.polarity.at(model.emotions[e]));
    for (double v : model.profiles[e]) out << '\t' << util::format_sig(v, 17);
    out << '\n';
  }
}

inline DistanceMatrix model_distance_matrix(const EmotionModel& model) {
  if (model.variant != Variant::topic) throw Error(Errc::invalid_argument, "report requires topic variant");
  return distance_matrix(model.topic_profiles());
}

// ---------------------------------------------------------------------------

struct ServiceConfig {
  std::size_t max_request_bytes = 64 * 1024;
  std::size_t top_k_cap = 50;
  std::size_t attribution_words = 10;
};

// The one prediction path behind both the CLI and the HTTP service.
class Predictor {
 public:
  // Tokenises requests the way the model's training corpus was tokenised.
  explicit Predictor(EmotionModel model, ServiceConfig cfg = {}) : Predictor(model, model.preprocess, cfg) {}

  Predictor(EmotionModel model, PreprocessConfig preprocess, ServiceConfig cfg = {})
      : model_(std::move(model)), preprocess_(std::move(preprocess)), cfg_(cfg) {
    if (model_.variant == Variant::topic) topic_words_ = ranked_topic_words(model_);
  }

  const EmotionModel& model() const { return model_; }
  const ServiceConfig& config() const { return cfg_; }

  PredictResponse predict(const PredictRequest& req) const {
    if (req.top_k < 1) throw Error(Errc::invalid_argument, "top_k must be >= 1");
    if (req.top_k > cfg_.top_k_cap)
      throw Error(Errc::invalid_argument, "top_k exceeds the cap of " + std::to_string(cfg_.top_k_cap));
    auto bow = to_bag(preprocess(req.text, preprocess_));
    auto pred = posterior(model_, bow);

    PredictResponse resp;
    resp.positive_posterior = pred.positive_posterior;
    const std::size_t k = std::min(req.top_k, pred.ranking.size());
    for (const auto& s : top_k(pred, k))
      resp.emotions.push_back({s.label, model_.priors[*model_.emotion_index(s.label)], s.probability});

    if (model_.variant == Variant::topic) {
      auto counts = topic_counts(bow, *model_.partition);
      double total = 0;
      for (auto c : counts) total += static_cast<double>(c);
      for (std::size_t t = 0; t < counts.size(); ++t) {
        if (counts[t] == 0) continue;
        const auto& ws = topic_words_[t];
        TopicAttribution a{static_cast<TopicId>(t), {}, static_cast<double>(counts[t]) / total};
        a.top_words.assign(ws.begin(),
                           ws.begin() + static_cast<std::ptrdiff_t>(std::min(cfg_.attribution_words, ws.size())));
        resp.topic_attribution.push_back(std::move(a));
      }
      std::stable_sort(resp.topic_attribution.begin(), resp.topic_attribution.end(),
                       [](const auto& a, const auto& b) { return a.density > b.density; });
    }
    if (!pred.dropped_words.empty())
      resp.warnings.push_back("dropped " + std::to_string(pred.dropped_words.size()) +
                              " out-of-vocabulary word(s): " + join(pred.dropped_words, ", "));
    return resp;
  }

 private:
  EmotionModel model_;
  PreprocessConfig preprocess_;
  ServiceConfig cfg_;
  std::vector<std::vector<std::string>> topic_words_;
};

inline nlohmann::json to_json(const PredictResponse& r) {
  nlohmann::json j;
  j["schema_version"] = kApiSchemaVersion;
  j["positive_posterior"] = r.positive_posterior;
  j["emotions"] = nlohmann::json::array();
  for (const auto& e : r.emotions)
    j["emotions"].push_back({{"label", e.label}, {"prior", e.prior}, {"posterior", e.posterior}});
  j["topic_attribution"] = nlohmann::json::array();
  for (const auto& a : r.topic_attribution)
    j["topic_attribution"].push_back({{"topic", a.topic}, {"top_words", a.top_words}, {"density", a.density}});
  j["warnings"] = r.warnings;
  return j;
}

inline void write_prediction_text(std::ostream& out, const PredictResponse& r) {
  out << "positive sentiment posterior\t" << util::format_sig(r.positive_posterior, 6) << '\n';
  out << "emotion\tprior\tposterior\n";
  for (const auto& e : r.emotions)
    out << e.label << '\t' << util::format_sig(e.prior, 6) << '\t' << util::format_sig(e.posterior, 6) << '\n';
  for (const auto& w : r.warnings) out << "warning: " << w << '\n';
}

inline PredictRequest parse_predict_request(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::parse_error, std::string("request is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("text") || !j["text"].is_string())
    throw Error(Errc::invalid_argument, "request needs a string field 'text'");
  PredictRequest req;
  req.text = j["text"].get<std::string>();
  if (j.contains("top_k")) {
    if (!j["top_k"].is_number_integer() || j["top_k"].get<long long>() < 1)
      throw Error(Errc::invalid_argument, "top_k must be a positive integer");
    req.top_k = j["top_k"].get<std::size_t>();
  }
  return req;
}

// ---------------------------------------------------------------------------
// HTTP

struct HttpReply {
  int status = 200;
  nlohmann::json body;
};

inline HttpReply error_reply(int status, std::string_view code, const std::string& message) {
  return {status, {{"schema_version", kApiSchemaVersion}, {"error", {{"code", code}, {"message", message}}}}};
}

// Request handlers as plain functions of the request body, so they can be
// exercised without a socket.
class ServiceHandlers {
 public:
  explicit ServiceHandlers(const Predictor& predictor) : predictor_(predictor) {}

  HttpReply predict(const std::string& body) const {
    if (body.size() > predictor_.config().max_request_bytes)
      return error_reply(413, "payload_too_large",
                         "request exceeds " + std::to_string(predictor_.config().max_request_bytes) + " bytes");
    try {
      auto req = parse_predict_request(body);
      return {200, to_json(predictor_.predict(req))};
    } catch (const Error& e) {
      if (e.code() == Errc::parse_error) return error_reply(400, "malformed_request", e.what());
      return error_reply(400, errc_name(e.code()), e.what());
    }
  }

  HttpReply model_info() const {
    const auto& m = predictor_.model();
    nlohmann::json j{{"schema_version", kApiSchemaVersion},
                     {"variant", variant_name(m.variant)},
                     {"n_emotions", m.n_emotions()},
                     {"n_features", m.n_features()},
                     {"epsilon", m.epsilon},
                     {"format_version", m.format_version}};
    if (m.partition) {
      j["n_topics"] = m.partition->n_topics;
      j["partition"] = m.partition->name;
    }
    return {200, j};
  }

  HttpReply topics() const {
    try {
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& r : topic_positivity_table(predictor_.model(), predictor_.config().attribution_words)) {
        nlohmann::json row{{"topic", r.topic}, {"top_words", r.top_words}, {"positive", r.positive},
                           {"negative", r.negative}};
        if (!r.positivity)
          row["positivity"] = nullptr;
        else if (std::isinf(*r.positivity))
          row["positivity"] = "inf";
        else
          row["positivity"] = *r.positivity;
        rows.push_back(std::move(row));
      }
      return {200, {{"schema_version", kApiSchemaVersion}, {"topics", rows}}};
    } catch (const Error& e) {
      return error_reply(409, errc_name(e.code()), e.what());
    }
  }

  HttpReply distances() const {
    try {
      auto m = model_distance_matrix(predictor_.model());
      return {200, {{"schema_version", kApiSchemaVersion}, {"labels", m.labels}, {"values", m.values}}};
    } catch (const Error& e) {
      return error_reply(409, errc_name(e.code()), e.what());
    }
  }

  HttpReply health() const { return {200, {{"schema_version", kApiSchemaVersion}, {"status", "ok"}}}; }

 private:
  const Predictor& predictor_;
};

inline void install_routes(httplib::Server& server, const ServiceHandlers& handlers) {
  auto send = [](httplib::Response& res, const HttpReply& reply) {
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json; charset=utf-8");
  };
  server.Post("/predict", [&handlers, send](const httplib::Request& req, httplib::Response& res) {
    send(res, handlers.predict(req.body));
  });
  server.Get("/model", [&handlers, send](const httplib::Request&, httplib::Response& res) {
    send(res, handlers.model_info());
  });
  server.Get("/topics", [&handlers, send](const httplib::Request&, httplib::Response& res) {
    send(res, handlers.topics());
  });
  server.Get("/emotions/distances", [&handlers, send](const httplib::Request&, httplib::Response& res) {
    send(res, handlers.distances());
  });
  server.Get("/health", [&handlers, send](const httplib::Request&, httplib::Response& res) {
    send(res, handlers.health());
  });
}

}  // namespace emorec
