#pragma once

// Ranking and classification metrics: graded relevance between emotions,
// Q-measure, nDCG, interpolated precision, recall@k and binary metrics.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "emorec/corpus.hpp"
#include "emorec/error.hpp"
#include "emorec/topics.hpp"

namespace emorec {

// Emotion profiles and polarities from a training set, with the largest
// distance from each emotion to any other cached.
class RelevanceContext {
 public:
  RelevanceContext(std::vector<EmotionTopicProfile> profiles, PolarityMap polarity)
      : distances_(distance_matrix(std::move(profiles))), polarity_(std::move(polarity)) {
    polarity_.require_all(distances_.labels);
    max_dist_.resize(distances_.labels.size(), 0.0);
    for (std::size_t i = 0; i < max_dist_.size(); ++i)
      for (double d : distances_.values[i]) max_dist_[i] = std::max(max_dist_[i], d);
  }

  const std::vector<std::string>& emotions() const { return distances_.labels; }
  const DistanceMatrix& distances() const { return distances_; }
  const PolarityMap& polarity() const { return polarity_; }
  bool contains(const std::string& e) const {
    return std::binary_search(distances_.labels.begin(), distances_.labels.end(), e);
  }
  double max_dist(const std::string& e) const { return max_dist_[distances_.index_of(e)]; }

  // Graded relevance of `predicted` for the true emotion `truth`.
  double relevance(const std::string& predicted, const std::string& truth) const {
    std::size_t p = distances_.index_of(predicted);
    std::size_t t = distances_.index_of(truth);
    if (polarity_.at(predicted) != polarity_.at(truth)) return 0.0;
    double mx = max_dist_[t];
    if (mx == 0.0) return p == t ? 1.0 : 0.0;
    return (mx - distances_.values[p][t]) / mx;
  }

 private:
  DistanceMatrix distances_;
  PolarityMap polarity_;
  std::vector<double> max_dist_;
};

inline double relevance(const std::string& predicted, const std::string& truth, const RelevanceContext& ctx) {
  return ctx.relevance(predicted, truth);
}

// Best relevance of `emotion` against any of the labels.
inline double label_gain(const std::string& emotion, const std::set<std::string>& labels,
                         const RelevanceContext& ctx) {
  if (labels.empty()) throw Error(Errc::invalid_argument, "gain needs at least one label");
  double g = 0;
  for (const auto& l : labels) g = std::max(g, ctx.relevance(emotion, l));
  return g;
}

// Gain at 1-based rank r.
inline double gain(const std::vector<std::string>& ranking, std::size_t r, const std::set<std::string>& labels,
                   const RelevanceContext& ctx) {
  if (r < 1 || r > ranking.size()) throw Error(Errc::invalid_argument, "rank out of range");
  return label_gain(ranking[r - 1], labels, ctx);
}

inline std::vector<double> ranking_gains(const std::vector<std::string>& ranking, const std::set<std::string>& labels,
                                         const RelevanceContext& ctx) {
  std::vector<double> g;
  g.reserve(ranking.size());
  for (const auto& e : ranking) g.push_back(label_gain(e, labels, ctx));
  return g;
}

// Gains of the whole candidate pool, sorted non-increasing.
inline std::vector<double> ideal_gains(const std::set<std::string>& labels, const RelevanceContext& ctx) {
  auto g = ranking_gains(ctx.emotions(), labels, ctx);
  std::sort(g.begin(), g.end(), std::greater<>());
  return g;
}

// Q(k) = (1/k) sum_{r<=k} [g(r) > 0] (cg(r) + #{i<=r : g(i) > 0}) / (cg_I(r) + r).
// Note the 1/k normaliser rather than the number of relevant items.
inline double q_measure(std::span<const double> gains, std::span<const double> ideal, std::size_t k) {
  if (k < 1 || k > gains.size() || k > ideal.size()) throw Error(Errc::invalid_argument, "k out of range");
  double cg = 0, cg_ideal = 0, sum = 0;
  std::size_t relevant = 0;
  for (std::size_t r = 1; r <= k; ++r) {
    double g = gains[r - 1];
    cg += g;
    cg_ideal += ideal[r - 1];
    if (g > 0) {
      ++relevant;
      sum += (cg + static_cast<double>(relevant)) / (cg_ideal + static_cast<double>(r));
    }
  }
  return sum / static_cast<double>(k);
}

inline double dcg(std::span<const double> gains, std::size_t r) {
  double s = 0;
  for (std::size_t i = 1; i <= r; ++i) s += (std::exp2(gains[i - 1]) - 1.0) / std::log2(static_cast<double>(i) + 1.0);
  return s;
}

// DCG_r / IDCG_r, and 0 when the ideal DCG is 0.
inline double ndcg(std::span<const double> gains, std::span<const double> ideal, std::size_t r) {
  if (r < 1 || r > gains.size() || r > ideal.size()) throw Error(Errc::invalid_argument, "r out of range");
  double idcg = dcg(ideal, r);
  if (idcg <= 0) return 0.0;
  return dcg(gains, r) / idcg;
}

inline double q_measure(const std::vector<std::string>& ranking, const std::set<std::string>& labels, std::size_t k,
                        const RelevanceContext& ctx) {
  return q_measure(ranking_gains(ranking, labels, ctx), ideal_gains(labels, ctx), k);
}

inline double ndcg(const std::vector<std::string>& ranking, const std::set<std::string>& labels, std::size_t r,
                   const RelevanceContext& ctx) {
  return ndcg(ranking_gains(ranking, labels, ctx), ideal_gains(labels, ctx), r);
}

// ---------------------------------------------------------------------------
// Exact-match rank metrics

struct Query {
  std::vector<std::string> ranking;
  std::set<std::string> labels;
};

inline constexpr std::size_t kRecallGridPoints = 101;

// Interpolated precision of one query on the recall grid 0.00, 0.01, ..., 1.00.
inline std::vector<double> interpolated_precision(const Query& q) {
  std::vector<double> curve(kRecallGridPoints, 0.0);
  if (q.labels.empty()) return curve;
  const double n_labels = static_cast<double>(q.labels.size());
  std::vector<std::pair<double, double>> points;  // (recall, precision)
  std::size_t hits = 0;
  for (std::size_t r = 1; r <= q.ranking.size(); ++r) {
    if (q.labels.count(q.ranking[r - 1])) ++hits;
    points.emplace_back(static_cast<double>(hits) / n_labels, static_cast<double>(hits) / static_cast<double>(r));
  }
  for (std::size_t g = 0; g < kRecallGridPoints; ++g) {
    const double x = static_cast<double>(g) / 100.0;
    for (const auto& [rec, prec] : points)
      if (rec + 1e-12 >= x) curve[g] = std::max(curve[g], prec);
  }
  return curve;
}

inline std::vector<double> interpolated_precision(std::span<const Query> run) {
  std::vector<double> mean(kRecallGridPoints, 0.0);
  if (run.empty()) return mean;
  for (const auto& q : run) {
    auto c = interpolated_precision(q);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += c[i];
  }
  for (auto& v : mean) v /= static_cast<double>(run.size());
  return mean;
}

inline double recall_at_k(const Query& q, std::size_t k) {
  if (k < 1) throw Error(Errc::invalid_argument, "k must be >= 1");
  if (q.labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < std::min(k, q.ranking.size()); ++i) hits += q.labels.count(q.ranking[i]);
  return static_cast<double>(hits) / static_cast<double>(q.labels.size());
}

inline double recall_at_k(std::span<const Query> run, std::size_t k) {
  if (run.empty()) return 0.0;
  double s = 0;
  for (const auto& q : run) s += recall_at_k(q, k);
  return s / static_cast<double>(run.size());
}

// ---------------------------------------------------------------------------
// Binary sentiment metrics

struct BinaryMetrics {
  double accuracy = 0;
  double balanced_accuracy = 0;
  double f1 = 0;
  double precision = 0;
  double recall = 0;
};

// Macro averages run over the classes present in either the truths or the
// predictions; per-class ratios with a zero denominator count as 0.
inline BinaryMetrics binary_metrics(std::span<const Polarity> preds, std::span<const Polarity> truths) {
  if (preds.size() != truths.size())
    throw Error(Errc::invalid_argument, "prediction and truth lists differ in length");
  if (preds.empty()) throw Error(Errc::invalid_argument, "no predictions to score");
  // confusion[truth][pred]
  double confusion[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < preds.size(); ++i)
    confusion[static_cast<int>(truths[i])][static_cast<int>(preds[i])] += 1;

  BinaryMetrics m;
  m.accuracy = (confusion[0][0] + confusion[1][1]) / static_cast<double>(preds.size());
  int classes = 0;
  for (int c = 0; c < 2; ++c) {
    double tp = confusion[c][c];
    double support = confusion[c][0] + confusion[c][1];
    double predicted = confusion[0][c] + confusion[1][c];
    if (support == 0 && predicted == 0) continue;
    ++classes;
    double p = predicted > 0 ? tp / predicted : 0.0;
    double r = support > 0 ? tp / support : 0.0;
    double f = (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
    m.precision += p;
    m.recall += r;
    m.f1 += f;
  }
  m.precision /= classes;
  m.recall /= classes;
  m.f1 /= classes;
  m.balanced_accuracy = m.recall;
  return m;
}

}  // namespace emorec
