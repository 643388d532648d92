#pragma once

// Word-to-topic partitions and the densities built on them: per-document
// topic use, per-emotion topic profiles, sentiment marginals, topic
// positivity and distances between emotion profiles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "emorec/corpus.hpp"
#include "emorec/error.hpp"
#include "emorec/util.hpp"

namespace emorec {

using TopicId = int;
using TopicDensity = std::vector<double>;

inline constexpr std::string_view kBaselinePartitionLabel = "baseline partition";

struct TopicPartition {
  std::map<std::string, TopicId> assignment;
  int n_topics = 0;
  std::string name;
  // Topic collecting vocabulary words the partition file did not cover.
  std::optional<TopicId> reserved_topic;
  std::size_t n_unassigned = 0;

  std::optional<TopicId> topic_of(const std::string& word) const {
    auto it = assignment.find(word);
    if (it == assignment.end()) return std::nullopt;
    return it->second;
  }

  std::vector<std::vector<std::string>> topic_words() const {
    std::vector<std::vector<std::string>> out(static_cast<std::size_t>(n_topics));
    for (const auto& [w, k] : assignment) out[static_cast<std::size_t>(k)].push_back(w);
    return out;
  }

  bool operator==(const TopicPartition& o) const {
    return assignment == o.assignment && n_topics == o.n_topics;
  }
};

// Checks the partition invariants: ids within range and every topic used.
inline void validate_partition(const TopicPartition& p) {
  if (p.n_topics < 1) throw Error(Errc::invalid_argument, "partition has no topics");
  std::vector<bool> used(static_cast<std::size_t>(p.n_topics), false);
  for (const auto& [w, k] : p.assignment) {
    if (k < 0 || k >= p.n_topics)
      throw Error(Errc::invalid_argument, "word '" + w + "' has topic id out of range");
    used[static_cast<std::size_t>(k)] = true;
  }
  for (std::size_t k = 0; k < used.size(); ++k)
    if (!used[k]) throw Error(Errc::invalid_argument, "topic " + std::to_string(k) + " has no words");
}

inline TopicPartition read_partition(std::istream& in, const Vocabulary& vocab) {
  std::map<std::string, long long> raw;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    util::strip_cr(line);
    if (util::trim(line).empty() || line[0] == '#') continue;
    // words never contain whitespace, so any run of blanks separates columns
    std::istringstream fields(line);
    std::vector<std::string> cols;
    for (std::string f; fields >> f;) cols.push_back(f);
    if (cols.size() != 2)
      throw Error(Errc::parse_error, "line " + std::to_string(lineno) + ": expected word<TAB>topic_id");
    long long id = 0;
    try {
      id = util::parse_int(cols[1]);
    } catch (const Error& e) {
      throw Error(Errc::parse_error, "line " + std::to_string(lineno) + ": " + e.what());
    }
    if (id < 0) throw Error(Errc::parse_error, "line " + std::to_string(lineno) + ": negative topic id");
    if (!raw.emplace(cols[0], id).second)
      throw Error(Errc::parse_error, "word '" + cols[0] + "' assigned to more than one topic");
  }

  // Compact ids of topics that still own a vocabulary word.
  std::map<long long, TopicId> compact;
  for (const auto& [w, id] : raw)
    if (vocab.contains(w)) compact.emplace(id, 0);
  TopicId next = 0;
  for (auto& [id, k] : compact) k = next++;

  TopicPartition p;
  for (const auto& [w, c] : vocab.counts) {
    auto it = raw.find(w);
    if (it != raw.end()) {
      p.assignment[w] = compact.at(it->second);
    } else {
      p.assignment[w] = next;
      ++p.n_unassigned;
    }
  }
  p.n_topics = next;
  if (p.n_unassigned > 0) {
    p.reserved_topic = next;
    ++p.n_topics;
  }
  if (p.n_topics == 0) throw Error(Errc::invalid_argument, "partition covers an empty vocabulary");
  return p;
}

inline TopicPartition load_partition(const std::string& path, const Vocabulary& vocab) {
  auto in = util::open_input(path);
  try {
    auto p = read_partition(in, vocab);
    p.name = path;
    return p;
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

inline void write_partition(std::ostream& out, const TopicPartition& p) {
  if (!p.name.empty()) out << "# " << p.name << '\n';
  for (const auto& [w, k] : p.assignment) out << w << '\t' << k << '\n';
}

inline void save_partition(const std::string& path, const TopicPartition& p) {
  auto out = util::open_output(path);
  write_partition(out, p);
}

// ---------------------------------------------------------------------------
// Densities

// Token counts per topic; words outside the partition are skipped and
// their token total is added to *dropped when given.
inline std::vector<std::int64_t> topic_counts(const BagOfWords& bow, const TopicPartition& part,
                                              std::int64_t* dropped = nullptr) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(part.n_topics), 0);
  for (const auto& [w, c] : bow) {
    if (auto k = part.topic_of(w)) {
      counts[static_cast<std::size_t>(*k)] += c;
    } else if (dropped) {
      *dropped += c;
    }
  }
  return counts;
}

inline TopicDensity doc_topic_density(const BagOfWords& bow, const TopicPartition& part) {
  if (bow.empty()) throw Error(Errc::invalid_argument, "no tokens");
  std::int64_t dropped = 0;
  auto counts = topic_counts(bow, part, &dropped);
  if (dropped > 0) {
    for (const auto& [w, c] : bow)
      if (!part.topic_of(w)) throw Error(Errc::invalid_argument, "word '" + w + "' is not in the partition");
  }
  std::int64_t total = 0;
  for (auto c : counts) total += c;
  if (total <= 0) throw Error(Errc::invalid_argument, "no tokens");
  TopicDensity d(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k)
    d[k] = static_cast<double>(counts[k]) / static_cast<double>(total);
  return d;
}

struct EmotionTopicProfile {
  std::string emotion;
  TopicDensity density;
  std::size_t support = 0;
};

// Unweighted mean of the topic densities of every document tagged `emotion`.
inline EmotionTopicProfile emotion_topic_profile(const std::vector<Document>& docs,
                                                 const TopicPartition& part, const std::string& emotion) {
  EmotionTopicProfile prof{emotion, TopicDensity(static_cast<std::size_t>(part.n_topics), 0.0), 0};
  for (const auto& d : docs) {
    if (!d.emotions.count(emotion)) continue;
    auto td = doc_topic_density(d.bow, part);
    for (std::size_t k = 0; k < td.size(); ++k) prof.density[k] += td[k];
    ++prof.support;
  }
  if (prof.support == 0) throw Error(Errc::unknown_emotion, "no documents tagged '" + emotion + "'");
  for (auto& v : prof.density) v /= static_cast<double>(prof.support);
  return prof;
}

// One profile per emotion, ordered by label; each document's density is
// computed once.
inline std::vector<EmotionTopicProfile> emotion_topic_profiles(const std::vector<Document>& docs,
                                                               const TopicPartition& part) {
  std::map<std::string, EmotionTopicProfile> acc;
  for (const auto& d : docs) {
    auto td = doc_topic_density(d.bow, part);
    for (const auto& e : d.emotions) {
      auto [it, fresh] = acc.try_emplace(e, EmotionTopicProfile{e, TopicDensity(td.size(), 0.0), 0});
      for (std::size_t k = 0; k < td.size(); ++k) it->second.density[k] += td[k];
      ++it->second.support;
    }
  }
  std::vector<EmotionTopicProfile> out;
  out.reserve(acc.size());
  for (auto& [e, p] : acc) {
    for (auto& v : p.density) v /= static_cast<double>(p.support);
    out.push_back(std::move(p));
  }
  return out;
}

// Prior-weighted mixture of the profiles of every emotion on one side.
inline TopicDensity sentiment_topic_density(const std::vector<EmotionTopicProfile>& profiles,
                                            const std::map<std::string, double>& priors, Polarity side,
                                            const PolarityMap& pol) {
  TopicDensity out;
  double mass = 0;
  for (const auto& p : profiles) {
    if (pol.at(p.emotion) != side) continue;
    auto it = priors.find(p.emotion);
    if (it == priors.end()) throw Error(Errc::unknown_emotion, "no prior for '" + p.emotion + "'");
    if (out.empty()) out.assign(p.density.size(), 0.0);
    if (p.density.size() != out.size()) throw Error(Errc::invalid_argument, "profile dimension mismatch");
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += p.density[k] * it->second;
    mass += it->second;
  }
  if (out.empty() || mass <= 0)
    throw Error(Errc::invalid_argument,
                std::string("no ") + std::string(polarity_name(side)) + " emotions to marginalise over");
  for (auto& v : out) v /= mass;
  return out;
}

// numerator[k] / denominator[k]; +inf for a zero denominator under positive
// mass, nullopt when both are zero.
inline std::optional<double> density_ratio(std::size_t k, const TopicDensity& numerator,
                                           const TopicDensity& denominator) {
  double a = numerator.at(k), b = denominator.at(k);
  if (b == 0.0) {
    if (a == 0.0) return std::nullopt;
    return std::numeric_limits<double>::infinity();
  }
  return a / b;
}

inline std::optional<double> topic_positivity(std::size_t k, const TopicDensity& pos, const TopicDensity& neg) {
  return density_ratio(k, pos, neg);
}

inline std::optional<double> topic_negativity(std::size_t k, const TopicDensity& pos, const TopicDensity& neg) {
  return density_ratio(k, neg, pos);
}

inline double emotion_distance(const TopicDensity& a, const TopicDensity& b) {
  if (a.size() != b.size())
    throw Error(Errc::invalid_argument, "emotion profiles have different dimensions");
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

inline double emotion_distance(const EmotionTopicProfile& a, const EmotionTopicProfile& b) {
  return emotion_distance(a.density, b.density);
}

struct DistanceMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> values;

  std::size_t index_of(const std::string& e) const {
    auto it = std::lower_bound(labels.begin(), labels.end(), e);
    if (it == labels.end() || *it != e) throw Error(Errc::unknown_emotion, "unknown emotion '" + e + "'");
    return static_cast<std::size_t>(it - labels.begin());
  }
  double at(const std::string& a, const std::string& b) const { return values[index_of(a)][index_of(b)]; }
};

// Labels are sorted; profiles need not be.
inline DistanceMatrix distance_matrix(std::vector<EmotionTopicProfile> profiles) {
  std::sort(profiles.begin(), profiles.end(),
            [](const auto& a, const auto& b) { return a.emotion < b.emotion; });
  DistanceMatrix m;
  const std::size_t n = profiles.size();
  m.values.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    m.labels.push_back(profiles[i].emotion);
    for (std::size_t j = i + 1; j < n; ++j) {
      double d = emotion_distance(profiles[i], profiles[j]);
      m.values[i][j] = d;
      m.values[j][i] = d;
    }
  }
  return m;
}

inline void write_distance_matrix(std::ostream& out, const DistanceMatrix& m) {
  out << "emotion";
  for (const auto& l : m.labels) out << '\t' << l;
  out << '\n';
  for (std::size_t i = 0; i < m.labels.size(); ++i) {
    out << m.labels[i];
    for (double v : m.values[i]) out << '\t' << util::format_sig(v, 10);
    out << '\n';
  }
}

inline DistanceMatrix read_distance_matrix(std::istream& in) {
  DistanceMatrix m;
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::parse_error, "empty distance matrix");
  util::strip_cr(line);
  auto header = util::split(line, '\t');
  if (header.empty() || header[0] != "emotion") throw Error(Errc::parse_error, "bad distance matrix header");
  m.labels.assign(header.begin() + 1, header.end());
  while (std::getline(in, line)) {
    util::strip_cr(line);
    if (line.empty()) continue;
    auto cols = util::split(line, '\t');
    if (cols.size() != m.labels.size() + 1 || cols[0] != m.labels[m.values.size()])
      throw Error(Errc::parse_error, "bad distance matrix row '" + cols[0] + "'");
    std::vector<double> row;
    for (std::size_t j = 1; j < cols.size(); ++j) row.push_back(util::parse_double(cols[j]));
    m.values.push_back(std::move(row));
  }
  if (m.values.size() != m.labels.size()) throw Error(Errc::parse_error, "distance matrix is not square");
  return m;
}

// ---------------------------------------------------------------------------
// Baseline partition

// Stand-in topic inference: each word is represented by its per-document
// count vector and words are merged greedily (average linkage on cosine
// similarity of summed vectors) until n_topics clusters remain. The seed
// fixes the order used to break similarity ties.
inline TopicPartition baseline_partition(const std::vector<Document>& docs, const Vocabulary& vocab,
                                         int n_topics, std::uint64_t seed) {
  const auto words = vocab.words();
  const std::size_t V = words.size();
  if (n_topics < 1) throw Error(Errc::invalid_argument, "topic count must be >= 1");
  if (static_cast<std::size_t>(n_topics) > V)
    throw Error(Errc::invalid_argument, "topic count " + std::to_string(n_topics) +
                                            " exceeds vocabulary size " + std::to_string(V));

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < V; ++i) index.emplace(words[i], i);

  // Sparse cluster vectors: document index -> summed count.
  using Sparse = std::map<std::size_t, double>;
  std::vector<Sparse> vec(V);
  for (std::size_t d = 0; d < docs.size(); ++d)
    for (const auto& [w, c] : docs[d].bow)
      if (auto it = index.find(w); it != index.end()) vec[it->second][d] += static_cast<double>(c);

  auto norm = [](const Sparse& s) {
    double n = 0;
    for (const auto& [d, v] : s) n += v * v;
    return std::sqrt(n);
  };
  auto dot = [](const Sparse& a, const Sparse& b) {
    const Sparse& small = a.size() < b.size() ? a : b;
    const Sparse& large = a.size() < b.size() ? b : a;
    double s = 0;
    for (const auto& [d, v] : small)
      if (auto it = large.find(d); it != large.end()) s += v * it->second;
    return s;
  };

  util::Rng rng(seed);
  auto order = rng.permutation(V);  // tie-break priority per word
  std::vector<std::size_t> priority(V);
  for (std::size_t i = 0; i < V; ++i) priority[order[i]] = i;

  std::vector<double> norms(V);
  for (std::size_t i = 0; i < V; ++i) norms[i] = norm(vec[i]);
  std::vector<bool> alive(V, true);
  std::vector<std::size_t> cluster_of(V);
  for (std::size_t i = 0; i < V; ++i) cluster_of[i] = i;

  auto sim = [&](std::size_t a, std::size_t b) {
    if (norms[a] == 0 || norms[b] == 0) return 0.0;
    return dot(vec[a], vec[b]) / (norms[a] * norms[b]);
  };
  // (a, b) beats (c, d) on higher similarity, then lower priority pair.
  auto better = [&](double s1, std::size_t a, std::size_t b, double s2, std::size_t c, std::size_t d) {
    if (s1 != s2) return s1 > s2;
    auto p1 = std::minmax(priority[a], priority[b]);
    auto p2 = std::minmax(priority[c], priority[d]);
    return p1 < p2;
  };

  // Nearest-neighbour cache.
  std::vector<std::size_t> nn(V, V);
  std::vector<double> nn_sim(V, -1.0);
  auto refresh = [&](std::size_t i) {
    nn[i] = V;
    nn_sim[i] = -1.0;
    for (std::size_t j = 0; j < V; ++j) {
      if (j == i || !alive[j]) continue;
      double s = sim(i, j);
      if (nn[i] == V || better(s, i, j, nn_sim[i], i, nn[i])) {
        nn[i] = j;
        nn_sim[i] = s;
      }
    }
  };
  for (std::size_t i = 0; i < V; ++i) refresh(i);

  std::size_t clusters = V;
  while (clusters > static_cast<std::size_t>(n_topics)) {
    std::size_t a = V;
    for (std::size_t i = 0; i < V; ++i) {
      if (!alive[i] || nn[i] == V) continue;
      if (a == V || better(nn_sim[i], i, nn[i], nn_sim[a], a, nn[a])) a = i;
    }
    std::size_t b = nn[a];
    if (priority[b] < priority[a]) std::swap(a, b);
    // merge b into a
    for (const auto& [d, v] : vec[b]) vec[a][d] += v;
    vec[b].clear();
    norms[a] = norm(vec[a]);
    alive[b] = false;
    priority[a] = std::min(priority[a], priority[b]);
    for (std::size_t i = 0; i < V; ++i)
      if (cluster_of[i] == b) cluster_of[i] = a;
    --clusters;
    for (std::size_t i = 0; i < V; ++i) {
      if (!alive[i]) continue;
      if (i == a || nn[i] == a || nn[i] == b) {
        refresh(i);
      } else {
        double s = sim(i, a);
        if (better(s, i, a, nn_sim[i], i, nn[i])) {
          nn[i] = a;
          nn_sim[i] = s;
        }
      }
    }
  }

  // Number topics by their first word in vocabulary order.
  std::map<std::size_t, TopicId> ids;
  TopicPartition p;
  p.name = std::string(kBaselinePartitionLabel);
  for (std::size_t i = 0; i < V; ++i) {
    auto [it, fresh] = ids.try_emplace(cluster_of[i], static_cast<TopicId>(ids.size()));
    p.assignment[words[i]] = it->second;
  }
  p.n_topics = static_cast<int>(ids.size());
  return p;
}

}  // namespace emorec
