// Acceptance suite: one PASS/FAIL line per primary criterion, exit status 1 if
// any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli_support.hpp"
#include "emorec/emorec.hpp"
#include "emorec/metrics.hpp"
#include "test_support.hpp"

using namespace emorec;
using namespace emorec::fixtures;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

// Collects the first few failure messages for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) messages_ += (messages_.empty() ? "" : "; ") + what;
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : ", ") + s; }
  bool passed() const { return failures_ == 0; }
  std::string detail() const {
    std::string d = std::to_string(checks_) + " checks";
    if (!notes_.empty()) d += ", " + notes_;
    if (failures_) d += ", " + std::to_string(failures_) + " failed: " + messages_;
    return d;
  }

 private:
  int checks_ = 0, failures_ = 0;
  std::string messages_, notes_;
};

std::string num(double v, int digits = 6) { return util::format_sig(v, digits); }

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

EmotionModel toy(double eps) { return train(toy_documents(), toy_partition(), toy_polarity(), eps, Variant::topic); }

// ---------------------------------------------------------------------------

void ac1_toy_oracle(Check& c) {
  const auto t0 = Clock::now();
  auto pred = posterior(toy(0.0), toy_query());
  const double elapsed = seconds_since(t0);

  // exact fractions, rebuilt from the numerators rather than the library
  const Rational n1 = Rational(7, 8) * Rational(7, 8) * Rational(7, 8) * Rational(1, 8) * Rational(2, 5);
  const Rational n2 = Rational(3, 4) * Rational(3, 4) * Rational(3, 4) * Rational(1, 4) * Rational(1, 5);
  const Rational n3 = Rational(1, 3) * Rational(1, 3) * Rational(1, 3) * Rational(1, 6) * Rational(2, 5);
  const Rational z = n1 + n2 + n3;
  const Rational exact[3] = {n1 / z, n2 / z, n3 / z};
  auto oracle = rational_topic_posterior(toy_documents(), toy_partition(), toy_query());
  const double rounded[3] = {0.59, 0.37, 0.04};
  const char* labels[3] = {"e1", "e2", "e3"};
  for (int i = 0; i < 3; ++i) {
    c.expect(oracle.probability[static_cast<std::size_t>(i)] == exact[i], std::string("count oracle != numerators for ") + labels[i]);
    const double got = pred.probability(labels[i]);
    c.expect(std::abs(got - to_double(exact[i])) <= 1e-4, std::string(labels[i]) + " off exact: " + num(got, 17));
    c.expect(std::abs(got - rounded[i]) <= 5e-3, std::string(labels[i]) + " off rounded: " + num(got));
  }
  c.expect(pred.labels() == std::vector<std::string>{"e1", "e2", "e3"}, "ranking order");
  c.expect(elapsed < 1.0, "runtime " + num(elapsed) + " s");
  c.note("posterior (" + num(pred.probability("e1"), 5) + ", " + num(pred.probability("e2"), 5) + ", " +
         num(pred.probability("e3"), 5) + ")");
  c.note("exact " + exact[0].str() + ", " + exact[1].str() + ", " + exact[2].str());
}

void ac2_intermediates(Check& c) {
  auto m = toy(0.0);
  const Rational priors[3] = {Rational(2, 5), Rational(1, 5), Rational(2, 5)};
  for (std::size_t i = 0; i < 3; ++i)
    c.expect(std::abs(m.priors[i] - to_double(priors[i])) <= 1e-12, "prior " + m.emotions[i] + " = " + num(m.priors[i], 17));

  auto d1 = doc_topic_density(toy_documents()[0].bow, toy_partition());
  c.expect(d1 == TopicDensity{0.75, 0.0, 0.25}, "d1 density");

  // dyadic entries compare exactly; thirds and sixths within 1e-12
  c.expect(m.profiles[0] == std::vector<double>{0.875, 0.0, 0.125}, "e1 profile");
  c.expect(m.profiles[1] == std::vector<double>{0.75, 0.0, 0.25}, "e2 profile");
  const double e3[3] = {1.0 / 3, 0.5, 1.0 / 6};
  for (std::size_t k = 0; k < 3; ++k)
    c.expect(std::abs(m.profiles[2][k] - e3[k]) <= 1e-12, "e3 profile topic " + std::to_string(k));
  c.expect(m.profiles[2][1] == 0.5, "e3 topic 2 exact");
}

void ac3_log_domain(Check& c) {
  util::Rng rng(2024);
  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    auto inst = random_instance(rng, 8, 30);
    const double eps = kDefaultEpsilon;
    auto m = train(inst.docs, inst.partition, inst.polarity, eps, Variant::topic);
    auto q = random_query(rng, inst.vocabulary, 8);
    auto pred = posterior(m, q);
    for (const auto& [e, p] : linear_topic_posterior(inst.docs, inst.partition, q, eps)) {
      const double rel = std::abs(pred.probability(e) - p) / std::max(p, std::numeric_limits<double>::min());
      if (p > 0) worst = std::max(worst, rel);
      c.expect(rel <= 1e-9 || std::abs(pred.probability(e) - p) <= 1e-300, "instance " + std::to_string(trial) + " " + e);
    }
  }
  c.note("max relative error " + num(worst, 3));

  int underflowed = 0;
  for (int trial = 0; trial < 20; ++trial) {
    // one topic per word keeps densities small; the query repeats the word
    // whose largest density over emotions is smallest
    auto inst = random_instance(rng, 8, 30);
    TopicPartition own;
    for (std::size_t i = 0; i < inst.vocabulary.size(); ++i)
      own.assignment[inst.vocabulary[i]] = static_cast<TopicId>(i);
    own.n_topics = static_cast<int>(inst.vocabulary.size());
    auto m = train(inst.docs, own, inst.polarity, kDefaultEpsilon, Variant::topic);
    std::size_t rare = 0;
    double rare_peak = 2;
    for (std::size_t k = 0; k < m.n_features(); ++k) {
      double peak = 0;
      for (const auto& row : m.profiles) peak = std::max(peak, row[k]);
      if (peak < rare_peak) rare_peak = peak, rare = k;
    }
    const BagOfWords q{{inst.vocabulary[rare], 500}};
    auto pred = posterior(m, q);
    double total = 0;
    bool finite = true;
    for (const auto& s : pred.ranking) {
      finite = finite && std::isfinite(s.probability);
      total += s.probability;
    }
    c.expect(finite && std::abs(total - 1.0) <= 1e-9, "500-token posterior not a finite distribution");

    // naive linear numerators, for the record
    bool all_zero = true;
    for (std::size_t e = 0; e < m.n_emotions(); ++e) {
      double v = m.priors[e];
      for (int i = 0; i < 500; ++i) v *= m.profiles[e][rare];
      all_zero = all_zero && v == 0.0;
    }
    underflowed += all_zero;
  }
  c.note(std::to_string(underflowed) + "/20 adversarial naive products underflowed to 0");
}

void ac4_substitution(Check& c) {
  util::Rng rng(77);
  int substituted = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = random_instance(rng);
    auto m = train(inst.docs, inst.partition, inst.polarity, kDefaultEpsilon, Variant::topic);
    auto q = random_query(rng, inst.vocabulary);
    // replace every token by a random same-topic word
    std::map<TopicId, std::vector<std::string>> by_topic;
    for (const auto& [w, k] : inst.partition.assignment) by_topic[k].push_back(w);
    BagOfWords swapped;
    for (const auto& [w, n] : q) {
      const auto& pool = by_topic.at(inst.partition.assignment.at(w));
      for (std::int64_t i = 0; i < n; ++i) ++swapped[pool[rng.below(pool.size())]];
    }
    substituted += swapped != q;
    auto a = posterior(m, q);
    auto b = posterior(m, swapped);
    bool same = a.ranking.size() == b.ranking.size();
    for (std::size_t i = 0; same && i < a.ranking.size(); ++i)
      same = a.ranking[i].label == b.ranking[i].label && a.ranking[i].probability == b.ranking[i].probability;
    c.expect(same, "corpus " + std::to_string(trial));
  }
  c.note(std::to_string(substituted) + "/100 queries changed by substitution");
}

void ac5_full_vocab(Check& c) {
  util::Rng rng(55);
  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    auto inst = random_instance(rng, 8, 30);
    const double eps = trial % 2 ? kDefaultEpsilon : 1e-3;
    auto m = train(inst.docs, std::nullopt, inst.polarity, eps, Variant::full_vocab);
    auto q = random_query(rng, inst.vocabulary, 6);
    auto pred = posterior(m, q);
    for (const auto& [e, p] : brute_force_word_posterior(inst.docs, q, eps)) {
      const double err = std::abs(pred.probability(e) - p);
      worst = std::max(worst, err);
      c.expect(err <= 1e-12, "instance " + std::to_string(trial) + " " + e);
    }
  }
  c.note("max abs error " + num(worst, 3));
}

void ac6_metrics(Check& c) {
  util::Rng rng(66);
  auto gains = [&](std::size_t n) {
    std::vector<double> g(n);
    for (auto& x : g) x = rng.below(3) == 0 ? 0.0 : rng.uniform();
    return g;
  };
  for (int trial = 0; trial < 500; ++trial) {
    auto ideal = gains(1 + rng.below(12));
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    for (std::size_t k = 1; k <= ideal.size(); ++k) {
      if (!(ideal[k - 1] > 0)) break;
      c.expect(std::abs(ndcg(ideal, ideal, k) - 1.0) <= 1e-12, "ideal nDCG");
      c.expect(std::abs(q_measure(ideal, ideal, k) - 1.0) <= 1e-12, "ideal Q");
    }
  }
  int exchanges = 0;
  while (exchanges < 1000) {
    const std::size_t n = 2 + rng.below(10);
    auto g = gains(n);
    auto ideal = g;
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    const std::size_t i = rng.below(n - 1);
    if (!(g[i] < g[i + 1])) continue;
    ++exchanges;
    auto better = g;
    std::swap(better[i], better[i + 1]);
    for (std::size_t r = 1; r <= n; ++r)
      c.expect(ndcg(better, ideal, r) >= ndcg(g, ideal, r) - 1e-15, "exchange lowered nDCG");
  }
  const std::vector<std::string> universe{"a", "b", "c", "d", "e", "f"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Query> run;
    for (int i = 0; i < 8; ++i) {
      Query q{universe, {universe[rng.below(universe.size())]}};
      rng.shuffle(q.ranking);
      if (rng.below(2)) q.labels.insert(universe[rng.below(universe.size())]);
      run.push_back(std::move(q));
    }
    double prev = 0;
    for (std::size_t k = 1; k <= universe.size(); ++k) {
      const double v = recall_at_k(run, k);
      c.expect(v >= prev, "recall@k decreased");
      prev = v;
    }
  }
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = random_instance(rng);
    RelevanceContext ctx(emotion_topic_profiles(inst.docs, inst.partition), inst.polarity);
    for (const auto& [a, pa] : inst.polarity.entries())
      for (const auto& [b, pb] : inst.polarity.entries())
        if (pa != pb) c.expect(relevance(a, b, ctx) == 0.0, "cross-polarity relevance " + a + "/" + b);
  }
  const std::vector<double> g{0, 1, 0}, gi{1, 0, 0};
  const double q = q_measure(g, gi, 3);
  c.expect(q == 2.0 / 9, "Q worked value " + num(q, 17));
  c.note("Q(k=3) = " + num(q, 17));
}

// Writes a separable corpus, polarity table and partition for the CLI.
void write_separable(const TempDir& dir) {
  auto s = separable_corpus(6, 100, 12, 31);
  {
    std::ofstream out(dir / "corpus.jsonl");
    write_corpus_jsonl(out, s.raws);
  }
  std::string pol = "emotion\tpolarity\n";
  for (const auto& [e, p] : s.polarity.entries()) pol += e + '\t' + std::string(polarity_name(p)) + '\n';
  write_text(dir / "polarity.tsv", pol);
  TopicPartition part;
  part.assignment = s.partition;
  part.n_topics = 6;
  save_partition(dir / "partition.tsv", part);
}

void ac7_cross_validation(Check& c) {
  TempDir dir;
  write_separable(dir);
  auto evaluate = [&](const std::string& out) {
    return run_cli("--seed 11 evaluate --corpus " + shell_quote(dir / "corpus.jsonl") + " --polarity " +
                   shell_quote(dir / "polarity.tsv") + " --partition topic=" + shell_quote(dir / "partition.tsv") +
                   " --min-count 1 --folds 10 --out-dir " + shell_quote(out));
  };
  const auto t0 = Clock::now();
  auto first = evaluate(dir / "run1");
  const double elapsed = seconds_since(t0);
  auto second = evaluate(dir / "run2");
  c.expect(first.exit_code == 0 && second.exit_code == 0, "evaluate failed: " + first.output.substr(0, 200));
  if (first.exit_code != 0) return;
  c.expect(elapsed < 60.0, "runtime " + num(elapsed) + " s");
  c.note("runtime " + num(elapsed, 3) + " s");

  auto rep = json::parse(read_file(dir / "run1/report.json"));
  c.expect(rep["config"]["documents"] == 600, "documents " + rep["config"]["documents"].dump());
  const auto& mean = rep["mean"];
  for (const char* model : {"topic", "full_vocab"})
    c.expect(mean[model]["binary"]["f1"].get<double>() == 1.0,
             std::string(model) + " F1 " + mean[model]["binary"]["f1"].dump());
  const std::size_t depth = std::min<std::size_t>(10, rep["config"]["max_rank"].get<std::size_t>());
  for (const char* model : {"topic", "full_vocab"})
    for (std::size_t r = 0; r < depth; ++r)
      for (const char* base : {"mle_baseline", "uniform_baseline"}) {
        const double a = mean[model]["ndcg"][r].get<double>(), b = mean[base]["ndcg"][r].get<double>();
        c.expect(a > b, std::string(model) + " vs " + base + " at r=" + std::to_string(r + 1) + ": " + num(a) +
                            " <= " + num(b));
      }
  c.note("nDCG compared at r = 1.." + std::to_string(depth) + " (6-emotion universe)");
  for (const char* f : {"report.json", "curves.tsv", "binary_metrics.tsv", "corpus_summary.tsv"})
    c.expect(read_file(dir / (std::string("run1/") + f)) == read_file(dir / (std::string("run2/") + f)),
             std::string(f) + " differs between runs");
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

void ac8_table_schemas(Check& c) {
  TempDir dir;
  const std::string toy = toy_dir();
  const std::string model = dir / "toy.json";
  auto trained = run_cli("--epsilon 0 train --corpus " + shell_quote(toy + "/corpus.jsonl") + " --polarity " +
                         shell_quote(toy + "/polarity.tsv") + " --partition " + shell_quote(toy + "/partition.tsv") +
                         " --min-count 1 --keep-digits --out " + shell_quote(model));
  c.expect(trained.exit_code == 0, "train failed: " + trained.output);
  auto report = run_cli("report --model " + shell_quote(model) + " --corpus " + shell_quote(toy + "/corpus.jsonl") +
                        " --out-dir " + shell_quote(dir / "report"));
  c.expect(report.exit_code == 0, "report failed: " + report.output);
  auto evaluated = run_cli("evaluate --corpus " + shell_quote(toy + "/corpus.jsonl") + " --polarity " +
                           shell_quote(toy + "/polarity.tsv") + " --partition toy=" +
                           shell_quote(toy + "/partition.tsv") + " --min-count 1 --keep-digits --folds 2 --out-dir " +
                           shell_quote(dir / "eval"));
  c.expect(evaluated.exit_code == 0, "evaluate failed: " + evaluated.output);

  c.expect(first_line(read_file(dir / "report/corpus_summary.tsv")) ==
               "sentiment\tpositivity\tcount\tproportion\ttags_per_post",
           "corpus summary header");
  c.expect(first_line(read_file(dir / "report/topic_positivity.tsv")) == "topic\twords\tpositive\tnegative\tpositivity",
           "topic positivity header");
  c.expect(first_line(read_file(dir / "eval/binary_metrics.tsv")) ==
               "model\taccuracy\tbalanced_accuracy\tf1\tprecision\trecall",
           "binary metrics header");
  c.note("schemas only; published values need the original corpus and partitions");
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* title;
    std::function<void(Check&)> run;
  };
  const std::vector<Criterion> criteria = {
      {"AC1", "toy network posterior matches exact and rounded values", ac1_toy_oracle},
      {"AC2", "toy priors, document density and emotion profiles", ac2_intermediates},
      {"AC3", "log-domain posterior equals linear computation; 500-token queries stay finite", ac3_log_domain},
      {"AC4", "same-topic substitution leaves the posterior bit-identical", ac4_substitution},
      {"AC5", "full-vocabulary posterior equals brute force", ac5_full_vocab},
      {"AC6", "metric properties and Q worked value", ac6_metrics},
      {"AC7", "10-fold CV on a separable corpus", ac7_cross_validation},
      {"AC8", "summary, topic and binary-metric table schemas", ac8_table_schemas},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check c;
    try {
      cr.run(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    std::cout << (c.passed() ? "PASS " : "FAIL ") << cr.id << ' ' << cr.title << " (" << c.detail() << ")\n";
    failed += !c.passed();
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << '/' << criteria.size() << " criteria passed\n";
  return failed ? 1 : 0;
}
