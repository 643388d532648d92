#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "emorec/corpus.hpp"
#include "test_support.hpp"

using namespace emorec;

namespace {

PreprocessConfig with_stopwords(std::set<std::string> words) {
  PreprocessConfig cfg;
  cfg.stopwords = std::move(words);
  return cfg;
}

std::string join_tokens(const std::vector<std::string>& toks) {
  std::string s;
  for (const auto& t : toks) s += t + " ";
  return s;
}

}  // namespace

TEST(Ingest, SingleJsonlRecord) {
  std::istringstream in(R"({"id":"a","text":"Great care","emotions":["thankful"]})" "\n");
  auto docs = read_corpus_jsonl(in);
  ASSERT_EQ(docs.size(), 1u);
  EXPECT_EQ(docs[0].id, "a");
  EXPECT_EQ(docs[0].emotions, std::set<std::string>{"thankful"});
  EXPECT_FALSE(docs[0].date);
}

TEST(Ingest, EmptyFileGivesNoDocuments) {
  std::istringstream in("");
  EXPECT_TRUE(read_corpus_jsonl(in).empty());
}

TEST(Ingest, DuplicateEmotionTagsCollapse) {
  std::istringstream in(R"({"id":"a","text":"x","emotions":["happy","happy"]})");
  auto docs = read_corpus_jsonl(in);
  EXPECT_EQ(docs[0].emotions.size(), 1u);
}

TEST(Ingest, MalformedRecordNamesLine) {
  std::istringstream in("{\"id\":\"a\",\"text\":\"x\",\"emotions\":[]}\n{\"id\":\"b\",\"text\":3}\n");
  try {
    read_corpus_jsonl(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::parse_error);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(Ingest, DuplicateIdIsNamed) {
  std::istringstream in("{\"id\":\"dup\",\"text\":\"x\",\"emotions\":[]}\n{\"id\":\"dup\",\"text\":\"y\",\"emotions\":[]}\n");
  try {
    read_corpus_jsonl(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("dup"), std::string::npos);
  }
}

TEST(Ingest, TsvWithOptionalColumns) {
  std::istringstream in(
      "id\ttext\temotions\tdate\tregion\n"
      "a\tGood staff\tthankful|happy\t2019-03-05\tWA\n"
      "b\tLong wait\t\t\t\n");
  auto docs = read_corpus_tsv(in);
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].emotions, (std::set<std::string>{"happy", "thankful"}));
  EXPECT_EQ(*docs[0].date, "2019-03-05");
  EXPECT_EQ(*docs[0].region, "WA");
  EXPECT_TRUE(docs[1].emotions.empty());
  EXPECT_FALSE(docs[1].region);
}

TEST(Ingest, TsvBadDate) {
  std::istringstream in("id\ttext\temotions\tdate\tregion\na\tx\thappy\t2019-13-01\t\n");
  EXPECT_THROW(read_corpus_tsv(in), Error);
}

TEST(Preprocess, ContractsJoinersAndDropsStopwords) {
  auto toks = preprocess("The follow-up didn't help!", with_stopwords({"the", "didnt"}));
  EXPECT_EQ(toks, (std::vector<std::string>{"followup", "help"}));
}

TEST(Preprocess, EmptyText) { EXPECT_TRUE(preprocess("", PreprocessConfig{}).empty()); }

TEST(Preprocess, DigitsSplitTokens) {
  auto toks = preprocess("Ward 3B was CLEAN.", with_stopwords({"was"}));
  EXPECT_EQ(toks, (std::vector<std::string>{"ward", "b", "clean"}));
}

TEST(Preprocess, JoinerNotBetweenLettersBecomesSpace) {
  EXPECT_EQ(preprocess("- well -known 'quoted' it's", PreprocessConfig{}),
            (std::vector<std::string>{"well", "known", "quoted", "its"}));
}

TEST(Preprocess, TypographicApostropheAndNonAscii) {
  EXPECT_EQ(preprocess("Couldn’t CAFÉ", PreprocessConfig{}), (std::vector<std::string>{"couldnt", "café"}));
}

TEST(Preprocess, StopwordFileIsNormalised) {
  std::istringstream in("# comment\nDidn't\nthe\n\n");
  auto words = read_stopwords(in);
  EXPECT_EQ(words, (std::set<std::string>{"didnt", "the"}));
}

TEST(Preprocess, IdempotentOnOwnOutput) {
  util::Rng rng(11);
  const std::string alphabet = "abcXYZ -'’0123!?é\t.";
  auto cfg = with_stopwords({"ab", "c"});
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    for (std::size_t i = 0, n = rng.below(40); i < n; ++i) {
      std::size_t pick = rng.below(alphabet.size());
      // keep multi-byte characters whole
      if (static_cast<unsigned char>(alphabet[pick]) >= 0x80) {
        text += (pick < alphabet.find("é")) ? "’" : "é";
      } else {
        text += alphabet[pick];
      }
    }
    auto once = preprocess(text, cfg);
    EXPECT_EQ(preprocess(join_tokens(once), cfg), once) << text;
  }
}

TEST(BuildCorpus, ThresholdIsCorpusWide) {
  std::vector<RawDocument> raws;
  for (int i = 0; i < 3; ++i) raws.push_back({"d" + std::to_string(i), "pain pain once", {"sad"}, {}, {}});
  PreprocessConfig cfg;  // min_count 5
  auto corpus = build_corpus(raws, cfg);
  EXPECT_TRUE(corpus.vocabulary.contains("pain"));
  EXPECT_EQ(corpus.vocabulary.counts.at("pain"), 6);
  EXPECT_FALSE(corpus.vocabulary.contains("once"));
}

TEST(BuildCorpus, WordBelowFiveDisappears) {
  std::vector<RawDocument> raws = {
      {"a", "rare rare common common common", {"x"}, {}, {}},
      {"b", "rare rare common common", {"x"}, {}, {}},
  };
  auto corpus = build_corpus(raws, PreprocessConfig{});
  for (const auto& d : corpus.documents) EXPECT_EQ(d.bow.count("rare"), 0u);
  EXPECT_TRUE(corpus.vocabulary.contains("common"));
}

TEST(BuildCorpus, UnlabelledDocumentsExcluded) {
  std::vector<RawDocument> raws = {
      {"a", "word word word", {"x"}, {}, {}},
      {"b", "word word word", {}, {}, {}},
  };
  PreprocessConfig cfg;
  cfg.min_count = 1;
  auto corpus = build_corpus(raws, cfg);
  ASSERT_EQ(corpus.documents.size(), 1u);
  EXPECT_EQ(corpus.documents[0].id, "a");
  // the unlabelled document's tokens do not count toward the vocabulary
  EXPECT_EQ(corpus.vocabulary.counts.at("word"), 3);
}

TEST(BuildCorpus, EverythingFilteredIsAnError) {
  std::vector<RawDocument> raws = {{"a", "one", {"x"}, {}, {}}};
  try {
    build_corpus(raws, PreprocessConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_corpus);
    EXPECT_STREQ(e.what(), "empty corpus after preprocessing");
  }
}

TEST(BuildCorpus, RandomisedInvariants) {
  util::Rng rng(5);
  const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta", "eps", "zeta", "eta"};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RawDocument> raws;
    for (std::size_t d = 0, n = 5 + rng.below(30); d < n; ++d) {
      RawDocument r{"d" + std::to_string(d), "", {}, {}, {}};
      for (std::size_t t = 0, len = rng.below(8); t < len; ++t) r.text += words[rng.below(words.size())] + " ";
      if (rng.below(4) != 0) r.emotions.insert(rng.below(2) ? "joy" : "fear");
      raws.push_back(r);
    }
    PreprocessConfig cfg;
    cfg.min_count = 1 + static_cast<std::int64_t>(rng.below(6));
    try {
      auto corpus = build_corpus(raws, cfg);
      for (const auto& [w, c] : corpus.vocabulary.counts) EXPECT_GE(c, cfg.min_count);
      for (const auto& d : corpus.documents) {
        EXPECT_FALSE(d.bow.empty());
        EXPECT_FALSE(d.emotions.empty());
        for (const auto& [w, c] : d.bow) {
          EXPECT_TRUE(corpus.vocabulary.contains(w));
          EXPECT_GE(c, 1);
        }
      }
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::empty_corpus);
    }
  }
}

TEST(SentimentSummary, MixedPost) {
  PolarityMap pol{{"thankful", Polarity::positive}, {"angry", Polarity::negative}};
  auto s = sentiment_summary(std::vector<RawDocument>{{"a", "", {"thankful", "angry"}, {}, {}}}, pol);
  EXPECT_EQ(s.row(PostClass::mixed).count, 1u);
  EXPECT_DOUBLE_EQ(s.row(PostClass::mixed).positivity, 0.5);
}

TEST(SentimentSummary, AllPositive) {
  PolarityMap pol{{"a", Polarity::positive}};
  std::vector<RawDocument> raws = {{"1", "", {"a"}, {}, {}}, {"2", "", {"a"}, {}, {}}};
  auto s = sentiment_summary(raws, pol);
  EXPECT_EQ(s.row(PostClass::positive).count, 2u);
  EXPECT_DOUBLE_EQ(s.row(PostClass::positive).proportion, 1.0);
  EXPECT_DOUBLE_EQ(s.row(PostClass::positive).positivity, 1.0);
}

TEST(SentimentSummary, FourDocuments) {
  PolarityMap pol{{"p1", Polarity::positive}, {"p2", Polarity::positive}, {"n1", Polarity::negative}};
  std::vector<RawDocument> raws = {
      {"1", "", {"p1"}, {}, {}},
      {"2", "", {"p2"}, {}, {}},
      {"3", "", {"n1"}, {}, {}},
      {"4", "", {"p1", "p2", "n1"}, {}, {}},
  };
  auto s = sentiment_summary(raws, pol);
  EXPECT_DOUBLE_EQ(s.row(PostClass::positive).proportion, 0.5);
  EXPECT_DOUBLE_EQ(s.row(PostClass::negative).proportion, 0.25);
  EXPECT_DOUBLE_EQ(s.row(PostClass::mixed).proportion, 0.25);
  EXPECT_DOUBLE_EQ(s.row(PostClass::mixed).positivity, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.row(PostClass::mixed).tags_per_post, 3.0);
}

TEST(SentimentSummary, UnknownEmotionNamed) {
  PolarityMap pol{{"a", Polarity::positive}};
  try {
    sentiment_summary(std::vector<RawDocument>{{"1", "", {"mystery"}, {}, {}}}, pol);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("mystery"), std::string::npos);
  }
}

TEST(SentimentSummary, CountsAndProportionsSumUp) {
  util::Rng rng(3);
  PolarityMap pol{{"a", Polarity::positive}, {"b", Polarity::positive}, {"c", Polarity::negative}};
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<RawDocument> raws;
    for (std::size_t i = 0, n = 1 + rng.below(50); i < n; ++i) {
      RawDocument r{std::to_string(i), "", {}, {}, {}};
      for (const char* e : {"a", "b", "c"})
        if (rng.below(2)) r.emotions.insert(e);
      raws.push_back(r);
    }
    auto s = sentiment_summary(raws, pol);
    std::size_t count = 0;
    double prop = 0;
    for (const auto& r : s.rows) {
      count += r.count;
      prop += r.proportion;
    }
    EXPECT_EQ(count, raws.size());
    EXPECT_NEAR(prop, 1.0, 1e-12);
  }
}

TEST(SentimentSummary, TableSchema) {
  PolarityMap pol{{"a", Polarity::positive}};
  std::ostringstream out;
  write_sentiment_summary(out, sentiment_summary(std::vector<RawDocument>{{"1", "", {"a"}, {}, {}}, {"2", "", {}, {}, {}}}, pol));
  EXPECT_EQ(out.str(),
            "sentiment\tpositivity\tcount\tproportion\ttags_per_post\n"
            "Positive\t1\t1\t0.5\t1\n"
            "Negative\t-\t0\t0\t0\n"
            "Mixed\t-\t0\t0\t0\n"
            "None\t-\t1\t0.5\t0\n");
}

TEST(RankFrequency, TiesBrokenByLabel) {
  PolarityMap pol{{"a", Polarity::positive}, {"b", Polarity::positive}, {"c", Polarity::positive}};
  std::vector<Document> docs;
  for (int i = 0; i < 3; ++i) docs.push_back({"", {{"w", 1}}, {"a", "b"}});
  docs.push_back({"", {{"w", 1}}, {"c"}});
  auto rf = rank_frequency(docs, pol);
  ASSERT_EQ(rf.positive.size(), 3u);
  EXPECT_EQ(rf.positive[0], (EmotionRank{"a", 3, 1}));
  EXPECT_EQ(rf.positive[1], (EmotionRank{"b", 3, 2}));
  EXPECT_EQ(rf.positive[2], (EmotionRank{"c", 1, 3}));
  EXPECT_TRUE(rf.negative.empty());
}

TEST(RankFrequency, EmptyCorpus) {
  auto rf = rank_frequency({}, PolarityMap{});
  EXPECT_TRUE(rf.positive.empty());
  EXPECT_TRUE(rf.negative.empty());
}

TEST(RankFrequency, SplitByPolarity) {
  PolarityMap pol{{"x", Polarity::positive}, {"y", Polarity::negative}};
  std::vector<Document> docs;
  for (int i = 0; i < 5; ++i) docs.push_back({"", {{"w", 1}}, {"x"}});
  for (int i = 0; i < 2; ++i) docs.push_back({"", {{"w", 1}}, {"y"}});
  auto rf = rank_frequency(docs, pol);
  EXPECT_EQ(rf.positive, (std::vector<EmotionRank>{{"x", 5, 1}}));
  EXPECT_EQ(rf.negative, (std::vector<EmotionRank>{{"y", 2, 1}}));
}

TEST(RankFrequency, RanksArePermutation) {
  util::Rng rng(9);
  auto inst = fixtures::random_instance(rng);
  auto rf = rank_frequency(inst.docs, inst.polarity);
  for (const auto* side : {&rf.positive, &rf.negative}) {
    std::vector<std::size_t> ranks;
    for (const auto& r : *side) ranks.push_back(r.rank);
    std::vector<std::size_t> expect(side->size());
    std::iota(expect.begin(), expect.end(), 1u);
    EXPECT_EQ(ranks, expect);
  }
}

TEST(Activity, MonthsAndRegions) {
  std::vector<RawDocument> raws = {
      {"1", "", {}, "2019-03-05", "WA"},
      {"2", "", {}, "2019-03-28", "WA"},
      {"3", "", {}, std::nullopt, "SA"},
      {"4", "", {}, "2020-01-01", std::nullopt},
  };
  auto r = activity_report(raws);
  EXPECT_EQ(r.by_month.at("2019-03"), 2u);
  EXPECT_EQ(r.by_month.at("unknown"), 1u);
  EXPECT_EQ(r.by_region.at("WA"), 2u);
  EXPECT_EQ(r.by_region.at("SA"), 1u);
  EXPECT_EQ(r.by_region.at("unknown"), 1u);
}

TEST(Polarity, ReadsFile) {
  std::istringstream in("emotion\tpolarity\nhappy\tpositive\nsad\tnegative\n");
  auto pol = read_polarity(in);
  EXPECT_TRUE(pol.is_positive("happy"));
  EXPECT_FALSE(pol.is_positive("sad"));
  std::istringstream bad("happy\tmaybe\n");
  EXPECT_THROW(read_polarity(bad), Error);
}
