#pragma once

// Labelled-document ingestion, text normalisation, vocabulary construction
// and descriptive corpus statistics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <locale>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "emorec/error.hpp"
#include "emorec/util.hpp"

namespace emorec {

using BagOfWords = std::map<std::string, std::int64_t>;

struct RawDocument {
  std::string id;
  std::string text;
  std::set<std::string> emotions;
  std::optional<std::string> date;  // YYYY-MM-DD
  std::optional<std::string> region;
};

struct Document {
  std::string id;
  BagOfWords bow;
  std::set<std::string> emotions;

  std::int64_t length() const {
    std::int64_t n = 0;
    for (const auto& [w, c] : bow) n += c;
    return n;
  }
};

struct Vocabulary {
  std::map<std::string, std::int64_t> counts;

  bool contains(const std::string& w) const { return counts.count(w) != 0; }
  std::size_t size() const { return counts.size(); }
  std::vector<std::string> words() const {
    std::vector<std::string> out;
    out.reserve(counts.size());
    for (const auto& [w, c] : counts) out.push_back(w);
    return out;
  }
};

enum class Polarity { positive, negative };

inline std::string_view polarity_name(Polarity p) {
  return p == Polarity::positive ? "positive" : "negative";
}

inline Polarity parse_polarity(std::string_view s) {
  auto t = util::trim(s);
  if (t == "positive" || t == "+") return Polarity::positive;
  if (t == "negative" || t == "-") return Polarity::negative;
  throw Error(Errc::parse_error, "polarity must be 'positive' or 'negative', got '" +
                                    std::string(t) + "'");
}

class PolarityMap {
 public:
  PolarityMap() = default;
  PolarityMap(std::initializer_list<std::pair<const std::string, Polarity>> init) : map_(init) {}

  void set(const std::string& emotion, Polarity p) { map_[emotion] = p; }
  bool contains(const std::string& emotion) const { return map_.count(emotion) != 0; }

  Polarity at(const std::string& emotion) const {
    auto it = map_.find(emotion);
    if (it == map_.end())
      throw Error(Errc::unknown_emotion, "emotion '" + emotion + "' has no polarity");
    return it->second;
  }
  bool is_positive(const std::string& emotion) const { return at(emotion) == Polarity::positive; }

  const std::map<std::string, Polarity>& entries() const { return map_; }
  std::size_t size() const { return map_.size(); }

  // Throws naming the first emotion without a polarity.
  template <typename Range>
  void require_all(const Range& emotions) const {
    for (const auto& e : emotions) (void)at(e);
  }

  bool operator==(const PolarityMap&) const = default;

 private:
  std::map<std::string, Polarity> map_;
};

struct PreprocessConfig {
  std::int64_t min_count = 5;
  std::set<std::string> stopwords;
  bool lowercase = true;
  // Treat ASCII digits as word characters ("v1", "3b") instead of separators.
  bool keep_digits = false;

  bool operator==(const PreprocessConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Text normalisation

namespace detail {

inline bool decode_utf8(std::string_view s, std::size_t& i, char32_t& cp) {
  auto b0 = static_cast<unsigned char>(s[i]);
  int len = b0 < 0x80 ? 1 : (b0 >> 5) == 0x6 ? 2 : (b0 >> 4) == 0xE ? 3 : (b0 >> 3) == 0x1E ? 4 : 0;
  if (len == 0 || i + len > s.size()) {
    ++i;
    return false;
  }
  if (len == 1) {
    cp = b0;
    ++i;
    return true;
  }
  cp = b0 & (0x7F >> (len + 1));
  for (int k = 1; k < len; ++k) {
    auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return false;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += len;
  return true;
}

inline void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Non-ASCII classification goes through the C.UTF-8 wide ctype facet when
// the platform has it; otherwise non-ASCII code points count as letters and
// are left as-is.
inline const std::ctype<wchar_t>* wide_ctype() {
  static const std::ctype<wchar_t>* facet = []() -> const std::ctype<wchar_t>* {
    for (const char* name : {"C.UTF-8", "C.utf8", "en_US.UTF-8"}) {
      try {
        static const std::locale loc(name);
        return &std::use_facet<std::ctype<wchar_t>>(loc);
      } catch (const std::exception&) {
      }
    }
    return nullptr;
  }();
  return facet;
}

inline bool is_letter(char32_t cp) {
  if (cp < 0x80) return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  if (sizeof(wchar_t) < 4) return true;
  if (const auto* f = wide_ctype()) return f->is(std::ctype_base::alpha, static_cast<wchar_t>(cp));
  return true;
}

inline char32_t to_lower(char32_t cp) {
  if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + ('a' - 'A') : cp;
  if (sizeof(wchar_t) < 4) return cp;
  if (const auto* f = wide_ctype()) return static_cast<char32_t>(f->tolower(static_cast<wchar_t>(cp)));
  return cp;
}

inline bool is_joiner(char32_t cp) {
  // hyphen-minus, apostrophe, hyphen, right single quotation mark
  return cp == U'-' || cp == U'\'' || cp == U'‐' || cp == U'’';
}

}  // namespace detail

// Lowercases, deletes hyphens/apostrophes that sit between two letters, turns
// every other non-letter into a space. Runs of spaces may remain.
inline std::string normalise_text(std::string_view text, bool lowercase = true, bool keep_digits = false) {
  auto word_char = [keep_digits](char32_t cp) {
    return detail::is_letter(cp) || (keep_digits && cp >= U'0' && cp <= U'9');
  };
  std::vector<char32_t> cps;
  cps.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    char32_t cp = 0;
    if (!detail::decode_utf8(text, i, cp)) cp = U' ';
    cps.push_back(lowercase ? detail::to_lower(cp) : cp);
  }
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < cps.size(); ++i) {
    char32_t cp = cps[i];
    if (word_char(cp)) {
      detail::encode_utf8(cp, out);
    } else if (detail::is_joiner(cp) && i > 0 && i + 1 < cps.size() && word_char(cps[i - 1]) &&
               word_char(cps[i + 1])) {
      continue;
    } else {
      out.push_back(' ');
    }
  }
  return out;
}

inline std::vector<std::string> preprocess(std::string_view text, const PreprocessConfig& cfg) {
  std::string norm = normalise_text(text, cfg.lowercase, cfg.keep_digits);
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < norm.size()) {
    while (i < norm.size() && norm[i] == ' ') ++i;
    std::size_t j = i;
    while (j < norm.size() && norm[j] != ' ') ++j;
    if (j > i) {
      std::string tok = norm.substr(i, j - i);
      if (!cfg.stopwords.count(tok)) tokens.push_back(std::move(tok));
    }
    i = j;
  }
  return tokens;
}

inline std::vector<std::string> preprocess(const RawDocument& raw, const PreprocessConfig& cfg) {
  return preprocess(raw.text, cfg);
}

inline BagOfWords to_bag(const std::vector<std::string>& tokens) {
  BagOfWords bow;
  for (const auto& t : tokens) ++bow[t];
  return bow;
}

// ---------------------------------------------------------------------------
// Input files

enum class CorpusFormat { jsonl, tsv };

inline CorpusFormat corpus_format_from_path(const std::string& path) {
  auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  if (ext == "tsv" || ext == "txt") return CorpusFormat::tsv;
  return CorpusFormat::jsonl;
}

namespace detail {

inline bool valid_iso_date(std::string_view d) {
  if (d.size() != 10 || d[4] != '-' || d[7] != '-') return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
    if (d[i] < '0' || d[i] > '9') return false;
  int month = (d[5] - '0') * 10 + (d[6] - '0');
  int day = (d[8] - '0') * 10 + (d[9] - '0');
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

inline std::string line_error(std::size_t line, const std::string& msg) {
  return "line " + std::to_string(line) + ": " + msg;
}

inline void push_unique_id(std::vector<RawDocument>& docs, std::set<std::string>& ids,
                           RawDocument doc) {
  if (!ids.insert(doc.id).second)
    throw Error(Errc::parse_error, "duplicate document id '" + doc.id + "'");
  docs.push_back(std::move(doc));
}

}  // namespace detail

inline std::vector<RawDocument> read_corpus_jsonl(std::istream& in) {
  std::vector<RawDocument> docs;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (util::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(Errc::parse_error, detail::line_error(lineno, e.what()));
    }
    auto fail = [&](const std::string& m) { throw Error(Errc::parse_error, detail::line_error(lineno, m)); };
    if (!j.is_object()) fail("record is not an object");
    RawDocument doc;
    if (!j.contains("id") || !j["id"].is_string()) fail("missing string field 'id'");
    if (!j.contains("text") || !j["text"].is_string()) fail("missing string field 'text'");
    if (!j.contains("emotions") || !j["emotions"].is_array()) fail("missing array field 'emotions'");
    doc.id = j["id"].get<std::string>();
    doc.text = j["text"].get<std::string>();
    for (const auto& e : j["emotions"]) {
      if (!e.is_string()) fail("emotion labels must be strings");
      doc.emotions.insert(e.get<std::string>());
    }
    if (j.contains("date") && !j["date"].is_null()) {
      if (!j["date"].is_string() || !detail::valid_iso_date(j["date"].get<std::string>()))
        fail("field 'date' must be an ISO-8601 date");
      doc.date = j["date"].get<std::string>();
    }
    if (j.contains("region") && !j["region"].is_null()) {
      if (!j["region"].is_string()) fail("field 'region' must be a string");
      doc.region = j["region"].get<std::string>();
    }
    detail::push_unique_id(docs, ids, std::move(doc));
  }
  return docs;
}

inline std::vector<RawDocument> read_corpus_tsv(std::istream& in) {
  std::vector<RawDocument> docs;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    util::strip_cr(line);
    if (!header) {
      if (line.empty()) continue;
      auto cols = util::split(line, '\t');
      if (cols.size() < 3 || cols[0] != "id" || cols[1] != "text" || cols[2] != "emotions")
        throw Error(Errc::parse_error,
                    detail::line_error(lineno, "expected header id<TAB>text<TAB>emotions<TAB>date<TAB>region"));
      header = true;
      continue;
    }
    if (line.empty()) continue;
    auto cols = util::split(line, '\t');
    if (cols.size() < 3 || cols.size() > 5)
      throw Error(Errc::parse_error, detail::line_error(lineno, "expected 3 to 5 tab-separated fields"));
    RawDocument doc;
    doc.id = cols[0];
    if (doc.id.empty()) throw Error(Errc::parse_error, detail::line_error(lineno, "empty id"));
    doc.text = cols[1];
    for (auto& e : util::split(cols[2], '|')) {
      auto t = util::trim(e);
      if (!t.empty()) doc.emotions.insert(std::string(t));
    }
    if (cols.size() > 3 && !util::trim(cols[3]).empty()) {
      std::string d(util::trim(cols[3]));
      if (!detail::valid_iso_date(d))
        throw Error(Errc::parse_error, detail::line_error(lineno, "bad date '" + d + "'"));
      doc.date = d;
    }
    if (cols.size() > 4 && !util::trim(cols[4]).empty()) doc.region = std::string(util::trim(cols[4]));
    detail::push_unique_id(docs, ids, std::move(doc));
  }
  return docs;
}

inline std::vector<RawDocument> ingest(const std::string& path, CorpusFormat format) {
  auto in = util::open_input(path);
  try {
    return format == CorpusFormat::jsonl ? read_corpus_jsonl(in) : read_corpus_tsv(in);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

inline void write_corpus_jsonl(std::ostream& out, const std::vector<RawDocument>& docs) {
  for (const auto& d : docs) {
    nlohmann::json j;
    j["id"] = d.id;
    j["text"] = d.text;
    j["emotions"] = nlohmann::json::array();
    for (const auto& e : d.emotions) j["emotions"].push_back(e);
    if (d.date) j["date"] = *d.date;
    if (d.region) j["region"] = *d.region;
    out << j.dump() << '\n';
  }
}

inline PolarityMap read_polarity(std::istream& in) {
  PolarityMap pol;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    util::strip_cr(line);
    if (util::trim(line).empty() || line[0] == '#') continue;
    auto cols = util::split(line, '\t');
    if (cols.size() != 2)
      throw Error(Errc::parse_error, detail::line_error(lineno, "expected emotion<TAB>polarity"));
    if (lineno == 1 && cols[0] == "emotion" && cols[1] == "polarity") continue;
    try {
      pol.set(std::string(util::trim(cols[0])), parse_polarity(cols[1]));
    } catch (const Error& e) {
      throw Error(Errc::parse_error, detail::line_error(lineno, e.what()));
    }
  }
  return pol;
}

inline PolarityMap load_polarity(const std::string& path) {
  auto in = util::open_input(path);
  try {
    return read_polarity(in);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

// Stopwords go through the same normalisation as document text, so an entry
// such as "didn't" matches the token "didnt".
inline std::set<std::string> read_stopwords(std::istream& in) {
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    util::strip_cr(line);
    auto t = util::trim(line);
    if (t.empty() || t[0] == '#') continue;
    for (auto& tok : preprocess(t, PreprocessConfig{})) words.insert(tok);
  }
  return words;
}

inline std::set<std::string> load_stopwords(const std::string& path) {
  auto in = util::open_input(path);
  return read_stopwords(in);
}

inline const std::set<std::string>& default_stopwords() {
  static const std::set<std::string> words = [] {
    std::set<std::string> s;
    for (const char* w :
         {"a",      "about",  "above", "after",  "again",   "against", "all",   "am",     "an",
          "and",    "any",    "are",   "arent",  "as",      "at",      "be",    "because", "been",
          "before", "being",  "below", "between", "both",   "but",     "by",    "can",    "cant",
          "cannot", "could",  "did",   "do",     "does",    "doing",   "dont",  "down",   "during",
          "each",   "few",    "for",   "from",   "further", "had",     "has",   "have",   "having",
          "he",     "her",    "here",  "hers",   "herself", "him",     "himself", "his",  "how",
          "i",      "if",     "in",    "into",   "is",      "it",      "its",   "itself", "just",
          "me",     "more",   "most",  "my",     "myself",  "no",      "nor",   "not",    "now",
          "of",     "off",    "on",    "once",   "only",    "or",      "other", "our",    "ours",
          "ourselves", "out", "over",  "own",    "same",    "she",     "should", "so",    "some",
          "such",   "than",   "that",  "the",    "their",   "theirs",  "them",  "themselves", "then",
          "there",  "these",  "they",  "this",   "those",   "through", "to",    "too",    "under",
          "until",  "up",     "very",  "was",    "we",      "were",    "what",  "when",   "where",
          "which",  "while",  "who",   "whom",   "why",     "will",    "with",  "would",  "you",
          "your",   "yours",  "yourself", "yourselves"})
      s.insert(w);
    return s;
  }();
  return words;
}

// ---------------------------------------------------------------------------
// Corpus construction

struct Corpus {
  std::vector<Document> documents;
  Vocabulary vocabulary;
};

// Unlabelled documents are dropped before the corpus-wide count threshold is
// applied; documents left with no surviving words are dropped afterwards.
inline Corpus build_corpus(const std::vector<RawDocument>& raws, const PreprocessConfig& cfg) {
  if (cfg.min_count < 1) throw Error(Errc::invalid_argument, "min_count must be >= 1");
  std::vector<Document> docs;
  std::map<std::string, std::int64_t> totals;
  for (const auto& raw : raws) {
    if (raw.emotions.empty()) continue;
    Document d{raw.id, to_bag(preprocess(raw, cfg)), raw.emotions};
    for (const auto& [w, c] : d.bow) totals[w] += c;
    docs.push_back(std::move(d));
  }
  Corpus out;
  for (auto& d : docs) {
    for (auto it = d.bow.begin(); it != d.bow.end();) {
      if (totals[it->first] < cfg.min_count)
        it = d.bow.erase(it);
      else
        ++it;
    }
    if (d.bow.empty()) continue;
    for (const auto& [w, c] : d.bow) out.vocabulary.counts[w] += c;
    out.documents.push_back(std::move(d));
  }
  if (out.documents.empty()) throw Error(Errc::empty_corpus, "empty corpus after preprocessing");
  return out;
}

// Emotion labels in first-seen-sorted order across documents.
inline std::vector<std::string> emotion_universe(const std::vector<Document>& docs) {
  std::set<std::string> all;
  for (const auto& d : docs) all.insert(d.emotions.begin(), d.emotions.end());
  return {all.begin(), all.end()};
}

// ---------------------------------------------------------------------------
// Descriptive statistics

enum class PostClass { positive, negative, mixed, none };

inline std::string_view post_class_name(PostClass c) {
  switch (c) {
    case PostClass::positive: return "Positive";
    case PostClass::negative: return "Negative";
    case PostClass::mixed: return "Mixed";
    case PostClass::none: return "None";
  }
  return "";
}

struct SentimentSummaryRow {
  PostClass sentiment;
  double positivity = std::numeric_limits<double>::quiet_NaN();  // undefined for None
  std::size_t count = 0;
  double proportion = 0;
  double tags_per_post = 0;
};

// Rows in the order Positive, Negative, Mixed, None.
struct SentimentSummary {
  std::vector<SentimentSummaryRow> rows;
  std::size_t total = 0;

  const SentimentSummaryRow& row(PostClass c) const { return rows.at(static_cast<std::size_t>(c)); }
};

inline PostClass classify_post(const std::set<std::string>& emotions, const PolarityMap& pol) {
  if (emotions.empty()) return PostClass::none;
  std::size_t pos = 0;
  for (const auto& e : emotions) pos += pol.is_positive(e) ? 1 : 0;
  if (pos == emotions.size()) return PostClass::positive;
  if (pos == 0) return PostClass::negative;
  return PostClass::mixed;
}

inline SentimentSummary sentiment_summary(const std::vector<RawDocument>& raws, const PolarityMap& pol) {
  SentimentSummary s;
  s.total = raws.size();
  std::vector<double> positivity_sum(4, 0.0), tag_sum(4, 0.0);
  s.rows.resize(4);
  for (std::size_t c = 0; c < 4; ++c) s.rows[c].sentiment = static_cast<PostClass>(c);
  for (const auto& d : raws) {
    auto c = static_cast<std::size_t>(classify_post(d.emotions, pol));
    ++s.rows[c].count;
    tag_sum[c] += static_cast<double>(d.emotions.size());
    if (!d.emotions.empty()) {
      std::size_t pos = 0;
      for (const auto& e : d.emotions) pos += pol.is_positive(e) ? 1 : 0;
      positivity_sum[c] += static_cast<double>(pos) / static_cast<double>(d.emotions.size());
    }
  }
  for (std::size_t c = 0; c < 4; ++c) {
    auto& r = s.rows[c];
    if (s.total > 0) r.proportion = static_cast<double>(r.count) / static_cast<double>(s.total);
    if (r.count > 0) {
      r.tags_per_post = tag_sum[c] / static_cast<double>(r.count);
      if (r.sentiment != PostClass::none) r.positivity = positivity_sum[c] / static_cast<double>(r.count);
    }
  }
  return s;
}

inline SentimentSummary sentiment_summary(const std::vector<Document>& docs, const PolarityMap& pol) {
  std::vector<RawDocument> raws;
  raws.reserve(docs.size());
  for (const auto& d : docs) raws.push_back(RawDocument{d.id, {}, d.emotions, std::nullopt, std::nullopt});
  return sentiment_summary(raws, pol);
}

// Sentiment / Positivity / Count / Proportion / Tags per post.
inline void write_sentiment_summary(std::ostream& out, const SentimentSummary& s) {
  out << "sentiment\tpositivity\tcount\tproportion\ttags_per_post\n";
  for (const auto& r : s.rows) {
    out << post_class_name(r.sentiment) << '\t'
        << (std::isnan(r.positivity) ? std::string("-") : util::format_sig(r.positivity, 6)) << '\t'
        << r.count << '\t' << util::format_sig(r.proportion, 6) << '\t'
        << util::format_sig(r.tags_per_post, 6) << '\n';
  }
}

struct EmotionRank {
  std::string emotion;
  std::size_t count = 0;
  std::size_t rank = 0;
  bool operator==(const EmotionRank&) const = default;
};

struct RankFrequency {
  std::vector<EmotionRank> positive;
  std::vector<EmotionRank> negative;
};

inline RankFrequency rank_frequency(const std::vector<Document>& docs, const PolarityMap& pol) {
  std::map<std::string, std::size_t> counts;
  for (const auto& d : docs)
    for (const auto& e : d.emotions) ++counts[e];
  RankFrequency rf;
  for (const auto& [e, c] : counts) {
    auto& side = pol.is_positive(e) ? rf.positive : rf.negative;
    side.push_back({e, c, 0});
  }
  for (auto* side : {&rf.positive, &rf.negative}) {
    // counts is label-ordered, so a stable sort on count keeps the label tie-break
    std::stable_sort(side->begin(), side->end(),
                     [](const EmotionRank& a, const EmotionRank& b) { return a.count > b.count; });
    for (std::size_t i = 0; i < side->size(); ++i) (*side)[i].rank = i + 1;
  }
  return rf;
}

inline void write_rank_frequency(std::ostream& out, const RankFrequency& rf) {
  out << "polarity\temotion\tcount\trank\n";
  for (const auto& r : rf.positive) out << "positive\t" << r.emotion << '\t' << r.count << '\t' << r.rank << '\n';
  for (const auto& r : rf.negative) out << "negative\t" << r.emotion << '\t' << r.count << '\t' << r.rank << '\n';
}

inline constexpr std::string_view kUnknownBucket = "unknown";

struct ActivityReport {
  std::map<std::string, std::size_t> by_month;  // YYYY-MM
  std::map<std::string, std::size_t> by_region;
};

inline ActivityReport activity_report(const std::vector<RawDocument>& raws) {
  ActivityReport r;
  for (const auto& d : raws) {
    ++r.by_month[d.date ? d.date->substr(0, 7) : std::string(kUnknownBucket)];
    ++r.by_region[d.region ? *d.region : std::string(kUnknownBucket)];
  }
  return r;
}

}  // namespace emorec
