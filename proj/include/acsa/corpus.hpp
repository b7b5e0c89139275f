#pragma once

// Review corpus: JSONL ingestion with validation, vocabulary construction,
// model input encoding, and shuffled negatives for the coherence task.

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "acsa/tensor.hpp"

namespace acsa {

class CorpusError : public std::runtime_error {
 public:
  explicit CorpusError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class Polarity : int { positive = 0, neutral = 1, negative = 2 };

inline const char* polarity_name(Polarity p) {
  switch (p) {
    case Polarity::positive: return "positive";
    case Polarity::neutral: return "neutral";
    case Polarity::negative: return "negative";
  }
  return "?";
}

inline Polarity parse_polarity(const std::string& s) {
  if (s == "positive") return Polarity::positive;
  if (s == "neutral") return Polarity::neutral;
  if (s == "negative") return Polarity::negative;
  throw CorpusError("invalid polarity \"" + s + "\" (expected positive|neutral|negative)");
}

struct SentenceRec {
  std::vector<std::string> tokens;
  std::vector<std::pair<int, int>> dep_edges;       // (head, dependent) token positions
  std::vector<std::pair<int, Polarity>> labels;     // (category_id, polarity), unique categories

  bool operator==(const SentenceRec&) const = default;
};

struct ReviewDoc {
  std::string review_id;
  std::vector<SentenceRec> sentences;  // order carries the coherence signal

  bool operator==(const ReviewDoc&) const = default;
};

struct CategorySet {
  std::vector<std::string> names;
  std::map<std::string, int> ids;

  int size() const { return static_cast<int>(names.size()); }
  int id_of(const std::string& name) const {
    auto it = ids.find(name);
    if (it == ids.end()) throw CorpusError("unknown category \"" + name + "\"");
    return it->second;
  }
};

inline CategorySet load_categories(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open category file: " + path);
  CategorySet cs;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    if (cs.ids.count(line)) throw CorpusError("duplicate category \"" + line + "\"");
    cs.ids[line] = static_cast<int>(cs.names.size());
    cs.names.push_back(line);
  }
  if (cs.names.empty()) throw CorpusError("empty category file: " + path);
  return cs;
}

inline void validate_doc(const ReviewDoc& doc, int n_categories, const std::string& where) {
  if (doc.sentences.empty()) throw CorpusError(where + ": review has no sentences");
  for (size_t si = 0; si < doc.sentences.size(); ++si) {
    const SentenceRec& s = doc.sentences[si];
    std::string at = where + ", sentence " + std::to_string(si);
    int n = static_cast<int>(s.tokens.size());
    if (n == 0) throw CorpusError(at + ": empty token list");
    for (auto [h, d] : s.dep_edges)
      if (h < 0 || h >= n || d < 0 || d >= n)
        throw CorpusError(at + ": dep edge (" + std::to_string(h) + "," + std::to_string(d) +
                          ") out of range for " + std::to_string(n) + " tokens");
    std::vector<bool> seen(static_cast<size_t>(n_categories), false);
    for (auto [c, p] : s.labels) {
      (void)p;
      if (c < 0 || c >= n_categories)
        throw CorpusError(at + ": category id " + std::to_string(c) + " out of range");
      if (seen[c]) throw CorpusError(at + ": duplicate category in labels");
      seen[c] = true;
    }
  }
}

inline std::vector<ReviewDoc> load_corpus(const std::string& path, const CategorySet& cats) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file: " + path);
  std::vector<ReviewDoc> docs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw CorpusError(path + ":" + std::to_string(lineno) + ": malformed JSON: " + e.what());
    }
    std::string where = path + ":" + std::to_string(lineno);
    try {
      ReviewDoc doc;
      doc.review_id = j.at("review_id").get<std::string>();
      for (const auto& js : j.at("sentences")) {
        SentenceRec s;
        s.tokens = js.at("tokens").get<std::vector<std::string>>();
        for (const auto& je : js.at("dep_edges"))
          s.dep_edges.emplace_back(je.at(0).get<int>(), je.at(1).get<int>());
        for (const auto& jl : js.at("labels")) {
          int cid = cats.id_of(jl.at("category").get<std::string>());
          Polarity pol = parse_polarity(jl.at("polarity").get<std::string>());
          s.labels.emplace_back(cid, pol);
        }
        doc.sentences.push_back(std::move(s));
      }
      validate_doc(doc, cats.size(), where);
      docs.push_back(std::move(doc));
    } catch (const nlohmann::json::exception& e) {
      throw CorpusError(where + ": bad record: " + e.what());
    } catch (const CorpusError& e) {
      throw CorpusError(where + ": " + e.what());
    }
  }
  return docs;
}

inline void write_corpus(const std::string& path, const std::vector<ReviewDoc>& docs,
                         const CategorySet& cats) {
  std::ofstream out(path);
  if (!out) throw CorpusError("cannot write corpus file: " + path);
  for (const ReviewDoc& doc : docs) {
    nlohmann::json j;
    j["review_id"] = doc.review_id;
    j["sentences"] = nlohmann::json::array();
    for (const SentenceRec& s : doc.sentences) {
      nlohmann::json js;
      js["tokens"] = s.tokens;
      js["dep_edges"] = nlohmann::json::array();
      for (auto [h, d] : s.dep_edges) js["dep_edges"].push_back({h, d});
      js["labels"] = nlohmann::json::array();
      for (auto [c, p] : s.labels)
        js["labels"].push_back({{"category", cats.names[c]}, {"polarity", polarity_name(p)}});
      j["sentences"].push_back(std::move(js));
    }
    out << j.dump() << "\n";
  }
}

// ---- vocabulary ----

struct Vocab {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kSep = 2;
  static constexpr int kCls = 3;

  std::map<std::string, int> token_ids;  // surface -> id, reserved ids excluded

  int size() const { return 4 + static_cast<int>(token_ids.size()); }

  // Surface forms colliding with reserved tokens are escaped to literals.
  static std::string escape(const std::string& tok) {
    if (tok == "[PAD]" || tok == "[UNK]" || tok == "[SEP]" || tok == "[CLS]")
      return "\\" + tok;
    return tok;
  }

  int lookup(const std::string& tok) const {
    auto it = token_ids.find(escape(tok));
    return it == token_ids.end() ? kUnk : it->second;
  }
};

inline Vocab build_vocab(const std::vector<ReviewDoc>& train_docs, int min_count) {
  if (min_count < 1) throw CorpusError("build_vocab: min_count must be >= 1");
  if (train_docs.empty()) throw CorpusError("build_vocab: empty corpus");
  std::map<std::string, int> counts;
  for (const ReviewDoc& d : train_docs)
    for (const SentenceRec& s : d.sentences)
      for (const std::string& t : s.tokens) counts[Vocab::escape(t)] += 1;
  Vocab v;
  int next = 4;
  for (const auto& [tok, c] : counts)
    if (c >= min_count) v.token_ids[tok] = next++;
  return v;
}

// ---- input encoding ----

struct EncodedInput {
  std::vector<int> ids;                          // s1 [SEP] ... sI [SEP] [CLS]
  std::vector<std::pair<int, int>> spans;        // per sentence, [begin, end) token span
  std::vector<int> sep_pos;                      // per sentence, position of its [SEP]
  int cls_pos = -1;
};

inline EncodedInput encode_input(const ReviewDoc& doc, const Vocab& vocab) {
  EncodedInput e;
  for (const SentenceRec& s : doc.sentences) {
    int begin = static_cast<int>(e.ids.size());
    for (const std::string& t : s.tokens) e.ids.push_back(vocab.lookup(t));
    e.spans.emplace_back(begin, static_cast<int>(e.ids.size()));
    e.sep_pos.push_back(static_cast<int>(e.ids.size()));
    e.ids.push_back(Vocab::kSep);
  }
  e.cls_pos = static_cast<int>(e.ids.size());
  e.ids.push_back(Vocab::kCls);
  return e;
}

// Per-sentence input for the syntax pass: s_i [SEP] [CLS].
inline EncodedInput encode_sentence(const SentenceRec& sent, const Vocab& vocab) {
  ReviewDoc one;
  one.review_id = "";
  one.sentences.push_back(sent);
  return encode_input(one, vocab);
}

// ---- negatives for contrastive learning ----

inline std::vector<ReviewDoc> make_negatives(const ReviewDoc& doc, int B,
                                             std::mt19937_64& rng) {
  if (B < 1) throw CorpusError("make_negatives: B must be >= 1");
  size_t I = doc.sentences.size();
  if (I <= 1) return {};
  std::vector<ReviewDoc> negs;
  std::vector<size_t> perm(I);
  for (int b = 0; b < B; ++b) {
    // resample until the permutation differs from the identity
    do {
      for (size_t i = 0; i < I; ++i) perm[i] = i;
      for (size_t i = I - 1; i > 0; --i) {
        std::uniform_int_distribution<size_t> u(0, i);
        std::swap(perm[i], perm[u(rng)]);
      }
    } while (std::is_sorted(perm.begin(), perm.end()));
    ReviewDoc neg;
    neg.review_id = doc.review_id;
    for (size_t i = 0; i < I; ++i) neg.sentences.push_back(doc.sentences[perm[i]]);
    negs.push_back(std::move(neg));
  }
  return negs;
}

}  // namespace acsa
