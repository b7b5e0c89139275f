#pragma once

// Seeded synthetic review generator. Sentences open with a position cue
// ("first", "second", ...) so the original order is recoverable, and each
// sentence pairs aspect tokens with polarity cue words, giving the
// category, sentiment, and coherence objectives learnable signal.

#include <random>
#include <string>
#include <vector>

#include "acsa/corpus.hpp"

namespace acsa {

inline CategorySet synthetic_categories() {
  CategorySet cs;
  for (const char* name : {"food", "service", "price", "ambience"}) {
    cs.ids[name] = static_cast<int>(cs.names.size());
    cs.names.push_back(name);
  }
  return cs;
}

inline std::vector<ReviewDoc> make_synthetic(int n_docs, std::uint64_t seed) {
  static const std::vector<std::vector<std::string>> aspects = {
      {"pizza", "sushi"}, {"waiter", "staff"}, {"bill", "cost"}, {"decor", "music"}};
  static const std::vector<std::vector<std::string>> cues = {
      {"great", "lovely"}, {"okay", "average"}, {"awful", "poor"}};
  static const std::vector<std::string> openers = {"first", "second", "third", "fourth"};
  static const std::vector<std::string> fillers = {"the", "really", "visit", "today"};

  std::mt19937_64 rng(seed);
  auto pick = [&rng](const auto& v) {
    std::uniform_int_distribution<size_t> u(0, v.size() - 1);
    return v[u(rng)];
  };
  std::uniform_int_distribution<int> sent_count(2, 4);
  std::uniform_int_distribution<int> cat_dist(0, 3);
  std::uniform_int_distribution<int> pol_dist(0, 2);
  std::uniform_int_distribution<int> coin(0, 1);

  std::vector<ReviewDoc> docs;
  for (int d = 0; d < n_docs; ++d) {
    ReviewDoc doc;
    doc.review_id = "synth-" + std::to_string(seed) + "-" + std::to_string(d);
    int I = sent_count(rng);
    for (int i = 0; i < I; ++i) {
      SentenceRec s;
      s.tokens.push_back(openers[static_cast<size_t>(i) % openers.size()]);
      int cat = cat_dist(rng);
      int pol = pol_dist(rng);
      s.tokens.push_back(pick(aspects[cat]));
      int aspect_pos = 1;
      s.tokens.push_back("was");
      s.tokens.push_back(pick(cues[pol]));
      int cue_pos = 3;
      if (coin(rng)) s.tokens.push_back(pick(fillers));
      for (size_t j = 1; j < s.tokens.size(); ++j)
        s.dep_edges.emplace_back(static_cast<int>(j) - 1, static_cast<int>(j));
      s.dep_edges.emplace_back(aspect_pos, cue_pos);
      s.labels.emplace_back(cat, static_cast<Polarity>(pol));
      doc.sentences.push_back(std::move(s));
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace acsa
