#pragma once

// Training orchestration: per-document multi-task steps, the epoch loop
// with dev-split evaluation and best-checkpoint retention, and the
// finite-difference gradient check harness.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "acsa/checkpoint.hpp"
#include "acsa/config.hpp"
#include "acsa/corpus.hpp"
#include "acsa/model.hpp"
#include "acsa/optim.hpp"

namespace acsa {

struct StepResult {
  double l_cl = 0.0, l_acd = 0.0, l_acsc = 0.0, total = 0.0;
};

inline std::vector<ReviewDoc> make_negatives_if_possible(const ReviewDoc& doc, int B,
                                                         std::mt19937_64& rng) {
  return doc.sentences.size() > 1 ? make_negatives(doc, B, rng) : std::vector<ReviewDoc>{};
}

// One document = one optimization step.
inline StepResult train_step(const ReviewDoc& doc, ParamMap& params, OptimizerState& opt,
                             const TrainConfig& cfg, const Vocab& vocab, int m,
                             std::mt19937_64& rng) {
  Tape t;
  BoundParams P(t, params);
  ForwardMode mode{true, &rng};
  std::vector<ReviewDoc> negatives;
  if (cfg.delta1 != 0.0) negatives = make_negatives_if_possible(doc, cfg.neg_samples, rng);
  DocResult res = forward_doc(t, P, doc, vocab, m, cfg, mode, negatives);
  double total = t.scalar_value(res.total);
  if (!std::isfinite(total)) {
    std::ostringstream os;
    os << "non-finite total loss (cl=" << res.l_cl << ", acd=" << res.l_acd
       << ", acsc=" << res.l_acsc << ")";
    throw std::runtime_error(os.str());
  }
  t.backward(res.total);
  GradMap grads = P.collect_grads();
  opt.weight_decay = cfg.weight_decay;
  adamw_step(params, grads, opt, [&cfg](const std::string& name) {
    return is_encoder_param(name) ? cfg.lr_encoder : cfg.lr_other;
  });
  return {res.l_cl, res.l_acd, res.l_acsc, total};
}

inline Metrics evaluate_corpus(ParamMap& params, const std::vector<ReviewDoc>& docs,
                               const Vocab& vocab, int m, const TrainConfig& cfg) {
  std::vector<PredictionSet> preds, gold;
  for (const ReviewDoc& doc : docs) {
    auto doc_preds = predict_doc(params, doc, vocab, m, cfg);
    for (size_t si = 0; si < doc.sentences.size(); ++si) {
      preds.push_back(doc_preds[si]);
      gold.push_back(doc.sentences[si].labels);
    }
  }
  return evaluate(preds, gold, m);
}

struct EpochLog {
  int epoch = 0;
  double l_cl = 0.0, l_acd = 0.0, l_acsc = 0.0;
  Metrics dev;

  nlohmann::json to_json() const {
    nlohmann::json j = dev.to_json();
    j["epoch"] = epoch;
    j["l_cl"] = l_cl;
    j["l_acd"] = l_acd;
    j["l_acsc"] = l_acsc;
    return j;
  }
};

struct TrainResult {
  Checkpoint best;
  std::vector<EpochLog> log;
};

inline std::string rng_state_string(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

// Epoch loop. When no dev corpus is given, a seeded 10% split of the
// training data serves as the dev set. Best checkpoint = highest mean of
// dev ACD and ACSC macro-F1.
inline TrainResult train(std::vector<ReviewDoc> corpus,
                         std::optional<std::vector<ReviewDoc>> dev_corpus,
                         const CategorySet& cats, const TrainConfig& cfg) {
  if (corpus.empty()) throw CorpusError("empty corpus");
  std::mt19937_64 rng(cfg.seed);
  int m = cats.size();

  std::vector<ReviewDoc> train_docs, dev_docs;
  if (dev_corpus) {
    train_docs = std::move(corpus);
    dev_docs = std::move(*dev_corpus);
  } else {
    std::vector<size_t> order(corpus.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    size_t n_dev = corpus.size() >= 10 ? corpus.size() / 10 : (corpus.size() > 1 ? 1 : 0);
    for (size_t i = 0; i < order.size(); ++i)
      (i < n_dev ? dev_docs : train_docs).push_back(std::move(corpus[order[i]]));
  }
  if (dev_docs.empty()) dev_docs = train_docs;

  Vocab vocab = build_vocab(train_docs, cfg.min_count);
  ParamMap params = init_params(cfg, vocab.size(), m, rng);
  OptimizerState opt;
  opt.weight_decay = cfg.weight_decay;

  TrainResult out;
  out.best.cfg = cfg;
  out.best.categories = cats;
  out.best.vocab = vocab;
  out.best.params = params;
  out.best.opt = opt;
  out.best.epoch = 0;
  out.best.rng_state = rng_state_string(rng);

  double best_score = -1.0;
  std::vector<size_t> order(train_docs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochLog log;
    log.epoch = epoch;
    for (size_t i : order) {
      StepResult s = train_step(train_docs[i], params, opt, cfg, vocab, m, rng);
      log.l_cl += s.l_cl;
      log.l_acd += s.l_acd;
      log.l_acsc += s.l_acsc;
    }
    log.l_cl /= train_docs.size();
    log.l_acd /= train_docs.size();
    log.l_acsc /= train_docs.size();
    log.dev = evaluate_corpus(params, dev_docs, vocab, m, cfg);
    out.log.push_back(log);

    double score = 0.5 * (log.dev.acd_macro.f1 + log.dev.acsc_macro.f1);
    if (score > best_score) {
      best_score = score;
      out.best.params = params;
      out.best.opt = opt;
      out.best.epoch = epoch;
      out.best.rng_state = rng_state_string(rng);
    }
  }
  return out;
}

// ---- gradient check ----

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
};

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3});
}

// Compares analytic gradients of the total objective against central
// finite differences for every parameter tensor. Dropout must be off.
// Negatives are fixed up front so both gradient routes see the same graph.
inline std::vector<GradCheckEntry> gradcheck(const ReviewDoc& doc, ParamMap& params,
                                             const Vocab& vocab, int m,
                                             const TrainConfig& cfg, double h,
                                             std::mt19937_64& rng) {
  if (cfg.dropout != 0.0)
    throw ConfigError("gradcheck requires dropout = 0");
  std::vector<ReviewDoc> negatives =
      cfg.delta1 != 0.0 ? make_negatives_if_possible(doc, cfg.neg_samples, rng)
                        : std::vector<ReviewDoc>{};
  ForwardMode mode;  // evaluation mode

  auto loss_value = [&]() {
    Tape t;
    BoundParams P(t, params);
    return t.scalar_value(
        forward_doc(t, P, doc, vocab, m, cfg, mode, negatives).total);
  };

  GradMap analytic;
  {
    Tape t;
    BoundParams P(t, params);
    DocResult res = forward_doc(t, P, doc, vocab, m, cfg, mode, negatives);
    t.backward(res.total);
    analytic = P.collect_grads();
  }

  std::vector<GradCheckEntry> report;
  for (auto& [name, tensor] : params) {
    GradCheckEntry entry{name, 0.0};
    for (size_t i = 0; i < tensor.size(); ++i) {
      double saved = tensor.data[i];
      tensor.data[i] = saved + h;
      double up = loss_value();
      tensor.data[i] = saved - h;
      double down = loss_value();
      tensor.data[i] = saved;
      double fd = (up - down) / (2.0 * h);
      entry.max_rel_err = std::max(entry.max_rel_err, rel_err(analytic[name].data[i], fd));
    }
    report.push_back(std::move(entry));
  }
  return report;
}

// Tiny deterministic fixture for the gradient check command.
inline TrainConfig gradcheck_config() {
  TrainConfig cfg;
  cfg.d_m = 8;
  cfg.d_k = 8;
  cfg.d_h = 16;
  cfg.d_c = 2;
  cfg.d_s = 2;
  cfg.enc_layers = 1;
  cfg.ch_layers = 1;
  cfg.gcn_layers = 2;
  cfg.neg_samples = 1;
  cfg.dropout = 0.0;
  return cfg;
}

inline ReviewDoc gradcheck_doc() {
  ReviewDoc doc;
  doc.review_id = "gradcheck";
  SentenceRec s1;
  s1.tokens = {"alpha", "beta", "gamma", "delta"};
  s1.dep_edges = {{0, 1}, {1, 2}, {1, 3}};
  s1.labels = {{0, Polarity::positive}};
  SentenceRec s2;
  s2.tokens = {"beta", "epsilon", "zeta", "alpha"};
  s2.dep_edges = {{0, 1}, {0, 2}, {2, 3}};
  s2.labels = {{1, Polarity::negative}};
  doc.sentences = {s1, s2};
  return doc;
}

}  // namespace acsa
