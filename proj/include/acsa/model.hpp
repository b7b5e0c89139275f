#pragma once

// Full-model parameter initialization and the per-document forward pass
// tying encoder, disentanglement, syntax, and heads together.

#include <random>
#include <string>
#include <vector>

#include "acsa/config.hpp"
#include "acsa/corpus.hpp"
#include "acsa/disentangle.hpp"
#include "acsa/encoder.hpp"
#include "acsa/heads.hpp"
#include "acsa/params.hpp"
#include "acsa/syntax.hpp"
#include "acsa/tensor.hpp"

namespace acsa {

// Creation order is fixed so a given seed always yields the same weights.
inline ParamMap init_params(const TrainConfig& cfg, int vocab_size, int m,
                            std::mt19937_64& rng) {
  ParamMap p;
  auto mat = [&](const std::string& name, int r, int c, int fan_in) {
    p[name] = init_uniform(r, c, fan_in, rng);
  };
  auto bias = [&](const std::string& name, int c) { p[name] = Tensor(1, c); };

  mat("encoder.embed", vocab_size, cfg.d_m, cfg.d_m);
  for (int l = 0; l < cfg.enc_layers; ++l) {
    std::string pre = "encoder.l" + std::to_string(l) + ".";
    for (const char* w : {"wq", "wk", "wv", "wo"}) mat(pre + w, cfg.d_m, cfg.d_m, cfg.d_m);
    mat(pre + "ffn_w1", cfg.d_m, cfg.d_h, cfg.d_m);
    bias(pre + "ffn_b1", cfg.d_h);
    mat(pre + "ffn_w2", cfg.d_h, cfg.d_m, cfg.d_h);
    bias(pre + "ffn_b2", cfg.d_m);
  }
  mat("coherence.w", cfg.d_m, 1, cfg.d_m);
  bias("coherence.b", 1);

  auto channel = [&](const std::string& stack, int count) {
    for (int i = 0; i < count; ++i) {
      std::string ch = stack + ".ch" + std::to_string(i);
      for (int l = 0; l < cfg.ch_layers; ++l) {
        int in_w = (l == 0) ? cfg.d_m : cfg.d_k;
        std::string pre = ch + ".l" + std::to_string(l) + ".";
        for (const char* w : {"wq", "wk", "wv"}) mat(pre + w, in_w, cfg.d_k, in_w);
      }
      mat(ch + ".fc1_w", cfg.d_k, cfg.d_h, cfg.d_k);
      bias(ch + ".fc1_b", cfg.d_h);
      mat(ch + ".fc2_w", cfg.d_h, cfg.d_m, cfg.d_h);
      bias(ch + ".fc2_b", cfg.d_m);
    }
  };
  channel("cate", cfg.d_c);
  mat("cate.pool.wm", cfg.d_m, cfg.d_m, cfg.d_m);
  bias("cate.pool.bm", cfg.d_m);
  mat("cate.pool.wj", cfg.d_m, 1, cfg.d_m);
  channel("senti", cfg.d_s);
  mat("senti.mix.wu", cfg.d_s * cfg.d_m, cfg.d_m, cfg.d_s * cfg.d_m);
  mat("senti.mix.fc1_w", cfg.d_m, cfg.d_h, cfg.d_m);
  bias("senti.mix.fc1_b", cfg.d_h);
  mat("senti.mix.fc2_w", cfg.d_h, cfg.d_m, cfg.d_h);
  bias("senti.mix.fc2_b", cfg.d_m);

  for (int l = 0; l < cfg.gcn_layers; ++l) {
    std::string pre = "gcn.l" + std::to_string(l) + ".";
    mat(pre + "w", cfg.d_m, cfg.d_m, cfg.d_m);
    bias(pre + "b", cfg.d_m);
  }
  mat("gcn.out.w", cfg.d_m, cfg.d_m, cfg.d_m);
  bias("gcn.out.b", cfg.d_m);

  mat("acd.w", m, cfg.d_m, cfg.d_m);
  bias("acd.b", m);
  for (int j = 0; j < m; ++j) mat("acsc.w" + std::to_string(j), 3, 2 * cfg.d_m, 2 * cfg.d_m);
  bias("acsc.b", 3);
  return p;
}

inline bool is_encoder_param(const std::string& name) {
  return name.rfind("encoder.", 0) == 0;
}

struct DocResult {
  Var total;
  double l_cl = 0.0, l_acd = 0.0, l_acsc = 0.0;
  double pos_score = 0.0;
  std::vector<double> neg_scores;
  std::vector<Tensor> p_c;           // per sentence, 1 x m
  std::vector<Tensor> p_s;           // per sentence, m x 3
  std::vector<ChannelDump> dumps;    // per sentence when requested
};

// Coherence score of a document under the current parameters.
inline double score_document(Tape& t, BoundParams& P, const ReviewDoc& doc,
                             const Vocab& vocab, const TrainConfig& cfg,
                             const ForwardMode& mode) {
  EncoderOutput enc = encode_document(t, P, encode_input(doc, vocab), cfg, mode);
  return t.scalar_value(coherence_score(t, P, enc.doc_summary));
}

inline DocResult forward_doc(Tape& t, BoundParams& P, const ReviewDoc& doc,
                             const Vocab& vocab, int m, const TrainConfig& cfg,
                             const ForwardMode& mode,
                             const std::vector<ReviewDoc>& negatives,
                             bool want_dump = false) {
  DocResult res;
  EncodedInput in = encode_input(doc, vocab);
  EncoderOutput enc = encode_document(t, P, in, cfg, mode);

  // contrastive term: original vs shuffled orderings
  Var l_cl;
  if (negatives.empty()) {
    l_cl = t.constant_scalar(0.0);
  } else {
    Var pos = coherence_score(t, P, enc.doc_summary);
    res.pos_score = t.scalar_value(pos);
    std::vector<Var> negs;
    for (const ReviewDoc& nd : negatives) {
      EncoderOutput nenc = encode_document(t, P, encode_input(nd, vocab), cfg, mode);
      Var s = coherence_score(t, P, nenc.doc_summary);
      negs.push_back(s);
      res.neg_scores.push_back(t.scalar_value(s));
    }
    l_cl = contrastive_loss(t, pos, negs, cfg.margin);
  }

  // per-sentence supervised terms
  Var l_acd = t.constant_scalar(0.0);
  Var l_acsc = t.constant_scalar(0.0);
  if (want_dump) res.dumps.resize(doc.sentences.size());
  for (size_t si = 0; si < doc.sentences.size(); ++si) {
    const SentenceRec& sent = doc.sentences[si];
    auto [b, e] = in.spans[si];
    Var states = t.slice_rows(enc.token_states, b, e);
    ChannelDump* dump = want_dump ? &res.dumps[si] : nullptr;

    Var r_c = cfg.ablate_cate_dis
                  ? t.mean_rows(states)
                  : attention_pool(t, P, category_channels(t, P, states, cfg, mode, dump),
                                   dump);
    Var u_s = cfg.ablate_senti_dis ? t.mean_rows(states)
                                   : sentiment_channels(t, P, states, cfg, mode, dump);

    Var g_hat;
    if (cfg.ablate_wsyn) {
      g_hat = t.constant(Tensor(1, cfg.d_m));
    } else {
      EncodedInput sin = encode_sentence(sent, vocab);
      EncoderOutput senc = encode_document(t, P, sin, cfg, mode);
      int n = static_cast<int>(sent.tokens.size());
      Var g0 = t.slice_rows(senc.token_states, 0, n);
      g_hat = gcn_forward(t, P, g0, normalize_adjacency(sent.dep_edges, n), cfg);
    }
    Var r_s = t.concat_cols({g_hat, u_s});

    std::vector<double> y_c(m, 0.0);
    std::vector<std::vector<double>> y_s(m, std::vector<double>(3, 0.0));
    for (auto [c, pol] : sent.labels) {
      y_c[c] = 1.0;
      y_s[c][static_cast<int>(pol)] = 1.0;
    }
    Var p_c = acd_predict(t, P, r_c);
    Var p_s = acsc_predict(t, P, r_s, m);
    res.p_c.push_back(t.val(p_c));
    res.p_s.push_back(t.val(p_s));
    l_acd = t.add(l_acd, acd_loss(t, p_c, y_c));
    l_acsc = t.add(l_acsc, acsc_loss(t, p_s, y_s, y_c));
  }

  res.l_cl = t.scalar_value(l_cl);
  res.l_acd = t.scalar_value(l_acd);
  res.l_acsc = t.scalar_value(l_acsc);
  res.total = total_loss(t, l_cl, l_acd, l_acsc, cfg.delta1, cfg.delta2, cfg.delta3);
  return res;
}

// Inference: hierarchical predictions for every sentence of a document.
inline std::vector<PredictionSet> predict_doc(ParamMap& params, const ReviewDoc& doc,
                                              const Vocab& vocab, int m,
                                              const TrainConfig& cfg,
                                              std::vector<ChannelDump>* dumps = nullptr) {
  Tape t;
  BoundParams P(t, params);
  ForwardMode mode;  // evaluation: no dropout
  DocResult res = forward_doc(t, P, doc, vocab, m, cfg, mode, {}, dumps != nullptr);
  std::vector<PredictionSet> out;
  for (size_t si = 0; si < doc.sentences.size(); ++si)
    out.push_back(hierarchical_predict(res.p_c[si], res.p_s[si], cfg.threshold));
  if (dumps) *dumps = std::move(res.dumps);
  return out;
}

}  // namespace acsa
