#pragma once

// Coherence-aware document encoder: embedding + sinusoidal positions +
// a configurable stack of self-attention layers, a linear coherence head,
// and the sentence-ordering contrastive loss.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "acsa/config.hpp"
#include "acsa/corpus.hpp"
#include "acsa/params.hpp"
#include "acsa/tensor.hpp"

namespace acsa {

struct ForwardMode {
  bool training = false;
  std::mt19937_64* rng = nullptr;  // dropout source; required when training

  double dropout_rate(const TrainConfig& cfg) const {
    return training ? cfg.dropout : 0.0;
  }
};

struct EncoderOutput {
  Var token_states;               // L x d_m over the full document sequence
  std::vector<Var> sentence_reps; // one 1 x d_m row per sentence, read at [SEP]
  Var doc_summary;                // 1 x d_m, read at [CLS]
};

inline Tensor sinusoidal_positions(int length, int width) {
  Tensor p(length, width);
  for (int pos = 0; pos < length; ++pos)
    for (int i = 0; i < width; ++i) {
      double angle = pos / std::pow(10000.0, (2.0 * (i / 2)) / width);
      p.at(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  return p;
}

// One standard self-attention encoder layer with residual connections.
inline Var encoder_layer(Tape& t, BoundParams& P, Var x, int layer,
                         const TrainConfig& cfg, const ForwardMode& mode) {
  std::string pre = "encoder.l" + std::to_string(layer) + ".";
  Var q = t.matmul(x, P[pre + "wq"]);
  Var k = t.matmul(x, P[pre + "wk"]);
  Var v = t.matmul(x, P[pre + "wv"]);
  Var scores = t.scale(t.matmul(q, t.transpose(k)), 1.0 / std::sqrt(double(cfg.d_m)));
  Var ctx = t.matmul(t.row_softmax(scores), v);
  Var attn_out = t.matmul(ctx, P[pre + "wo"]);
  double p = mode.dropout_rate(cfg);
  if (p > 0.0) attn_out = t.dropout(attn_out, p, *mode.rng);
  x = t.add(x, attn_out);
  Var h = t.relu(t.add_rowvec(t.matmul(x, P[pre + "ffn_w1"]), P[pre + "ffn_b1"]));
  Var ffn_out = t.add_rowvec(t.matmul(h, P[pre + "ffn_w2"]), P[pre + "ffn_b2"]);
  if (p > 0.0) ffn_out = t.dropout(ffn_out, p, *mode.rng);
  return t.add(x, ffn_out);
}

inline EncoderOutput encode_document(Tape& t, BoundParams& P, const EncodedInput& in,
                                     const TrainConfig& cfg, const ForwardMode& mode) {
  int len = static_cast<int>(in.ids.size());
  if (len > cfg.max_seq_len)
    throw ConfigError("sequence length " + std::to_string(len) + " exceeds max_seq_len " +
                      std::to_string(cfg.max_seq_len));
  Var x = t.gather_rows(P["encoder.embed"], in.ids);
  if (cfg.enc_layers > 0) {
    // zero layers leave the raw embeddings as the token states
    x = t.add(x, t.constant(sinusoidal_positions(len, cfg.d_m)));
    for (int l = 0; l < cfg.enc_layers; ++l) x = encoder_layer(t, P, x, l, cfg, mode);
  }
  EncoderOutput out;
  out.token_states = x;
  for (int sp : in.sep_pos) out.sentence_reps.push_back(t.slice_rows(x, sp, sp + 1));
  out.doc_summary = t.slice_rows(x, in.cls_pos, in.cls_pos + 1);
  return out;
}

// f_theta: scalar coherence score of the [CLS] document summary.
inline Var coherence_score(Tape& t, BoundParams& P, Var doc_summary) {
  return t.add(t.matmul(doc_summary, P["coherence.w"]), P["coherence.b"]);
}

// -log( exp(pos) / (exp(pos) + sum_j exp(neg_j - tau)) ), computed in a
// max-shifted form; the shift is a constant and cancels in the gradient.
inline Var contrastive_loss(Tape& t, Var pos, const std::vector<Var>& negs, double tau) {
  if (tau < 0.0) throw ConfigError("contrastive_loss: margin must be >= 0");
  if (!std::isfinite(t.scalar_value(pos)))
    throw std::runtime_error("contrastive_loss: non-finite positive score");
  for (Var n : negs)
    if (!std::isfinite(t.scalar_value(n)))
      throw std::runtime_error("contrastive_loss: non-finite negative score");
  if (negs.empty()) return t.constant_scalar(0.0);
  double shift = t.scalar_value(pos);
  for (Var n : negs) shift = std::max(shift, t.scalar_value(n) - tau);
  std::vector<Var> terms;
  terms.push_back(t.exp_(t.affine(pos, 1.0, -shift)));
  for (Var n : negs) terms.push_back(t.exp_(t.affine(n, 1.0, -tau - shift)));
  Var denom = t.sum_all(t.concat_cols(terms));
  return t.sub(t.add(t.log_(denom), t.constant_scalar(shift)), pos);
}

}  // namespace acsa
