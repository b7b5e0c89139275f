#pragma once

// Hierarchical disentanglement: parallel per-channel self-attention stacks
// over a sentence's token states, attention pooling for the category
// representation r_c, and the linear mixer + feed-forward for u_s.

#include <string>
#include <vector>

#include "acsa/config.hpp"
#include "acsa/encoder.hpp"
#include "acsa/params.hpp"
#include "acsa/tensor.hpp"

namespace acsa {

// Read-only attention snapshots for the dump-attention command.
struct ChannelDump {
  std::vector<Tensor> cate_attn;   // last-layer n x n matrix per category channel
  std::vector<Tensor> senti_attn;  // same per sentiment channel
  Tensor alpha;                    // 1 x d_c pooling weights
};

// One channel: ch_layers of scaled dot-product self-attention, then the
// feed-forward map back to width d_m, then mean-pool over tokens.
inline Var run_channel(Tape& t, BoundParams& P, Var sent_states, const std::string& prefix,
                       const TrainConfig& cfg, const ForwardMode& mode, Tensor* attn_out) {
  Var x = sent_states;
  for (int l = 0; l < cfg.ch_layers; ++l) {
    std::string pre = prefix + ".l" + std::to_string(l) + ".";
    Var q = t.matmul(x, P[pre + "wq"]);
    Var k = t.matmul(x, P[pre + "wk"]);
    Var v = t.matmul(x, P[pre + "wv"]);
    Var attn = t.row_softmax(t.scale(t.matmul(q, t.transpose(k)),
                                     1.0 / std::sqrt(double(cfg.d_k))));
    if (attn_out && l == cfg.ch_layers - 1) *attn_out = t.val(attn);
    x = t.matmul(attn, v);
  }
  Var h = t.relu(t.add_rowvec(t.matmul(x, P[prefix + ".fc1_w"]), P[prefix + ".fc1_b"]));
  Var out = t.add_rowvec(t.matmul(h, P[prefix + ".fc2_w"]), P[prefix + ".fc2_b"]);
  double p = mode.dropout_rate(cfg);
  if (p > 0.0) out = t.dropout(out, p, *mode.rng);
  return t.mean_rows(out);
}

inline std::vector<Var> category_channels(Tape& t, BoundParams& P, Var sent_states,
                                          const TrainConfig& cfg, const ForwardMode& mode,
                                          ChannelDump* dump = nullptr) {
  std::vector<Var> blocks;
  if (dump) dump->cate_attn.resize(cfg.d_c);
  for (int i = 0; i < cfg.d_c; ++i)
    blocks.push_back(run_channel(t, P, sent_states, "cate.ch" + std::to_string(i), cfg,
                                 mode, dump ? &dump->cate_attn[i] : nullptr));
  return blocks;
}

// score_i = W_j^T tanh(W_M^T v_i + b_M); alpha = softmax(scores);
// r_c = sum_i alpha_i v_i.
inline Var attention_pool(Tape& t, BoundParams& P, const std::vector<Var>& blocks,
                          ChannelDump* dump = nullptr) {
  std::vector<Var> scores;
  for (Var v : blocks) {
    Var m = t.tanh_(t.add_rowvec(t.matmul(v, P["cate.pool.wm"]), P["cate.pool.bm"]));
    scores.push_back(t.matmul(m, P["cate.pool.wj"]));
  }
  Var alpha = t.row_softmax(t.concat_cols(scores));
  if (dump) dump->alpha = t.val(alpha);
  return t.matmul(alpha, t.concat_rows(blocks));
}

// Channels -> concat -> W_U -> feed-forward, producing u_s (1 x d_m).
inline Var sentiment_channels(Tape& t, BoundParams& P, Var sent_states,
                              const TrainConfig& cfg, const ForwardMode& mode,
                              ChannelDump* dump = nullptr) {
  std::vector<Var> pooled;
  if (dump) dump->senti_attn.resize(cfg.d_s);
  for (int i = 0; i < cfg.d_s; ++i)
    pooled.push_back(run_channel(t, P, sent_states, "senti.ch" + std::to_string(i), cfg,
                                 mode, dump ? &dump->senti_attn[i] : nullptr));
  Var u = t.matmul(t.concat_cols(pooled), P["senti.mix.wu"]);
  Var h = t.relu(t.add_rowvec(t.matmul(u, P["senti.mix.fc1_w"]), P["senti.mix.fc1_b"]));
  return t.add_rowvec(t.matmul(h, P["senti.mix.fc2_w"]), P["senti.mix.fc2_b"]);
}

}  // namespace acsa
