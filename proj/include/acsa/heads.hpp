#pragma once

// Multi-task heads: category detection, per-category sentiment
// classification, the combined objective, hierarchical prediction, and
// evaluation metrics.

#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "acsa/config.hpp"
#include "acsa/corpus.hpp"
#include "acsa/params.hpp"
#include "acsa/tensor.hpp"

namespace acsa {

// p^c = sigmoid(W^c r_c + b^c), one probability per category.
inline Var acd_predict(Tape& t, BoundParams& P, Var r_c) {
  return t.sigmoid(t.add(t.matmul(r_c, t.transpose(P["acd.w"])), P["acd.b"]));
}

// Binary cross entropy over the m categories; logs are eps-clamped.
inline Var acd_loss(Tape& t, Var p_c, const std::vector<double>& y_c) {
  const Tensor& p = t.val(p_c);
  if (p.rows != 1 || p.cols != static_cast<int>(y_c.size()))
    throw ShapeError("acd_loss: " + p.shape_str() + " vs " +
                     std::to_string(y_c.size()) + " labels");
  Tensor y = Tensor::row(y_c);
  Tensor yneg = y;
  for (double& v : yneg.data) v = 1.0 - v;
  Var pos_term = t.mul(t.constant(y), t.log_(p_c));
  Var neg_term = t.mul(t.constant(yneg), t.log_(t.affine(p_c, -1.0, 1.0)));
  return t.scale(t.sum_all(t.add(pos_term, neg_term)), -1.0);
}

// Row j = softmax(W^s_j r_s + b^s); r_s = [g_hat, u_s].
inline Var acsc_predict(Tape& t, BoundParams& P, Var r_s, int m) {
  std::vector<Var> rows;
  for (int j = 0; j < m; ++j) {
    Var logits = t.add(t.matmul(r_s, t.transpose(P["acsc.w" + std::to_string(j)])),
                       P["acsc.b"]);
    rows.push_back(t.row_softmax(logits));
  }
  return t.concat_rows(rows);
}

// Cross entropy masked to gold-present categories: rows with y^c_i = 0
// contribute exactly zero regardless of their probabilities.
inline Var acsc_loss(Tape& t, Var p_s, const std::vector<std::vector<double>>& y_s,
                     const std::vector<double>& y_c) {
  const Tensor& p = t.val(p_s);
  int m = static_cast<int>(y_c.size());
  if (p.rows != m || p.cols != 3)
    throw ShapeError("acsc_loss: " + p.shape_str() + " vs m=" + std::to_string(m));
  Tensor mask(m, 3);
  for (int i = 0; i < m; ++i)
    if (y_c[i] != 0.0)
      for (int j = 0; j < 3; ++j) mask.at(i, j) = y_s[i][j];
  return t.scale(t.sum_all(t.mul(t.constant(mask), t.log_(p_s))), -1.0);
}

inline Var total_loss(Tape& t, Var l_cl, Var l_acd, Var l_acsc, double d1, double d2,
                      double d3) {
  return t.add(t.scale(l_cl, d1), t.add(t.scale(l_acd, d2), t.scale(l_acsc, d3)));
}

// Emit (category, argmax polarity) for every category at or above the
// detection threshold; argmax ties break toward the earlier polarity.
inline std::vector<std::pair<int, Polarity>> hierarchical_predict(const Tensor& p_c,
                                                                  const Tensor& p_s,
                                                                  double threshold) {
  std::vector<std::pair<int, Polarity>> out;
  for (int i = 0; i < p_c.cols; ++i) {
    if (p_c.at(0, i) < threshold) continue;
    int best = 0;
    for (int j = 1; j < 3; ++j)
      if (p_s.at(i, j) > p_s.at(i, best)) best = j;
    out.emplace_back(i, static_cast<Polarity>(best));
  }
  return out;
}

// ---- metrics ----

struct Prf {
  double p = 0.0, r = 0.0, f1 = 0.0;
};

struct Metrics {
  Prf acd_macro, acd_micro, acsc_macro, acsc_micro;

  nlohmann::json to_json() const {
    nlohmann::json j;
    auto put = [&j](const std::string& k, const Prf& v) {
      j[k + ".p"] = v.p;
      j[k + ".r"] = v.r;
      j[k + ".f1"] = v.f1;
    };
    put("acd.macro", acd_macro);
    put("acd.micro", acd_micro);
    put("acsc.macro", acsc_macro);
    put("acsc.micro", acsc_micro);
    return j;
  }
};

using PredictionSet = std::vector<std::pair<int, Polarity>>;

namespace detail {

struct Counts {
  long tp = 0, fp = 0, fn = 0;
};

inline Prf prf_of(const Counts& c) {
  Prf out;  // 0/0 ratios are defined as 0
  out.p = (c.tp + c.fp) ? double(c.tp) / (c.tp + c.fp) : 0.0;
  out.r = (c.tp + c.fn) ? double(c.tp) / (c.tp + c.fn) : 0.0;
  out.f1 = (out.p + out.r > 0.0) ? 2.0 * out.p * out.r / (out.p + out.r) : 0.0;
  return out;
}

// Macro over categories that occur in gold or predictions; micro pooled.
inline std::pair<Prf, Prf> aggregate(const std::vector<Counts>& per_cat) {
  Prf macro;
  Counts pooled;
  int active = 0;
  for (const Counts& c : per_cat) {
    pooled.tp += c.tp;
    pooled.fp += c.fp;
    pooled.fn += c.fn;
    if (c.tp + c.fp + c.fn == 0) continue;
    Prf p = prf_of(c);
    macro.p += p.p;
    macro.r += p.r;
    macro.f1 += p.f1;
    ++active;
  }
  if (active) {
    macro.p /= active;
    macro.r /= active;
    macro.f1 /= active;
  }
  return {macro, prf_of(pooled)};
}

}  // namespace detail

// One entry per sentence in both arguments; ACD scores category matches,
// ACSC scores exact (category, polarity) matches.
inline Metrics evaluate(const std::vector<PredictionSet>& preds,
                        const std::vector<PredictionSet>& gold, int m) {
  if (preds.size() != gold.size())
    throw std::invalid_argument("evaluate: " + std::to_string(preds.size()) +
                                " predictions vs " + std::to_string(gold.size()) +
                                " gold sentences");
  std::vector<detail::Counts> acd(m), acsc(m);
  for (size_t s = 0; s < preds.size(); ++s) {
    std::set<int> gold_cats, pred_cats;
    std::set<std::pair<int, int>> gold_pairs, pred_pairs;
    for (auto [c, p] : gold[s]) {
      gold_cats.insert(c);
      gold_pairs.insert({c, static_cast<int>(p)});
    }
    for (auto [c, p] : preds[s]) {
      pred_cats.insert(c);
      pred_pairs.insert({c, static_cast<int>(p)});
    }
    for (int c : pred_cats) (gold_cats.count(c) ? acd[c].tp : acd[c].fp) += 1;
    for (int c : gold_cats)
      if (!pred_cats.count(c)) acd[c].fn += 1;
    for (auto pr : pred_pairs)
      (gold_pairs.count(pr) ? acsc[pr.first].tp : acsc[pr.first].fp) += 1;
    for (auto pr : gold_pairs)
      if (!pred_pairs.count(pr)) acsc[pr.first].fn += 1;
  }
  Metrics out;
  std::tie(out.acd_macro, out.acd_micro) = detail::aggregate(acd);
  std::tie(out.acsc_macro, out.acsc_micro) = detail::aggregate(acsc);
  return out;
}

}  // namespace acsa
