#pragma once

// Word-level syntactic learning: symmetric-normalized adjacency over the
// dependency tree and graph convolution producing the local sentiment
// vector g_hat.

#include <cmath>
#include <string>
#include <vector>

#include "acsa/config.hpp"
#include "acsa/params.hpp"
#include "acsa/tensor.hpp"

namespace acsa {

// A with self-loops, symmetrized, then D^{-1/2} A D^{-1/2}.
inline Tensor normalize_adjacency(const std::vector<std::pair<int, int>>& edges, int n) {
  Tensor a(n, n);
  for (int i = 0; i < n; ++i) a.at(i, i) = 1.0;
  for (auto [h, d] : edges) {
    if (h < 0 || h >= n || d < 0 || d >= n)
      throw ShapeError("normalize_adjacency: edge (" + std::to_string(h) + "," +
                       std::to_string(d) + ") out of range for n=" + std::to_string(n));
    a.at(h, d) = 1.0;
    a.at(d, h) = 1.0;
  }
  std::vector<double> dinv(n);
  for (int i = 0; i < n; ++i) {
    double deg = 0.0;
    for (int j = 0; j < n; ++j) deg += a.at(i, j);
    dinv[i] = 1.0 / std::sqrt(deg);  // self-loop keeps deg >= 1
  }
  Tensor norm(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) norm.at(i, j) = dinv[i] * a.at(i, j) * dinv[j];
  return norm;
}

// L_g rounds of g <- ReLU(A_hat g W^T + b), then mean-pool and a linear
// output map to g_hat (1 x d_m).
inline Var gcn_forward(Tape& t, BoundParams& P, Var g0, const Tensor& adj,
                       const TrainConfig& cfg) {
  if (t.val(g0).rows != adj.rows)
    throw ShapeError("gcn_forward: " + std::to_string(t.val(g0).rows) + " token rows vs " +
                     adj.shape_str() + " adjacency");
  Var a = t.constant(adj);
  Var g = g0;
  for (int l = 0; l < cfg.gcn_layers; ++l) {
    std::string pre = "gcn.l" + std::to_string(l) + ".";
    Var mixed = t.matmul(a, t.matmul(g, t.transpose(P[pre + "w"])));
    g = t.relu(t.add_rowvec(mixed, P[pre + "b"]));
  }
  Var pooled = t.mean_rows(g);
  return t.add_rowvec(t.matmul(pooled, t.transpose(P["gcn.out.w"])), P["gcn.out.b"]);
}

}  // namespace acsa
