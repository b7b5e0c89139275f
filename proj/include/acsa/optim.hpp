#pragma once

// AdamW with decoupled weight decay and two learning-rate tiers.

#include <cmath>
#include <functional>
#include <map>
#include <string>

#include "acsa/params.hpp"

namespace acsa {

class NonFiniteGradient : public std::runtime_error {
 public:
  explicit NonFiniteGradient(const std::string& param)
      : std::runtime_error("non-finite gradient in parameter: " + param) {}
};

struct OptimizerState {
  std::map<std::string, Tensor> m;  // first moments
  std::map<std::string, Tensor> v;  // second moments
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

inline bool all_zero(const Tensor& t) {
  for (double x : t.data)
    if (x != 0.0) return false;
  return true;
}

// One AdamW step. `lr_of` maps a parameter name to its learning rate.
// Decay is decoupled: applied multiplicatively before the adaptive update.
// A parameter whose gradient and moments are all zero is left untouched,
// so losses that never reach it cannot move it through decay alone.
inline void adamw_step(ParamMap& params, const GradMap& grads, OptimizerState& st,
                       const std::function<double(const std::string&)>& lr_of) {
  for (const auto& [name, p] : params) {
    auto git = grads.find(name);
    if (git == grads.end())
      throw std::invalid_argument("adamw_step: missing gradient for " + name);
    if (!git->second.same_shape(p))
      throw ShapeError("adamw_step: gradient shape " + git->second.shape_str() +
                       " vs parameter " + p.shape_str() + " for " + name);
    for (double g : git->second.data)
      if (!std::isfinite(g)) throw NonFiniteGradient(name);
  }
  st.step += 1;
  double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (auto& [name, p] : params) {
    const Tensor& g = grads.at(name);
    Tensor& m = st.m.try_emplace(name, Tensor(p.rows, p.cols)).first->second;
    Tensor& v = st.v.try_emplace(name, Tensor(p.rows, p.cols)).first->second;
    if (all_zero(g) && all_zero(m) && all_zero(v)) continue;
    double lr = lr_of(name);
    for (size_t i = 0; i < p.size(); ++i) {
      p.data[i] *= 1.0 - lr * st.weight_decay;
      m.data[i] = st.beta1 * m.data[i] + (1.0 - st.beta1) * g.data[i];
      v.data[i] = st.beta2 * v.data[i] + (1.0 - st.beta2) * g.data[i] * g.data[i];
      double mhat = m.data[i] / bc1;
      double vhat = v.data[i] / bc2;
      p.data[i] -= lr * mhat / (std::sqrt(vhat) + st.eps);
    }
  }
}

}  // namespace acsa
