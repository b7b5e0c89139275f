#pragma once

// Named parameter storage and the per-step binding of parameters onto a tape.

#include <map>
#include <random>
#include <string>

#include "acsa/tensor.hpp"

namespace acsa {

// Every learnable weight of the network, addressable by stable name.
// std::map keeps iteration order deterministic for serialization and updates.
using ParamMap = std::map<std::string, Tensor>;
using GradMap = std::map<std::string, Tensor>;

// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
inline Tensor init_uniform(int rows, int cols, int fan_in, std::mt19937_64& rng) {
  double b = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-b, b);
  Tensor t(rows, cols);
  for (double& x : t.data) x = u(rng);
  return t;
}

// Binds parameters as tape leaves, one leaf per name per tape.
class BoundParams {
 public:
  BoundParams(Tape& tape, ParamMap& params) : tape_(tape), params_(params) {}

  Var operator[](const std::string& name) {
    auto it = bound_.find(name);
    if (it != bound_.end()) return it->second;
    auto pit = params_.find(name);
    if (pit == params_.end())
      throw std::out_of_range("unknown parameter: " + name);
    Var v = tape_.leaf(pit->second, true);
    bound_.emplace(name, v);
    return v;
  }

  // Gradients for every parameter bound on this tape; unbound parameters
  // (off the active path) get zero tensors of the right shape.
  GradMap collect_grads() const {
    GradMap g;
    for (const auto& [name, tensor] : params_) {
      auto it = bound_.find(name);
      if (it != bound_.end())
        g[name] = tape_.grad(it->second);
      else
        g[name] = Tensor(tensor.rows, tensor.cols);
    }
    return g;
  }

 private:
  Tape& tape_;
  ParamMap& params_;
  std::map<std::string, Var> bound_;
};

}  // namespace acsa
