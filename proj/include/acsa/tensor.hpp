#pragma once

// Dense 2-D tensors plus a tape-based reverse-mode differentiation graph.
// All arithmetic is in 64-bit reals; scalars are 1x1 tensors and vectors
// are 1xN rows. The tape is built per training step and discarded.

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace acsa {

class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Clamp applied inside every log to keep losses finite.
inline constexpr double kLogEps = 1e-12;

struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {
    if (r <= 0 || c <= 0) throw ShapeError("Tensor: non-positive shape " + shape_str());
  }

  static Tensor scalar(double v) {
    Tensor t(1, 1);
    t.data[0] = v;
    return t;
  }
  static Tensor row(std::vector<double> v) {
    Tensor t;
    t.rows = 1;
    t.cols = static_cast<int>(v.size());
    t.data = std::move(v);
    if (t.cols == 0) throw ShapeError("Tensor::row: empty vector");
    return t;
  }
  static Tensor ones(int r, int c) {
    Tensor t(r, c);
    std::fill(t.data.begin(), t.data.end(), 1.0);
    return t;
  }

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  size_t size() const { return data.size(); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

  std::string shape_str() const {
    std::ostringstream os;
    os << "[" << rows << "x" << cols << "]";
    return os.str();
  }
};

// Handle into a Tape node.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
 public:
  Var leaf(const Tensor& t, bool needs_grad) {
    Node n;
    n.value = t;
    n.needs_grad = needs_grad;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }
  Var constant(const Tensor& t) { return leaf(t, false); }
  Var constant_scalar(double v) { return leaf(Tensor::scalar(v), false); }

  const Tensor& val(Var v) const { return nodes_[v.id].value; }
  double scalar_value(Var v) const {
    const Tensor& t = val(v);
    if (t.rows != 1 || t.cols != 1)
      throw ShapeError("scalar_value: tensor is " + t.shape_str());
    return t.data[0];
  }
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }

  // ---- primitives ----

  Var matmul(Var a, Var b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (A.cols != B.rows)
      throw ShapeError("matmul: " + A.shape_str() + " x " + B.shape_str());
    Tensor C(A.rows, B.cols);
    for (int i = 0; i < A.rows; ++i)
      for (int k = 0; k < A.cols; ++k) {
        double aik = A.at(i, k);
        if (aik == 0.0) continue;
        for (int j = 0; j < B.cols; ++j) C.at(i, j) += aik * B.at(k, j);
      }
    return record(std::move(C), {a, b}, [](Tape& t, Node& n) {
      const Tensor& A = t.nodes_[n.inputs[0]].value;
      const Tensor& B = t.nodes_[n.inputs[1]].value;
      Tensor& dA = t.nodes_[n.inputs[0]].grad;
      Tensor& dB = t.nodes_[n.inputs[1]].grad;
      const Tensor& dC = n.grad;
      if (t.nodes_[n.inputs[0]].needs_grad)
        for (int i = 0; i < A.rows; ++i)
          for (int j = 0; j < B.cols; ++j) {
            double d = dC.at(i, j);
            if (d == 0.0) continue;
            for (int k = 0; k < A.cols; ++k) dA.at(i, k) += d * B.at(k, j);
          }
      if (t.nodes_[n.inputs[1]].needs_grad)
        for (int i = 0; i < A.rows; ++i)
          for (int k = 0; k < A.cols; ++k) {
            double av = A.at(i, k);
            if (av == 0.0) continue;
            for (int j = 0; j < B.cols; ++j) dB.at(k, j) += av * dC.at(i, j);
          }
    });
  }

  Var add(Var a, Var b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (!A.same_shape(B))
      throw ShapeError("add: " + A.shape_str() + " vs " + B.shape_str());
    Tensor C = A;
    for (size_t i = 0; i < C.size(); ++i) C.data[i] += B.data[i];
    return record(std::move(C), {a, b}, [](Tape& t, Node& n) {
      for (int s = 0; s < 2; ++s) {
        Node& in = t.nodes_[n.inputs[s]];
        if (!in.needs_grad) continue;
        for (size_t i = 0; i < n.grad.size(); ++i) in.grad.data[i] += n.grad.data[i];
      }
    });
  }

  // a (n x d) + broadcast row v (1 x d)
  Var add_rowvec(Var a, Var v) {
    const Tensor& A = val(a);
    const Tensor& V = val(v);
    if (V.rows != 1 || V.cols != A.cols)
      throw ShapeError("add_rowvec: " + A.shape_str() + " + " + V.shape_str());
    Tensor C = A;
    for (int i = 0; i < C.rows; ++i)
      for (int j = 0; j < C.cols; ++j) C.at(i, j) += V.at(0, j);
    return record(std::move(C), {a, v}, [](Tape& t, Node& n) {
      Node& ia = t.nodes_[n.inputs[0]];
      Node& iv = t.nodes_[n.inputs[1]];
      if (ia.needs_grad)
        for (size_t i = 0; i < n.grad.size(); ++i) ia.grad.data[i] += n.grad.data[i];
      if (iv.needs_grad)
        for (int i = 0; i < n.grad.rows; ++i)
          for (int j = 0; j < n.grad.cols; ++j) iv.grad.at(0, j) += n.grad.at(i, j);
    });
  }

  Var scale(Var a, double k) { return affine(a, k, 0.0); }

  // k*x + c, elementwise
  Var affine(Var a, double k, double c) {
    Tensor C = val(a);
    for (double& x : C.data) x = k * x + c;
    return record(std::move(C), {a}, [k](Tape& t, Node& n) {
      Node& in = t.nodes_[n.inputs[0]];
      if (!in.needs_grad) return;
      for (size_t i = 0; i < n.grad.size(); ++i) in.grad.data[i] += k * n.grad.data[i];
    });
  }

  Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

  Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat_rows: empty");
    int cols = val(parts[0]).cols;
    int rows = 0;
    for (Var p : parts) {
      if (val(p).cols != cols)
        throw ShapeError("concat_rows: column mismatch " + val(p).shape_str());
      rows += val(p).rows;
    }
    Tensor C(rows, cols);
    int r = 0;
    for (Var p : parts) {
      const Tensor& P = val(p);
      std::copy(P.data.begin(), P.data.end(), C.data.begin() + static_cast<size_t>(r) * cols);
      r += P.rows;
    }
    return record(std::move(C), parts, [](Tape& t, Node& n) {
      int r = 0;
      for (int in_id : n.inputs) {
        Node& in = t.nodes_[in_id];
        int pr = in.value.rows;
        if (in.needs_grad)
          for (int i = 0; i < pr; ++i)
            for (int j = 0; j < in.value.cols; ++j) in.grad.at(i, j) += n.grad.at(r + i, j);
        r += pr;
      }
    });
  }

  Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: empty");
    int rows = val(parts[0]).rows;
    int cols = 0;
    for (Var p : parts) {
      if (val(p).rows != rows)
        throw ShapeError("concat_cols: row mismatch " + val(p).shape_str());
      cols += val(p).cols;
    }
    Tensor C(rows, cols);
    int c = 0;
    for (Var p : parts) {
      const Tensor& P = val(p);
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < P.cols; ++j) C.at(i, c + j) = P.at(i, j);
      c += P.cols;
    }
    return record(std::move(C), parts, [](Tape& t, Node& n) {
      int c = 0;
      for (int in_id : n.inputs) {
        Node& in = t.nodes_[in_id];
        if (in.needs_grad)
          for (int i = 0; i < in.value.rows; ++i)
            for (int j = 0; j < in.value.cols; ++j) in.grad.at(i, j) += n.grad.at(i, c + j);
        c += in.value.cols;
      }
    });
  }

  Var slice_rows(Var a, int r0, int r1) {
    const Tensor& A = val(a);
    if (r0 < 0 || r1 > A.rows || r0 >= r1)
      throw ShapeError("slice_rows: [" + std::to_string(r0) + "," + std::to_string(r1) +
                       ") of " + A.shape_str());
    Tensor C(r1 - r0, A.cols);
    std::copy(A.data.begin() + static_cast<size_t>(r0) * A.cols,
              A.data.begin() + static_cast<size_t>(r1) * A.cols, C.data.begin());
    return record(std::move(C), {a}, [r0](Tape& t, Node& n) {
      Node& in = t.nodes_[n.inputs[0]];
      if (!in.needs_grad) return;
      for (int i = 0; i < n.grad.rows; ++i)
        for (int j = 0; j < n.grad.cols; ++j) in.grad.at(r0 + i, j) += n.grad.at(i, j);
    });
  }

  Var gather_rows(Var a, std::vector<int> idx) {
    const Tensor& A = val(a);
    for (int i : idx)
      if (i < 0 || i >= A.rows)
        throw ShapeError("gather_rows: index " + std::to_string(i) + " of " + A.shape_str());
    Tensor C(static_cast<int>(idx.size()), A.cols);
    for (size_t r = 0; r < idx.size(); ++r)
      for (int j = 0; j < A.cols; ++j) C.at(static_cast<int>(r), j) = A.at(idx[r], j);
    return record(std::move(C), {a}, [idx = std::move(idx)](Tape& t, Node& n) {
      Node& in = t.nodes_[n.inputs[0]];
      if (!in.needs_grad) return;
      for (size_t r = 0; r < idx.size(); ++r)
        for (int j = 0; j < n.grad.cols; ++j)
          in.grad.at(idx[r], j) += n.grad.at(static_cast<int>(r), j);
    });
  }

  Var mean_rows(Var a) {
    const Tensor& A = val(a);
    Tensor C(1, A.cols);
    for (int i = 0; i < A.rows; ++i)
      for (int j = 0; j < A.cols; ++j) C.at(0, j) += A.at(i, j);
    for (double& x : C.data) x /= A.rows;
    return record(std::move(C), {a}, [](Tape& t, Node& n) {
      Node& in = t.nodes_[n.inputs[0]];
      if (!in.needs_grad) return;
      double inv = 1.0 / in.value.rows;
      for (int i = 0; i < in.value.rows; ++i)
        for (int j = 0; j < in.value.cols; ++j) in.grad.at(i, j) += inv * n.grad.at(0, j);
    });
  }

  Var sum_all(Var a) {
    const Tensor& A = val(a);
    double s = 0.0;
    for (double x : A.data) s += x;
    return record(Tensor::scalar(s), {a}, [](Tape& t, Node& n) {
      Node& in = t.nodes_[n.inputs[0]];
      if (!in.needs_grad) return;
      for (double& g : in.grad.data) g += n.grad.data[0];
    });
  }

  Var row_softmax(Var a) {
    const Tensor& A = val(a);
    Tensor C(A.rows, A.cols);
    for (int i = 0; i < A.rows; ++i) {
      double mx = A.at(i, 0);
      for (int j = 1; j < A.cols; ++j) mx = std::max(mx, A.at(i, j));
      double z = 0.0;
      for (int j = 0; j < A.cols; ++j) z += std::exp(A.at(i, j) - mx);
      for (int j = 0; j < A.cols; ++j) C.at(i, j) = std::exp(A.at(i, j) - mx) / z;
    }
    return record(std::move(C), {a}, [](Tape& t, Node& n) {
      Node& in = t.nodes_[n.inputs[0]];
      if (!in.needs_grad) return;
      for (int i = 0; i < n.value.rows; ++i) {
        double dot = 0.0;
        for (int j = 0; j < n.value.cols; ++j) dot += n.grad.at(i, j) * n.value.at(i, j);
        for (int j = 0; j < n.value.cols; ++j)
          in.grad.at(i, j) += (n.grad.at(i, j) - dot) * n.value.at(i, j);
      }
    });
  }

  Var sigmoid(Var a) {
    Tensor C = val(a);
    for (double& x : C.data) x = 1.0 / (1.0 + std::exp(-x));
    return record(std::move(C), {a}, [](Tape& t, Node& n) {
      Node& in = t.nodes_[n.inputs[0]];
      if (!in.needs_grad) return;
      for (size_t i = 0; i < n.grad.size(); ++i) {
        double y = n.value.data[i];
        in.grad.data[i] += n.grad.data[i] * y * (1.0 - y);
      }
    });
  }

  Var tanh_(Var a) {
    Tensor C = val(a);
    for (double& x : C.data) x = std::tanh(x);
    return record(std::move(C), {a}, [](Tape& t, Node& n) {
      Node& in = t.nodes_[n.inputs[0]];
      if (!in.needs_grad) return;
      for (size_t i = 0; i < n.grad.size(); ++i) {
        double y = n.value.data[i];
        in.grad.data[i] += n.grad.data[i] * (1.0 - y * y);
      }
    });
  }

  Var relu(Var a) {
    Tensor C = val(a);
    for (double& x : C.data) x = x > 0.0 ? x : 0.0;
    return record(std::move(C), {a}, [](Tape& t, Node& n) {
      Node& in = t.nodes_[n.inputs[0]];
      if (!in.needs_grad) return;
      for (size_t i = 0; i < n.grad.size(); ++i)
        if (in.value.data[i] > 0.0) in.grad.data[i] += n.grad.data[i];
    });
  }

  // log(max(x, kLogEps))
  Var log_(Var a) {
    Tensor C = val(a);
    for (double& x : C.data) x = std::log(std::max(x, kLogEps));
    return record(std::move(C), {a}, [](Tape& t, Node& n) {
      Node& in = t.nodes_[n.inputs[0]];
      if (!in.needs_grad) return;
      for (size_t i = 0; i < n.grad.size(); ++i)
        in.grad.data[i] += n.grad.data[i] / std::max(in.value.data[i], kLogEps);
    });
  }

  Var exp_(Var a) {
    Tensor C = val(a);
    for (double& x : C.data) x = std::exp(x);
    return record(std::move(C), {a}, [](Tape& t, Node& n) {
      Node& in = t.nodes_[n.inputs[0]];
      if (!in.needs_grad) return;
      for (size_t i = 0; i < n.grad.size(); ++i)
        in.grad.data[i] += n.grad.data[i] * n.value.data[i];
    });
  }

  Var mul(Var a, Var b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (!A.same_shape(B))
      throw ShapeError("mul: " + A.shape_str() + " vs " + B.shape_str());
    Tensor C = A;
    for (size_t i = 0; i < C.size(); ++i) C.data[i] *= B.data[i];
    return record(std::move(C), {a, b}, [](Tape& t, Node& n) {
      Node& ia = t.nodes_[n.inputs[0]];
      Node& ib = t.nodes_[n.inputs[1]];
      if (ia.needs_grad)
        for (size_t i = 0; i < n.grad.size(); ++i)
          ia.grad.data[i] += n.grad.data[i] * ib.value.data[i];
      if (ib.needs_grad)
        for (size_t i = 0; i < n.grad.size(); ++i)
          ib.grad.data[i] += n.grad.data[i] * ia.value.data[i];
    });
  }

  Var transpose(Var a) {
    const Tensor& A = val(a);
    Tensor C(A.cols, A.rows);
    for (int i = 0; i < A.rows; ++i)
      for (int j = 0; j < A.cols; ++j) C.at(j, i) = A.at(i, j);
    return record(std::move(C), {a}, [](Tape& t, Node& n) {
      Node& in = t.nodes_[n.inputs[0]];
      if (!in.needs_grad) return;
      for (int i = 0; i < n.grad.rows; ++i)
        for (int j = 0; j < n.grad.cols; ++j) in.grad.at(j, i) += n.grad.at(i, j);
    });
  }

  // Inverted dropout; p == 0 is the identity.
  Var dropout(Var a, double p, std::mt19937_64& rng) {
    if (p <= 0.0) return a;
    if (p >= 1.0) throw ShapeError("dropout: rate " + std::to_string(p) + " out of [0,1)");
    const Tensor& A = val(a);
    Tensor mask(A.rows, A.cols);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double keep = 1.0 - p;
    for (double& m : mask.data) m = (u(rng) < keep) ? 1.0 / keep : 0.0;
    return mul(a, constant(mask));
  }

  // ---- backward ----

  void backward(Var loss) {
    const Tensor& L = val(loss);
    if (L.rows != 1 || L.cols != 1)
      throw ShapeError("backward: loss must be scalar, got " + L.shape_str());
    for (Node& n : nodes_) {
      n.grad = Tensor(n.value.rows, n.value.cols);
    }
    nodes_[loss.id].grad.data[0] = 1.0;
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[i];
      if (!n.vjp || !n.needs_grad) continue;
      n.vjp(*this, n);
    }
  }

  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<int> inputs;
    std::function<void(Tape&, Node&)> vjp;
    bool needs_grad = false;
  };

  Var record(Tensor&& value, const std::vector<Var>& inputs,
             std::function<void(Tape&, Node&)> vjp) {
    Node n;
    n.value = std::move(value);
    n.inputs.reserve(inputs.size());
    bool ng = false;
    for (Var v : inputs) {
      n.inputs.push_back(v.id);
      ng = ng || nodes_[v.id].needs_grad;
    }
    n.needs_grad = ng;
    if (ng) n.vjp = std::move(vjp);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  // deque keeps value/grad references stable while new nodes are recorded
  std::deque<Node> nodes_;
};

}  // namespace acsa
