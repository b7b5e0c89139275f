#include <doctest.h>

#include <random>

#include "acsa/model.hpp"
#include "acsa/syntax.hpp"

using namespace acsa;

namespace {

TrainConfig cfg_small(int layers = 1) {
  TrainConfig cfg;
  cfg.d_m = 5;
  cfg.gcn_layers = layers;
  return cfg;
}

Tensor random_states(int n, int d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Tensor t(n, d);
  for (double& x : t.data) x = u(rng);
  return t;
}

}  // namespace

TEST_CASE("no edges: self-loops alone give the identity") {
  Tensor a = normalize_adjacency({}, 2);
  CHECK(a.data == std::vector<double>{1, 0, 0, 1});
}

TEST_CASE("two-node chain normalizes to all 0.5") {
  Tensor a = normalize_adjacency({{0, 1}}, 2);
  for (double v : a.data) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("three-node star: center-to-leaf entry is 1/sqrt(6)") {
  Tensor a = normalize_adjacency({{0, 1}, {0, 2}}, 3);
  CHECK(a.at(0, 1) == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-12));
  CHECK(a.at(0, 2) == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-12));
  CHECK(a.at(1, 2) == 0.0);
}

TEST_CASE("normalized adjacency is symmetric with row sums in (0, sqrt(n)]") {
  // sum_j a_ij / sqrt(d_i d_j) <= d_i / sqrt(d_i) = sqrt(d_i) <= sqrt(n);
  // a unit bound does not hold (a 2-leaf star already reaches 1/3 + 2/sqrt(6))
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<int> nd(1, 8);
    int n = nd(rng);
    std::uniform_int_distribution<int> pd(0, n - 1);
    std::vector<std::pair<int, int>> edges;
    for (int e = 0; e < n; ++e) edges.emplace_back(pd(rng), pd(rng));
    Tensor a = normalize_adjacency(edges, n);
    for (int i = 0; i < n; ++i) {
      double row = 0.0;
      for (int j = 0; j < n; ++j) {
        CHECK(std::abs(a.at(i, j) - a.at(j, i)) < 1e-12);
        row += a.at(i, j);
      }
      CHECK(row > 0.0);
      CHECK(row <= std::sqrt(double(n)) + 1e-12);
    }
  }
}

TEST_CASE("edge endpoints outside [0,n) are rejected") {
  CHECK_THROWS_AS(normalize_adjacency({{0, 3}}, 3), ShapeError);
}

TEST_CASE("identity adjacency with identity weights is a ReLU") {
  TrainConfig cfg = cfg_small(1);
  std::mt19937_64 rng(2);
  ParamMap params = init_params(cfg, 10, 2, rng);
  Tensor eye(cfg.d_m, cfg.d_m);
  for (int i = 0; i < cfg.d_m; ++i) eye.at(i, i) = 1.0;
  params["gcn.l0.w"] = eye;
  params["gcn.l0.b"] = Tensor(1, cfg.d_m);
  params["gcn.out.w"] = eye;
  params["gcn.out.b"] = Tensor(1, cfg.d_m);
  Tensor g0 = random_states(1, cfg.d_m, rng);  // one token: adjacency is I
  Tape t;
  BoundParams P(t, params);
  const Tensor& g_hat = t.val(gcn_forward(t, P, t.constant(g0), normalize_adjacency({}, 1), cfg));
  for (int j = 0; j < cfg.d_m; ++j)
    CHECK(g_hat.at(0, j) == doctest::Approx(std::max(g0.at(0, j), 0.0)).epsilon(1e-12));
}

TEST_CASE("zero input with zero biases yields the output bias") {
  TrainConfig cfg = cfg_small(2);
  std::mt19937_64 rng(3);
  ParamMap params = init_params(cfg, 10, 2, rng);
  params["gcn.l0.b"] = Tensor(1, cfg.d_m);
  params["gcn.l1.b"] = Tensor(1, cfg.d_m);
  std::uniform_real_distribution<double> u(-1, 1);
  for (double& x : params["gcn.out.b"].data) x = u(rng);
  Tape t;
  BoundParams P(t, params);
  const Tensor& g_hat =
      t.val(gcn_forward(t, P, t.constant(Tensor(3, cfg.d_m)), normalize_adjacency({{0, 1}}, 3), cfg));
  CHECK(g_hat.data == params["gcn.out.b"].data);
}

TEST_CASE("pooled output is invariant to consistent token relabeling") {
  TrainConfig cfg = cfg_small(2);
  std::mt19937_64 rng(4);
  ParamMap params = init_params(cfg, 10, 2, rng);
  int n = 5;
  Tensor g0 = random_states(n, cfg.d_m, rng);
  std::vector<std::pair<int, int>> edges = {{0, 1}, {1, 2}, {1, 3}, {3, 4}};
  std::vector<int> perm = {2, 4, 0, 1, 3};  // old index -> new index
  Tensor g0p(n, cfg.d_m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < cfg.d_m; ++j) g0p.at(perm[i], j) = g0.at(i, j);
  std::vector<std::pair<int, int>> edgesp;
  for (auto [h, d] : edges) edgesp.emplace_back(perm[h], perm[d]);

  Tape t;
  BoundParams P(t, params);
  const Tensor& a = t.val(gcn_forward(t, P, t.constant(g0), normalize_adjacency(edges, n), cfg));
  const Tensor& b =
      t.val(gcn_forward(t, P, t.constant(g0p), normalize_adjacency(edgesp, n), cfg));
  for (size_t i = 0; i < a.size(); ++i)
    CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-9));
}

TEST_CASE("one layer is linear on strictly positive pre-activations") {
  TrainConfig cfg = cfg_small(1);
  std::mt19937_64 rng(5);
  ParamMap params = init_params(cfg, 10, 2, rng);
  // large bias keeps every ReLU active, so superposition must hold
  for (double& x : params["gcn.l0.b"].data) x = 50.0;
  int n = 4;
  Tensor adj = normalize_adjacency({{0, 1}, {2, 3}}, n);
  Tensor x1 = random_states(n, cfg.d_m, rng);
  Tensor x2 = random_states(n, cfg.d_m, rng);
  Tensor sum(n, cfg.d_m);
  for (size_t i = 0; i < sum.size(); ++i) sum.data[i] = x1.data[i] + x2.data[i];

  Tape t;
  BoundParams P(t, params);
  auto run = [&](const Tensor& g0) { return t.val(gcn_forward(t, P, t.constant(g0), adj, cfg)); };
  Tensor a = run(x1), b = run(x2), c = run(sum), zero = run(Tensor(n, cfg.d_m));
  // f(x1+x2) - f(x1) - f(x2) + f(0) == 0 for an affine map
  for (size_t i = 0; i < a.size(); ++i)
    CHECK(std::abs(c.data[i] - a.data[i] - b.data[i] + zero.data[i]) < 1e-9);
}

TEST_CASE("default layer count is three") {
  CHECK(TrainConfig().gcn_layers == 3);
}
