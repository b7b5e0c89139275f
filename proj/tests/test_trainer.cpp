#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "acsa/synthetic.hpp"
#include "acsa/trainer.hpp"

using namespace acsa;

namespace {

struct TempPath {
  std::string path;
  explicit TempPath(const std::string& name)
      : path((std::filesystem::temp_directory_path() /
              ("acsa_trainer_" + std::to_string(::getpid()) + "_" + name))
                 .string()) {}
  ~TempPath() { std::filesystem::remove(path); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

TrainConfig tiny_cfg() {
  TrainConfig cfg = gradcheck_config();
  cfg.neg_samples = 1;
  return cfg;
}

struct Fixture {
  TrainConfig cfg = tiny_cfg();
  ReviewDoc doc = gradcheck_doc();
  Vocab vocab;
  ParamMap params;
  int m = 2;

  explicit Fixture(unsigned long long seed = 1) {
    vocab = build_vocab({doc}, 1);
    std::mt19937_64 rng(seed);
    params = init_params(cfg, vocab.size(), m, rng);
  }
};

Checkpoint small_checkpoint(unsigned long long seed) {
  Fixture fx(seed);
  Checkpoint ck;
  ck.cfg = fx.cfg;
  ck.categories = synthetic_categories();
  ck.vocab = fx.vocab;
  ck.params = fx.params;
  std::mt19937_64 rng(seed + 1);
  OptimizerState opt;
  opt.step = 7;
  for (const auto& [name, t] : fx.params) {
    Tensor m(t.rows, t.cols), v(t.rows, t.cols);
    std::uniform_real_distribution<double> u(0, 1);
    for (double& x : m.data) x = u(rng);
    for (double& x : v.data) x = u(rng);
    opt.m[name] = m;
    opt.v[name] = v;
  }
  ck.opt = opt;
  ck.epoch = 3;
  ck.rng_state = rng_state_string(rng);
  return ck;
}

}  // namespace

TEST_CASE("analytic gradients match central differences on a tiny model") {
  // seed chosen so no ReLU pre-activation lies within h of the kink
  Fixture fx(42);
  std::mt19937_64 rng(5);
  auto report = gradcheck(fx.doc, fx.params, fx.vocab, fx.m, fx.cfg, 1e-5, rng);
  CHECK(report.size() == fx.params.size());
  for (const auto& entry : report) {
    INFO("parameter ", entry.name);
    CHECK(entry.max_rel_err < 1e-4);
  }
}

TEST_CASE("gradcheck refuses an active dropout") {
  Fixture fx;
  fx.cfg.dropout = 0.1;
  std::mt19937_64 rng(6);
  CHECK_THROWS_AS(gradcheck(fx.doc, fx.params, fx.vocab, fx.m, fx.cfg, 1e-5, rng),
                  ConfigError);
}

TEST_CASE("all loss weights zero: a step leaves every parameter bitwise unchanged") {
  Fixture fx;
  fx.cfg.delta1 = fx.cfg.delta2 = fx.cfg.delta3 = 0.0;
  ParamMap before = fx.params;
  OptimizerState opt;
  std::mt19937_64 rng(7);
  StepResult s = train_step(fx.doc, fx.params, opt, fx.cfg, fx.vocab, fx.m, rng);
  CHECK(s.total == 0.0);
  for (const auto& [name, t] : fx.params) CHECK(t.data == before[name].data);
}

TEST_CASE("single-sentence document contributes no contrastive loss") {
  Fixture fx;
  ReviewDoc one;
  one.sentences.push_back(fx.doc.sentences[0]);
  Vocab vocab = build_vocab({one}, 1);
  std::mt19937_64 rng(8);
  ParamMap params = init_params(fx.cfg, vocab.size(), fx.m, rng);
  OptimizerState opt;
  StepResult s = train_step(one, params, opt, fx.cfg, vocab, fx.m, rng);
  CHECK(s.l_cl == 0.0);
  CHECK(s.l_acd > 0.0);
}

TEST_CASE("reported total equals the weighted component sum") {
  Fixture fx;
  fx.cfg.delta1 = 0.2;
  fx.cfg.delta2 = 0.4;
  fx.cfg.delta3 = 0.7;
  OptimizerState opt;
  std::mt19937_64 rng(9);
  StepResult s = train_step(fx.doc, fx.params, opt, fx.cfg, fx.vocab, fx.m, rng);
  CHECK(s.total ==
        doctest::Approx(0.2 * s.l_cl + 0.4 * s.l_acd + 0.7 * s.l_acsc).epsilon(1e-12));
}

TEST_CASE("step with zero learning rates changes nothing but the moments") {
  Fixture fx;
  ParamMap before = fx.params;
  OptimizerState opt;
  std::mt19937_64 rng(10);
  Tape t;
  BoundParams P(t, fx.params);
  ForwardMode mode{true, &rng};
  DocResult res = forward_doc(t, P, fx.doc, fx.vocab, fx.m, fx.cfg, mode,
                              make_negatives(fx.doc, 1, rng));
  t.backward(res.total);
  GradMap grads = P.collect_grads();
  opt.weight_decay = fx.cfg.weight_decay;
  adamw_step(fx.params, grads, opt, [](const std::string&) { return 0.0; });
  for (const auto& [name, tns] : fx.params) CHECK(tns.data == before[name].data);
  CHECK(opt.step == 1);
}

TEST_CASE("ablated syntax branch: gcn parameters never move") {
  Fixture fx;
  fx.cfg.ablate_wsyn = true;
  ParamMap before = fx.params;
  OptimizerState opt;
  std::mt19937_64 rng(11);
  for (int step = 0; step < 3; ++step)
    train_step(fx.doc, fx.params, opt, fx.cfg, fx.vocab, fx.m, rng);
  bool other_moved = false;
  for (const auto& [name, t] : fx.params) {
    if (name.rfind("gcn.", 0) == 0)
      CHECK(t.data == before[name].data);
    else if (t.data != before[name].data)
      other_moved = true;
  }
  CHECK(other_moved);
}

TEST_CASE("contrastive weight zero: coherence head never moves") {
  Fixture fx;
  fx.cfg.delta1 = 0.0;
  ParamMap before = fx.params;
  OptimizerState opt;
  std::mt19937_64 rng(12);
  for (int step = 0; step < 3; ++step)
    train_step(fx.doc, fx.params, opt, fx.cfg, fx.vocab, fx.m, rng);
  CHECK(fx.params["coherence.w"].data == before["coherence.w"].data);
  CHECK(fx.params["coherence.b"].data == before["coherence.b"].data);
}

TEST_CASE("checkpoint round-trip restores every field") {
  Checkpoint ck = small_checkpoint(20);
  TempPath file("roundtrip.ckpt");
  save_checkpoint(file.path, ck);
  Checkpoint back = load_checkpoint(file.path);
  CHECK(back.cfg.to_json() == ck.cfg.to_json());
  CHECK(back.categories.names == ck.categories.names);
  CHECK(back.vocab.token_ids == ck.vocab.token_ids);
  CHECK(back.epoch == ck.epoch);
  CHECK(back.rng_state == ck.rng_state);
  CHECK(back.opt.step == ck.opt.step);
  REQUIRE(back.params.size() == ck.params.size());
  for (const auto& [name, t] : ck.params) {
    CHECK(back.params.at(name).rows == t.rows);
    CHECK(back.params.at(name).data == t.data);
    CHECK(back.opt.m.at(name).data == ck.opt.m.at(name).data);
    CHECK(back.opt.v.at(name).data == ck.opt.v.at(name).data);
  }
}

TEST_CASE("load then save is byte-identical") {
  Checkpoint ck = small_checkpoint(21);
  TempPath first("bytes_a.ckpt"), second("bytes_b.ckpt");
  save_checkpoint(first.path, ck);
  save_checkpoint(second.path, load_checkpoint(first.path));
  std::string a = slurp(first.path), b = slurp(second.path);
  CHECK(!a.empty());
  CHECK(a == b);
}

TEST_CASE("checkpoint version mismatch is reported") {
  Checkpoint ck = small_checkpoint(22);
  TempPath file("version.ckpt");
  save_checkpoint(file.path, ck);
  std::string raw = slurp(file.path);
  size_t pos = raw.find("\"version\":1");
  REQUIRE(pos != std::string::npos);
  raw.replace(pos, 11, "\"version\":9");
  {
    std::ofstream out(file.path, std::ios::binary);
    out << raw;
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(file.path),
                       doctest::Contains("version mismatch"), CheckpointError);
}

TEST_CASE("truncated payload is reported with the tensor name") {
  Checkpoint ck = small_checkpoint(23);
  TempPath file("trunc.ckpt");
  save_checkpoint(file.path, ck);
  std::string raw = slurp(file.path);
  raw.resize(raw.size() / 2);
  {
    std::ofstream out(file.path, std::ios::binary);
    out << raw;
  }
  CHECK_THROWS_AS(load_checkpoint(file.path), CheckpointError);
}

TEST_CASE("training twice from the same seed is bitwise deterministic") {
  TrainConfig cfg = tiny_cfg();
  cfg.epochs = 2;
  cfg.dropout = 0.1;
  auto corpus = make_synthetic(6, 30);
  auto run = [&] { return train(corpus, std::nullopt, synthetic_categories(), cfg); };
  TrainResult a = run(), b = run();
  CHECK(a.best.epoch == b.best.epoch);
  REQUIRE(a.best.params.size() == b.best.params.size());
  for (const auto& [name, t] : a.best.params) CHECK(t.data == b.best.params.at(name).data);
  REQUIRE(a.log.size() == b.log.size());
  for (size_t i = 0; i < a.log.size(); ++i)
    CHECK(a.log[i].to_json() == b.log[i].to_json());
}

TEST_CASE("zero epochs returns the initial checkpoint and no log") {
  TrainConfig cfg = tiny_cfg();
  cfg.epochs = 0;
  TrainResult r = train(make_synthetic(4, 31), std::nullopt, synthetic_categories(), cfg);
  CHECK(r.best.epoch == 0);
  CHECK(r.log.empty());
  CHECK(!r.best.params.empty());
}

TEST_CASE("explicit dev corpus builds the vocabulary from training data only") {
  TrainConfig cfg = tiny_cfg();
  cfg.epochs = 1;
  auto train_docs = make_synthetic(4, 32);
  auto dev_docs = make_synthetic(2, 33);
  TrainResult r = train(train_docs, dev_docs, synthetic_categories(), cfg);
  Vocab expect = build_vocab(train_docs, cfg.min_count);
  CHECK(r.best.vocab.token_ids == expect.token_ids);
  CHECK(r.log.size() == 1);
}

TEST_CASE("empty corpus is rejected") {
  CHECK_THROWS_AS(train({}, std::nullopt, synthetic_categories(), tiny_cfg()),
                  CorpusError);
}

TEST_CASE("epoch log serializes losses next to the metric keys") {
  EpochLog log;
  log.epoch = 4;
  log.l_cl = 0.5;
  nlohmann::json j = log.to_json();
  CHECK(j["epoch"] == 4);
  CHECK(j["l_cl"] == 0.5);
  CHECK(j.contains("acd.macro.f1"));
  CHECK(j.contains("acsc.micro.f1"));
}

TEST_CASE("relative error helper uses the absolute floor") {
  CHECK(rel_err(1.0, 1.0) == 0.0);
  CHECK(rel_err(2.0, 1.0) == doctest::Approx(0.5));
  CHECK(rel_err(0.0, 1e-9) == doctest::Approx(1e-6));  // floored at 1e-3
}
