#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "acsa/config.hpp"
#include "acsa/synthetic.hpp"

using namespace acsa;
namespace fs = std::filesystem;

namespace {

std::string cli() {
  const char* p = std::getenv("ACSA_CLI");
  REQUIRE_MESSAGE(p != nullptr, "ACSA_CLI must point at the command-line binary");
  return p;
}

// Scratch directory shared by the whole suite; fresh per process.
const fs::path& scratch() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("acsa_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct RunResult {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

RunResult run(const std::string& args) {
  fs::path out = scratch() / "stdout.txt", err = scratch() / "stderr.txt";
  std::string cmd =
      cli() + " " + args + " >" + out.string() + " 2>" + err.string();
  int raw = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

TrainConfig tiny_cfg() {
  TrainConfig cfg;
  cfg.d_m = 8;
  cfg.d_k = 8;
  cfg.d_h = 16;
  cfg.d_c = 2;
  cfg.d_s = 2;
  cfg.enc_layers = 1;
  cfg.ch_layers = 1;
  cfg.gcn_layers = 1;
  cfg.neg_samples = 2;
  cfg.epochs = 1;
  return cfg;
}

// Inputs and one finished training run, shared across test cases.
struct Workspace {
  fs::path config = scratch() / "config.json";
  fs::path corpus = scratch() / "train.jsonl";
  fs::path cats = scratch() / "categories.txt";
  fs::path ckpt = scratch() / "model.ckpt";
  fs::path log = scratch() / "model.log.jsonl";
  std::string first_review_id;

  Workspace() {
    std::ofstream(config) << tiny_cfg().to_json().dump(2) << "\n";
    auto docs = make_synthetic(6, 77);
    first_review_id = docs[0].review_id;
    write_corpus(corpus.string(), docs, synthetic_categories());
    std::ofstream cf(cats);
    for (const std::string& n : synthetic_categories().names) cf << n << "\n";
  }

  std::string train_args(const fs::path& out) const {
    return "train --config " + config.string() + " --corpus " + corpus.string() +
           " --categories " + cats.string() + " --out " + out.string();
  }
};

const Workspace& ws() {
  static Workspace w;
  return w;
}

// First successful training run; later cases reuse the checkpoint.
const fs::path& trained_ckpt() {
  static fs::path p = [] {
    RunResult r = run(ws().train_args(ws().ckpt));
    REQUIRE_MESSAGE(r.code == 0, r.err);
    return ws().ckpt;
  }();
  return p;
}

}  // namespace

TEST_CASE("no subcommand exits 1; --help exits 0") {
  CHECK(run("").code == 1);
  CHECK(run("--help").code == 0);
  CHECK(run("frobnicate").code == 1);
}

TEST_CASE("train writes a checkpoint and a per-epoch log") {
  RunResult r = run(ws().train_args(ws().ckpt));
  CHECK(r.code == 0);
  CHECK(r.out.find("resolved config:") != std::string::npos);
  CHECK(fs::exists(ws().ckpt));
  REQUIRE(fs::exists(ws().log));
  std::istringstream lines(slurp(ws().log));
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    nlohmann::json j = nlohmann::json::parse(line);
    CHECK(j["epoch"] == ++n);
    CHECK(j.contains("acd.macro.f1"));
  }
  CHECK(n == 1);
}

TEST_CASE("train is bitwise deterministic for a fixed seed") {
  trained_ckpt();
  fs::path again = scratch() / "model2.ckpt";
  RunResult r = run(ws().train_args(again));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  std::string a = slurp(ws().ckpt), b = slurp(again);
  CHECK(!a.empty());
  CHECK(a == b);
}

TEST_CASE("--set override reaches the resolved config") {
  fs::path out = scratch() / "override.ckpt";
  RunResult r = run(ws().train_args(out) + " --set epochs=2 --set threshold=0.4");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("\"threshold\":0.4") != std::string::npos);
  std::istringstream lines(slurp(scratch() / "override.log.jsonl"));
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) ++n;
  CHECK(n == 2);
}

TEST_CASE("out-of-range override is a validation error") {
  RunResult r = run(ws().train_args(scratch() / "bad.ckpt") + " --set dropout=0.9");
  CHECK(r.code == 1);
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("unknown config key is a validation error") {
  RunResult r = run(ws().train_args(scratch() / "bad2.ckpt") + " --set dropuot=0.1");
  CHECK(r.code == 1);
}

TEST_CASE("missing corpus file is a validation error") {
  RunResult r = run("train --config " + ws().config.string() + " --corpus " +
                    (scratch() / "nope.jsonl").string() + " --categories " +
                    ws().cats.string());
  CHECK(r.code == 1);
  CHECK(r.err.find("nope.jsonl") != std::string::npos);
}

TEST_CASE("missing required option is a usage error") {
  RunResult r = run("train --config " + ws().config.string());
  CHECK(r.code == 1);
}

TEST_CASE("eval prints the twelve metric keys") {
  RunResult r = run("eval --model " + trained_ckpt().string() + " --corpus " +
                    ws().corpus.string());
  REQUIRE_MESSAGE(r.code == 0, r.err);
  nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j.size() == 12);
  for (const char* task : {"acd", "acsc"})
    for (const char* avg : {"macro", "micro"})
      for (const char* k : {"p", "r", "f1"})
        CHECK(j.contains(std::string(task) + "." + avg + "." + k));
}

TEST_CASE("eval on an empty corpus is a validation error") {
  fs::path empty = scratch() / "empty.jsonl";
  { std::ofstream touch(empty); }
  RunResult r = run("eval --model " + trained_ckpt().string() + " --corpus " +
                    empty.string());
  CHECK(r.code == 1);
  CHECK(r.err.find("empty corpus") != std::string::npos);
}

TEST_CASE("eval leaves its input files untouched") {
  std::string before_corpus = slurp(ws().corpus);
  std::string before_ckpt = slurp(trained_ckpt());
  run("eval --model " + trained_ckpt().string() + " --corpus " + ws().corpus.string());
  CHECK(slurp(ws().corpus) == before_corpus);
  CHECK(slurp(trained_ckpt()) == before_ckpt);
}

TEST_CASE("gradcheck passes at the default tolerance") {
  RunResult r = run("gradcheck");
  CHECK_MESSAGE(r.code == 0, (r.out + r.err));
  CHECK(r.out.find("within tolerance") != std::string::npos);
}

TEST_CASE("gradcheck with an impossible tolerance exits 2") {
  RunResult r = run("gradcheck --tol 0");
  CHECK(r.code == 2);
  CHECK(r.err.find("tolerance") != std::string::npos);
}

TEST_CASE("dump-attention writes distribution-valued CSVs") {
  fs::path dir = scratch() / "attn";
  RunResult r = run("dump-attention --model " + trained_ckpt().string() + " --corpus " +
                    ws().corpus.string() + " --review-id " + ws().first_review_id +
                    " --out-dir " + dir.string());
  REQUIRE_MESSAGE(r.code == 0, r.err);
  REQUIRE(fs::exists(dir / "sentence_0" / "cat_channels.csv"));
  for (const char* name : {"cat_channels.csv", "sent_channels.csv"}) {
    std::ifstream in(dir / "sentence_0" / name);
    std::string header;
    REQUIRE(std::getline(in, header));
    CHECK(header.rfind("token,ch0", 0) == 0);
    int n_ch = (int)std::count(header.begin(), header.end(), ',');
    std::vector<double> colsum(n_ch, 0.0);
    std::string line;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      std::string cell;
      std::getline(ls, cell, ',');  // token
      for (int c = 0; c < n_ch; ++c) {
        std::getline(ls, cell, ',');
        colsum[c] += std::stod(cell);
      }
    }
    // each channel's mean attention row is a distribution over tokens
    for (double s : colsum) CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
  }
  std::ifstream alpha(dir / "sentence_0" / "alpha.csv");
  std::string header, values;
  REQUIRE(std::getline(alpha, header));
  REQUIRE(std::getline(alpha, values));
  std::istringstream vs(values);
  std::string cell;
  double asum = 0.0;
  while (std::getline(vs, cell, ',')) asum += std::stod(cell);
  CHECK(asum == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("dump-attention with an unknown review id is a validation error") {
  RunResult r = run("dump-attention --model " + trained_ckpt().string() + " --corpus " +
                    ws().corpus.string() + " --review-id no-such-review --out-dir " +
                    (scratch() / "attn2").string());
  CHECK(r.code == 1);
  CHECK(r.err.find("unknown review-id") != std::string::npos);
}
