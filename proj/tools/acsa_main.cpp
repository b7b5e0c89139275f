// Command-line entry point: train, eval, gradcheck, dump-attention.
// Exit codes: 0 success, 1 validation error, 2 verification failure.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "acsa/checkpoint.hpp"
#include "acsa/config.hpp"
#include "acsa/corpus.hpp"
#include "acsa/model.hpp"
#include "acsa/trainer.hpp"

namespace fs = std::filesystem;
using namespace acsa;

namespace {

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

void write_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + tmp);
  }
  fs::rename(tmp, path);
}

std::string log_path_for(const std::string& out) {
  const std::string ext = ".ckpt";
  if (out.size() > ext.size() && out.compare(out.size() - ext.size(), ext.size(), ext) == 0)
    return out.substr(0, out.size() - ext.size()) + ".log.jsonl";
  return out + ".log.jsonl";
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += "\"\"";
    else q += c;
  }
  return q + "\"";
}

int cmd_train(const std::string& config_path, const std::string& corpus_path,
              const std::string& categories_path, const std::string& dev_path,
              const std::string& out_path, std::optional<unsigned long long> seed,
              const std::vector<std::string>& overrides) {
  nlohmann::json cj = read_json_file(config_path);
  for (const std::string& kv : overrides) cj = TrainConfig::apply_override(cj, kv);
  if (seed) cj["seed"] = *seed;
  TrainConfig cfg = TrainConfig::from_json(cj);
  std::cout << "resolved config: " << cfg.to_json().dump() << "\n";

  CategorySet cats = load_categories(categories_path);
  std::vector<ReviewDoc> corpus = load_corpus(corpus_path, cats);
  std::optional<std::vector<ReviewDoc>> dev;
  if (!dev_path.empty()) dev = load_corpus(dev_path, cats);

  TrainResult res = train(std::move(corpus), std::move(dev), cats, cfg);
  save_checkpoint(out_path, res.best);
  std::string log;
  for (const EpochLog& e : res.log) log += e.to_json().dump() + "\n";
  write_atomic(log_path_for(out_path), log);
  std::cout << "checkpoint: " << out_path << "\nlog: " << log_path_for(out_path) << "\n";
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& corpus_path) {
  Checkpoint ck = load_checkpoint(model_path);
  std::vector<ReviewDoc> corpus = load_corpus(corpus_path, ck.categories);
  if (corpus.empty()) throw CorpusError("empty corpus: " + corpus_path);
  Metrics m =
      evaluate_corpus(ck.params, corpus, ck.vocab, ck.categories.size(), ck.cfg);
  std::cout << m.to_json().dump(2) << "\n";
  return 0;
}

int cmd_gradcheck(double eps, double tol) {
  TrainConfig cfg = gradcheck_config();
  std::cout << "resolved config: " << cfg.to_json().dump() << "\n";
  ReviewDoc doc = gradcheck_doc();
  CategorySet cats;
  cats.names = {"catA", "catB"};
  cats.ids = {{"catA", 0}, {"catB", 1}};
  Vocab vocab = build_vocab({doc}, 1);
  std::mt19937_64 rng(cfg.seed);
  ParamMap params = init_params(cfg, vocab.size(), cats.size(), rng);
  auto report = gradcheck(doc, params, vocab, cats.size(), cfg, eps, rng);

  bool failed = false;
  std::cout << std::left << std::setw(28) << "tensor" << "max_rel_err\n";
  for (const auto& e : report) {
    std::cout << std::left << std::setw(28) << e.name << std::scientific
              << std::setprecision(3) << e.max_rel_err << std::defaultfloat;
    if (e.max_rel_err > tol) {
      std::cout << "  FAIL";
      failed = true;
    }
    std::cout << "\n";
  }
  if (failed) {
    std::cerr << "gradcheck: tolerance " << tol << " exceeded\n";
    return 2;
  }
  std::cout << "gradcheck: all tensors within tolerance " << tol << "\n";
  return 0;
}

void write_channel_csv(const fs::path& path, const std::vector<std::string>& tokens,
                       const std::vector<Tensor>& attn) {
  std::ostringstream os;
  os << "token";
  for (size_t c = 0; c < attn.size(); ++c) os << ",ch" << c;
  os << "\n";
  int n = static_cast<int>(tokens.size());
  for (int tok = 0; tok < n; ++tok) {
    os << csv_field(tokens[tok]);
    for (const Tensor& a : attn) {
      double mass = 0.0;  // column mean: attention mass received by this token
      for (int r = 0; r < a.rows; ++r) mass += a.at(r, tok);
      os << "," << std::setprecision(17) << mass / a.rows;
    }
    os << "\n";
  }
  write_atomic(path.string(), os.str());
}

int cmd_dump_attention(const std::string& model_path, const std::string& corpus_path,
                       const std::string& review_id, const std::string& out_dir) {
  Checkpoint ck = load_checkpoint(model_path);
  std::vector<ReviewDoc> corpus = load_corpus(corpus_path, ck.categories);
  const ReviewDoc* doc = nullptr;
  for (const ReviewDoc& d : corpus)
    if (d.review_id == review_id) doc = &d;
  if (!doc) throw CorpusError("unknown review-id: " + review_id);

  std::vector<ChannelDump> dumps;
  predict_doc(ck.params, *doc, ck.vocab, ck.categories.size(), ck.cfg, &dumps);
  for (size_t si = 0; si < doc->sentences.size(); ++si) {
    fs::path dir = fs::path(out_dir) / ("sentence_" + std::to_string(si));
    fs::create_directories(dir);
    const std::vector<std::string>& toks = doc->sentences[si].tokens;
    write_channel_csv(dir / "cat_channels.csv", toks, dumps[si].cate_attn);
    write_channel_csv(dir / "sent_channels.csv", toks, dumps[si].senti_attn);
    std::ostringstream os;
    const Tensor& alpha = dumps[si].alpha;
    for (int c = 0; c < alpha.cols; ++c) os << (c ? "," : "") << "ch" << c;
    os << "\n";
    for (int c = 0; c < alpha.cols; ++c)
      os << (c ? "," : "") << std::setprecision(17) << alpha.at(0, c);
    os << "\n";
    write_atomic((dir / "alpha.csv").string(), os.str());
  }
  std::cout << "wrote attention CSVs for " << doc->sentences.size() << " sentences to "
            << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aspect-category sentiment analysis with coherence-aware "
               "disentangled representations"};
  app.require_subcommand(1);

  std::string config_path, corpus_path, categories_path, dev_path, out_path = "model.ckpt";
  std::string model_path, review_id, out_dir;
  std::optional<unsigned long long> seed;
  std::vector<std::string> overrides;
  double eps = 1e-5, tol = 1e-4;

  CLI::App* tr = app.add_subcommand("train", "Train a model");
  tr->add_option("--config", config_path, "JSON config file")->required();
  tr->add_option("--corpus", corpus_path, "Training corpus (JSONL)")->required();
  tr->add_option("--categories", categories_path, "Category list file")->required();
  tr->add_option("--dev", dev_path, "Dev corpus (JSONL); default: seeded 10% split");
  tr->add_option("--out", out_path, "Checkpoint output path");
  tr->add_option("--seed", seed, "Seed override");
  tr->add_option("--set", overrides, "Config override key=value (repeatable)");

  CLI::App* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--model", model_path, "Checkpoint file")->required();
  ev->add_option("--corpus", corpus_path, "Corpus to score (JSONL)")->required();

  CLI::App* gc = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  gc->add_option("--eps", eps, "Finite-difference step");
  gc->add_option("--tol", tol, "Max relative error tolerance");

  CLI::App* da = app.add_subcommand("dump-attention", "Write attention CSVs");
  da->add_option("--model", model_path, "Checkpoint file")->required();
  da->add_option("--corpus", corpus_path, "Corpus (JSONL)")->required();
  da->add_option("--review-id", review_id, "Review to dump")->required();
  da->add_option("--out-dir", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (tr->parsed())
      return cmd_train(config_path, corpus_path, categories_path, dev_path, out_path, seed,
                       overrides);
    if (ev->parsed()) return cmd_eval(model_path, corpus_path);
    if (gc->parsed()) return cmd_gradcheck(eps, tol);
    if (da->parsed()) return cmd_dump_attention(model_path, corpus_path, review_id, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
