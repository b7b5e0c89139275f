#pragma once

// Single-file checkpoint: one JSON header line (version, config, vocab,
// categories, tensor manifest) followed by a little-endian payload of
// 64-bit reals. Reload then re-save is byte-identical.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "acsa/config.hpp"
#include "acsa/corpus.hpp"
#include "acsa/optim.hpp"
#include "acsa/params.hpp"

namespace acsa {

class CheckpointError : public std::runtime_error {
 public:
  explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  TrainConfig cfg;
  CategorySet categories;
  Vocab vocab;
  ParamMap params;
  OptimizerState opt;
  int epoch = 0;
  std::string rng_state;
};

namespace detail {

inline void append_manifest(nlohmann::json& man, const std::string& name, const Tensor& t,
                            size_t& offset) {
  man.push_back({{"name", name}, {"rows", t.rows}, {"cols", t.cols}, {"offset", offset}});
  offset += t.size();
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  nlohmann::json header;
  header["version"] = kCheckpointVersion;
  header["config"] = ck.cfg.to_json();
  header["categories"] = ck.categories.names;
  header["vocab"] = ck.vocab.token_ids;
  header["epoch"] = ck.epoch;
  header["rng"] = ck.rng_state;
  header["opt"] = {{"step", ck.opt.step}, {"beta1", ck.opt.beta1}, {"beta2", ck.opt.beta2},
                   {"eps", ck.opt.eps}, {"weight_decay", ck.opt.weight_decay}};
  nlohmann::json manifest = nlohmann::json::array();
  size_t offset = 0;
  for (const auto& [name, t] : ck.params) detail::append_manifest(manifest, name, t, offset);
  for (const auto& [name, t] : ck.opt.m)
    detail::append_manifest(manifest, "opt.m." + name, t, offset);
  for (const auto& [name, t] : ck.opt.v)
    detail::append_manifest(manifest, "opt.v." + name, t, offset);
  header["tensors"] = manifest;

  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw CheckpointError("cannot write checkpoint: " + tmp);
    out << header.dump() << "\n";
    auto dump_payload = [&out](const Tensor& t) {
      out.write(reinterpret_cast<const char*>(t.data.data()),
                static_cast<std::streamsize>(t.size() * sizeof(double)));
    };
    for (const auto& [name, t] : ck.params) dump_payload(t);
    for (const auto& [name, t] : ck.opt.m) dump_payload(t);
    for (const auto& [name, t] : ck.opt.v) dump_payload(t);
    if (!out) throw CheckpointError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  std::string header_line;
  if (!std::getline(in, header_line)) throw CheckpointError("truncated checkpoint: " + path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_line);
  } catch (const nlohmann::json::parse_error& e) {
    throw CheckpointError("bad checkpoint header: " + std::string(e.what()));
  }
  int version = header.at("version").get<int>();
  if (version != kCheckpointVersion)
    throw CheckpointError("checkpoint version mismatch: file has " +
                          std::to_string(version) + ", expected " +
                          std::to_string(kCheckpointVersion));
  Checkpoint ck;
  ck.cfg = TrainConfig::from_json(header.at("config"));
  for (const auto& name : header.at("categories")) {
    std::string n = name.get<std::string>();
    ck.categories.ids[n] = static_cast<int>(ck.categories.names.size());
    ck.categories.names.push_back(n);
  }
  ck.vocab.token_ids = header.at("vocab").get<std::map<std::string, int>>();
  ck.epoch = header.at("epoch").get<int>();
  ck.rng_state = header.at("rng").get<std::string>();
  ck.opt.step = header.at("opt").at("step").get<long>();
  ck.opt.beta1 = header.at("opt").at("beta1").get<double>();
  ck.opt.beta2 = header.at("opt").at("beta2").get<double>();
  ck.opt.eps = header.at("opt").at("eps").get<double>();
  ck.opt.weight_decay = header.at("opt").at("weight_decay").get<double>();

  for (const auto& entry : header.at("tensors")) {
    std::string name = entry.at("name").get<std::string>();
    Tensor t(entry.at("rows").get<int>(), entry.at("cols").get<int>());
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in) throw CheckpointError("truncated payload at tensor " + name);
    if (name.rfind("opt.m.", 0) == 0)
      ck.opt.m[name.substr(6)] = std::move(t);
    else if (name.rfind("opt.v.", 0) == 0)
      ck.opt.v[name.substr(6)] = std::move(t);
    else
      ck.params[name] = std::move(t);
  }
  return ck;
}

}  // namespace acsa
