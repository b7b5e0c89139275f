#pragma once

// Flat training configuration with validation bounds.

#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace acsa {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TrainConfig {
  // model widths
  int d_m = 32;        // embedding / hidden width
  int d_k = 32;        // channel attention width
  int d_h = 64;        // feed-forward hidden width
  int d_c = 4;         // category disentanglement channels
  int d_s = 4;         // sentiment disentanglement channels
  int enc_layers = 2;  // document encoder self-attention layers
  int ch_layers = 2;   // stacked layers per disentanglement channel
  int gcn_layers = 3;

  // objective
  int neg_samples = 5;   // B
  double margin = 0.1;   // tau
  double delta1 = 0.1;   // contrastive weight
  double delta2 = 0.5;   // category detection weight
  double delta3 = 0.5;   // sentiment classification weight

  // optimization
  double dropout = 0.1;
  double weight_decay = 1e-3;
  double lr_encoder = 8e-6;  // coherence-aware representation tier
  double lr_other = 2e-5;    // everything else
  int epochs = 300;
  unsigned long long seed = 42;

  // data handling
  int max_seq_len = 256;
  int min_count = 1;
  double threshold = 0.5;  // category detection cutoff

  // ablation switches
  bool ablate_cate_dis = false;   // r_c <- mean of sentence token states
  bool ablate_senti_dis = false;  // u_s <- mean of sentence token states
  bool ablate_wsyn = false;       // syntax vector replaced by zeros

  nlohmann::json to_json() const {
    return nlohmann::json{
        {"d_m", d_m}, {"d_k", d_k}, {"d_h", d_h}, {"d_c", d_c}, {"d_s", d_s},
        {"enc_layers", enc_layers}, {"ch_layers", ch_layers}, {"gcn_layers", gcn_layers},
        {"neg_samples", neg_samples}, {"margin", margin},
        {"delta1", delta1}, {"delta2", delta2}, {"delta3", delta3},
        {"dropout", dropout}, {"weight_decay", weight_decay},
        {"lr_encoder", lr_encoder}, {"lr_other", lr_other},
        {"epochs", epochs}, {"seed", seed},
        {"max_seq_len", max_seq_len}, {"min_count", min_count}, {"threshold", threshold},
        {"ablate_cate_dis", ablate_cate_dis}, {"ablate_senti_dis", ablate_senti_dis},
        {"ablate_wsyn", ablate_wsyn}};
  }

  static TrainConfig from_json(const nlohmann::json& j) {
    TrainConfig c;
    auto get = [&j](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).template get<std::decay_t<decltype(field)>>();
    };
    for (const auto& [key, val] : j.items()) {
      (void)val;
      if (!c.to_json().contains(key)) throw ConfigError("unknown config key: " + key);
    }
    get("d_m", c.d_m); get("d_k", c.d_k); get("d_h", c.d_h);
    get("d_c", c.d_c); get("d_s", c.d_s);
    get("enc_layers", c.enc_layers); get("ch_layers", c.ch_layers);
    get("gcn_layers", c.gcn_layers);
    get("neg_samples", c.neg_samples); get("margin", c.margin);
    get("delta1", c.delta1); get("delta2", c.delta2); get("delta3", c.delta3);
    get("dropout", c.dropout); get("weight_decay", c.weight_decay);
    get("lr_encoder", c.lr_encoder); get("lr_other", c.lr_other);
    get("epochs", c.epochs); get("seed", c.seed);
    get("max_seq_len", c.max_seq_len); get("min_count", c.min_count);
    get("threshold", c.threshold);
    get("ablate_cate_dis", c.ablate_cate_dis);
    get("ablate_senti_dis", c.ablate_senti_dis);
    get("ablate_wsyn", c.ablate_wsyn);
    c.validate();
    return c;
  }

  // Search-range bounds; lower ends relaxed to zero where ablations or
  // evaluation need a quantity switched off.
  void validate() const {
    auto range = [](const char* name, double v, double lo, double hi) {
      if (!(v >= lo && v <= hi)) {
        std::ostringstream os;
        os << "config: " << name << "=" << v << " outside [" << lo << "," << hi << "]";
        throw ConfigError(os.str());
      }
    };
    auto positive = [](const char* name, int v) {
      if (v < 1) throw ConfigError(std::string("config: ") + name + " must be >= 1");
    };
    positive("d_m", d_m); positive("d_k", d_k); positive("d_h", d_h);
    range("d_c", d_c, 1, 7);
    range("d_s", d_s, 1, 7);
    if (enc_layers < 0) throw ConfigError("config: enc_layers must be >= 0");
    positive("ch_layers", ch_layers);
    range("gcn_layers", gcn_layers, 1, 3);
    range("neg_samples", neg_samples, 1, 10);
    range("margin", margin, 0.0, 0.2);
    range("delta1", delta1, 0.0, 0.2);
    range("delta2", delta2, 0.0, 0.8);
    range("delta3", delta3, 0.0, 0.8);
    range("dropout", dropout, 0.0, 0.3);
    range("weight_decay", weight_decay, 1e-4, 1e-2);
    range("lr_encoder", lr_encoder, 1e-6, 1e-5);
    range("lr_other", lr_other, 1e-5, 1e-4);
    if (epochs < 0) throw ConfigError("config: epochs must be >= 0");
    positive("max_seq_len", max_seq_len);
    positive("min_count", min_count);
    if (!(threshold > 0.0 && threshold < 1.0))
      throw ConfigError("config: threshold must lie in (0,1)");
  }

  // Apply a `key=value` override (CLI --set).
  static nlohmann::json apply_override(nlohmann::json j, const std::string& kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("override must be key=value: " + kv);
    std::string key = kv.substr(0, eq);
    std::string val = kv.substr(eq + 1);
    if (!j.contains(key) && !TrainConfig().to_json().contains(key))
      throw ConfigError("unknown config key: " + key);
    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(val);
    } catch (const nlohmann::json::parse_error&) {
      parsed = val;  // bare string
    }
    j[key] = parsed;
    return j;
  }
};

}  // namespace acsa
