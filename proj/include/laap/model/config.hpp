#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "laap/core/errors.hpp"

namespace laap {

struct RunConfig {
  int d = 64;        // model width
  int layers = 2;    // encoder depth == decoder depth
  int heads = 4;
  int d_att = 32;    // box attention projection width
  int vocab = 50;    // answer vocabulary size incl. <end> and <unk>
  int t_max = 12;    // decoding step cap
  int d_app = 32;    // appearance feature width
  int d_wv = 64;     // pseudo word vector width
  double lambda_l = 1.0;
  double lambda_s = 1.0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 30;
  int batch_size = 32;
  int early_stop_patience = 5;
  uint64_t seed = 1;
  bool use_cor = true;
  bool use_lap = true;
  std::string restrict_mode = "none";  // none | vocab | ocr
  std::string mask = "none";           // none | ocr-emb | ocr-bbox

  void validate() const {
    if (d < 2 || layers < 1 || heads < 1 || d_att < 1 || vocab < 3 || t_max < 1 ||
        d_app < 1 || d_wv < 1)
      throw ValidationError("config: dimensions must be positive (vocab >= 3)");
    if (d % heads != 0) throw ValidationError("config: d must be divisible by heads");
    if (d % 2 != 0) throw ValidationError("config: d must be even (box MLP hidden is d/2)");
    if (lambda_l < 0 || lambda_s < 0) throw ValidationError("config: loss weights must be >= 0");
    if (epochs < 0 || batch_size < 1) throw ValidationError("config: bad epochs/batch_size");
    if (restrict_mode != "none" && restrict_mode != "vocab" && restrict_mode != "ocr")
      throw ValidationError("config: restrict must be none|vocab|ocr");
    if (mask != "none" && mask != "ocr-emb" && mask != "ocr-bbox")
      throw ValidationError("config: mask must be none|ocr-emb|ocr-bbox");
  }
};

inline void to_json(nlohmann::json& j, const RunConfig& c) {
  j = {{"d", c.d},
       {"layers", c.layers},
       {"heads", c.heads},
       {"d_att", c.d_att},
       {"vocab", c.vocab},
       {"t_max", c.t_max},
       {"d_app", c.d_app},
       {"d_wv", c.d_wv},
       {"lambda_l", c.lambda_l},
       {"lambda_s", c.lambda_s},
       {"lr", c.lr},
       {"beta1", c.beta1},
       {"beta2", c.beta2},
       {"epsilon", c.epsilon},
       {"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"early_stop_patience", c.early_stop_patience},
       {"seed", c.seed},
       {"use_cor", c.use_cor},
       {"use_lap", c.use_lap},
       {"restrict", c.restrict_mode},
       {"mask", c.mask}};
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
  c = RunConfig{};
  auto opt = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  opt("d", c.d);
  opt("layers", c.layers);
  opt("heads", c.heads);
  opt("d_att", c.d_att);
  opt("vocab", c.vocab);
  opt("t_max", c.t_max);
  opt("d_app", c.d_app);
  opt("d_wv", c.d_wv);
  opt("lambda_l", c.lambda_l);
  opt("lambda_s", c.lambda_s);
  opt("lr", c.lr);
  opt("beta1", c.beta1);
  opt("beta2", c.beta2);
  opt("epsilon", c.epsilon);
  opt("epochs", c.epochs);
  opt("batch_size", c.batch_size);
  opt("early_stop_patience", c.early_stop_patience);
  opt("seed", c.seed);
  opt("use_cor", c.use_cor);
  opt("use_lap", c.use_lap);
  opt("restrict", c.restrict_mode);
  opt("mask", c.mask);
  c.validate();
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config " + path + ": malformed JSON (" + e.what() + ")");
  }
  return j.get<RunConfig>();
}

}  // namespace laap
