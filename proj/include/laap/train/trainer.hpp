#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "laap/core/adam.hpp"
#include "laap/model/network.hpp"
#include "laap/train/losses.hpp"
#include "laap/train/metrics.hpp"
#include "laap/train/targets.hpp"

namespace laap {

inline constexpr uint64_t kShuffleTag = 0x73687566ull;

// One decoded step of a served prediction, kept alongside the aggregate
// metrics so reports can show where the answer and its box came from.
struct StepRecord {
  std::string kind;  // "ocr" | "vocab" | "end"
  int index = -1;
  std::string word;
  double score = 0.0;
  std::optional<BoundingBox> box;
  std::optional<double> iou_vs_gt;
};

struct PredictionRecord {
  long long id = -1;
  std::string template_name;
  std::string answer;
  double accuracy = 0.0;
  double anls_score = 0.0;
  std::optional<double> evidence_iou;
  std::vector<StepRecord> steps;
};

inline nlohmann::json record_to_json(const PredictionRecord& r) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : r.steps) {
    nlohmann::json js = {{"kind", s.kind}, {"index", s.index}, {"word", s.word},
                         {"score", s.score}};
    js["box"] = s.box ? nlohmann::json(s.box->coords()) : nlohmann::json(nullptr);
    js["iou_vs_gt"] = s.iou_vs_gt ? nlohmann::json(*s.iou_vs_gt) : nlohmann::json(nullptr);
    steps.push_back(std::move(js));
  }
  return {{"id", r.id},
          {"template", r.template_name},
          {"answer", r.answer},
          {"accuracy", r.accuracy},
          {"anls", r.anls_score},
          {"evidence_iou",
           r.evidence_iou ? nlohmann::json(*r.evidence_iou) : nlohmann::json(nullptr)},
          {"steps", std::move(steps)}};
}

struct EvalOutput {
  MetricsReport report;
  std::vector<PredictionRecord> records;
};

// Greedy-decodes every instance and aggregates metrics. Instances must carry
// text-derived features matching the network's word-vector width.
inline EvalOutput evaluate(const LaapNetwork& net, const std::vector<VqaInstance>& data) {
  EvalOutput out;
  out.records.reserve(data.size());
  for (const auto& inst : data) {
    const auto steps = net.greedy_decode(inst);
    PredictionRecord rec;
    rec.id = inst.id;
    rec.template_name = inst.template_name;
    rec.answer = LaapNetwork::answer_from_steps(steps);
    rec.accuracy = vqa_accuracy(rec.answer, inst.answers);
    rec.anls_score = anls(rec.answer, inst.answers);
    for (const auto& s : steps) {
      StepRecord sr;
      if (s.kind == StepKind::OcrCopy) {
        sr.kind = "ocr";
      } else {
        sr.kind = s.index == kEndId ? "end" : "vocab";
      }
      sr.index = s.index;
      sr.word = s.word;
      sr.score = s.score;
      if (net.config().use_lap) {
        sr.box = s.box;
        if (inst.evidence_box) sr.iou_vs_gt = iou(s.box, *inst.evidence_box);
      }
      rec.steps.push_back(std::move(sr));
    }
    if (!rec.steps.empty() && rec.steps.front().iou_vs_gt)
      rec.evidence_iou = rec.steps.front().iou_vs_gt;
    out.report.add(inst.template_name, rec.accuracy, rec.anls_score, rec.evidence_iou);
    out.records.push_back(std::move(rec));
  }
  return out;
}

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double val_anls = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  int best_epoch = -1;
  double best_val_accuracy = 0.0;

  nlohmann::json to_json() const {
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& e : history)
      hist.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"val_accuracy", e.val_accuracy},
                      {"val_anls", e.val_anls}});
    return {{"history", std::move(hist)},
            {"best_epoch", best_epoch},
            {"best_val_accuracy", best_val_accuracy}};
  }
};

struct TrainOutput {
  LaapNetwork net;
  TrainResult result;
};

// Teacher-forced training with per-epoch validation, early stopping, and
// restoration of the best-validation weights. The batch loss is the summed
// per-step loss divided by the batch's total decode-step count.
inline TrainOutput train(const RunConfig& cfg, std::vector<VqaInstance> train_data,
                         std::vector<VqaInstance> val_data) {
  cfg.validate();
  if (train_data.empty()) throw ValidationError("train: empty training split");
  derive_text_features(train_data, cfg.d_wv);
  derive_text_features(val_data, cfg.d_wv);

  const AnswerVocab vocab = AnswerVocab::build(train_data, cfg.vocab);
  LaapNetwork net(cfg, vocab);
  std::vector<Tensor> params = net.params().tensors();
  AdamState adam({cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon});

  std::vector<std::vector<StepTarget>> targets;
  targets.reserve(train_data.size());
  for (const auto& inst : train_data) {
    try {
      targets.push_back(match_gt(inst.answer_words(), inst.ocr, vocab));
    } catch (const Error& e) {
      throw ValidationError("instance id=" + std::to_string(inst.id) + ": " + e.what());
    }
  }

  TrainResult result;
  std::vector<double> best_params;
  int stale_epochs = 0;

  std::vector<size_t> order(train_data.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(Rng::key(cfg.seed, kShuffleTag + static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    int batches = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
      const size_t stop = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      try {
        Tape tape;
        Tensor fusion = Tensor::scalar(0.0);
        Tensor loc = Tensor::scalar(0.0);
        Tensor semantic = Tensor::scalar(0.0);
        int total_steps = 0;
        for (size_t i = start; i < stop; ++i) {
          const LossParts parts = instance_loss_parts(net, train_data[order[i]],
                                                      targets[order[i]]);
          fusion = add(fusion, parts.fusion);
          loc = add(loc, parts.loc);
          semantic = add(semantic, parts.semantic);
          total_steps += parts.steps;
        }
        const Tensor loss = scale(total_loss(fusion, loc, semantic, cfg.lambda_l, cfg.lambda_s),
                                  1.0 / total_steps);
        AdamState::zero_grads(params);
        tape.backward(loss);
        adam.step(params);
        loss_sum += loss.item();
        ++batches;
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batches) + ": " + e.what());
      }
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = batches ? loss_sum / batches : 0.0;
    if (!val_data.empty()) {
      const EvalOutput val = evaluate(net, val_data);
      stats.val_accuracy = val.report.accuracy();
      stats.val_anls = val.report.mean_anls();
    }
    result.history.push_back(stats);

    if (val_data.empty()) continue;
    if (result.best_epoch < 0 || stats.val_accuracy > result.best_val_accuracy) {
      result.best_epoch = epoch;
      result.best_val_accuracy = stats.val_accuracy;
      best_params = net.params().flatten();
      stale_epochs = 0;
    } else if (++stale_epochs >= cfg.early_stop_patience) {
      break;
    }
  }

  if (!best_params.empty()) net.params().load_flat(best_params);
  return {std::move(net), std::move(result)};
}

// The four-way architecture comparison: encoder-only baseline, box-guided
// enrichment, localization fusion, and both together, each over several seeds.
struct AblationCell {
  std::string variant;
  uint64_t seed = 0;
  double accuracy = 0.0;
  double anls_score = 0.0;
  double iou_correct = 0.0;
  double positional_iou_correct = 0.0;
};

struct AblationReport {
  std::vector<AblationCell> cells;
  std::vector<std::string> variants;

  std::pair<double, double> accuracy_stats(const std::string& variant) const {
    std::vector<double> xs;
    for (const auto& c : cells)
      if (c.variant == variant) xs.push_back(c.accuracy);
    if (xs.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var = xs.size() > 1 ? var / static_cast<double>(xs.size() - 1) : 0.0;
    return {mean, std::sqrt(var)};
  }

  double mean_positional_iou(const std::string& variant) const {
    double sum = 0.0;
    int n = 0;
    for (const auto& c : cells)
      if (c.variant == variant) {
        sum += c.positional_iou_correct;
        ++n;
      }
    return n ? sum / n : 0.0;
  }

  nlohmann::json to_json() const {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& c : cells)
      runs.push_back({{"variant", c.variant},
                      {"seed", c.seed},
                      {"accuracy", c.accuracy},
                      {"anls", c.anls_score},
                      {"mean_iou_correct", c.iou_correct},
                      {"positional_iou_correct", c.positional_iou_correct}});
    nlohmann::json summary = nlohmann::json::array();
    for (const auto& v : variants) {
      const auto [mean, sd] = accuracy_stats(v);
      summary.push_back({{"variant", v},
                         {"accuracy_mean", mean},
                         {"accuracy_sd", sd},
                         {"positional_iou_correct", mean_positional_iou(v)}});
    }
    return {{"runs", std::move(runs)}, {"summary", std::move(summary)}};
  }

  std::string table() const {
    char line[160];
    std::string out;
    std::snprintf(line, sizeof(line), "%-12s %12s %12s %16s\n", "variant", "acc mean",
                  "acc sd", "pos IoU (corr)");
    out += line;
    for (const auto& v : variants) {
      const auto [mean, sd] = accuracy_stats(v);
      std::snprintf(line, sizeof(line), "%-12s %12.4f %12.4f %16.4f\n", v.c_str(), mean, sd,
                    mean_positional_iou(v));
      out += line;
    }
    return out;
  }
};

inline AblationReport ablate(const RunConfig& base, const std::vector<VqaInstance>& train_data,
                             const std::vector<VqaInstance>& val_data,
                             const std::vector<uint64_t>& seeds) {
  if (seeds.empty()) throw ValidationError("ablate: no seeds");
  std::vector<VqaInstance> val_ready = val_data;
  derive_text_features(val_ready, base.d_wv);
  AblationReport report;
  report.variants = {"tsd", "tsd+cor", "tsd+lap", "full"};
  for (const auto& variant : report.variants) {
    for (uint64_t seed : seeds) {
      RunConfig cfg = base;
      cfg.seed = seed;
      cfg.use_cor = variant == "tsd+cor" || variant == "full";
      cfg.use_lap = variant == "tsd+lap" || variant == "full";
      TrainOutput run = train(cfg, train_data, val_ready);
      const EvalOutput val = evaluate(run.net, val_ready);

      AblationCell cell;
      cell.variant = variant;
      cell.seed = seed;
      cell.accuracy = val.report.accuracy();
      cell.anls_score = val.report.mean_anls();
      cell.iou_correct = val.report.mean_iou_correct();
      const auto it = val.report.per_template.find("positional");
      if (it != val.report.per_template.end() && it->second.n_correct_with_evidence > 0)
        cell.positional_iou_correct =
            it->second.iou_correct_sum / static_cast<double>(it->second.n_correct_with_evidence);
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

}  // namespace laap
