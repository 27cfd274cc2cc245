#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "laap/core/gradcheck.hpp"
#include "laap/data/synth.hpp"
#include "laap/io/checkpoint.hpp"
#include "laap/io/svg.hpp"
#include "laap/train/trainer.hpp"

namespace {

using nlohmann::json;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw laap::IoError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw laap::ValidationError("config " + path + ": malformed JSON (" + e.what() + ")");
  }
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw laap::IoError("cannot open file for writing: " + path);
  out << text;
  if (!out) throw laap::IoError("write failed: " + path);
}

// --data accepts either a split directory or a single .jsonl file.
std::string resolve_data_file(const std::string& data, const std::string& preferred) {
  namespace fs = std::filesystem;
  if (fs::is_directory(data)) return (fs::path(data) / preferred).string();
  return data;
}

int cmd_generate(const std::string& config_path, const std::string& out_dir) {
  const laap::SynthConfig cfg = read_json_file(config_path).get<laap::SynthConfig>();
  std::filesystem::create_directories(out_dir);
  const auto train = laap::generate(cfg, cfg.n_train, 0);
  const auto val = laap::generate(cfg, cfg.n_val, cfg.n_train);
  const auto test = laap::generate(cfg, cfg.n_test, cfg.n_train + cfg.n_val);
  namespace fs = std::filesystem;
  laap::save_jsonl((fs::path(out_dir) / "train.jsonl").string(), train);
  laap::save_jsonl((fs::path(out_dir) / "val.jsonl").string(), val);
  laap::save_jsonl((fs::path(out_dir) / "test.jsonl").string(), test);
  json summary = {{"out", out_dir},
                  {"train", train.size()},
                  {"val", val.size()},
                  {"test", test.size()}};
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& ckpt_path) {
  const laap::RunConfig cfg = read_json_file(config_path).get<laap::RunConfig>();
  namespace fs = std::filesystem;
  const auto train_data =
      laap::load_jsonl(resolve_data_file(data_dir, "train.jsonl"), cfg.d_wv);
  std::vector<laap::VqaInstance> val_data;
  const std::string val_path = (fs::path(data_dir) / "val.jsonl").string();
  if (fs::is_directory(data_dir) && fs::exists(val_path))
    val_data = laap::load_jsonl(val_path, cfg.d_wv);

  laap::TrainOutput out = laap::train(cfg, train_data, val_data);

  json metrics = out.result.to_json();
  if (!val_data.empty()) {
    const laap::EvalOutput val = laap::evaluate(out.net, val_data);
    metrics["val"] = val.report.to_json();
  }
  laap::save_checkpoint(ckpt_path, out.net, cfg.seed, out.result.best_epoch, metrics);
  metrics["checkpoint"] = ckpt_path;
  std::cout << metrics.dump() << "\n";
  return 0;
}

laap::LaapNetwork load_for_eval(const std::string& ckpt_path, const std::string& restrict_mode,
                                const std::string& mask, laap::Checkpoint* out_ck = nullptr) {
  const laap::Checkpoint ck = laap::read_checkpoint(ckpt_path);
  if (out_ck) *out_ck = ck;
  laap::LaapNetwork net = laap::load_network(ck);
  if (!restrict_mode.empty() || !mask.empty()) {
    laap::RunConfig cfg = ck.config;
    if (!restrict_mode.empty()) cfg.restrict_mode = restrict_mode;
    if (!mask.empty()) cfg.mask = mask;
    net = net.reconfigured(cfg);
  }
  return net;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data,
             const std::string& restrict_mode, const std::string& mask,
             const std::string& report_path) {
  laap::Checkpoint ck;
  const laap::LaapNetwork net = load_for_eval(ckpt_path, restrict_mode, mask, &ck);
  const auto instances =
      laap::load_jsonl(resolve_data_file(data, "val.jsonl"), ck.config.d_wv);
  const laap::EvalOutput out = laap::evaluate(net, instances);

  if (!report_path.empty()) {
    json records = json::array();
    for (const auto& r : out.records) records.push_back(laap::record_to_json(r));
    const json report = {{"metrics", out.report.to_json()}, {"records", std::move(records)}};
    write_text(report_path, report.dump(2) + "\n");
  }
  std::cout << out.report.to_json().dump() << "\n";
  return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& data_dir, int seed_count,
               const std::string& report_path) {
  if (seed_count < 1) throw laap::ValidationError("--seeds must be >= 1");
  const laap::RunConfig cfg = read_json_file(config_path).get<laap::RunConfig>();
  const auto train_data =
      laap::load_jsonl(resolve_data_file(data_dir, "train.jsonl"), cfg.d_wv);
  const auto val_data = laap::load_jsonl(resolve_data_file(data_dir, "val.jsonl"), cfg.d_wv);
  std::vector<uint64_t> seeds;
  for (int s = 1; s <= seed_count; ++s) seeds.push_back(static_cast<uint64_t>(s));

  const laap::AblationReport report = laap::ablate(cfg, train_data, val_data, seeds);
  std::cout << report.table();
  if (!report_path.empty())
    write_text(report_path, report.to_json().dump(2) + "\n");
  else
    std::cout << report.to_json().dump() << "\n";
  return 0;
}

int cmd_render(const std::string& ckpt_path, const std::string& data,
               const std::vector<long long>& ids, const std::string& out_dir) {
  laap::Checkpoint ck;
  const laap::LaapNetwork net = load_for_eval(ckpt_path, "", "", &ck);
  const auto instances =
      laap::load_jsonl(resolve_data_file(data, "val.jsonl"), ck.config.d_wv);
  std::filesystem::create_directories(out_dir);

  json written = json::array();
  for (long long id : ids) {
    const laap::VqaInstance* inst = nullptr;
    for (const auto& candidate : instances)
      if (candidate.id == id) inst = &candidate;
    if (!inst) throw laap::ValidationError("unknown instance id: " + std::to_string(id));
    const laap::EvalOutput one = laap::evaluate(net, {*inst});
    const std::string path =
        (std::filesystem::path(out_dir) / ("scene_" + std::to_string(id) + ".svg")).string();
    laap::write_svg(path, laap::render_svg(*inst, &one.records.front()));
    written.push_back(path);
  }
  std::cout << json{{"written", std::move(written)}}.dump() << "\n";
  return 0;
}

// Full-loss gradient fidelity on a small model: analytic vs central finite
// differences over every parameter coordinate.
int cmd_gradcheck() {
  laap::RunConfig cfg;
  cfg.d = 16;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.d_att = 8;
  cfg.vocab = 20;
  cfg.t_max = 3;
  cfg.d_app = 8;
  cfg.d_wv = 16;
  cfg.seed = 7;

  laap::SynthConfig scene;
  scene.seed = 13;
  scene.d_app = cfg.d_app;
  scene.m_min = scene.m_max = 4;
  scene.n_min = scene.n_max = 3;
  scene.w_positional = 0.0;
  scene.w_color = 0.0;
  scene.w_reading = 1.0;
  scene.ocr_corruption_rate = 0.0;
  auto data = laap::generate(scene, 1);
  laap::derive_text_features(data, cfg.d_wv);

  std::vector<std::string> words = {"<end>", "<unk>"};
  for (size_t i = 0; words.size() < static_cast<size_t>(cfg.vocab); ++i)
    words.emplace_back(laap::kSceneLexicon[i]);
  const laap::LaapNetwork net(cfg, laap::AnswerVocab::from_words(words));
  const auto targets = laap::match_gt(data[0].answer_words(), data[0].ocr, net.vocab());

  const auto t0 = std::chrono::steady_clock::now();
  const auto f = [&]() {
    const laap::LossParts parts = laap::instance_loss_parts(net, data[0], targets);
    return laap::scale(laap::total_loss(parts.fusion, parts.loc, parts.semantic, cfg.lambda_l,
                                        cfg.lambda_s),
                       1.0 / parts.steps);
  };
  const double err = laap::grad_check(f, net.params().tensors(), 1e-5);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const bool ok = err < 1e-4;
  json out = {{"max_rel_error", err},
              {"threshold", 1e-4},
              {"parameters", net.params().total_size()},
              {"seconds", secs},
              {"pass", ok}};
  std::cout << out.dump() << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text-scene question answering: data generation, training, evaluation"};
  app.require_subcommand(1);

  std::string config_path, data_path, out_path, ckpt_path, report_path;
  std::string restrict_mode, mask;
  std::vector<long long> ids;
  int seed_count = 3;

  auto* gen = app.add_subcommand("generate", "Write train/val/test scene files");
  gen->add_option("--config", config_path, "JSON generator config")->required();
  gen->add_option("--out", out_path, "output directory")->required();

  auto* tr = app.add_subcommand("train", "Train a model and save a checkpoint");
  tr->add_option("--config", config_path, "JSON run config")->required();
  tr->add_option("--data", data_path, "split directory from `generate`")->required();
  tr->add_option("--out", ckpt_path, "checkpoint path")->required();

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
  ev->add_option("--data", data_path, "data file or split directory")->required();
  ev->add_option("--restrict", restrict_mode, "answer source: vocab|ocr")
      ->check(CLI::IsMember({"vocab", "ocr"}));
  ev->add_option("--mask", mask, "input mask: ocr-emb|ocr-bbox")
      ->check(CLI::IsMember({"ocr-emb", "ocr-bbox"}));
  ev->add_option("--report", report_path, "write metrics + per-instance records here");

  auto* ab = app.add_subcommand("ablate", "Train the four architecture variants");
  ab->add_option("--config", config_path, "JSON run config")->required();
  ab->add_option("--data", data_path, "split directory")->required();
  ab->add_option("--seeds", seed_count, "number of seeds (1..S)");
  ab->add_option("--report", report_path, "write the JSON report here");

  auto* rd = app.add_subcommand("render", "Render scenes with predictions as SVG");
  rd->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
  rd->add_option("--data", data_path, "data file or split directory")->required();
  rd->add_option("--ids", ids, "instance ids")->required()->delimiter(',');
  rd->add_option("--out", out_path, "output directory")->required();

  app.add_subcommand("gradcheck", "Verify analytic gradients against finite differences");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_generate(config_path, out_path);
    if (tr->parsed()) return cmd_train(config_path, data_path, ckpt_path);
    if (ev->parsed()) return cmd_eval(ckpt_path, data_path, restrict_mode, mask, report_path);
    if (ab->parsed()) return cmd_ablate(config_path, data_path, seed_count, report_path);
    if (rd->parsed()) return cmd_render(ckpt_path, data_path, ids, out_path);
    return cmd_gradcheck();
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const laap::Error& e) {
    std::cerr << nlohmann::json{{"error", {{"kind", e.kind()}, {"message", e.what()}}}}.dump()
              << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", {{"kind", "internal"}, {"message", e.what()}}}}.dump()
              << "\n";
    return 1;
  }
}
