// Release gate: one binary, one pass/fail line per check, nonzero exit on any
// failure. Covers gradient fidelity, closed-form oracles for every analytic
// building block, the structural invariants the architecture promises, the
// desk-scale ablation trend, answer-source restrictions, metric definitions,
// and determinism/persistence of training artifacts.
//
// The training-based checks (6, 7, 9) share one deterministic dataset: the
// default generator split (5000 train / 1000 val). The ablation
// hyperparameters are frozen; see configs/ablation.json for the same values
// in CLI form.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "laap/core/gradcheck.hpp"
#include "laap/data/synth.hpp"
#include "laap/io/checkpoint.hpp"
#include "laap/train/trainer.hpp"

namespace {

using namespace laap;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void run_check(int index, const char* name, const std::function<Outcome()>& fn) {
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("unexpected exception: ") + e.what()};
  }
  if (!o.pass) ++g_failures;
  std::printf("[%s] %d/9 %-34s %s\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, ...) {
  va_list args;
  va_start(args, f);
  char buf[512];
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

double now_seconds(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- shared factories ------------------------------------------------------

Tensor identity4() {
  Tensor t = Tensor::zeros({4, 4});
  for (int i = 0; i < 4; ++i) t.values()[static_cast<size_t>(i) * 4 + i] = 1.0;
  return t;
}

std::vector<BoundingBox> random_boxes(Rng& rng, int n) {
  std::vector<BoundingBox> out;
  for (int i = 0; i < n; ++i) {
    const double x0 = rng.uniform(0.0, 0.8), y0 = rng.uniform(0.0, 0.8);
    out.push_back({x0, y0, x0 + rng.uniform(0.05, 0.2), y0 + rng.uniform(0.05, 0.2)});
  }
  return out;
}

LnParams make_ln(Rng& rng, int d) {
  return {init::ones({d}), init::gaussian(rng, {d}, 0.05)};
}

AttnParams make_attn(Rng& rng, int d) {
  return {init::xavier(rng, d, d), init::gaussian(rng, {d}, 0.05),
          init::xavier(rng, d, d),
          init::xavier(rng, d, d), init::gaussian(rng, {d}, 0.05),
          init::xavier(rng, d, d), init::gaussian(rng, {d}, 0.05)};
}

FfParams make_ff(Rng& rng, int d) {
  return {init::xavier(rng, d, 4 * d), init::gaussian(rng, {4 * d}, 0.05),
          init::xavier(rng, 4 * d, d), init::gaussian(rng, {d}, 0.05)};
}

TsdParams make_tsd(Rng& rng, int d, int layers, int heads) {
  TsdParams p;
  p.heads = heads;
  for (int i = 0; i < layers; ++i) {
    p.enc.push_back({make_attn(rng, d), make_ff(rng, d), make_ln(rng, d), make_ln(rng, d)});
    p.dec.push_back({make_attn(rng, d), make_ff(rng, d), make_ln(rng, d), make_ln(rng, d)});
  }
  p.enc_final = make_ln(rng, d);
  p.dec_final = make_ln(rng, d);
  return p;
}

LaapParams make_head(Rng& rng, int d, int v, double gate_raw_value) {
  LaapParams p;
  p.W_box1 = init::xavier(rng, d, d / 2);
  p.b_box1 = init::gaussian(rng, {d / 2}, 0.05);
  p.W_box2 = init::xavier(rng, d / 2, 4);
  p.b_box2 = init::gaussian(rng, {4}, 0.05);
  p.gate_raw = Tensor::full({d}, gate_raw_value);
  p.W_loc = init::xavier(rng, 4, d);
  p.b_loc = init::gaussian(rng, {d}, 0.05);
  p.W_ans = init::xavier(rng, d, d);
  p.b_ans = init::gaussian(rng, {d}, 0.05);
  p.W_os = init::xavier(rng, d, d);
  p.b_os = init::gaussian(rng, {d}, 0.05);
  p.W_voc = init::xavier(rng, d, v);
  p.b_voc = init::gaussian(rng, {v}, 0.05);
  return p;
}

// Frozen ablation hyperparameters (mirrored in configs/ablation.json).
RunConfig ablation_config() {
  RunConfig cfg;
  cfg.d = 32;
  cfg.layers = 2;
  cfg.heads = 4;
  cfg.d_att = 16;
  cfg.vocab = 50;
  cfg.t_max = 6;
  cfg.d_app = 32;
  cfg.d_wv = 32;
  cfg.lambda_l = 3.0;
  cfg.lambda_s = 1.0;
  cfg.lr = 1e-3;
  cfg.epochs = 40;
  cfg.batch_size = 32;
  cfg.early_stop_patience = 40;
  return cfg;
}

// GT answer word no longer present in the OCR list (text corruption).
bool gt_word_left_ocr(const VqaInstance& inst) {
  const std::string gt = normalize_word(inst.answer_words().front());
  for (const auto& t : inst.ocr)
    if (normalize_word(t.text) == gt) return false;
  return true;
}

// ---- checks ----------------------------------------------------------------

Outcome check_gradient_fidelity() {
  RunConfig cfg;
  cfg.d = 16;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.d_att = 8;
  cfg.vocab = 20;
  cfg.t_max = 3;
  cfg.d_app = 8;
  cfg.d_wv = 16;
  cfg.seed = 7;

  SynthConfig scene;
  scene.seed = 13;
  scene.d_app = cfg.d_app;
  scene.m_min = scene.m_max = 4;
  scene.n_min = scene.n_max = 3;
  scene.w_positional = 0.0;
  scene.w_color = 0.0;
  scene.w_reading = 1.0;
  scene.ocr_corruption_rate = 0.0;
  auto data = generate(scene, 1);
  derive_text_features(data, cfg.d_wv);

  std::vector<std::string> words = {"<end>", "<unk>"};
  for (size_t i = 0; words.size() < static_cast<size_t>(cfg.vocab); ++i)
    words.emplace_back(kSceneLexicon[i]);
  const LaapNetwork net(cfg, AnswerVocab::from_words(words));
  const auto targets = match_gt(data[0].answer_words(), data[0].ocr, net.vocab());

  const auto t0 = std::chrono::steady_clock::now();
  const auto f = [&]() {
    const LossParts parts = instance_loss_parts(net, data[0], targets);
    return scale(total_loss(parts.fusion, parts.loc, parts.semantic, cfg.lambda_l, cfg.lambda_s),
                 1.0 / parts.steps);
  };
  const double err = grad_check(f, net.params().tensors(), 1e-5);
  const double secs = now_seconds(t0);

  return {err < 1e-4 && secs < 60.0,
          fmt("max rel err %.2e (tol 1e-4) over %d params in %.1f s (cap 60 s)", err,
              net.params().total_size(), secs)};
}

Outcome check_algebra_oracles() {
  Rng rng(101);

  // Box-coordinate attention rows are a probability distribution.
  double max_row_dev = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int m = rng.uniform_int(1, 5), n = rng.uniform_int(1, 6);
    CorParams p{init::xavier(rng, 4, 8), init::xavier(rng, 4, 8)};
    const Tensor att =
        position_attention(box_matrix(random_boxes(rng, m)), box_matrix(random_boxes(rng, n)), p);
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += att.values()[static_cast<size_t>(i * n + j)];
      max_row_dev = std::max(max_row_dev, std::abs(s - 1.0));
    }
  }
  if (max_row_dev >= 1e-9) return {false, fmt("attention row sums off by %.2e", max_row_dev)};

  // Attention-weighted object mix against a brute-force double loop.
  double max_mix_dev = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int m = rng.uniform_int(1, 4), n = rng.uniform_int(1, 5), d = rng.uniform_int(2, 7);
    Tensor att = Tensor::zeros({m, n});
    for (auto& v : att.values()) v = rng.uniform();
    Tensor feats = init::gaussian(rng, {n, d}, 1.0);
    const Tensor got = attend_objects(att, feats);
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < d; ++k) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j)
          acc += att.values()[static_cast<size_t>(i * n + j)] *
                 feats.values()[static_cast<size_t>(j * d + k)];
        max_mix_dev =
            std::max(max_mix_dev, std::abs(got.values()[static_cast<size_t>(i * d + k)] - acc));
      }
  }
  if (max_mix_dev >= 1e-12) return {false, fmt("object mix off brute force by %.2e", max_mix_dev)};

  // Box prediction, gated fusion, and bilinear scoring against scalar loops.
  double max_head_dev = 0.0;
  {
    const int d = 8, m = 3, t = 2, v = 5;
    const LaapParams p = make_head(rng, d, v, 0.3);
    const Tensor y_dec = init::gaussian(rng, {t, d}, 1.0);
    const Tensor raw = predict_box(y_dec, p);

    // Two-layer box MLP with a sigmoid squash, recomputed coordinate by
    // coordinate.
    for (int i = 0; i < t; ++i)
      for (int c = 0; c < 4; ++c) {
        double out = p.b_box2.values()[static_cast<size_t>(c)];
        for (int h = 0; h < d / 2; ++h) {
          double hidden = p.b_box1.values()[static_cast<size_t>(h)];
          for (int k = 0; k < d; ++k)
            hidden += y_dec.values()[static_cast<size_t>(i * d + k)] *
                      p.W_box1.values()[static_cast<size_t>(k * (d / 2) + h)];
          out += std::max(0.0, hidden) * p.W_box2.values()[static_cast<size_t>(h * 4 + c)];
        }
        const double sig = 1.0 / (1.0 + std::exp(-out));
        max_head_dev =
            std::max(max_head_dev, std::abs(raw.values()[static_cast<size_t>(i * 4 + c)] - sig));
      }

    const Tensor z_ans = fuse_localization(y_dec, raw, p);
    const auto boxes = random_boxes(rng, m);
    const Tensor y_ocr = init::gaussian(rng, {m, d}, 1.0);
    const Tensor z_ocr = ocr_localized(y_ocr, boxes, p);

    const double g = 1.0 / (1.0 + std::exp(-0.3));
    auto fused_ref = [&](const std::vector<double>& y, const std::vector<double>& b, int row,
                         int col) {
      double proj = p.b_loc.values()[static_cast<size_t>(col)];
      for (int k = 0; k < 4; ++k)
        proj +=
            b[static_cast<size_t>(row * 4 + k)] * p.W_loc.values()[static_cast<size_t>(k * d + col)];
      return y[static_cast<size_t>(row * d + col)] + g * proj;
    };
    for (int i = 0; i < t; ++i)
      for (int j = 0; j < d; ++j)
        max_head_dev = std::max(max_head_dev, std::abs(z_ans.values()[static_cast<size_t>(i * d + j)] -
                                                       fused_ref(y_dec.values(), raw.values(), i, j)));
    std::vector<double> box_flat;
    for (const auto& b : boxes)
      for (double c : b.coords()) box_flat.push_back(c);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < d; ++j)
        max_head_dev = std::max(max_head_dev, std::abs(z_ocr.values()[static_cast<size_t>(i * d + j)] -
                                                       fused_ref(y_ocr.values(), box_flat, i, j)));

    const Tensor s_ocr = score_ocr(z_ans, z_ocr, p);
    for (int i = 0; i < t; ++i)
      for (int mm = 0; mm < m; ++mm) {
        double dot = 0.0;
        for (int j = 0; j < d; ++j) {
          double a = p.b_ans.values()[static_cast<size_t>(j)];
          double o = p.b_os.values()[static_cast<size_t>(j)];
          for (int k = 0; k < d; ++k) {
            a += z_ans.values()[static_cast<size_t>(i * d + k)] *
                 p.W_ans.values()[static_cast<size_t>(k * d + j)];
            o += z_ocr.values()[static_cast<size_t>(mm * d + k)] *
                 p.W_os.values()[static_cast<size_t>(k * d + j)];
          }
          dot += a * o;
        }
        max_head_dev = std::max(
            max_head_dev, std::abs(s_ocr.values()[static_cast<size_t>(i * m + mm)] - dot));
      }
  }
  if (max_head_dev >= 1e-12) return {false, fmt("head recomputation off by %.2e", max_head_dev)};

  // Localization loss hand cases, exact.
  const Tensor same = Tensor::from({4}, {0.2, 0.3, 0.6, 0.9});
  const double l_same = loc_loss(same, BoundingBox{0.2, 0.3, 0.6, 0.9}, 1).item();
  const double l_gated = loc_loss(Tensor::from({4}, {0.9, 0.9, 1.0, 1.0}), std::nullopt, 0).item();
  const double l_half =
      loc_loss(Tensor::from({4}, {0.0, 0.0, 1.0, 1.0}), BoundingBox{0.0, 0.0, 0.5, 1.0}, 1).item();
  if (l_same != 0.0 || l_gated != 0.0 || l_half != 1.0)
    return {false, fmt("localization hand cases: %.17g %.17g %.17g (want 0 0 1)", l_same, l_gated,
                       l_half)};

  return {true, fmt("row-sum dev %.1e; mix dev %.1e; head dev %.1e; loss hand cases exact",
                    max_row_dev, max_mix_dev, max_head_dev)};
}

Outcome check_decoder_independence() {
  Rng rng(19);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 4 * rng.uniform_int(1, 3);
    const int heads = rng.uniform_int(1, 2) * 2;
    const int t_len = rng.uniform_int(2, 6);
    const int s = rng.uniform_int(2, 7);
    const TsdParams p = make_tsd(rng, d, rng.uniform_int(1, 2), heads);
    const Tensor memory = init::gaussian(rng, {s, d}, 1.0);
    const Tensor dec_in = init::gaussian(rng, {t_len, d}, 1.0);

    std::vector<char> mem_mask;
    if (trial % 3 == 0) {
      mem_mask.assign(static_cast<size_t>(s), 1);
      mem_mask[static_cast<size_t>(rng.uniform_int(0, s - 1))] = 0;
      mem_mask[0] = 1;
    }

    const Tensor base = decode_positions(dec_in, memory, p, mem_mask);
    const int t = rng.uniform_int(0, t_len - 1);
    std::vector<double> mutated = dec_in.values();
    for (int j = 0; j < d; ++j) mutated[static_cast<size_t>(t * d + j)] += rng.normal();
    const Tensor out = decode_positions(Tensor::from({t_len, d}, mutated), memory, p, mem_mask);

    bool perturbed_row_changed = false;
    for (int i = 0; i < t_len; ++i)
      for (int j = 0; j < d; ++j) {
        const size_t idx = static_cast<size_t>(i * d + j);
        if (i == t) {
          perturbed_row_changed = perturbed_row_changed || out.values()[idx] != base.values()[idx];
        } else if (out.values()[idx] != base.values()[idx]) {
          return {false, fmt("trial %d: untouched position %d moved", trial, i)};
        }
      }
    if (!perturbed_row_changed)
      return {false, fmt("trial %d: perturbed position %d did not move", trial, t)};
  }
  return {true, "100 trials: untouched positions bit-identical, perturbed position moved"};
}

Outcome check_enrichment_invariance() {
  Rng rng(37);
  double max_dev = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int m = rng.uniform_int(1, 5), n = rng.uniform_int(1, 6), d = 8;
    CorParams p{init::xavier(rng, 4, 8), init::xavier(rng, 4, 8)};
    const auto ocr_boxes = random_boxes(rng, m);
    auto obj_boxes = random_boxes(rng, n);
    Tensor x_ocr = init::gaussian(rng, {m, d}, 1.0);
    Tensor x_obj = init::gaussian(rng, {n, d}, 1.0);
    Tensor w_box = init::xavier(rng, 4, d);

    std::vector<int> perm(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
    rng.shuffle(perm);
    std::vector<BoundingBox> obj_boxes_p;
    std::vector<double> x_obj_p_flat;
    for (int j : perm) {
      obj_boxes_p.push_back(obj_boxes[static_cast<size_t>(j)]);
      for (int k = 0; k < d; ++k)
        x_obj_p_flat.push_back(x_obj.values()[static_cast<size_t>(j * d + k)]);
    }
    const Tensor x_obj_p = Tensor::from({n, d}, x_obj_p_flat);

    const EnrichedOcr a = enrich(x_ocr, ocr_boxes, x_obj, obj_boxes, p, w_box);
    const EnrichedOcr b = enrich(x_ocr, ocr_boxes, x_obj_p, obj_boxes_p, p, w_box);
    for (size_t i = 0; i < a.vectors.values().size(); ++i)
      max_dev = std::max(max_dev, std::abs(a.vectors.values()[i] - b.vectors.values()[i]));
  }
  return {max_dev < 1e-9, fmt("100 trials, max deviation %.2e (tol 1e-9)", max_dev)};
}

Outcome check_gate_off_reduction() {
  Rng rng(7);
  const int d = 8, m = 4, v = 6;
  double max_dev = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const LaapParams p = make_head(rng, d, v, -40.0);
    const Tensor y_dec = init::gaussian(rng, {1, d}, 1.0);
    const Tensor y_ocr = init::gaussian(rng, {m, d}, 1.0);
    const auto boxes = random_boxes(rng, m);

    const Tensor raw = predict_box(y_dec, p);
    const Tensor z_ans = fuse_localization(y_dec, raw, p);
    const Tensor z_ocr = ocr_localized(y_ocr, boxes, p);
    for (int i = 0; i < z_ans.size(); ++i)
      max_dev = std::max(max_dev, std::abs(z_ans.values()[static_cast<size_t>(i)] -
                                           y_dec.values()[static_cast<size_t>(i)]));
    for (int i = 0; i < z_ocr.size(); ++i)
      max_dev = std::max(max_dev, std::abs(z_ocr.values()[static_cast<size_t>(i)] -
                                           y_ocr.values()[static_cast<size_t>(i)]));

    const Tensor s_ocr_full = score_ocr(z_ans, z_ocr, p);
    const Tensor s_voc_full = score_vocab(z_ans, p);
    const Tensor s_ocr_plain = score_ocr(y_dec, y_ocr, p);
    const Tensor s_voc_plain = score_vocab(y_dec, p);
    const auto pick_full =
        select_answer({s_ocr_full.values().begin(), s_ocr_full.values().end()},
                      {s_voc_full.values().begin(), s_voc_full.values().end()});
    const auto pick_plain =
        select_answer({s_ocr_plain.values().begin(), s_ocr_plain.values().end()},
                      {s_voc_plain.values().begin(), s_voc_plain.values().end()});
    if (pick_full.kind != pick_plain.kind || pick_full.index != pick_plain.index)
      return {false, fmt("trial %d: selection diverged from the box-free head", trial)};
  }
  return {max_dev < 1e-12,
          fmt("closed gate leaves representations unchanged (max dev %.2e); 50 selections match "
              "the box-free head",
              max_dev)};
}

Outcome check_ablation_trend(const std::vector<VqaInstance>& train_set,
                             const std::vector<VqaInstance>& val_set) {
  const auto t0 = std::chrono::steady_clock::now();
  const AblationReport rep = ablate(ablation_config(), train_set, val_set, {1, 2, 3});
  const double secs = now_seconds(t0);

  std::istringstream table(rep.table());
  for (std::string line; std::getline(table, line);) std::printf("    %s\n", line.c_str());

  const double acc_tsd = rep.accuracy_stats("tsd").first;
  const double acc_cor = rep.accuracy_stats("tsd+cor").first;
  const double acc_full = rep.accuracy_stats("full").first;
  const double pos_iou = rep.mean_positional_iou("full");

  const bool ordered = acc_full >= acc_cor && acc_cor >= acc_tsd;
  const bool margin = acc_full >= acc_tsd + 0.02;
  const bool iou_ok = pos_iou >= 0.5;
  const bool time_ok = secs <= 1200.0;
  return {ordered && margin && iou_ok && time_ok,
          fmt("acc tsd %.3f <= tsd+cor %.3f <= full %.3f (margin %.3f >= 0.02); positional IoU "
              "%.3f >= 0.5; %.0f s <= 1200 s",
              acc_tsd, acc_cor, acc_full, acc_full - acc_tsd, pos_iou, secs)};
}

Outcome check_restrictions(const TrainOutput& trained, const std::vector<VqaInstance>& val_ready) {
  const LaapNetwork& net = trained.net;
  RunConfig cfg_vocab = net.config();
  cfg_vocab.restrict_mode = "vocab";
  RunConfig cfg_ocr = net.config();
  cfg_ocr.restrict_mode = "ocr";

  const EvalOutput base = evaluate(net, val_ready);
  const EvalOutput voc = evaluate(net.reconfigured(cfg_vocab), val_ready);
  const EvalOutput ocr = evaluate(net.reconfigured(cfg_ocr), val_ready);

  int n_corrupted = 0;
  double corrupted_mass = 0.0;
  for (size_t i = 0; i < val_ready.size(); ++i) {
    if (!gt_word_left_ocr(val_ready[i])) continue;
    ++n_corrupted;
    corrupted_mass += ocr.records[i].accuracy;
  }

  const double b = base.report.accuracy(), v = voc.report.accuracy(), o = ocr.report.accuracy();
  const bool strict = v < b && o < b;
  const bool corrupted_zero = n_corrupted > 0 && corrupted_mass == 0.0;
  return {strict && corrupted_zero,
          fmt("accuracy %.3f; vocab-only %.3f, copy-only %.3f (both strictly lower: %s); %d "
              "corrupted instances all score 0 under copy-only: %s",
              b, v, o, strict ? "yes" : "NO", n_corrupted, corrupted_zero ? "yes" : "NO")};
}

Outcome check_metric_oracles() {
  // Worked examples, reproduced exactly.
  const BoundingBox unit{0.0, 0.0, 1.0, 1.0};
  if (iou(unit, unit) != 1.0) return {false, "identical boxes miss IoU 1"};
  if (iou({0.0, 0.0, 0.2, 0.2}, {0.5, 0.5, 0.7, 0.7}) != 0.0)
    return {false, "disjoint boxes miss IoU 0"};
  if (iou(unit, {0.5, 0.0, 1.5, 1.0}) != 0.5 / 1.5)
    return {false, "half-shifted boxes miss IoU 1/3"};

  const std::vector<std::string> refs10(10, "stop");
  if (vqa_accuracy("STOP", refs10) != 1.0) return {false, "capped accuracy misses 1"};
  std::vector<std::string> one_match(10, "left");
  one_match[0] = "right";
  if (vqa_accuracy("right", one_match) != 1.0 / 3.0) return {false, "single match misses 1/3"};
  if (vqa_accuracy("blue", refs10) != 0.0) return {false, "zero matches miss 0"};

  if (anls("hello", {"hello"}) != 1.0) return {false, "exact match misses ANLS 1"};
  if (anls("helo", {"hello"}) != 1.0 - 1.0 / 5.0) return {false, "one edit in five misses 0.8"};
  if (anls("cat", {"dog"}) != 0.0) return {false, "full-distance pair misses ANLS 0"};

  // Symmetry fuzz: the overlap computation must not care about argument order.
  Rng rng(4242);
  double max_asym = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_boxes(rng, 1)[0];
    const auto b = random_boxes(rng, 1)[0];
    max_asym = std::max(max_asym, std::abs(iou(a, b) - iou(b, a)));
  }
  return {max_asym == 0.0,
          fmt("worked examples exact; 1000 symmetry pairs, max |iou(a,b)-iou(b,a)| = %.1g",
              max_asym)};
}

Outcome check_determinism(const std::vector<VqaInstance>& train_set,
                          const std::vector<VqaInstance>& val_set) {
  RunConfig cfg = ablation_config();
  cfg.epochs = 2;
  cfg.seed = 5;
  const std::vector<VqaInstance> small_train(train_set.begin(), train_set.begin() + 400);
  const std::vector<VqaInstance> small_val(val_set.begin(), val_set.begin() + 200);

  TrainOutput a = train(cfg, small_train, small_val);
  TrainOutput b = train(cfg, small_train, small_val);

  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path();
  const std::string path_a = (dir / "laap_gate_a.ckpt").string();
  const std::string path_b = (dir / "laap_gate_b.ckpt").string();
  save_checkpoint(path_a, a.net, cfg.seed, a.result.best_epoch);
  save_checkpoint(path_b, b.net, cfg.seed, b.result.best_epoch);

  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string bytes_a = slurp(path_a), bytes_b = slurp(path_b);
  const bool identical = !bytes_a.empty() && bytes_a == bytes_b;

  // Round-trip: a reloaded network must serve bit-identical predictions.
  const LaapNetwork reloaded = load_network(read_checkpoint(path_a));
  std::vector<VqaInstance> val_ready = small_val;
  derive_text_features(val_ready, cfg.d_wv);
  const EvalOutput mem = evaluate(a.net, val_ready);
  const EvalOutput disk = evaluate(reloaded, val_ready);
  bool same_eval = mem.records.size() == disk.records.size();
  for (size_t i = 0; same_eval && i < mem.records.size(); ++i) {
    const auto& r1 = mem.records[i];
    const auto& r2 = disk.records[i];
    same_eval = r1.answer == r2.answer && r1.accuracy == r2.accuracy &&
                r1.steps.size() == r2.steps.size();
    for (size_t s = 0; same_eval && s < r1.steps.size(); ++s)
      same_eval = r1.steps[s].score == r2.steps[s].score &&
                  r1.steps[s].index == r2.steps[s].index;
  }

  fs::remove(path_a);
  fs::remove(path_b);
  return {identical && same_eval,
          fmt("retrained checkpoints byte-identical (%zu bytes): %s; reloaded eval bit-identical "
              "on %zu instances: %s",
              bytes_a.size(), identical ? "yes" : "NO", val_ready.size(),
              same_eval ? "yes" : "NO")};
}

}  // namespace

int main() {
  std::printf("release gate: 9 checks\n");

  run_check(1, "gradient fidelity", check_gradient_fidelity);
  run_check(2, "algebra oracles", check_algebra_oracles);
  run_check(3, "decoder position independence", check_decoder_independence);
  run_check(4, "enrichment order invariance", check_enrichment_invariance);
  run_check(5, "gate-off reduction", check_gate_off_reduction);

  // Shared dataset for the training-based checks: the default generator split.
  const SynthConfig scene;  // defaults: 5000 train / 1000 val, seed 7
  const auto train_set = generate(scene, scene.n_train, 0);
  const auto val_set = generate(scene, scene.n_val, scene.n_train);

  run_check(6, "ablation trend", [&] { return check_ablation_trend(train_set, val_set); });

  // The restriction check wants the strongest full model we can afford; it is
  // not under the ablation's time budget, so it trains longer.
  run_check(7, "answer-source restriction", [&] {
    RunConfig cfg = ablation_config();
    cfg.seed = 1;
    cfg.epochs = 100;
    cfg.vocab = 82;
    TrainOutput trained = train(cfg, train_set, val_set);
    std::vector<VqaInstance> val_ready = val_set;
    derive_text_features(val_ready, cfg.d_wv);
    return check_restrictions(trained, val_ready);
  });

  run_check(8, "metric oracles", check_metric_oracles);
  run_check(9, "determinism & persistence", [&] { return check_determinism(train_set, val_set); });

  if (g_failures == 0) {
    std::printf("release gate: all 9 checks passed\n");
    return 0;
  }
  std::printf("release gate: %d of 9 checks FAILED\n", g_failures);
  return 1;
}
