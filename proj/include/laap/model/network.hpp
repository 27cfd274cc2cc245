#pragma once

#include <optional>
#include <string>
#include <vector>

#include "laap/model/config.hpp"
#include "laap/model/cor.hpp"
#include "laap/model/features.hpp"
#include "laap/model/laap_head.hpp"
#include "laap/model/params.hpp"
#include "laap/model/tsd.hpp"
#include "laap/train/targets.hpp"
#include "laap/train/vocab.hpp"

namespace laap {

// The assembled answer-prediction network: feature projections, box-guided
// OCR enrichment, encoder/decoder stacks, and the answer head. Ablation
// switches choose between the enriched path and a flat encoder input where
// objects become ordinary sequence positions.
class LaapNetwork {
 public:
  LaapNetwork(const RunConfig& cfg, AnswerVocab vocab) : cfg_(cfg), vocab_(std::move(vocab)) {
    cfg_.validate();
    if (vocab_.size() < 3) throw ValidationError("network needs an answer vocab of size >= 3");
    Rng rng(Rng::key(cfg_.seed, 0x1a17));
    build(rng);
  }

  const RunConfig& config() const { return cfg_; }
  const AnswerVocab& vocab() const { return vocab_; }

  // Same weights under different run-time switches (restrict/mask/ablation).
  // The parameter set is registered unconditionally, so any configuration
  // with matching dimensions shares the same layout.
  LaapNetwork reconfigured(const RunConfig& cfg) const {
    LaapNetwork out(cfg, vocab_);
    out.params_.copy_values_from(params_);
    return out;
  }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const LaapParams& head() const { return head_; }
  const TsdParams& tsd() const { return tsd_; }
  const CorParams& cor() const { return cor_; }

  struct Encoded {
    Tensor memory;       // [K+M(+N), d]
    Tensor ocr_source;   // [M, d] rows fed to the encoder and to step inputs
    Tensor attention;    // [M, N] box attention; undefined when unused
    std::vector<BoundingBox> ocr_boxes;
    int ocr_offset = 0;
    int m = 0;

    Tensor ocr_out() const { return rows(memory, ocr_offset, ocr_offset + m); }
  };

  Encoded encode_instance(const VqaInstance& inst) const {
    check_instance(inst);
    Encoded out;
    const Tensor q_emb =
        embed_question(inst.question, params_.get("question.table"), params_.get("question.pos"),
                       params_.get("question.ln.gain"), params_.get("question.ln.bias"));
    const Tensor x_ocr = assemble_ocr_features(inst.ocr, params_.get("ocr_feat.W"),
                                               params_.get("ocr_feat.b"),
                                               params_.get("ocr_feat.ln.gain"),
                                               params_.get("ocr_feat.ln.bias"));
    for (const auto& t : inst.ocr) out.ocr_boxes.push_back(t.box);
    std::vector<BoundingBox> obj_boxes;
    for (const auto& o : inst.objects) obj_boxes.push_back(o.box);
    Tensor x_obj;
    if (!inst.objects.empty())
      x_obj = project_objects(inst.objects, params_.get("obj_feat.W"), params_.get("obj_feat.b"),
                              params_.get("obj_feat.ln.gain"), params_.get("obj_feat.ln.bias"));

    std::vector<Tensor> parts = {q_emb};
    if (cfg_.use_cor) {
      const EnrichedOcr enriched =
          enrich(x_ocr, out.ocr_boxes, x_obj, obj_boxes, cor_, params_.get("ocr_box.W"));
      out.ocr_source = enriched.vectors;
      out.attention = enriched.attention;
      parts.push_back(out.ocr_source);
    } else {
      out.ocr_source = add(x_ocr, matmul(box_matrix(out.ocr_boxes), params_.get("ocr_box.W")));
      parts.push_back(out.ocr_source);
      if (!inst.objects.empty())
        parts.push_back(add(x_obj, matmul(box_matrix(obj_boxes), params_.get("obj_box.W"))));
    }
    const Tensor input = parts.size() == 1 ? parts[0] : concat_rows(parts);
    out.memory = encode(input, tsd_);
    out.ocr_offset = static_cast<int>(inst.question.ids.size());
    out.m = static_cast<int>(inst.ocr.size());
    return out;
  }

  // Teacher forcing: step 0 is the start vector; step t embeds the ground
  // truth of step t-1 (matched OCR row if any, else vocabulary row, else
  // <unk>), plus the step-position embedding.
  Tensor teacher_inputs(const Encoded& enc, const std::vector<StepTarget>& steps) const {
    const int t_steps = std::min<int>(static_cast<int>(steps.size()), cfg_.t_max);
    if (t_steps < 1) throw ContractError("teacher_inputs: no decode steps");
    std::vector<Tensor> in_rows;
    in_rows.reserve(static_cast<size_t>(t_steps));
    for (int t = 0; t < t_steps; ++t) {
      std::optional<StepKind> kind;
      int index = -1;
      if (t > 0) {
        const StepTarget& prev = steps[static_cast<size_t>(t - 1)];
        if (prev.first_match >= 0) {
          kind = StepKind::OcrCopy;
          index = prev.first_match;
        } else {
          kind = StepKind::Vocab;
          index = prev.vocab_target >= 0 ? prev.vocab_target : kUnkId;
        }
      }
      in_rows.push_back(step_input(t, kind, index, params_.get("decode.begin"), enc.ocr_source,
                                   params_.get("answer.embed"), params_.get("decode.pos")));
    }
    return in_rows.size() == 1 ? in_rows[0] : concat_rows(in_rows);
  }

  struct HeadOut {
    Tensor y_dec;    // [T, d]
    Tensor box_raw;  // [T, 4]; undefined when the localization path is off
    Tensor z_ans;    // [T, d]
    Tensor z_ocr;    // [M, d]
    Tensor s_ocr;    // [T, M]
    Tensor s_voc;    // [T, V]
  };

  HeadOut head_forward(const Encoded& enc, const Tensor& dec_inputs) const {
    HeadOut out;
    out.y_dec = decode_positions(dec_inputs, enc.memory, tsd_);
    const Tensor y_ocr = enc.ocr_out();
    if (cfg_.use_lap) {
      out.box_raw = predict_box(out.y_dec, head_);
      out.z_ans = fuse_localization(out.y_dec, out.box_raw, head_);
      out.z_ocr = ocr_localized(y_ocr, enc.ocr_boxes, head_, cfg_.mask);
    } else {
      out.z_ans = out.y_dec;
      out.z_ocr = cfg_.mask == "ocr-emb" ? scale(y_ocr, 0.0) : y_ocr;
    }
    out.s_ocr = score_ocr(out.z_ans, out.z_ocr, head_);
    out.s_voc = score_vocab(out.z_ans, head_);
    return out;
  }

  std::vector<AnswerStep> greedy_decode(const VqaInstance& inst) const {
    const Encoded enc = encode_instance(inst);
    return greedy_decode(enc, inst);
  }

  std::vector<AnswerStep> greedy_decode(const Encoded& enc, const VqaInstance& inst) const {
    std::vector<AnswerStep> steps;
    std::optional<StepKind> prev_kind;
    int prev_index = -1;
    for (int t = 0; t < cfg_.t_max; ++t) {
      const Tensor dec_in = step_input(t, prev_kind, prev_index, params_.get("decode.begin"),
                                       enc.ocr_source, params_.get("answer.embed"),
                                       params_.get("decode.pos"));
      const HeadOut h = head_forward(enc, dec_in);
      const std::vector<double> s_ocr(h.s_ocr.data(), h.s_ocr.data() + h.s_ocr.size());
      const std::vector<double> s_voc(h.s_voc.data(), h.s_voc.data() + h.s_voc.size());
      AnswerStep step = select_answer(s_ocr, s_voc, cfg_.restrict_mode);
      if (cfg_.use_lap) {
        for (int i = 0; i < 4; ++i) step.raw_box[static_cast<size_t>(i)] = h.box_raw.data()[i];
        step.box = BoundingBox::canonical(step.raw_box[0], step.raw_box[1], step.raw_box[2],
                                          step.raw_box[3]);
      }
      if (step.kind == StepKind::OcrCopy)
        step.word = inst.ocr[static_cast<size_t>(step.index)].text;
      else if (step.index != kEndId)
        step.word = vocab_.word_of(step.index);
      steps.push_back(step);
      if (step.kind == StepKind::Vocab && step.index == kEndId) break;
      prev_kind = step.kind;
      prev_index = step.index;
    }
    return steps;
  }

  static std::string answer_from_steps(const std::vector<AnswerStep>& steps) {
    std::string out;
    for (const auto& s : steps) {
      if (s.kind == StepKind::Vocab && s.index == kEndId) break;
      if (!out.empty()) out.push_back(' ');
      out += s.word;
    }
    return out;
  }

 private:
  void check_instance(const VqaInstance& inst) const {
    if (inst.ocr.empty()) throw ValidationError("instance has no OCR tokens");
    const int feat = cfg_.d_app + cfg_.d_wv + kPhocDim;
    for (const auto& t : inst.ocr) {
      if (static_cast<int>(t.appearance.size()) != cfg_.d_app)
        throw ValidationError("ocr appearance dim " + std::to_string(t.appearance.size()) +
                              " != configured " + std::to_string(cfg_.d_app));
      if (static_cast<int>(t.word_vec.size() + t.appearance.size() + t.phoc.size()) != feat)
        throw ValidationError("ocr feature row width mismatch");
    }
    for (const auto& o : inst.objects)
      if (static_cast<int>(o.appearance.size()) != cfg_.d_app)
        throw ValidationError("object appearance dim " + std::to_string(o.appearance.size()) +
                              " != configured " + std::to_string(cfg_.d_app));
  }

  void build(Rng& rng) {
    const int d = cfg_.d, v = vocab_.size();
    const int feat = cfg_.d_app + cfg_.d_wv + kPhocDim;
    auto mat = [&](const std::string& name, int r, int c) {
      return params_.add(name, init::xavier(rng, r, c));
    };
    auto vec = [&](const std::string& name, int n) {
      return params_.add(name, init::zeros({n}));
    };
    auto ln = [&](const std::string& prefix) {
      LnParams p;
      p.gain = params_.add(prefix + ".gain", init::ones({d}));
      p.bias = params_.add(prefix + ".bias", init::zeros({d}));
      return p;
    };
    auto emb = [&](const std::string& name, int r, int c) {
      return params_.add(name, init::gaussian(rng, {r, c}, 0.02));
    };

    mat("ocr_feat.W", feat, d);
    vec("ocr_feat.b", d);
    ln("ocr_feat.ln");
    {
      // With enrichment on, object context is added onto token embeddings,
      // so the two modalities compete for the same coordinates. Starting
      // object vectors in the upper half of the embedding leaves the lower
      // half legible as pure token identity; training is free to blend the
      // halves once the binding is worth it.
      Tensor W = init::xavier(rng, cfg_.d_app, d);
      if (cfg_.use_cor)
        for (int r = 0; r < cfg_.d_app; ++r)
          for (int c = 0; c < (3 * d) / 4; ++c)
            W.values()[static_cast<size_t>(r) * d + c] = 0.0;
      params_.add("obj_feat.W", W);
    }
    vec("obj_feat.b", d);
    {
      // With enrichment on, object vectors ride on top of token embeddings
      // as additive context; starting their norm well below the token norm
      // keeps early token identity legible while the binding warms up. As
      // plain sequence rows they carry their own positions and start at
      // the usual unit gain.
      Tensor gain = init::ones({d});
      if (cfg_.use_cor)
        for (auto& g : gain.values()) g = 0.5;
      params_.add("obj_feat.ln.gain", gain);
      params_.add("obj_feat.ln.bias", init::zeros({d}));
    }
    emb("question.table", static_cast<int>(kQuestionVocab.size()), d);
    emb("question.pos", kQuestionMax, d);
    ln("question.ln");

    // Position attention starts at a geometry-following configuration:
    // logits begin as dot products of box centers measured from the image
    // midpoint, so nearby token/object pairs are preferred from the first
    // step and training only has to refine the binding. Pure noise here
    // leaves the object mix uninformative for a long stretch of training.
    //
    // Recentring needs a per-object bias, which the bilinear form lacks;
    // token boxes share a near-constant width, so a width channel on the
    // query side acts as that constant (softmax drops the row-constant
    // remainder). Channels: 0,1 = sharpened center x/y, 2 = width-as-one
    // times the recentring bias.
    {
      const double sharp = 6.0;        // initial logit scale on center dots
      const double token_w = 0.8 / 6;  // typical token box width
      Tensor wq = init::gaussian(rng, {4, cfg_.d_att}, 0.05);
      Tensor wk = init::gaussian(rng, {4, cfg_.d_att}, 0.05);
      auto at = [&](Tensor& t, int r, int c) -> double& {
        return t.values()[static_cast<size_t>(r) * cfg_.d_att + c];
      };
      // center-x: 0.5*(x1+x2); center-y: 0.5*(y1+y2)
      at(wq, 0, 0) += 0.5 * sharp; at(wq, 2, 0) += 0.5 * sharp;
      at(wq, 1, 1) += 0.5 * sharp; at(wq, 3, 1) += 0.5 * sharp;
      at(wk, 0, 0) += 0.5;         at(wk, 2, 0) += 0.5;
      at(wk, 1, 1) += 0.5;         at(wk, 3, 1) += 0.5;
      // width channel (≈1 on tokens) times -(cx+cy)/2 on objects
      at(wq, 0, 2) += -sharp / token_w; at(wq, 2, 2) += sharp / token_w;
      at(wk, 0, 2) += -0.25; at(wk, 1, 2) += -0.25;
      at(wk, 2, 2) += -0.25; at(wk, 3, 2) += -0.25;
      cor_.W_Q = params_.add("cor.W_Q", wq);
      cor_.W_K = params_.add("cor.W_K", wk);
    }
    mat("ocr_box.W", 4, d);
    mat("obj_box.W", 4, d);

    tsd_.heads = cfg_.heads;
    for (int i = 0; i < cfg_.layers; ++i) {
      const std::string p = "enc" + std::to_string(i);
      EncoderLayerParams layer;
      layer.attn = {mat(p + ".attn.Wq", d, d), vec(p + ".attn.bq", d),
                    mat(p + ".attn.Wk", d, d),
                    mat(p + ".attn.Wv", d, d), vec(p + ".attn.bv", d),
                    mat(p + ".attn.Wo", d, d), vec(p + ".attn.bo", d)};
      layer.ln1 = ln(p + ".ln1");
      layer.ff = {mat(p + ".ff.W1", d, 4 * d), vec(p + ".ff.b1", 4 * d),
                  mat(p + ".ff.W2", 4 * d, d), vec(p + ".ff.b2", d)};
      layer.ln2 = ln(p + ".ln2");
      tsd_.enc.push_back(layer);
    }
    tsd_.enc_final = ln("enc_final");
    for (int i = 0; i < cfg_.layers; ++i) {
      const std::string p = "dec" + std::to_string(i);
      DecoderLayerParams layer;
      layer.cross = {mat(p + ".cross.Wq", d, d), vec(p + ".cross.bq", d),
                     mat(p + ".cross.Wk", d, d),
                     mat(p + ".cross.Wv", d, d), vec(p + ".cross.bv", d),
                     mat(p + ".cross.Wo", d, d), vec(p + ".cross.bo", d)};
      layer.ln1 = ln(p + ".ln1");
      layer.ff = {mat(p + ".ff.W1", d, 4 * d), vec(p + ".ff.b1", 4 * d),
                  mat(p + ".ff.W2", 4 * d, d), vec(p + ".ff.b2", d)};
      layer.ln2 = ln(p + ".ln2");
      tsd_.dec.push_back(layer);
    }
    tsd_.dec_final = ln("dec_final");

    params_.add("decode.begin", init::gaussian(rng, {1, d}, 0.02));
    params_.add("decode.pos", init::gaussian(rng, {cfg_.t_max, d}, 0.02));
    params_.add("answer.embed", init::gaussian(rng, {v, d}, 0.02));

    head_.W_box1 = mat("head.box1.W", d, d / 2);
    head_.b_box1 = vec("head.box1.b", d / 2);
    head_.W_box2 = mat("head.box2.W", d / 2, 4);
    head_.b_box2 = vec("head.box2.b", 4);
    head_.gate_raw = params_.add("head.gate", init::zeros({d}));
    head_.W_loc = mat("head.loc.W", 4, d);
    head_.b_loc = vec("head.loc.b", d);
    head_.W_ans = mat("head.ans.W", d, d);
    head_.b_ans = vec("head.ans.b", d);
    head_.W_os = mat("head.os.W", d, d);
    head_.b_os = vec("head.os.b", d);
    head_.W_voc = mat("head.voc.W", d, v);
    head_.b_voc = vec("head.voc.b", v);
  }

  RunConfig cfg_;
  AnswerVocab vocab_;
  ParamStore params_;
  CorParams cor_;
  TsdParams tsd_;
  LaapParams head_;
};

}  // namespace laap
