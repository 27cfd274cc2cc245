#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "laap/core/ops.hpp"
#include "laap/data/box.hpp"
#include "laap/model/network.hpp"
#include "laap/train/targets.hpp"

namespace laap {

// Differentiable IoU of a raw (possibly inverted) predicted 4-tuple against
// a fixed ground-truth box. Width/height/intersection are clamped at zero;
// when the union is empty the IoU is exactly 0 and gradient flows only
// through the L1 term of the caller.
inline Tensor box_iou(const Tensor& raw4, const BoundingBox& gt) {
  if (raw4.size() != 4) throw ShapeError("box_iou expects 4 coordinates");
  const Tensor px0 = elem(raw4, 0), py0 = elem(raw4, 1), px1 = elem(raw4, 2), py1 = elem(raw4, 3);
  auto c = [](double v) { return Tensor::scalar(v); };
  const Tensor iw = relu(sub(tmin(px1, c(gt.x_max)), tmax(px0, c(gt.x_min))));
  const Tensor ih = relu(sub(tmin(py1, c(gt.y_max)), tmax(py0, c(gt.y_min))));
  const Tensor inter = mul(iw, ih);
  const Tensor area_p = mul(relu(sub(px1, px0)), relu(sub(py1, py0)));
  const Tensor uni = sub(add(area_p, c(gt.area())), inter);
  if (uni.item() > 0.0) return div(inter, uni);
  return Tensor::scalar(0.0);
}

inline Tensor box_l1(const Tensor& raw4, const BoundingBox& gt) {
  const std::array<double, 4> g = gt.coords();
  Tensor acc = Tensor::scalar(0.0);
  for (int i = 0; i < 4; ++i)
    acc = add(acc, abs_(sub(elem(raw4, i), Tensor::scalar(g[static_cast<size_t>(i)]))));
  return acc;
}

// (1 - IoU + L1) gated by the match indicator.
inline Tensor loc_loss(const Tensor& raw4, const std::optional<BoundingBox>& b_gt,
                       int indicator) {
  if (indicator == 0) return Tensor::scalar(0.0);
  if (!b_gt) throw ContractError("loc_loss: indicator set without a ground-truth box");
  return add(sub(Tensor::scalar(1.0), box_iou(raw4, *b_gt)), box_l1(raw4, *b_gt));
}

inline Tensor fusion_loss_step(const Tensor& s_ocr_row, const std::vector<double>& t_ocr) {
  if (s_ocr_row.size() != static_cast<int>(t_ocr.size()))
    throw ShapeError("fusion loss: target length mismatch");
  return bce_with_logits_sum(s_ocr_row, t_ocr);
}

inline Tensor semantic_loss_step(const Tensor& s_voc_row, int vocab_target) {
  if (vocab_target < 0) return Tensor::scalar(0.0);
  return softmax_xent(s_voc_row, vocab_target);
}

inline Tensor total_loss(const Tensor& l_f, const Tensor& l_l, const Tensor& l_s,
                         double lambda_l, double lambda_s) {
  auto check = [](const Tensor& t, const char* name) {
    if (!std::isfinite(t.item())) throw NumericError(std::string("non-finite loss component: ") + name);
  };
  check(l_f, "fusion");
  check(l_l, "localization");
  check(l_s, "semantic");
  return add(l_f, add(scale(l_l, lambda_l), scale(l_s, lambda_s)));
}

struct LossParts {
  Tensor fusion, loc, semantic;
  int steps = 0;
};

// Per-instance unnormalized loss sums under teacher forcing. The trainer
// divides by the batch's total step count so lambda weights stay comparable
// across batch compositions.
inline LossParts instance_loss_parts(const LaapNetwork& net, const VqaInstance& inst,
                                     const std::vector<StepTarget>& targets) {
  const LaapNetwork::Encoded enc = net.encode_instance(inst);
  const Tensor dec_in = net.teacher_inputs(enc, targets);
  const LaapNetwork::HeadOut head = net.head_forward(enc, dec_in);
  const int t_steps = dec_in.dim(0);

  LossParts parts;
  parts.steps = t_steps;
  parts.fusion = Tensor::scalar(0.0);
  parts.loc = Tensor::scalar(0.0);
  parts.semantic = Tensor::scalar(0.0);
  for (int t = 0; t < t_steps; ++t) {
    const StepTarget& st = targets[static_cast<size_t>(t)];
    parts.fusion = add(parts.fusion, fusion_loss_step(row(head.s_ocr, t), st.t_ocr));
    parts.semantic = add(parts.semantic, semantic_loss_step(row(head.s_voc, t), st.vocab_target));
    if (net.config().use_lap && st.indicator == 1)
      parts.loc = add(parts.loc, loc_loss(row(head.box_raw, t), st.b_gt, st.indicator));
  }
  return parts;
}

}  // namespace laap
