#pragma once

#include <array>
#include <string>
#include <vector>

#include "laap/core/ops.hpp"
#include "laap/data/box.hpp"
#include "laap/model/features.hpp"
#include "laap/model/tsd.hpp"
#include "laap/train/vocab.hpp"

namespace laap {

struct LaapParams {
  Tensor W_box1, b_box1, W_box2, b_box2;  // box MLP d -> d/2 -> 4
  Tensor gate_raw;                        // [d]; effective gate = sigmoid
  Tensor W_loc, b_loc;                    // [4,d], [d]; shared box projection
  Tensor W_ans, b_ans;                    // answer-side score projection
  Tensor W_os, b_os;                      // OCR-side score projection
  Tensor W_voc, b_voc;                    // vocabulary classifier [d,V], [V]
};

struct AnswerStep {
  StepKind kind = StepKind::Vocab;
  int index = 0;
  double score = 0.0;
  std::array<double, 4> raw_box = {0.5, 0.5, 0.5, 0.5};
  BoundingBox box;  // raw_box with sorted coordinates
  std::string word;
};

// Sigmoid-bounded raw coordinates per decoder row. Raw values feed the loss;
// sorting for IoU/rendering happens at use sites via BoundingBox::canonical.
inline Tensor predict_box(const Tensor& y_dec, const LaapParams& p) {
  return sigmoid(add(matmul(relu(add(matmul(y_dec, p.W_box1), p.b_box1)), p.W_box2), p.b_box2));
}

inline Tensor localization_gate(const LaapParams& p) { return sigmoid(p.gate_raw); }

// z = y + g * (W_loc b + b_loc), the shared fusion applied to both the
// decoder state (predicted box) and OCR encodings (token boxes).
inline Tensor fuse_localization(const Tensor& y, const Tensor& box_rows, const LaapParams& p) {
  return add(y, mul(add(matmul(box_rows, p.W_loc), p.b_loc), localization_gate(p)));
}

inline Tensor ocr_localized(const Tensor& y_ocr, const std::vector<BoundingBox>& ocr_boxes,
                            const LaapParams& p, const std::string& mask = "none") {
  const Tensor y = mask == "ocr-emb" ? scale(y_ocr, 0.0) : y_ocr;
  if (mask == "ocr-bbox") return y;
  return fuse_localization(y, box_matrix(ocr_boxes), p);
}

inline Tensor score_ocr(const Tensor& z_ans, const Tensor& z_ocr, const LaapParams& p) {
  const Tensor a = add(matmul(z_ans, p.W_ans), p.b_ans);
  const Tensor o = add(matmul(z_ocr, p.W_os), p.b_os);
  return matmul(a, transpose(o));
}

inline Tensor score_vocab(const Tensor& z_ans, const LaapParams& p) {
  return add(matmul(z_ans, p.W_voc), p.b_voc);
}

// Argmax over [s_ocr | s_voc]. Exact ties resolve to the lower concatenated
// index, so OCR copies beat vocabulary words. <unk> is never selectable;
// restriction modes cut one source out entirely (restrict=ocr still allows
// <end> so decoding can terminate).
inline AnswerStep select_answer(const std::vector<double>& s_ocr,
                                const std::vector<double>& s_voc,
                                const std::string& restrict_mode = "none") {
  AnswerStep best;
  bool found = false;
  auto consider = [&](StepKind kind, int index, double score) {
    if (!found || score > best.score) {
      best.kind = kind;
      best.index = index;
      best.score = score;
      found = true;
    }
  };
  if (restrict_mode != "vocab")
    for (size_t m = 0; m < s_ocr.size(); ++m)
      consider(StepKind::OcrCopy, static_cast<int>(m), s_ocr[m]);
  for (size_t v = 0; v < s_voc.size(); ++v) {
    if (static_cast<int>(v) == kUnkId) continue;
    if (restrict_mode == "ocr" && static_cast<int>(v) != kEndId) continue;
    consider(StepKind::Vocab, static_cast<int>(v), s_voc[v]);
  }
  if (!found) throw ContractError("select_answer: no selectable score");
  return best;
}

}  // namespace laap
