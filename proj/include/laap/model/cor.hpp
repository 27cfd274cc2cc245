#pragma once

#include <atomic>
#include <cmath>
#include <vector>

#include "laap/core/ops.hpp"
#include "laap/data/box.hpp"
#include "laap/model/features.hpp"

namespace laap {

// Counts entries into the enrichment path so ablated runs can assert the
// module was never touched.
inline std::atomic<uint64_t>& cor_call_counter() {
  static std::atomic<uint64_t> counter{0};
  return counter;
}

struct CorParams {
  Tensor W_Q;  // [4, d_att]
  Tensor W_K;  // [4, d_att]
  bool scaled = false;
};

struct EnrichedOcr {
  Tensor vectors;    // [M, d]
  Tensor attention;  // [M, N]; undefined handle when N == 0
};

// Geometry-only attention: softmax over objects of (W_Q b_ocr) . (W_K b_obj).
inline Tensor position_attention(const Tensor& b_ocr, const Tensor& b_obj,
                                 const CorParams& params) {
  cor_call_counter().fetch_add(1, std::memory_order_relaxed);
  if (b_ocr.dim(1) != 4 || b_obj.dim(1) != 4)
    throw ShapeError("position_attention expects [*,4] box matrices");
  if (b_obj.dim(0) < 1) throw ContractError("position_attention requires N >= 1");
  const Tensor q = matmul(b_ocr, params.W_Q);
  const Tensor k = matmul(b_obj, params.W_K);
  Tensor logits = matmul(q, transpose(k));
  if (params.scaled) logits = scale(logits, 1.0 / std::sqrt(static_cast<double>(params.W_Q.dim(1))));
  return softmax_last_axis(logits);
}

inline Tensor attend_objects(const Tensor& att, const Tensor& x_obj) {
  return matmul(att, x_obj);
}

// x_ocr + attended object context + box projection. With no objects the
// context term is zero.
inline EnrichedOcr enrich(const Tensor& x_ocr, const std::vector<BoundingBox>& ocr_boxes,
                          const Tensor& x_obj, const std::vector<BoundingBox>& obj_boxes,
                          const CorParams& params, const Tensor& W_box) {
  cor_call_counter().fetch_add(1, std::memory_order_relaxed);
  const Tensor b_ocr = box_matrix(ocr_boxes);
  EnrichedOcr out;
  Tensor acc = add(x_ocr, matmul(b_ocr, W_box));
  if (!obj_boxes.empty()) {
    out.attention = position_attention(b_ocr, box_matrix(obj_boxes), params);
    acc = add(acc, attend_objects(out.attention, x_obj));
  }
  out.vectors = acc;
  return out;
}

}  // namespace laap
