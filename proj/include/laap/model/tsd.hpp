#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "laap/core/ops.hpp"

namespace laap {

// No key bias: softmax logits are invariant to a shared shift of every key,
// so such a parameter would be dead weight with an identically-zero gradient.
struct AttnParams {
  Tensor Wq, bq, Wk, Wv, bv, Wo, bo;
};

struct LnParams {
  Tensor gain, bias;
};

struct FfParams {
  Tensor W1, b1, W2, b2;
};

struct EncoderLayerParams {
  AttnParams attn;
  FfParams ff;
  LnParams ln1, ln2;
};

// Decoder layers carry cross-attention only; there deliberately is no
// self-attention parameter slot.
struct DecoderLayerParams {
  AttnParams cross;
  FfParams ff;
  LnParams ln1, ln2;
};

struct TsdParams {
  std::vector<EncoderLayerParams> enc;
  std::vector<DecoderLayerParams> dec;
  LnParams enc_final, dec_final;
  int heads = 1;
};

namespace detail {

inline Tensor mask_logit_row(const std::vector<char>& mask) {
  std::vector<double> v(mask.size());
  for (size_t i = 0; i < mask.size(); ++i) v[i] = mask[i] ? 0.0 : -1e30;
  return Tensor::from({static_cast<int>(mask.size())}, v);
}

inline Tensor zero_masked_rows(const Tensor& x, const std::vector<char>& mask) {
  if (mask.empty()) return x;
  const int rows_n = x.dim(0), cols_n = x.dim(1);
  std::vector<double> m(static_cast<size_t>(rows_n) * cols_n);
  for (int i = 0; i < rows_n; ++i)
    for (int j = 0; j < cols_n; ++j)
      m[static_cast<size_t>(i) * cols_n + j] = mask[static_cast<size_t>(i)] ? 1.0 : 0.0;
  return mul(x, Tensor::from({rows_n, cols_n}, std::move(m)));
}

}  // namespace detail

// Scaled dot-product attention with H heads. `kv_mask` (1 = attend, 0 =
// never attend) is applied as an additive -1e30 logit, which underflows to
// an exact zero weight after softmax.
inline Tensor multi_head_attention(const Tensor& q_in, const Tensor& kv_in,
                                   const AttnParams& p, int heads,
                                   const std::vector<char>& kv_mask = {}) {
  const int d = q_in.dim(1);
  if (d % heads != 0) throw ContractError("attention width not divisible by head count");
  if (!kv_mask.empty() && static_cast<int>(kv_mask.size()) != kv_in.dim(0))
    throw ShapeError("kv mask length mismatch");
  const int dh = d / heads;
  const Tensor q = add(matmul(q_in, p.Wq), p.bq);
  const Tensor k = matmul(kv_in, p.Wk);
  const Tensor v = add(matmul(kv_in, p.Wv), p.bv);
  std::optional<Tensor> logit_mask;
  if (!kv_mask.empty()) logit_mask = detail::mask_logit_row(kv_mask);
  std::vector<Tensor> ctx;
  ctx.reserve(static_cast<size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const Tensor qh = col_range(q, h * dh, (h + 1) * dh);
    const Tensor kh = col_range(k, h * dh, (h + 1) * dh);
    const Tensor vh = col_range(v, h * dh, (h + 1) * dh);
    Tensor logits = scale(matmul(qh, transpose(kh)), 1.0 / std::sqrt(static_cast<double>(dh)));
    if (logit_mask) logits = add(logits, *logit_mask);
    ctx.push_back(matmul(softmax_last_axis(logits), vh));
  }
  const Tensor merged = heads == 1 ? ctx[0] : concat_last(ctx);
  return add(matmul(merged, p.Wo), p.bo);
}

inline Tensor feed_forward(const Tensor& x, const FfParams& p) {
  return add(matmul(relu(add(matmul(x, p.W1), p.b1)), p.W2), p.b2);
}

// Pre-norm encoder stack. Masked positions are silenced on entry, excluded
// from every attention, and re-zeroed after each residual block, so their
// content can never reach an unmasked output.
inline Tensor encode(const Tensor& inputs, const TsdParams& params,
                     const std::vector<char>& pad_mask = {}) {
  if (!pad_mask.empty()) {
    if (static_cast<int>(pad_mask.size()) != inputs.dim(0))
      throw ShapeError("pad mask length mismatch");
    bool any = false;
    for (char c : pad_mask) any = any || (c != 0);
    if (!any) throw ContractError("encode: all positions masked");
  }
  Tensor x = detail::zero_masked_rows(inputs, pad_mask);
  for (const auto& layer : params.enc) {
    const Tensor h = layer_norm(x, layer.ln1.gain, layer.ln1.bias);
    x = add(x, multi_head_attention(h, h, layer.attn, params.heads, pad_mask));
    x = add(x, feed_forward(layer_norm(x, layer.ln2.gain, layer.ln2.bias), layer.ff));
    x = detail::zero_masked_rows(x, pad_mask);
  }
  x = layer_norm(x, params.enc_final.gain, params.enc_final.bias);
  return detail::zero_masked_rows(x, pad_mask);
}

// Decoder without self-attention: every output row is a function of its own
// input row and the encoder memory only.
inline Tensor decode_positions(const Tensor& dec_inputs, const Tensor& memory,
                               const TsdParams& params,
                               const std::vector<char>& mem_mask = {}) {
  Tensor x = dec_inputs;
  for (const auto& layer : params.dec) {
    const Tensor h = layer_norm(x, layer.ln1.gain, layer.ln1.bias);
    x = add(x, multi_head_attention(h, memory, layer.cross, params.heads, mem_mask));
    x = add(x, feed_forward(layer_norm(x, layer.ln2.gain, layer.ln2.bias), layer.ff));
  }
  return layer_norm(x, params.dec_final.gain, params.dec_final.bias);
}

enum class StepKind { OcrCopy, Vocab };

// Decoder input for one step: the start vector at step 0, afterwards the
// embedding of the previous step's outcome plus a step-position embedding.
inline Tensor step_input(int step, std::optional<StepKind> prev_kind, int prev_index,
                         const Tensor& begin, const Tensor& ocr_source,
                         const Tensor& ans_embed, const Tensor& pos_table) {
  if (step < 0 || step >= pos_table.dim(0))
    throw ContractError("step index out of range: " + std::to_string(step));
  if (step == 0) return begin;
  if (!prev_kind) throw ContractError("step_input: missing previous outcome after step 0");
  Tensor content;
  if (*prev_kind == StepKind::OcrCopy) {
    if (prev_index < 0 || prev_index >= ocr_source.dim(0))
      throw ContractError("step_input: OCR index out of range");
    content = row(ocr_source, prev_index);
  } else {
    if (prev_index < 0 || prev_index >= ans_embed.dim(0))
      throw ContractError("step_input: vocab id out of range");
    content = row(ans_embed, prev_index);
  }
  return add(content, row(pos_table, step));
}

}  // namespace laap
