#pragma once

#include <vector>

#include "laap/core/ops.hpp"
#include "laap/data/dataset.hpp"
#include "laap/data/lexicon.hpp"

namespace laap {

// Constant (non-learned) matrix wrapping for raw instance features.
inline Tensor feature_matrix(const std::vector<std::vector<double>>& rows, int cols,
                             const std::string& what) {
  if (rows.empty()) throw ContractError(what + ": no rows");
  std::vector<double> flat;
  flat.reserve(rows.size() * static_cast<size_t>(cols));
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != cols)
      throw ShapeError(what + ": row width " + std::to_string(r.size()) + " != " +
                       std::to_string(cols));
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return Tensor::from({static_cast<int>(rows.size()), cols}, flat);
}

inline Tensor box_matrix(const std::vector<BoundingBox>& boxes) {
  std::vector<double> flat;
  flat.reserve(boxes.size() * 4);
  for (const auto& b : boxes) {
    flat.push_back(b.x_min);
    flat.push_back(b.y_min);
    flat.push_back(b.x_max);
    flat.push_back(b.y_max);
  }
  return Tensor::from({static_cast<int>(boxes.size()), 4}, flat);
}

// [appearance | word_vec | phoc] rows for all OCR tokens, projected to d.
// Box information deliberately enters elsewhere.
inline Tensor project_ocr(const std::vector<OcrToken>& tokens, const Tensor& W_feat,
                          const Tensor& bias) {
  std::vector<std::vector<double>> rows;
  rows.reserve(tokens.size());
  for (const auto& t : tokens) {
    std::vector<double> r = t.appearance;
    r.insert(r.end(), t.word_vec.begin(), t.word_vec.end());
    r.insert(r.end(), t.phoc.begin(), t.phoc.end());
    rows.push_back(std::move(r));
  }
  const Tensor x = feature_matrix(rows, W_feat.dim(0), "ocr features");
  return add(matmul(x, W_feat), bias);
}

inline Tensor assemble_ocr_features(const std::vector<OcrToken>& tokens, const Tensor& W_feat,
                                    const Tensor& bias, const Tensor& ln_gain,
                                    const Tensor& ln_bias) {
  return layer_norm(project_ocr(tokens, W_feat, bias), ln_gain, ln_bias);
}

inline Tensor project_objects(const std::vector<SceneObject>& objects, const Tensor& W_feat,
                              const Tensor& bias, const Tensor& ln_gain,
                              const Tensor& ln_bias) {
  std::vector<std::vector<double>> rows;
  rows.reserve(objects.size());
  for (const auto& o : objects) rows.push_back(o.appearance);
  const Tensor x = feature_matrix(rows, W_feat.dim(0), "object features");
  return layer_norm(add(matmul(x, W_feat), bias), ln_gain, ln_bias);
}

// Embedding-table lookup alone; exposed so the positional stage can be
// inspected separately.
inline Tensor question_lookup(const Question& q, const Tensor& table) {
  if (q.ids.empty()) throw ValidationError("question has no tokens");
  for (int id : q.ids)
    if (id < 0 || id >= table.dim(0))
      throw ValidationError("question token id out of range: " + std::to_string(id));
  return embedding_lookup(table, q.ids);
}

inline Tensor embed_question(const Question& q, const Tensor& table, const Tensor& pos_table,
                             const Tensor& ln_gain, const Tensor& ln_bias) {
  const int k = static_cast<int>(q.ids.size());
  if (k > pos_table.dim(0))
    throw ValidationError("question longer than positional table: " + std::to_string(k));
  std::vector<int> positions(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) positions[static_cast<size_t>(i)] = i;
  const Tensor looked = question_lookup(q, table);
  const Tensor pos = embedding_lookup(pos_table, positions);
  return layer_norm(add(looked, pos), ln_gain, ln_bias);
}

}  // namespace laap
