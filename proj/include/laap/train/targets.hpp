#pragma once

#include <optional>
#include <string>
#include <vector>

#include "laap/data/box.hpp"
#include "laap/data/dataset.hpp"
#include "laap/train/vocab.hpp"

namespace laap {

// Per-decode-step supervision: multi-hot OCR targets, optional vocabulary
// class, and the matched ground-truth box that gates the localization loss.
struct StepTarget {
  int vocab_target = -1;        // -1 = none; kEndId for the terminal step
  std::vector<double> t_ocr;    // length M, entries in {0,1}
  int first_match = -1;         // reading-order-first matched token, -1 if none
  std::optional<BoundingBox> b_gt;
  int indicator = 0;

  bool consistent() const {
    bool any = false;
    for (double v : t_ocr) any = any || v == 1.0;
    return (indicator == 1) == any && (indicator == 1) == b_gt.has_value();
  }
};

namespace detail {

// Reading order: top-to-bottom then left-to-right by box top-left corner.
inline bool reading_before(const BoundingBox& a, const BoundingBox& b) {
  if (a.y_min != b.y_min) return a.y_min < b.y_min;
  return a.x_min < b.x_min;
}

}  // namespace detail

inline std::vector<StepTarget> match_gt(const std::vector<std::string>& answer_words,
                                        const std::vector<OcrToken>& ocr,
                                        const AnswerVocab& vocab) {
  if (answer_words.empty()) throw ContractError("match_gt: empty answer");
  std::vector<std::string> norm_ocr;
  norm_ocr.reserve(ocr.size());
  for (const auto& t : ocr) norm_ocr.push_back(normalize_word(t.text));

  std::vector<StepTarget> steps;
  steps.reserve(answer_words.size() + 1);
  for (const auto& word : answer_words) {
    StepTarget st;
    st.t_ocr.assign(ocr.size(), 0.0);
    const std::string w = normalize_word(word);
    for (size_t m = 0; m < ocr.size(); ++m) {
      if (norm_ocr[m] != w) continue;
      st.t_ocr[m] = 1.0;
      if (st.first_match < 0 ||
          detail::reading_before(ocr[m].box, ocr[static_cast<size_t>(st.first_match)].box))
        st.first_match = static_cast<int>(m);
    }
    if (st.first_match >= 0) {
      st.indicator = 1;
      st.b_gt = ocr[static_cast<size_t>(st.first_match)].box;
    }
    st.vocab_target = vocab.id_of(w);
    if (st.vocab_target == kUnkId || st.vocab_target == kEndId) st.vocab_target = -1;
    steps.push_back(std::move(st));
  }

  StepTarget end;
  end.t_ocr.assign(ocr.size(), 0.0);
  end.vocab_target = kEndId;
  steps.push_back(std::move(end));
  return steps;
}

}  // namespace laap
