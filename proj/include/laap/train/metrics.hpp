#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "laap/data/box.hpp"

namespace laap {

inline std::string lowercase(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

inline size_t edit_distance(const std::string& a, const std::string& b) {
  const size_t n = a.size(), m = b.size();
  std::vector<size_t> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = j;
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= m; ++j) {
      const size_t subst = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, subst});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

// Max over references of 1 - normalized edit distance, zeroed at the 0.5
// distance threshold; case-insensitive.
inline double anls(const std::string& pred, const std::vector<std::string>& references) {
  const std::string p = lowercase(pred);
  double best = 0.0;
  for (const auto& ref : references) {
    const std::string r = lowercase(ref);
    const size_t len = std::max(p.size(), r.size());
    double nl;
    if (len == 0)
      nl = 0.0;  // both empty: distance 0
    else
      nl = static_cast<double>(edit_distance(p, r)) / static_cast<double>(len);
    if (nl < 0.5) best = std::max(best, 1.0 - nl);
  }
  return best;
}

// Soft benchmark accuracy: min(matches / 3, 1), case-insensitive.
inline double vqa_accuracy(const std::string& pred, const std::vector<std::string>& references) {
  const std::string p = lowercase(pred);
  int matches = 0;
  for (const auto& ref : references)
    if (lowercase(ref) == p) ++matches;
  return std::min(1.0, static_cast<double>(matches) / 3.0);
}

struct TemplateStats {
  long long n = 0;
  double accuracy_sum = 0.0;
  double anls_sum = 0.0;
  double iou_correct_sum = 0.0;
  long long n_correct_with_evidence = 0;
};

struct MetricsReport {
  long long n = 0;
  double accuracy_sum = 0.0;
  double anls_sum = 0.0;
  double iou_all_sum = 0.0;
  long long n_with_evidence = 0;
  double iou_correct_sum = 0.0;
  long long n_correct_with_evidence = 0;
  std::map<std::string, TemplateStats> per_template;

  void add(const std::string& template_name, double acc, double anls_score,
           std::optional<double> evidence_iou) {
    ++n;
    accuracy_sum += acc;
    anls_sum += anls_score;
    auto& t = per_template[template_name.empty() ? "untagged" : template_name];
    ++t.n;
    t.accuracy_sum += acc;
    t.anls_sum += anls_score;
    if (evidence_iou) {
      ++n_with_evidence;
      iou_all_sum += *evidence_iou;
      if (acc == 1.0) {
        ++n_correct_with_evidence;
        iou_correct_sum += *evidence_iou;
        ++t.n_correct_with_evidence;
        t.iou_correct_sum += *evidence_iou;
      }
    }
  }

  double accuracy() const { return n ? accuracy_sum / static_cast<double>(n) : 0.0; }
  double mean_anls() const { return n ? anls_sum / static_cast<double>(n) : 0.0; }
  double mean_iou_all() const {
    return n_with_evidence ? iou_all_sum / static_cast<double>(n_with_evidence) : 0.0;
  }
  double mean_iou_correct() const {
    return n_correct_with_evidence ? iou_correct_sum / static_cast<double>(n_correct_with_evidence)
                                   : 0.0;
  }

  nlohmann::json to_json() const {
    nlohmann::json per;
    for (const auto& [name, t] : per_template) {
      per[name] = {
          {"n", t.n},
          {"accuracy", t.n ? t.accuracy_sum / static_cast<double>(t.n) : 0.0},
          {"anls", t.n ? t.anls_sum / static_cast<double>(t.n) : 0.0},
          {"mean_iou_correct",
           t.n_correct_with_evidence
               ? t.iou_correct_sum / static_cast<double>(t.n_correct_with_evidence)
               : 0.0}};
    }
    return {{"accuracy", accuracy()},     {"anls", mean_anls()},
            {"mean_iou_correct", mean_iou_correct()}, {"mean_iou_all", mean_iou_all()},
            {"per_template", per},        {"n", n}};
  }
};

}  // namespace laap
