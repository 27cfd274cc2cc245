#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "laap/core/errors.hpp"
#include "laap/data/dataset.hpp"

namespace laap {

inline constexpr int kEndId = 0;
inline constexpr int kUnkId = 1;

// Frozen matching rule: lowercase, strip leading/trailing punctuation.
inline std::string normalize_word(const std::string& w) {
  size_t b = 0, e = w.size();
  auto is_punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
  while (b < e && is_punct(w[b])) ++b;
  while (e > b && is_punct(w[e - 1])) --e;
  std::string out;
  out.reserve(e - b);
  for (size_t i = b; i < e; ++i)
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(w[i]))));
  return out;
}

// Fixed answer vocabulary: <end>, <unk>, then the most frequent normalized
// answer words of the training split. Capacity is deliberately allowed to be
// smaller than the word stock, leaving rare words reachable only by copying.
struct AnswerVocab {
  std::vector<std::string> words;
  std::unordered_map<std::string, int> index;

  int size() const { return static_cast<int>(words.size()); }

  int id_of(const std::string& normalized) const {
    auto it = index.find(normalized);
    return it == index.end() ? -1 : it->second;
  }

  const std::string& word_of(int id) const {
    if (id < 0 || id >= size()) throw ContractError("answer vocab id out of range");
    return words[static_cast<size_t>(id)];
  }

  static AnswerVocab from_words(std::vector<std::string> words) {
    if (words.size() < 2 || words[0] != "<end>" || words[1] != "<unk>")
      throw ValidationError("answer vocab must start with <end>, <unk>");
    AnswerVocab v;
    v.words = std::move(words);
    for (int i = 0; i < v.size(); ++i) {
      if (v.index.count(v.words[static_cast<size_t>(i)]))
        throw ValidationError("duplicate answer vocab word: " + v.words[static_cast<size_t>(i)]);
      v.index[v.words[static_cast<size_t>(i)]] = i;
    }
    return v;
  }

  static AnswerVocab build(const std::vector<VqaInstance>& train, int capacity) {
    if (capacity < 3) throw ValidationError("answer vocab capacity must be >= 3");
    std::map<std::string, long long> counts;
    for (const auto& inst : train)
      for (const auto& w : inst.answer_words()) {
        const std::string n = normalize_word(w);
        if (!n.empty()) ++counts[n];
      }
    std::vector<std::pair<std::string, long long>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    std::vector<std::string> words = {"<end>", "<unk>"};
    for (const auto& [w, c] : ranked) {
      if (static_cast<int>(words.size()) >= capacity) break;
      words.push_back(w);
    }
    return from_words(std::move(words));
  }
};

}  // namespace laap
