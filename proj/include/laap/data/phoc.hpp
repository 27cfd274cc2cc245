#pragma once

#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace laap {

// Pyramidal histogram of characters. Levels 2..5 over the 36-symbol
// alphabet a-z0-9 (14 regions * 36 = 504 bits) followed by a level-2
// histogram over the 50 most frequent English bigrams (100 bits).
inline constexpr int kPhocDim = 604;

inline constexpr std::array<std::string_view, 50> kPhocBigrams = {
    "er", "in", "es", "ti", "te", "at", "on", "an", "en", "st",
    "al", "re", "is", "ed", "le", "ra", "ri", "li", "ar", "ng",
    "ne", "ic", "or", "nt", "ss", "ro", "la", "se", "de", "co",
    "ca", "ta", "io", "it", "si", "us", "ea", "ac", "el", "ma",
    "na", "ni", "tr", "ch", "di", "ia", "et", "to", "un", "ns"};

namespace detail {

inline int phoc_char_index(char c) {
  if (c >= 'a' && c <= 'z') return c - 'a';
  if (c >= '0' && c <= '9') return 26 + (c - '0');
  return -1;
}

inline int phoc_bigram_index(char a, char b) {
  for (int i = 0; i < static_cast<int>(kPhocBigrams.size()); ++i)
    if (kPhocBigrams[i][0] == a && kPhocBigrams[i][1] == b) return i;
  return -1;
}

// Exact-arithmetic region test. A span of `width` character slots starting
// at slot k of an n-slot word occupies [k*level, (k+width)*level) in units
// of 1/(n*level); region r occupies [r*n, (r+1)*n). The bit is set when the
// overlap covers at least half the span.
inline bool phoc_occupies(long long k, long long width, long long n, long long level,
                          long long region) {
  const long long lo = std::max(k * level, region * n);
  const long long hi = std::min((k + width) * level, (region + 1) * n);
  const long long overlap = hi - lo;
  return overlap > 0 && 2 * overlap >= width * level;
}

}  // namespace detail

inline std::vector<double> phoc_encode(const std::string& word) {
  std::vector<double> out(kPhocDim, 0.0);
  std::string w;
  w.reserve(word.size());
  for (char c : word) w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  const long long n = static_cast<long long>(w.size());
  if (n == 0) return out;

  int base = 0;
  for (int level = 2; level <= 5; ++level) {
    for (long long k = 0; k < n; ++k) {
      const int ci = detail::phoc_char_index(w[static_cast<size_t>(k)]);
      if (ci < 0) continue;
      for (int r = 0; r < level; ++r)
        if (detail::phoc_occupies(k, 1, n, level, r)) out[static_cast<size_t>(base + r * 36 + ci)] = 1.0;
    }
    base += level * 36;
  }

  for (long long k = 0; k + 1 < n; ++k) {
    const int bi = detail::phoc_bigram_index(w[static_cast<size_t>(k)], w[static_cast<size_t>(k + 1)]);
    if (bi < 0) continue;
    for (int r = 0; r < 2; ++r)
      if (detail::phoc_occupies(k, 2, n, 2, r)) out[static_cast<size_t>(base + r * 50 + bi)] = 1.0;
  }
  return out;
}

}  // namespace laap
