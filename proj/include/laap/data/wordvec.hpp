#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace laap {

namespace detail {

inline uint64_t fnv1a64(const void* data, size_t len, uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = 14695981039346656037ull ^ seed;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace detail

// Deterministic stand-in for pretrained word embeddings: character n-grams
// (n = 3..5) of the boundary-marked lowercased word are hashed into signed
// buckets and the result is L2-normalized. Words sharing n-grams land near
// each other; the seed selects an independent hash family.
inline std::vector<double> pseudo_word_vec(const std::string& word, int dim,
                                           uint64_t seed = 0) {
  std::vector<double> v(static_cast<size_t>(dim), 0.0);
  if (dim <= 0 || word.empty()) return v;
  std::string w = "^";
  for (char c : word) w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  w.push_back('$');
  const size_t len = w.size();
  for (size_t n = 3; n <= 5; ++n) {
    if (len < n) break;
    for (size_t i = 0; i + n <= len; ++i) {
      const uint64_t h = detail::fnv1a64(w.data() + i, n, seed);
      const size_t bucket = static_cast<size_t>(h % static_cast<uint64_t>(dim));
      v[bucket] += ((h >> 32) & 1u) ? 1.0 : -1.0;
    }
  }
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq > 0.0) {
    const double inv = 1.0 / std::sqrt(sq);
    for (double& x : v) x *= inv;
  }
  return v;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  const size_t n = std::min(a.size(), b.size());
  for (size_t i = 0; i < n; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace laap
