#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "laap/core/errors.hpp"

namespace laap {

// Fixed question-side vocabulary. Every generated question tokenizes without
// <unk>; id 0 is reserved for out-of-vocabulary words in hand-written input.
inline constexpr std::array<std::string_view, 20> kQuestionVocab = {
    "<unk>", "what", "is",     "the",    "leftmost", "rightmost", "top",
    "bottom", "word", "on",    "red",    "green",    "blue",      "yellow",
    "purple", "orange", "object", "does", "sign",    "say"};

inline constexpr int kQuestionMax = 16;  // positional table rows for questions

inline int question_word_id(const std::string& w) {
  for (int i = 0; i < static_cast<int>(kQuestionVocab.size()); ++i)
    if (kQuestionVocab[static_cast<size_t>(i)] == w) return i;
  return 0;
}

inline std::vector<int> tokenize_question(const std::vector<std::string>& words) {
  if (words.empty() || static_cast<int>(words.size()) > kQuestionMax)
    throw ValidationError("question length must be in [1, " + std::to_string(kQuestionMax) + "]");
  std::vector<int> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(question_word_id(w));
  return ids;
}

inline constexpr std::array<std::string_view, 6> kObjectColors = {
    "red", "green", "blue", "yellow", "purple", "orange"};

inline constexpr std::array<std::string_view, 5> kObjectShapes = {
    "circle", "square", "triangle", "star", "sign"};

// Scene word stock. Deliberately avoids the color names and question words so
// template questions never collide with token text.
inline constexpr std::array<std::string_view, 80> kSceneLexicon = {
    "lantern", "pillar",  "harbor",  "meadow",  "copper",  "violet",  "marble",
    "timber",  "anchor",  "beacon",  "canyon",  "cinder",  "dagger",  "ember",
    "falcon",  "garnet",  "hollow",  "ivory",   "jasper",  "kernel",  "ledger",
    "mantle",  "nickel",  "onyx",    "parlor",  "quarry",  "raven",   "saddle",
    "tunnel",  "umber",   "vessel",  "walnut",  "zephyr",  "bazaar",  "cobalt",
    "drift",   "easel",   "fjord",   "glade",   "hearth",  "inlet",   "jetty",
    "knoll",   "lagoon",  "mosaic",  "nectar",  "orchid",  "prism",   "quill",
    "ridge",   "summit",  "thicket", "upland",  "vortex",  "willow",  "yonder",
    "zenith",  "arbor",   "bluff",   "cairn",   "delta",   "escarp",  "foundry",
    "grotto",  "hamlet",  "isthmus", "jigsaw",  "keep",    "lumen",   "mill",
    "notch",   "oasis",   "plaza",   "quarter", "rook",    "spire",   "trellis",
    "uplink",  "vault",   "wharf"};

}  // namespace laap
