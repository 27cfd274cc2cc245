#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "laap/core/errors.hpp"
#include "laap/core/rng.hpp"
#include "laap/data/dataset.hpp"
#include "laap/data/lexicon.hpp"
#include "laap/data/wordvec.hpp"

namespace laap {

inline constexpr uint64_t kGlyphSeed = 0x676c7966ull;       // OCR appearance hash family
inline constexpr uint64_t kObjAppearanceSeed = 0x6f626a61ull;  // object appearance projection

struct SynthConfig {
  int lexicon_size = 80;
  int m_min = 4, m_max = 8;  // OCR tokens per scene
  int n_min = 2, n_max = 4;  // context objects per scene
  int grid = 6;
  double w_positional = 0.35;
  double w_color = 0.40;
  double w_reading = 0.25;
  double ocr_corruption_rate = 0.10;
  int d_app = 32;
  uint64_t seed = 7;
  int n_train = 5000, n_val = 1000, n_test = 1000;

  void validate() const {
    if (lexicon_size < 4 || lexicon_size > static_cast<int>(kSceneLexicon.size()))
      throw ValidationError("synth: lexicon_size out of range");
    if (m_min < 1 || m_min > m_max) throw ValidationError("synth: bad token count range");
    if (n_min < 0 || n_min > n_max) throw ValidationError("synth: bad object count range");
    if (grid < 2) throw ValidationError("synth: grid too small");
    if (m_max > grid * grid) throw ValidationError("synth: more tokens than grid cells");
    if (ocr_corruption_rate < 0.0 || ocr_corruption_rate > 1.0)
      throw ValidationError("synth: corruption rate outside [0,1]");
    const double wsum = w_positional + w_color + w_reading;
    if (w_positional < 0 || w_color < 0 || w_reading < 0 || std::abs(wsum - 1.0) > 1e-9)
      throw ValidationError("synth: template weights must be non-negative and sum to 1");
    if (d_app < 1) throw ValidationError("synth: d_app must be positive");
    if (n_train < 0 || n_val < 0 || n_test < 0) throw ValidationError("synth: negative split size");
  }
};

inline void from_json(const nlohmann::json& j, SynthConfig& c) {
  c = SynthConfig{};
  auto opt = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  opt("lexicon_size", c.lexicon_size);
  opt("m_min", c.m_min);
  opt("m_max", c.m_max);
  opt("n_min", c.n_min);
  opt("n_max", c.n_max);
  opt("grid", c.grid);
  opt("w_positional", c.w_positional);
  opt("w_color", c.w_color);
  opt("w_reading", c.w_reading);
  opt("ocr_corruption_rate", c.ocr_corruption_rate);
  opt("d_app", c.d_app);
  opt("synth_seed", c.seed);
  opt("n_train", c.n_train);
  opt("n_val", c.n_val);
  opt("n_test", c.n_test);
  c.validate();
}

inline void to_json(nlohmann::json& j, const SynthConfig& c) {
  j = {{"lexicon_size", c.lexicon_size},
       {"m_min", c.m_min},
       {"m_max", c.m_max},
       {"n_min", c.n_min},
       {"n_max", c.n_max},
       {"grid", c.grid},
       {"w_positional", c.w_positional},
       {"w_color", c.w_color},
       {"w_reading", c.w_reading},
       {"ocr_corruption_rate", c.ocr_corruption_rate},
       {"d_app", c.d_app},
       {"synth_seed", c.seed},
       {"n_train", c.n_train},
       {"n_val", c.n_val},
       {"n_test", c.n_test}};
}

namespace detail {

// Color+shape one-hot pushed through a fixed random projection: solvable
// only by a model that actually reads object features.
inline std::vector<double> object_appearance(int color, int shape, int d_app) {
  Rng rng(Rng::key(kObjAppearanceSeed, static_cast<uint64_t>(color * 16 + shape)));
  std::vector<double> v(static_cast<size_t>(d_app));
  for (auto& x : v) x = rng.normal() * 0.5;
  return v;
}

struct Cell {
  int col, row;
};

inline BoundingBox token_box(const Cell& c, int grid) {
  const double s = 1.0 / grid;
  return BoundingBox{(c.col + 0.10) * s, (c.row + 0.30) * s, (c.col + 0.90) * s,
                     (c.row + 0.70) * s};
}

inline BoundingBox object_box(const Cell& c, int grid) {
  const double s = 1.0 / grid;
  return BoundingBox{(c.col + 0.03) * s, (c.row + 0.03) * s, (c.col + 0.97) * s,
                     (c.row + 0.97) * s};
}

inline BoundingBox sign_box(const Cell& start, int span, int grid) {
  const double s = 1.0 / grid;
  return BoundingBox{(start.col + 0.03) * s, (start.row + 0.03) * s,
                     (start.col + span - 0.03) * s, (start.row + 0.97) * s};
}

inline std::string corrupt_word(const std::string& w, Rng& rng) {
  if (w.empty()) return w;
  std::string out = w;
  const int pos = rng.uniform_int(0, static_cast<int>(w.size()) - 1);
  char repl = static_cast<char>('a' + rng.uniform_int(0, 25));
  while (repl == out[static_cast<size_t>(pos)]) repl = static_cast<char>('a' + rng.uniform_int(0, 25));
  out[static_cast<size_t>(pos)] = repl;
  return out;
}

}  // namespace detail

// One deterministic scene per (seed, index). Tokens sit in distinct grid
// cells; objects cover anchor tokens; the question template decides which
// token is the answer and supplies its box as evidence.
inline VqaInstance generate_instance(const SynthConfig& cfg, long long index) {
  Rng rng(Rng::key(cfg.seed, static_cast<uint64_t>(index)));
  const int grid = cfg.grid;

  // Template choice.
  const double roll = rng.uniform();
  enum class Tpl { Positional, Color, Reading };
  Tpl tpl = Tpl::Positional;
  if (roll < cfg.w_positional)
    tpl = Tpl::Positional;
  else if (roll < cfg.w_positional + cfg.w_color)
    tpl = Tpl::Color;
  else
    tpl = Tpl::Reading;

  int m = rng.uniform_int(cfg.m_min, cfg.m_max);
  int n = rng.uniform_int(cfg.n_min, cfg.n_max);
  const int span = tpl == Tpl::Reading ? rng.uniform_int(2, 3) : 0;
  if (tpl == Tpl::Reading) m = std::max(m, span + std::max(0, n - 1));
  if (tpl == Tpl::Color) n = std::max(n, 1);
  m = std::min(m, grid * grid);

  std::vector<detail::Cell> cells;
  std::vector<int> answer_idx;  // indices into cells/words that the answer reads
  int attempts = 0;
  std::string direction;
  while (true) {
    if (++attempts > 200) throw ContractError("scene placement did not converge");
    cells.clear();
    answer_idx.clear();

    std::vector<int> all(static_cast<size_t>(grid * grid));
    for (int i = 0; i < grid * grid; ++i) all[static_cast<size_t>(i)] = i;
    rng.shuffle(all);

    if (tpl == Tpl::Reading) {
      const int row = rng.uniform_int(0, grid - 1);
      const int col = rng.uniform_int(0, grid - span);
      for (int k = 0; k < span; ++k) {
        cells.push_back({col + k, row});
        answer_idx.push_back(k);
      }
      size_t next = 0;
      while (static_cast<int>(cells.size()) < m && next < all.size()) {
        const int cell = all[next++];
        const detail::Cell c{cell % grid, cell / grid};
        bool taken = false;
        for (const auto& e : cells) taken = taken || (e.col == c.col && e.row == c.row);
        if (!taken) cells.push_back(c);
      }
      if (static_cast<int>(cells.size()) < m) continue;
      break;
    }

    for (int k = 0; k < m; ++k) cells.push_back({all[static_cast<size_t>(k)] % grid,
                                                 all[static_cast<size_t>(k)] / grid});
    if (tpl == Tpl::Color) {
      answer_idx.push_back(rng.uniform_int(0, m - 1));
      break;
    }

    // Positional: need a strictly unique extremum in some direction.
    std::array<std::string, 4> dirs = {"leftmost", "rightmost", "top", "bottom"};
    std::vector<int> order = {0, 1, 2, 3};
    rng.shuffle(order);
    int chosen = -1;
    for (int di : order) {
      int best = 0;
      bool unique = true;
      for (int k = 1; k < m; ++k) {
        const auto& a = cells[static_cast<size_t>(k)];
        const auto& b = cells[static_cast<size_t>(best)];
        int cmp = 0;
        switch (di) {
          case 0: cmp = a.col - b.col; break;
          case 1: cmp = b.col - a.col; break;
          case 2: cmp = a.row - b.row; break;
          case 3: cmp = b.row - a.row; break;
        }
        if (cmp < 0) best = k;
      }
      for (int k = 0; k < m && unique; ++k) {
        if (k == best) continue;
        const auto& a = cells[static_cast<size_t>(k)];
        const auto& b = cells[static_cast<size_t>(best)];
        switch (di) {
          case 0: unique = a.col != b.col; break;
          case 1: unique = a.col != b.col; break;
          case 2: unique = a.row != b.row; break;
          case 3: unique = a.row != b.row; break;
        }
      }
      if (unique) {
        chosen = di;
        answer_idx.push_back(best);
        break;
      }
    }
    if (chosen >= 0) {
      direction = dirs[static_cast<size_t>(chosen)];
      break;
    }
  }

  // Words. Answer tokens get words that are unique within the scene so the
  // ground-truth box is unambiguous.
  std::vector<std::string> words(static_cast<size_t>(m));
  auto pick_word = [&] {
    return std::string(kSceneLexicon[static_cast<size_t>(rng.uniform_int(0, cfg.lexicon_size - 1))]);
  };
  for (int k : answer_idx) {
    std::string w = pick_word();
    auto clashes = [&](const std::string& c) {
      for (int other : answer_idx) {
        const auto& ow = words[static_cast<size_t>(other)];
        if (other != k && !ow.empty() && ow == c) return true;
      }
      return false;
    };
    while (clashes(w)) w = pick_word();
    words[static_cast<size_t>(k)] = w;
  }
  for (int k = 0; k < m; ++k) {
    if (!words[static_cast<size_t>(k)].empty()) continue;
    std::string w = pick_word();
    auto is_answer_word = [&](const std::string& c) {
      for (int a : answer_idx)
        if (words[static_cast<size_t>(a)] == c) return true;
      return false;
    };
    while (is_answer_word(w)) w = pick_word();
    words[static_cast<size_t>(k)] = w;
  }

  VqaInstance inst;
  inst.id = index;

  // Objects: anchor distractors to non-answer tokens so object cues stay
  // tied to real geometry.
  std::vector<int> anchor_pool;
  for (int k = 0; k < m; ++k)
    if (std::find(answer_idx.begin(), answer_idx.end(), k) == answer_idx.end())
      anchor_pool.push_back(k);
  rng.shuffle(anchor_pool);

  const int target_color = rng.uniform_int(0, static_cast<int>(kObjectColors.size()) - 1);
  auto push_object = [&](const BoundingBox& box, int color, int shape) {
    SceneObject obj;
    obj.box = box;
    obj.appearance = detail::object_appearance(color, shape, cfg.d_app);
    obj.color = std::string(kObjectColors[static_cast<size_t>(color)]);
    obj.shape = std::string(kObjectShapes[static_cast<size_t>(shape)]);
    inst.objects.push_back(std::move(obj));
  };

  int distractors = n;
  if (tpl == Tpl::Color) {
    push_object(detail::object_box(cells[static_cast<size_t>(answer_idx[0])], grid), target_color,
                rng.uniform_int(0, 3));
    distractors = n - 1;
  } else if (tpl == Tpl::Reading) {
    const detail::Cell start = cells[0];
    push_object(detail::sign_box(start, span, grid), target_color, 4);
    distractors = n - 1;
  }
  for (int k = 0; k < distractors && k < static_cast<int>(anchor_pool.size()); ++k) {
    int color = rng.uniform_int(0, static_cast<int>(kObjectColors.size()) - 1);
    if (tpl == Tpl::Color)
      while (color == target_color)
        color = rng.uniform_int(0, static_cast<int>(kObjectColors.size()) - 1);
    push_object(detail::object_box(cells[static_cast<size_t>(anchor_pool[static_cast<size_t>(k)])],
                                   grid),
                color, rng.uniform_int(0, 3));
  }

  // Question, answer, evidence.
  std::vector<std::string> q_words;
  std::vector<std::string> answer_words;
  switch (tpl) {
    case Tpl::Positional:
      q_words = {"what", "is", "the", direction, "word"};
      answer_words = {words[static_cast<size_t>(answer_idx[0])]};
      inst.template_name = "positional";
      break;
    case Tpl::Color:
      q_words = {"what", "word", "is", "on", "the",
                 std::string(kObjectColors[static_cast<size_t>(target_color)]), "object"};
      answer_words = {words[static_cast<size_t>(answer_idx[0])]};
      inst.template_name = "color";
      break;
    case Tpl::Reading:
      q_words = {"what", "does", "the", "sign", "say"};
      for (int k : answer_idx) answer_words.push_back(words[static_cast<size_t>(k)]);
      inst.template_name = "reading";
      break;
  }
  inst.question.text = [&] {
    std::string s;
    for (const auto& w : q_words) {
      if (!s.empty()) s.push_back(' ');
      s += w;
    }
    return s;
  }();
  inst.question.ids = tokenize_question(q_words);
  inst.evidence_box = detail::token_box(cells[static_cast<size_t>(answer_idx[0])], grid);

  // Corruption garbles the rendered text of the first answer token; the
  // reference answer keeps the true word.
  std::vector<std::string> rendered = words;
  if (rng.uniform() < cfg.ocr_corruption_rate) {
    const int victim = answer_idx[0];
    rendered[static_cast<size_t>(victim)] =
        detail::corrupt_word(words[static_cast<size_t>(victim)], rng);
    // A duplicate of the answer word elsewhere would defeat the corruption.
    for (int k = 0; k < m; ++k)
      if (k != victim && rendered[static_cast<size_t>(k)] == words[static_cast<size_t>(victim)])
        rendered[static_cast<size_t>(k)] =
            detail::corrupt_word(rendered[static_cast<size_t>(k)], rng);
  }

  for (int k = 0; k < m; ++k) {
    OcrToken t;
    t.text = rendered[static_cast<size_t>(k)];
    t.box = detail::token_box(cells[static_cast<size_t>(k)], grid);
    t.appearance = pseudo_word_vec(t.text, cfg.d_app, kGlyphSeed);
    inst.ocr.push_back(std::move(t));
  }

  std::string answer;
  for (const auto& w : answer_words) {
    if (!answer.empty()) answer.push_back(' ');
    answer += w;
  }
  inst.answers.assign(10, answer);
  return inst;
}

inline std::vector<VqaInstance> generate(const SynthConfig& cfg, int count,
                                         long long index_offset = 0) {
  cfg.validate();
  std::vector<VqaInstance> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(generate_instance(cfg, index_offset + i));
  return out;
}

struct SplitResult {
  std::vector<VqaInstance> train, val, test;
};

inline SplitResult split(std::vector<VqaInstance> instances,
                         const std::array<double, 3>& fractions, uint64_t seed) {
  double wsum = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw ValidationError("split: negative fraction");
    wsum += f;
  }
  if (std::abs(wsum - 1.0) > 1e-9) throw ValidationError("split: fractions must sum to 1");
  std::vector<size_t> order(instances.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(Rng::key(seed, 0x5117));
  rng.shuffle(order);
  const auto total = static_cast<double>(instances.size());
  const size_t n_train = static_cast<size_t>(std::floor(fractions[0] * total + 0.5));
  const size_t n_val = static_cast<size_t>(std::floor(fractions[1] * total + 0.5));
  SplitResult out;
  for (size_t i = 0; i < order.size(); ++i) {
    auto& inst = instances[order[i]];
    if (i < n_train)
      out.train.push_back(std::move(inst));
    else if (i < n_train + n_val)
      out.val.push_back(std::move(inst));
    else
      out.test.push_back(std::move(inst));
  }
  return out;
}

}  // namespace laap
