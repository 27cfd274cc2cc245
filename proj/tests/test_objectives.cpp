#include <cmath>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "laap/core/gradcheck.hpp"
#include "laap/core/rng.hpp"
#include "laap/train/losses.hpp"
#include "laap/train/metrics.hpp"
#include "laap/train/targets.hpp"
#include "laap/train/vocab.hpp"

using namespace laap;

namespace {

OcrToken tok(const std::string& text, double x0, double y0, double x1, double y1) {
  OcrToken t;
  t.text = text;
  t.box = BoundingBox{x0, y0, x1, y1};
  return t;
}

AnswerVocab tiny_vocab() {
  return AnswerVocab::from_words({"<end>", "<unk>", "stop", "go", "river"});
}

}  // namespace

TEST_CASE("match_gt folds case and picks reading-order boxes", "[objectives]") {
  const auto vocab = tiny_vocab();
  const std::vector<OcrToken> ocr = {tok("STOP", 0.5, 0.5, 0.7, 0.6), tok("go", 0.1, 0.1, 0.2, 0.2)};
  const auto steps = match_gt({"stop"}, ocr, vocab);
  REQUIRE(steps.size() == 2);
  CHECK(steps[0].t_ocr == std::vector<double>{1.0, 0.0});
  CHECK(steps[0].indicator == 1);
  CHECK(steps[0].first_match == 0);
  REQUIRE(steps[0].b_gt.has_value());
  CHECK(steps[0].b_gt->x_min == 0.5);
  CHECK(steps[0].vocab_target == vocab.id_of("stop"));
  CHECK(steps[1].vocab_target == kEndId);
  CHECK(steps[1].indicator == 0);
  CHECK(steps[1].t_ocr == std::vector<double>{0.0, 0.0});
}

TEST_CASE("match_gt leaves recognition errors unmatched", "[objectives]") {
  const auto steps = match_gt({"river"}, {tok("rlver", 0.1, 0.1, 0.3, 0.2)}, tiny_vocab());
  CHECK(steps[0].t_ocr == std::vector<double>{0.0});
  CHECK(steps[0].indicator == 0);
  CHECK_FALSE(steps[0].b_gt.has_value());
  CHECK(steps[0].vocab_target == tiny_vocab().id_of("river"));  // vocabulary path still supervises
}

TEST_CASE("match_gt duplicates resolve by reading order and strip punctuation", "[objectives]") {
  const std::vector<OcrToken> ocr = {tok("stop", 0.6, 0.5, 0.8, 0.6), tok("Stop!", 0.2, 0.1, 0.4, 0.2),
                                     tok("other", 0.0, 0.0, 0.1, 0.1)};
  const auto steps = match_gt({"stop."}, ocr, tiny_vocab());
  CHECK(steps[0].t_ocr == std::vector<double>{1.0, 1.0, 0.0});
  CHECK(steps[0].first_match == 1);  // higher on the page
  CHECK(steps[0].b_gt->y_min == 0.1);
}

TEST_CASE("match_gt multi-word answers give one step per word plus the end step", "[objectives]") {
  const std::vector<OcrToken> ocr = {tok("alpha", 0.1, 0.1, 0.3, 0.15),
                                     tok("beta", 0.4, 0.1, 0.6, 0.15)};
  const auto steps = match_gt({"alpha", "beta"}, ocr, tiny_vocab());
  REQUIRE(steps.size() == 3);
  CHECK(steps[0].first_match == 0);
  CHECK(steps[1].first_match == 1);
  CHECK(steps[0].vocab_target == -1);  // not in the tiny vocab
  CHECK(steps[2].vocab_target == kEndId);
}

TEST_CASE("match_gt indicator always mirrors the target bits", "[objectives]") {
  Rng rng(7);
  const auto vocab = tiny_vocab();
  const std::vector<std::string> words = {"stop", "go", "river", "rock", "tree"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<OcrToken> ocr;
    const int m = rng.uniform_int(1, 5);
    for (int i = 0; i < m; ++i) {
      const double x0 = rng.uniform(0.0, 0.7), y0 = rng.uniform(0.0, 0.7);
      ocr.push_back(tok(words[static_cast<size_t>(rng.uniform_int(0, 4))], x0, y0, x0 + 0.1, y0 + 0.1));
    }
    std::vector<std::string> answer = {words[static_cast<size_t>(rng.uniform_int(0, 4))]};
    if (rng.uniform() < 0.3) answer.push_back(words[static_cast<size_t>(rng.uniform_int(0, 4))]);
    for (const auto& st : match_gt(answer, ocr, vocab)) CHECK(st.consistent());
  }
}

TEST_CASE("localization loss hand cases are exact", "[objectives]") {
  const BoundingBox gt{0.0, 0.0, 0.5, 1.0};

  const Tensor same = Tensor::from({4}, {0.0, 0.0, 0.5, 1.0});
  CHECK(loc_loss(same, gt, 1).item() == 0.0);

  const Tensor anything = Tensor::from({4}, {0.9, 0.9, 1.0, 1.0});
  CHECK(loc_loss(anything, std::nullopt, 0).item() == 0.0);

  const Tensor wide = Tensor::from({4}, {0.0, 0.0, 1.0, 1.0});
  CHECK(loc_loss(wide, gt, 1).item() == 1.0);  // 1 - 0.5 + 0.5

  CHECK_THROWS_AS(loc_loss(wide, std::nullopt, 1), ContractError);
}

TEST_CASE("localization loss is non-negative and differentiable", "[objectives]") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    Tensor raw = Tensor::zeros({4});
    raw.values() = {rng.uniform(0.03, 0.97), rng.uniform(0.03, 0.97), rng.uniform(0.03, 0.97),
                    rng.uniform(0.03, 0.97)};
    const double x0 = rng.uniform(0.0, 0.6), y0 = rng.uniform(0.0, 0.6);
    const BoundingBox gt{x0, y0, x0 + rng.uniform(0.1, 0.35), y0 + rng.uniform(0.1, 0.35)};
    CHECK(loc_loss(raw, gt, 1).item() >= 0.0);
  }

  Tensor raw = Tensor::from({4}, {0.21, 0.33, 0.72, 0.88});
  const BoundingBox gt{0.1, 0.2, 0.5, 0.6};
  const double err = grad_check([&] { return loc_loss(raw, gt, 1); }, {raw});
  CHECK(err < 1e-4);
}

TEST_CASE("fusion loss closed forms", "[objectives]") {
  const Tensor zero = Tensor::from({1, 1}, {0.0});
  CHECK(fusion_loss_step(row(zero, 0), {1.0}).item() == Catch::Approx(std::log(2.0)).margin(1e-15));

  const Tensor confident = Tensor::from({1, 1}, {40.0});
  CHECK(fusion_loss_step(row(confident, 0), {1.0}).item() < 1e-15);

  const Tensor pair = Tensor::from({1, 2}, {2.0, -1.0});
  const double expect = std::log1p(std::exp(-2.0)) + std::log1p(std::exp(-1.0));
  CHECK(fusion_loss_step(row(pair, 0), {1.0, 0.0}).item() == Catch::Approx(expect).margin(1e-15));

  CHECK_THROWS_AS(fusion_loss_step(row(pair, 0), {1.0}), ShapeError);
}

TEST_CASE("semantic loss closed forms and masking", "[objectives]") {
  const Tensor uniform = Tensor::from({1, 4}, {0.7, 0.7, 0.7, 0.7});
  CHECK(semantic_loss_step(row(uniform, 0), 2).item() == Catch::Approx(std::log(4.0)).margin(1e-12));

  const Tensor confident = Tensor::from({1, 3}, {0.0, 40.0, 0.0});
  CHECK(semantic_loss_step(row(confident, 0), 1).item() < 1e-15);

  CHECK(semantic_loss_step(row(confident, 0), -1).item() == 0.0);

  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor logits = Tensor::zeros({1, 6});
    for (auto& v : logits.values()) v = rng.normal() * 2.0;
    const int target = rng.uniform_int(0, 5);
    double lse = 0.0, mx = -1e300;
    for (double v : logits.values()) mx = std::max(mx, v);
    for (double v : logits.values()) lse += std::exp(v - mx);
    const double expect = mx + std::log(lse) - logits.values()[static_cast<size_t>(target)];
    CHECK(std::abs(semantic_loss_step(row(logits, 0), target).item() - expect) < 1e-12);
  }
}

TEST_CASE("total loss combines components as written", "[objectives]") {
  const Tensor lf = Tensor::scalar(1.0), ll = Tensor::scalar(2.0), ls = Tensor::scalar(3.0);
  CHECK(total_loss(lf, ll, ls, 0.0, 0.0).item() == 1.0);
  CHECK(total_loss(lf, ll, ls, 1.0, 1.0).item() == 6.0);
  CHECK(total_loss(lf, ll, ls, 0.5, 2.0).item() == 8.0);

  try {
    total_loss(lf, Tensor::scalar(std::nan("")), ls, 1.0, 1.0);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("localization") != std::string::npos);
  }

  Tensor a = Tensor::from({2}, {0.4, -0.3});
  Tensor b = Tensor::from({2}, {1.1, 0.6});
  const double err = grad_check(
      [&] {
        const Tensor lf2 = sum(mul(a, a));
        const Tensor ll2 = sum(abs_(b));
        const Tensor ls2 = sum(mul(a, b));
        return total_loss(lf2, ll2, ls2, 0.7, 1.3);
      },
      {a, b});
  CHECK(err < 1e-6);
}

TEST_CASE("iou hand values", "[objectives]") {
  const BoundingBox a{0.0, 0.0, 1.0, 1.0};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, BoundingBox{0.5, 0.0, 1.5, 1.0}) == 0.5 / 1.5);
  CHECK(iou(BoundingBox{0.0, 0.0, 0.2, 0.2}, BoundingBox{0.5, 0.5, 0.9, 0.9}) == 0.0);
  CHECK(iou(BoundingBox{0.1, 0.1, 0.1, 0.1}, BoundingBox{0.1, 0.1, 0.1, 0.1}) == 0.0);  // empty union
}

TEST_CASE("iou symmetry and bounds under fuzz", "[objectives]") {
  Rng rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto rb = [&] {
      const double x0 = rng.uniform(0.0, 0.9), y0 = rng.uniform(0.0, 0.9);
      return BoundingBox{x0, y0, x0 + rng.uniform(0.0, 1.0 - x0), y0 + rng.uniform(0.0, 1.0 - y0)};
    };
    const BoundingBox a = rb(), b = rb();
    const double ab = iou(a, b), ba = iou(b, a);
    CHECK(ab == ba);
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    if (a.area() > 0.0) CHECK(iou(a, a) == 1.0);
  }
}

TEST_CASE("anls hand values", "[objectives]") {
  CHECK(anls("stop", {"stop"}) == 1.0);
  CHECK(anls("STOP", {"stop"}) == 1.0);
  CHECK(anls("helo", {"hello"}) == Catch::Approx(0.8).margin(1e-15));
  CHECK(anls("cat", {"dog"}) == 0.0);
  CHECK(anls("", {""}) == 1.0);
  CHECK(anls("abc", {"xyz", "abd"}) == Catch::Approx(1.0 - 1.0 / 3.0).margin(1e-15));
}

TEST_CASE("vqa accuracy convention", "[objectives]") {
  const std::vector<std::string> refs(10, "lantern");
  CHECK(vqa_accuracy("lantern", refs) == 1.0);
  CHECK(vqa_accuracy("LANTERN", refs) == 1.0);
  CHECK(vqa_accuracy("pillar", refs) == 0.0);
  std::vector<std::string> mixed = {"a", "b", "c", "d", "e", "f", "g", "h", "i", "lantern"};
  CHECK(vqa_accuracy("lantern", mixed) == 1.0 / 3.0);
  mixed[0] = "lantern";
  mixed[1] = "lantern";
  CHECK(vqa_accuracy("lantern", mixed) == 1.0);
}

TEST_CASE("edit distance basics", "[objectives]") {
  CHECK(edit_distance("kitten", "sitting") == 3);
  CHECK(edit_distance("", "abc") == 3);
  CHECK(edit_distance("same", "same") == 0);
}

TEST_CASE("answer vocabulary construction", "[objectives]") {
  std::vector<VqaInstance> train;
  auto mk = [&](const std::string& answer) {
    VqaInstance inst;
    inst.answers.assign(10, answer);
    OcrToken t = tok("x", 0.0, 0.0, 0.1, 0.1);
    inst.ocr.push_back(t);
    train.push_back(inst);
  };
  for (int i = 0; i < 5; ++i) mk("common");
  for (int i = 0; i < 3; ++i) mk("middling");
  mk("rare");
  mk("Rare!");  // normalizes into the same bucket

  const AnswerVocab v = AnswerVocab::build(train, 4);
  CHECK(v.size() == 4);
  CHECK(v.words[0] == "<end>");
  CHECK(v.words[1] == "<unk>");
  CHECK(v.id_of("common") == 2);
  CHECK(v.id_of("middling") == 3);
  CHECK(v.id_of("rare") == -1);  // over capacity

  const AnswerVocab full = AnswerVocab::build(train, 10);
  CHECK(full.id_of("rare") > 0);

  CHECK_THROWS_AS(AnswerVocab::from_words({"<end>", "x"}), ValidationError);
  CHECK_THROWS_AS(AnswerVocab::from_words({"<end>", "<unk>", "a", "a"}), ValidationError);
}

TEST_CASE("word normalization rule", "[objectives]") {
  CHECK(normalize_word("Stop!") == "stop");
  CHECK(normalize_word("...Mid.dle...") == "mid.dle");
  CHECK(normalize_word("''") == "");
  CHECK(normalize_word("A1-b2") == "a1-b2");
}
