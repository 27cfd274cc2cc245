#pragma once

#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "laap/core/errors.hpp"
#include "laap/data/box.hpp"
#include "laap/data/phoc.hpp"
#include "laap/data/wordvec.hpp"

namespace laap {

inline constexpr uint64_t kWordVecSeed = 0x77766563ull;  // hash family for word_vec

struct OcrToken {
  std::string text;
  BoundingBox box;
  std::vector<double> appearance;
  // Derived at load time, never serialized.
  std::vector<double> word_vec;
  std::vector<double> phoc;
};

struct SceneObject {
  BoundingBox box;
  std::vector<double> appearance;
  // Render metadata; empty when the source did not provide it.
  std::string color;
  std::string shape;
};

struct Question {
  std::string text;
  std::vector<int> ids;
};

struct VqaInstance {
  long long id = -1;
  std::string template_name;
  Question question;
  std::vector<SceneObject> objects;
  std::vector<OcrToken> ocr;
  std::vector<std::string> answers;
  std::optional<BoundingBox> evidence_box;

  // Ground-truth word sequence for decoding: the first reference answer
  // split on whitespace.
  std::vector<std::string> answer_words() const;
};

inline std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

inline std::vector<std::string> VqaInstance::answer_words() const {
  if (answers.empty()) return {};
  return split_words(answers.front());
}

namespace detail {

inline BoundingBox box_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 4)
    throw ValidationError(what + ": box must be a 4-element array");
  BoundingBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  b.validate(what);
  return b;
}

inline std::vector<double> vec_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array()) throw ValidationError(what + ": expected an array");
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& x : j) v.push_back(x.get<double>());
  return v;
}

}  // namespace detail

// Text-derived token features are recomputed rather than stored: the word
// vector width is a model choice and the character histogram is fixed.
inline void derive_text_features(VqaInstance& inst, int word_vec_dim) {
  for (auto& t : inst.ocr) {
    t.word_vec = pseudo_word_vec(t.text, word_vec_dim, kWordVecSeed);
    t.phoc = phoc_encode(t.text);
  }
}

inline void derive_text_features(std::vector<VqaInstance>& data, int word_vec_dim) {
  for (auto& inst : data) derive_text_features(inst, word_vec_dim);
}

inline VqaInstance parse_instance(const nlohmann::json& j, int word_vec_dim,
                                  const std::string& where) {
  VqaInstance inst;
  if (j.contains("id")) inst.id = j.at("id").get<long long>();
  if (j.contains("template")) inst.template_name = j.at("template").get<std::string>();

  inst.question.text = j.at("question_text").get<std::string>();
  for (const auto& x : j.at("question_ids")) {
    const int id = x.get<int>();
    if (id < 0) throw ValidationError(where + ": negative question token id");
    inst.question.ids.push_back(id);
  }
  if (inst.question.ids.empty()) throw ValidationError(where + ": empty question");

  for (const auto& jo : j.at("objects")) {
    SceneObject obj;
    obj.box = detail::box_from_json(jo.at("box"), where + ": object box");
    obj.appearance = detail::vec_from_json(jo.at("appearance"), where + ": object appearance");
    if (jo.contains("color")) obj.color = jo.at("color").get<std::string>();
    if (jo.contains("shape")) obj.shape = jo.at("shape").get<std::string>();
    inst.objects.push_back(std::move(obj));
  }

  for (const auto& jt : j.at("ocr")) {
    OcrToken tok;
    tok.text = jt.at("text").get<std::string>();
    if (tok.text.empty()) throw ValidationError(where + ": empty OCR token text");
    tok.box = detail::box_from_json(jt.at("box"), where + ": ocr box");
    tok.appearance = detail::vec_from_json(jt.at("appearance"), where + ": ocr appearance");
    inst.ocr.push_back(std::move(tok));
  }
  if (inst.ocr.empty()) throw ValidationError(where + ": instance has no OCR tokens");
  derive_text_features(inst, word_vec_dim);

  for (const auto& a : j.at("answers")) inst.answers.push_back(a.get<std::string>());
  if (inst.answers.empty()) throw ValidationError(where + ": instance has no answers");

  if (j.contains("evidence_box") && !j.at("evidence_box").is_null())
    inst.evidence_box = detail::box_from_json(j.at("evidence_box"), where + ": evidence box");

  for (size_t i = 1; i < inst.objects.size(); ++i)
    if (inst.objects[i].appearance.size() != inst.objects[0].appearance.size())
      throw ValidationError(where + ": inconsistent object appearance dims");
  for (size_t i = 1; i < inst.ocr.size(); ++i)
    if (inst.ocr[i].appearance.size() != inst.ocr[0].appearance.size())
      throw ValidationError(where + ": inconsistent OCR appearance dims");
  return inst;
}

inline nlohmann::json instance_to_json(const VqaInstance& inst) {
  nlohmann::json j;
  if (inst.id >= 0) j["id"] = inst.id;
  if (!inst.template_name.empty()) j["template"] = inst.template_name;
  j["question_text"] = inst.question.text;
  j["question_ids"] = inst.question.ids;
  j["objects"] = nlohmann::json::array();
  for (const auto& o : inst.objects) {
    nlohmann::json jo = {{"box", o.box.coords()}, {"appearance", o.appearance}};
    if (!o.color.empty()) jo["color"] = o.color;
    if (!o.shape.empty()) jo["shape"] = o.shape;
    j["objects"].push_back(std::move(jo));
  }
  j["ocr"] = nlohmann::json::array();
  for (const auto& t : inst.ocr)
    j["ocr"].push_back({{"text", t.text}, {"box", t.box.coords()}, {"appearance", t.appearance}});
  j["answers"] = inst.answers;
  if (inst.evidence_box)
    j["evidence_box"] = inst.evidence_box->coords();
  else
    j["evidence_box"] = nullptr;
  return j;
}

inline std::vector<VqaInstance> load_jsonl(const std::string& path, int word_vec_dim) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path);
  std::vector<VqaInstance> out;
  std::string line;
  long long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + ": malformed JSON (" + e.what() + ")");
    }
    try {
      out.push_back(parse_instance(j, word_vec_dim, where));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  return out;
}

inline void save_jsonl(const std::string& path, const std::vector<VqaInstance>& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open file for writing: " + path);
  for (const auto& inst : data) out << instance_to_json(inst).dump() << "\n";
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace laap
