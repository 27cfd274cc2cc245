#pragma once

#include <cstdio>
#include <fstream>
#include <string>

#include "laap/train/trainer.hpp"

namespace laap {

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string fmt(double v, const char* spec = "%.2f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace detail

// Scene overlay: gray labeled token boxes, object outlines in their own
// color, the ground-truth evidence box in red, the predicted box in blue,
// and the evidence IoU as text. A prediction whose ground-truth word is
// missing from the token list scores 0 with the raw overlap in parentheses.
inline std::string render_svg(const VqaInstance& inst, const PredictionRecord* rec = nullptr) {
  constexpr double kSize = 640.0;
  constexpr double kTop = 72.0;  // caption band above the scene

  auto X = [&](double x) { return detail::fmt(x * kSize, "%.1f"); };
  auto Y = [&](double y) { return detail::fmt(kTop + y * kSize, "%.1f"); };
  auto W = [&](double w) { return detail::fmt(w * kSize, "%.1f"); };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt(kSize, "%.0f") +
         "\" height=\"" + detail::fmt(kSize + kTop, "%.0f") + "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + detail::fmt(kSize, "%.0f") + "\" height=\"" +
         detail::fmt(kSize + kTop, "%.0f") + "\" fill=\"white\"/>\n";

  svg += "<text x=\"10\" y=\"20\" font-size=\"15\" fill=\"black\">Q: " +
         detail::xml_escape(inst.question.text) + "</text>\n";
  if (rec)
    svg += "<text x=\"10\" y=\"40\" font-size=\"15\" fill=\"black\">A: " +
           detail::xml_escape(rec->answer) + "</text>\n";

  for (const auto& o : inst.objects) {
    const std::string color = o.color.empty() ? "black" : detail::xml_escape(o.color);
    svg += "<rect x=\"" + X(o.box.x_min) + "\" y=\"" + Y(o.box.y_min) + "\" width=\"" +
           W(o.box.width()) + "\" height=\"" + W(o.box.height()) + "\" fill=\"none\" stroke=\"" +
           color + "\" stroke-width=\"3\"/>\n";
  }

  for (const auto& t : inst.ocr) {
    svg += "<rect x=\"" + X(t.box.x_min) + "\" y=\"" + Y(t.box.y_min) + "\" width=\"" +
           W(t.box.width()) + "\" height=\"" + W(t.box.height()) +
           "\" fill=\"#dddddd\" stroke=\"#888888\" stroke-width=\"1\"/>\n";
    const double cx = 0.5 * (t.box.x_min + t.box.x_max);
    const double cy = 0.5 * (t.box.y_min + t.box.y_max);
    svg += "<text x=\"" + X(cx) + "\" y=\"" + Y(cy) +
           "\" font-size=\"13\" fill=\"black\" text-anchor=\"middle\" dominant-baseline=\"middle\">" +
           detail::xml_escape(t.text) + "</text>\n";
  }

  if (inst.evidence_box) {
    const auto& b = *inst.evidence_box;
    svg += "<rect x=\"" + X(b.x_min) + "\" y=\"" + Y(b.y_min) + "\" width=\"" + W(b.width()) +
           "\" height=\"" + W(b.height()) +
           "\" fill=\"none\" stroke=\"red\" stroke-width=\"2\"/>\n";
  }

  if (rec && !rec->steps.empty() && rec->steps.front().box) {
    const auto& b = *rec->steps.front().box;
    svg += "<rect x=\"" + X(b.x_min) + "\" y=\"" + Y(b.y_min) + "\" width=\"" + W(b.width()) +
           "\" height=\"" + W(b.height()) +
           "\" fill=\"none\" stroke=\"blue\" stroke-width=\"2\" stroke-dasharray=\"6,3\"/>\n";
    if (rec->evidence_iou) {
      bool gt_in_ocr = false;
      const auto words = inst.answer_words();
      if (!words.empty()) {
        const std::string first = normalize_word(words.front());
        for (const auto& t : inst.ocr) gt_in_ocr = gt_in_ocr || normalize_word(t.text) == first;
      }
      const std::string label = gt_in_ocr
                                    ? detail::fmt(*rec->evidence_iou)
                                    : "0 (" + detail::fmt(*rec->evidence_iou) + ")";
      svg += "<text x=\"10\" y=\"60\" font-size=\"15\" fill=\"blue\">IoU " + label + "</text>\n";
    }
  }

  svg += "</svg>\n";
  return svg;
}

inline void write_svg(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace laap
