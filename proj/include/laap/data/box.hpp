#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "laap/core/errors.hpp"

namespace laap {

// Axis-aligned box in normalized corner coordinates. Zero-area boxes
// (points, lines) are legal; their IoU with anything is 0.
struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }

  std::array<double, 4> coords() const { return {x_min, y_min, x_max, y_max}; }

  bool valid() const {
    return x_min >= 0.0 && y_min >= 0.0 && x_max <= 1.0 && y_max <= 1.0 &&
           x_min <= x_max && y_min <= y_max && std::isfinite(x_min) &&
           std::isfinite(y_min) && std::isfinite(x_max) && std::isfinite(y_max);
  }

  void validate(const std::string& what) const {
    if (!valid())
      throw ValidationError(what + ": invalid box (" + std::to_string(x_min) + "," +
                            std::to_string(y_min) + "," + std::to_string(x_max) + "," +
                            std::to_string(y_max) + ")");
  }

  // Orders a raw (possibly inverted) coordinate tuple and clamps to [0,1].
  static BoundingBox canonical(double x0, double y0, double x1, double y1) {
    BoundingBox b{std::min(x0, x1), std::min(y0, y1), std::max(x0, x1), std::max(y0, y1)};
    b.x_min = std::clamp(b.x_min, 0.0, 1.0);
    b.y_min = std::clamp(b.y_min, 0.0, 1.0);
    b.x_max = std::clamp(b.x_max, 0.0, 1.0);
    b.y_max = std::clamp(b.y_max, 0.0, 1.0);
    return b;
  }
};

inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  const double inter = std::max(0.0, iw) * std::max(0.0, ih);
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

// Pixel corner box -> normalized coordinates. The pixel box must lie inside
// the image and be non-inverted; zero-area boxes pass.
inline BoundingBox normalize_box(int px_min, int py_min, int px_max, int py_max,
                                 int image_w, int image_h) {
  if (image_w < 1 || image_h < 1)
    throw ValidationError("normalize_box: image dimensions must be >= 1");
  if (px_min > px_max || py_min > py_max)
    throw ValidationError("normalize_box: inverted pixel box");
  if (px_min < 0 || py_min < 0 || px_max > image_w || py_max > image_h)
    throw ValidationError("normalize_box: pixel box outside image");
  BoundingBox b{static_cast<double>(px_min) / image_w, static_cast<double>(py_min) / image_h,
                static_cast<double>(px_max) / image_w, static_cast<double>(py_max) / image_h};
  b.x_min = std::clamp(b.x_min, 0.0, 1.0);
  b.y_min = std::clamp(b.y_min, 0.0, 1.0);
  b.x_max = std::clamp(b.x_max, 0.0, 1.0);
  b.y_max = std::clamp(b.y_max, 0.0, 1.0);
  return b;
}

}  // namespace laap
