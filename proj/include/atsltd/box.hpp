#pragma once

#include <algorithm>
#include <cmath>

#include "atsltd/event.hpp"

namespace atsltd {

// Axis-aligned box, top-left corner (x, y), extent (w, h) in pixels.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  double aspect() const { return w / h; }
  double cx() const { return x + 0.5 * w; }
  double cy() const { return y + 0.5 * h; }
  double x2() const { return x + w; }
  double y2() const { return y + h; }

  bool valid() const { return w > 0.0 && h > 0.0; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

inline double intersection_area(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::min(a.x2(), b.x2()) - std::max(a.x, b.x);
  const double iy = std::min(a.y2(), b.y2()) - std::max(a.y, b.y);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  return ix * iy;
}

// Intersection over union; 0 for disjoint boxes.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  return inter / (a.area() + b.area() - inter);
}

// Clip to the sensor plane. May return an empty (invalid) box.
inline BoundingBox clip_to_sensor(const BoundingBox& b, const SensorGeometry& g) {
  const double x1 = std::max(b.x, 0.0);
  const double y1 = std::max(b.y, 0.0);
  const double x2 = std::min(b.x2(), static_cast<double>(g.width));
  const double y2 = std::min(b.y2(), static_cast<double>(g.height));
  return {x1, y1, std::max(0.0, x2 - x1), std::max(0.0, y2 - y1)};
}

}  // namespace atsltd
