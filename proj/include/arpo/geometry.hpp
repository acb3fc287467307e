#ifndef ARPO_GEOMETRY_HPP_
#define ARPO_GEOMETRY_HPP_

#include <array>

namespace arpo {

// Axis-aligned box in normalized image coordinates, closed intervals.
// Zero-area boxes are legal inputs.
struct Box2D {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  bool valid() const;
  double area() const;

  std::array<double, 4> to_array() const { return {x_min, y_min, x_max, y_max}; }
  static Box2D from_array(const std::array<double, 4>& a) {
    return Box2D{a[0], a[1], a[2], a[3]};
  }
};

enum class BBoxRewardVariant { Plain, Bonus };

// Intersection area / union area. 0 when the union has zero area.
// Throws std::invalid_argument on boxes violating 0 <= min <= max <= 1.
double iou(const Box2D& a, const Box2D& b);

// Plain: the IoU itself. Bonus: +0.5 when IoU > 0.5 (strict), capped at 1.
double bbox_reward(const Box2D& pred, const Box2D& gt, BBoxRewardVariant variant);

}  // namespace arpo

#endif  // ARPO_GEOMETRY_HPP_
