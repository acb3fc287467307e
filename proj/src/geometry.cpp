#include "arpo/geometry.hpp"

#include <algorithm>
#include <stdexcept>

namespace arpo {

bool Box2D::valid() const {
  return 0.0 <= x_min && x_min <= x_max && x_max <= 1.0 &&
         0.0 <= y_min && y_min <= y_max && y_max <= 1.0;
}

double Box2D::area() const { return (x_max - x_min) * (y_max - y_min); }

namespace {

void require_valid(const Box2D& b, const char* which) {
  if (!b.valid()) {
    throw std::invalid_argument(std::string("invalid box (") + which +
                                "): coordinates must satisfy 0 <= min <= max <= 1");
  }
}

}  // namespace

double iou(const Box2D& a, const Box2D& b) {
  require_valid(a, "a");
  require_valid(b, "b");

  const double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

double bbox_reward(const Box2D& pred, const Box2D& gt, BBoxRewardVariant variant) {
  const double overlap = iou(pred, gt);
  if (variant == BBoxRewardVariant::Bonus && overlap > 0.5) {
    return std::min(overlap + 0.5, 1.0);
  }
  return overlap;
}

}  // namespace arpo
