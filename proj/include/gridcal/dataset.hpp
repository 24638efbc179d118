#pragma once

#include <vector>

#include "gridcal/geometry.hpp"

namespace gridcal {

/// Ordered model-plane points (Z = 0, cm) plus the per-image observed
/// pixel points, one row of observations per view, same point order.
struct CalibrationDataset {
  std::vector<Vec2> world;
  std::vector<std::vector<Point2Px>> views;

  std::size_t view_count() const { return views.size(); }
  std::size_t point_count() const { return world.size(); }
};

}  // namespace gridcal
