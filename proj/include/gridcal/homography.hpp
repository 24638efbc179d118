#pragma once

#include <vector>

#include "gridcal/geometry.hpp"

namespace gridcal {

/// Plane-to-image homography, stored with unit Frobenius norm and
/// h33 >= 0 whenever |h33| is meaningfully nonzero.
struct Homography {
  Mat3 h = Mat3::Identity();

  Vec3 map(double x, double y) const { return h * Vec3(x, y, 1.0); }
  Point2Px apply(double x, double y) const;
  static Homography canonical(const Mat3& m);
};

/// Matched model-plane (Z = 0, cm) and image (px) points.
struct PlanarCorrespondences {
  std::vector<Vec2> world;
  std::vector<Point2Px> image;

  std::size_t size() const { return world.size(); }
};

/// Stacked DLT constraint matrix, two rows per correspondence.
Eigen::MatrixXd build_L(const PlanarCorrespondences& c);

/// Direct linear transform: smallest right singular vector of L.
Homography estimate_homography(const PlanarCorrespondences& c);

/// Minimizes the summed squared pixel residuals starting from h0.
Homography refine_homography(const PlanarCorrespondences& c,
                             const Homography& h0);

/// Sum of squared reprojection residuals of h over the correspondences.
double homography_objective(const PlanarCorrespondences& c,
                            const Homography& h);

}  // namespace gridcal
