#pragma once

#include <vector>

#include "gridcal/dataset.hpp"
#include "gridcal/distortion.hpp"
#include "gridcal/homography.hpp"
#include "gridcal/optim.hpp"

namespace gridcal {

/// The absolute conic B = A^-T A^-1 up to scale, packed as
/// b = (B11, B12, B22, B13, B23, B33), unit norm.
struct ConicB {
  Eigen::Matrix<double, 6, 1> b = Eigen::Matrix<double, 6, 1>::Zero();

  Mat3 matrix() const;
  static ConicB from_matrix(const Mat3& m);
  static ConicB from_intrinsics(const CameraIntrinsics& k);
};

struct CalibConfig {
  RadialModel model = RadialModel::Model1;
  bool refine_homographies = true;
  bool seed_distortion_with_lls = false;  // optimizer start for (k1, k2)
  OptimConfig optim;
};

struct ParameterSet {
  CameraIntrinsics intrinsics;
  DistortionCoeffs distortion;
  std::vector<Extrinsics> views;
  double objective = 0.0;
};

struct CalibrationResult {
  ParameterSet before;  // closed-form stage, distortion from the LLS fit
  ParameterSet after;   // refined
  ObjectiveReport iterations;
};

/// V_ij such that V_ij . b == h_i^T B h_j for every symmetric B.
Eigen::Matrix<double, 6, 1> constraint_row(const Vec3& hi, const Vec3& hj);

/// Solves the stacked V b = 0 system for N >= 3 views; rows per view are
/// V_12 and V_11 - V_22.
ConicB estimate_B(const std::vector<Homography>& hs);

/// Closed-form intrinsics of the conic (the corrected u0 equation).
CameraIntrinsics intrinsics_from_B(const ConicB& b);

/// r1 = lambda A^-1 h1, r2 = lambda A^-1 h2, r3 = r1 x r2,
/// t = lambda A^-1 h3, orthogonalized through the SVD.
Extrinsics extrinsics_from_homography(const Homography& h,
                                      const CameraIntrinsics& k);

/// Nearest rotation in Frobenius norm: U V^T with a det fix-up.
Rotation3 best_rotation(const Mat3& m);

/// Linear least squares for the radial coefficients given ideal
/// projections under the current intrinsics/extrinsics.
DistortionCoeffs estimate_distortion(const CalibrationDataset& dataset,
                                     const CameraIntrinsics& k,
                                     const std::vector<Extrinsics>& views,
                                     RadialModel model);

/// Sum of squared pixel residuals of the full projection chain.
double reprojection_objective(const CalibrationDataset& dataset,
                              const CameraIntrinsics& k,
                              const DistortionCoeffs& d,
                              const std::vector<Extrinsics>& views);

/// Full pipeline: homographies, conic, closed-form intrinsics, per-view
/// extrinsics, distortion LLS, then the 7+6N nonlinear refinement.
CalibrationResult calibrate(const CalibrationDataset& dataset,
                            const CalibConfig& cfg = {});

}  // namespace gridcal
