#pragma once

#include "gridcal/distortion.hpp"
#include "gridcal/geometry.hpp"
#include "gridcal/homography.hpp"

namespace gridcal {

/// Known ground-plane segment (Z = 0, cm) and where its endpoints were
/// observed in the distorted image.
struct LineObservation {
  Vec3 world_a = Vec3::Zero();
  Vec3 world_b = Vec3::Zero();
  Point2Px image_a;
  Point2Px image_b;
};

/// Yaw correction plus the corrected translation of the ground-plane
/// alignment; delta_theta in (-pi, pi].
struct PoseCorrection {
  double delta_theta = 0.0;
  Vec3 t1 = Vec3::Zero();
};

/// Ground-frame pose convention of the alignment equations:
/// P_c = R^-1 (P_w - t). Converts from the standard P_c = R P_w + t.
struct GroundPose {
  Rotation3 r;
  Vec3 t = Vec3::Zero();

  static GroundPose from_extrinsics(const Extrinsics& ex);
  Extrinsics to_extrinsics() const;
};

/// Camera orientation from one view of the wall target: homography,
/// extrinsics, then the ZYZ angles.
EulerZYZ pan_tilt_from_view(const PlanarCorrespondences& c,
                            const CameraIntrinsics& k);

/// Intersects the undistorted pixel ray with the ground plane Z = 0 under
/// the assumed pose.
Vec3 back_project_to_ground(const Point2Px& distorted,
                            const CameraIntrinsics& k,
                            const DistortionCoeffs& d,
                            const GroundPose& assumed);

/// Non-iterative yaw/translation correction from one known line: both
/// endpoints are back-projected, the yaw is the signed z-angle between
/// the mapped and true segments, and t1 = P_A - dR^-1 (P_AA - t2).
PoseCorrection align_from_line(const LineObservation& obs,
                               const CameraIntrinsics& k,
                               const DistortionCoeffs& d,
                               const GroundPose& assumed);

}  // namespace gridcal
