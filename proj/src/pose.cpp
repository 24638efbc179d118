#include "gridcal/pose.hpp"

#include <cmath>

#include "gridcal/calib.hpp"

namespace gridcal {

GroundPose GroundPose::from_extrinsics(const Extrinsics& ex) {
  // P_c = R P_w + t  ==  R ( P_w - (-R^T t) ), so the ground convention
  // P_c = Rg^-1 (P_w - tg) uses Rg = R^T and tg = -R^T t.
  GroundPose g;
  g.r = ex.rot.transpose();
  g.t = -(ex.rot.transpose() * ex.t);
  return g;
}

Extrinsics GroundPose::to_extrinsics() const {
  Extrinsics ex;
  ex.rot = r.transpose();
  ex.t = -(r.transpose() * t);
  return ex;
}

EulerZYZ pan_tilt_from_view(const PlanarCorrespondences& c,
                            const CameraIntrinsics& k) {
  const Homography h = estimate_homography(c);
  const Extrinsics ex = extrinsics_from_homography(h, k);
  return euler_zyz_from_rotation(ex.rot);
}

Vec3 back_project_to_ground(const Point2Px& distorted,
                            const CameraIntrinsics& k,
                            const DistortionCoeffs& d,
                            const GroundPose& assumed) {
  const Point2Px ideal = undistort_pixel(distorted, k, d);
  const NormalizedPoint n = normalize(ideal, k);

  // P_c = S q with S = R^-1 and q = [X - t1, Y - t2, -t3]; the ray
  // conditions X_c = x Z_c and Y_c = y Z_c give two linear equations in
  // (X, Y).
  const Mat3 s = assumed.r.transpose().matrix();
  const Eigen::RowVector3d row1 = s.row(0) - n.x * s.row(2);
  const Eigen::RowVector3d row2 = s.row(1) - n.y * s.row(2);

  Eigen::Matrix2d m;
  m << row1(0), row1(1),
       row2(0), row2(1);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (std::abs(m.determinant()) < 1e-12 * scale * scale) {
    fail(ErrorKind::RayParallelToPlane, "ray does not meet the ground plane");
  }
  Eigen::Vector2d rhs;
  rhs << row1(0) * assumed.t.x() + row1(1) * assumed.t.y() +
             row1(2) * assumed.t.z(),
         row2(0) * assumed.t.x() + row2(1) * assumed.t.y() +
             row2(2) * assumed.t.z();
  const Eigen::Vector2d xy = m.inverse() * rhs;
  return {xy(0), xy(1), 0.0};
}

PoseCorrection align_from_line(const LineObservation& obs,
                               const CameraIntrinsics& k,
                               const DistortionCoeffs& d,
                               const GroundPose& assumed) {
  if ((obs.world_a - obs.world_b).norm() < 1e-12) {
    fail(ErrorKind::DegenerateLine, "world endpoints coincide");
  }
  const Vec3 paa = back_project_to_ground(obs.image_a, k, d, assumed);
  const Vec3 pbb = back_project_to_ground(obs.image_b, k, d, assumed);
  if ((paa - pbb).norm() < 1e-9) {
    fail(ErrorKind::DegenerateLine, "back-projected endpoints coincide");
  }

  // (P_AA - P_BB) = dR (P_A - P_B): the yaw is the signed z-angle from
  // the map segment to the recovered segment.
  const Vec2 v_true{obs.world_a.x() - obs.world_b.x(),
                    obs.world_a.y() - obs.world_b.y()};
  const Vec2 v_seen{paa.x() - pbb.x(), paa.y() - pbb.y()};
  const double cross = v_true.x() * v_seen.y() - v_true.y() * v_seen.x();
  const double dot = v_true.dot(v_seen);

  PoseCorrection out;
  out.delta_theta = std::atan2(cross, dot);
  const Rotation3 delta_inv = rotation_z(-out.delta_theta);
  out.t1 = obs.world_a - delta_inv * (paa - assumed.t);
  return out;
}

}  // namespace gridcal
