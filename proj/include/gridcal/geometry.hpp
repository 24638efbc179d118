#pragma once

#include <Eigen/Dense>

#include "gridcal/error.hpp"

namespace gridcal {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

/// 3-D point in the world frame, centimeters.
struct Point3W {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 vec() const { return {x, y, z}; }
};

/// Point on the image plane, pixels.
struct Point2Px {
  double u = 0.0;
  double v = 0.0;
};

/// Camera-plane coordinates after removing the intrinsics (homogeneous
/// third component is 1).
struct NormalizedPoint {
  double x = 0.0;
  double y = 0.0;
};

/// The five intrinsic parameters of the upper-triangular camera matrix
///   A = [alpha gamma u0; 0 beta v0; 0 0 1].
struct CameraIntrinsics {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 0.0;
  double u0 = 0.0;
  double v0 = 0.0;

  Mat3 matrix() const;
  Mat3 inverse_matrix() const;  // closed form, upper triangular
};

/// 3x3 rotation matrix. Construction through from_matrix checks
/// orthonormality (1e-9) and det = +1 (1e-9).
class Rotation3 {
 public:
  Rotation3() : r_(Mat3::Identity()) {}

  static Rotation3 from_matrix(const Mat3& m);
  static Rotation3 identity() { return Rotation3(); }

  const Mat3& matrix() const { return r_; }
  Rotation3 transpose() const;
  Rotation3 operator*(const Rotation3& other) const;
  Vec3 operator*(const Vec3& p) const { return r_ * p; }

 private:
  explicit Rotation3(const Mat3& m) : r_(m) {}
  Mat3 r_;
};

/// Rigid transform world -> camera: P_c = R * P_w + t. Translation in cm.
struct Extrinsics {
  Rotation3 rot;
  Vec3 t = Vec3::Zero();
};

/// ZYZ Euler angles (radians): R = Rz(a) * Ry(b) * Rz(c).
struct EulerZYZ {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

constexpr double kDepthTol = 1e-12;
constexpr double kRotationTol = 1e-9;

/// Pinhole projection of a world point to pixel coordinates. The scaling
/// factor of the homogeneous projection equals the camera-frame depth.
Point2Px project(const Point3W& pw, const Extrinsics& ex,
                 const CameraIntrinsics& k);

/// Applies A^-1 to a homogeneous pixel point.
NormalizedPoint normalize(const Point2Px& p, const CameraIntrinsics& k);

/// Inverse of normalize: pixel = A * [x y 1]^T.
Point2Px denormalize(const NormalizedPoint& n, const CameraIntrinsics& k);

/// Extracts (a, b, c) with b on the principal branch (0, pi). Degenerate
/// when sin(b) vanishes.
EulerZYZ euler_zyz_from_rotation(const Rotation3& rot);

Rotation3 rotation_from_euler_zyz(const EulerZYZ& e);

Rotation3 rotation_z(double angle);
Rotation3 rotation_y(double angle);

}  // namespace gridcal
