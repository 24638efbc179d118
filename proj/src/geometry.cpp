#include "gridcal/geometry.hpp"

#include <cmath>

namespace gridcal {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DegenerateDepth: return "DegenerateDepth";
    case ErrorKind::SingularIntrinsics: return "SingularIntrinsics";
    case ErrorKind::GimbalDegenerate: return "GimbalDegenerate";
    case ErrorKind::InvalidRotation: return "InvalidRotation";
    case ErrorKind::MalformedPgm: return "MalformedPgm";
    case ErrorKind::NotSimpleBoundary: return "NotSimpleBoundary";
    case ErrorKind::TooFewPoints: return "TooFewPoints";
    case ErrorKind::DegeneratePoints: return "DegeneratePoints";
    case ErrorKind::ParallelLines: return "ParallelLines";
    case ErrorKind::WrongBoxCount: return "WrongBoxCount";
    case ErrorKind::TooFewResponses: return "TooFewResponses";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::DegenerateViews: return "DegenerateViews";
    case ErrorKind::InsufficientViews: return "InsufficientViews";
    case ErrorKind::NegativeDiscriminant: return "NegativeDiscriminant";
    case ErrorKind::DegenerateHomography: return "DegenerateHomography";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::NoRealRoot: return "NoRealRoot";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::PoseOutOfFrame: return "PoseOutOfFrame";
    case ErrorKind::RayParallelToPlane: return "RayParallelToPlane";
    case ErrorKind::DegenerateLine: return "DegenerateLine";
    case ErrorKind::BadConfig: return "BadConfig";
    case ErrorKind::IoError: return "IoError";
  }
  return "UnknownError";
}

Mat3 CameraIntrinsics::matrix() const {
  Mat3 a;
  a << alpha, gamma, u0,
       0.0,   beta,  v0,
       0.0,   0.0,   1.0;
  return a;
}

Mat3 CameraIntrinsics::inverse_matrix() const {
  if (std::abs(alpha * beta) < kDepthTol) {
    fail(ErrorKind::SingularIntrinsics, "alpha*beta too small to invert A");
  }
  Mat3 inv;
  inv << 1.0 / alpha, -gamma / (alpha * beta),
         -u0 / alpha + v0 * gamma / (alpha * beta),
         0.0, 1.0 / beta, -v0 / beta,
         0.0, 0.0, 1.0;
  return inv;
}

Rotation3 Rotation3::from_matrix(const Mat3& m) {
  const double ortho = (m.transpose() * m - Mat3::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  if (ortho > kRotationTol) {
    fail(ErrorKind::InvalidRotation, "matrix is not orthonormal");
  }
  if (std::abs(m.determinant() - 1.0) > kRotationTol) {
    fail(ErrorKind::InvalidRotation, "determinant is not +1");
  }
  return Rotation3(m);
}

Rotation3 Rotation3::transpose() const { return Rotation3(Mat3(r_.transpose())); }

Rotation3 Rotation3::operator*(const Rotation3& other) const {
  return Rotation3(Mat3(r_ * other.r_));
}

Point2Px project(const Point3W& pw, const Extrinsics& ex,
                 const CameraIntrinsics& k) {
  const Vec3 pc = ex.rot * pw.vec() + ex.t;
  if (std::abs(pc.z()) < kDepthTol) {
    fail(ErrorKind::DegenerateDepth, "camera-frame depth is zero");
  }
  const double x = pc.x() / pc.z();
  const double y = pc.y() / pc.z();
  return {k.alpha * x + k.gamma * y + k.u0, k.beta * y + k.v0};
}

NormalizedPoint normalize(const Point2Px& p, const CameraIntrinsics& k) {
  if (std::abs(k.alpha * k.beta) < kDepthTol) {
    fail(ErrorKind::SingularIntrinsics, "alpha*beta too small");
  }
  const double y = (p.v - k.v0) / k.beta;
  const double x = (p.u - k.u0 - k.gamma * y) / k.alpha;
  return {x, y};
}

Point2Px denormalize(const NormalizedPoint& n, const CameraIntrinsics& k) {
  return {k.alpha * n.x + k.gamma * n.y + k.u0, k.beta * n.y + k.v0};
}

EulerZYZ euler_zyz_from_rotation(const Rotation3& rot) {
  const Mat3& r = rot.matrix();
  const double sb = std::sqrt(r(2, 0) * r(2, 0) + r(2, 1) * r(2, 1));
  if (sb < 1e-9) {
    fail(ErrorKind::GimbalDegenerate, "sin(b) vanishes, a and c fuse");
  }
  EulerZYZ e;
  e.b = std::atan2(sb, r(2, 2));
  const double s = std::sin(e.b);
  e.a = std::atan2(r(1, 2) / s, r(0, 2) / s);
  e.c = std::atan2(r(2, 1) / s, -r(2, 0) / s);
  return e;
}

Rotation3 rotation_z(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 m;
  m << c, -s, 0.0,
       s,  c, 0.0,
       0.0, 0.0, 1.0;
  return Rotation3::from_matrix(m);
}

Rotation3 rotation_y(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 m;
  m << c, 0.0, s,
       0.0, 1.0, 0.0,
       -s, 0.0, c;
  return Rotation3::from_matrix(m);
}

Rotation3 rotation_from_euler_zyz(const EulerZYZ& e) {
  return rotation_z(e.a) * rotation_y(e.b) * rotation_z(e.c);
}

}  // namespace gridcal
