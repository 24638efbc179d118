#pragma once

#include "gridcal/geometry.hpp"

namespace gridcal {

struct GrayImage;  // imaging.hpp

/// Radial distortion families. All act on the normalized radius r:
///   Model1: f(r) = 1 + k1 r^2 + k2 r^4
///   Model2: f(r) = 1 + k1 r^2
///   Model3: f(r) = 1 + k1 r + k2 r^2
enum class RadialModel { Model1 = 1, Model2 = 2, Model3 = 3 };

struct DistortionCoeffs {
  double k1 = 0.0;
  double k2 = 0.0;  // ignored (held at 0) for Model2
  RadialModel model = RadialModel::Model1;

  static DistortionCoeffs make(RadialModel model, double k1, double k2);
};

/// Normalized coordinates of a distorted pixel, i.e. A^-1 [u_d v_d 1]^T.
struct DistortedNormalized {
  double x = 0.0;
  double y = 0.0;
};

/// Radial scale factor f(r) for the active model.
double radial_factor(const DistortionCoeffs& d, double r_squared);

/// Forward distortion of an ideal (undistorted) pixel point:
/// u_d = u + (u - u0)(f(r) - 1), with r the normalized radius of p.
Point2Px distort_pixel(const Point2Px& p, const CameraIntrinsics& k,
                       const DistortionCoeffs& d);

/// Forward distortion in normalized coordinates: q = n * f(|n|).
DistortedNormalized distort_normalized(const NormalizedPoint& n,
                                       const DistortionCoeffs& d);

/// Inverts the radial map. Models 2 and 3 solve their cubics in closed
/// form; Model1 uses a damped fixed-point iteration on the radius.
NormalizedPoint undistort_normalized(const DistortedNormalized& q,
                                     const DistortionCoeffs& d);

Point2Px undistort_pixel(const Point2Px& pd, const CameraIntrinsics& k,
                         const DistortionCoeffs& d);

/// Resamples an image so that straight world lines become straight.
/// Each output pixel is pulled through the forward distortion and sampled
/// bilinearly; samples outside the source are 0.
GrayImage undistort_image(const GrayImage& img, const CameraIntrinsics& k,
                          const DistortionCoeffs& d);

}  // namespace gridcal
