#include "gridcal/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gridcal/imaging.hpp"

namespace gridcal {

DistortionCoeffs DistortionCoeffs::make(RadialModel model, double k1,
                                        double k2) {
  DistortionCoeffs d;
  d.model = model;
  d.k1 = k1;
  d.k2 = model == RadialModel::Model2 ? 0.0 : k2;
  return d;
}

double radial_factor(const DistortionCoeffs& d, double r_squared) {
  switch (d.model) {
    case RadialModel::Model1:
      return 1.0 + d.k1 * r_squared + d.k2 * r_squared * r_squared;
    case RadialModel::Model2:
      return 1.0 + d.k1 * r_squared;
    case RadialModel::Model3: {
      const double r = std::sqrt(r_squared);
      return 1.0 + d.k1 * r + d.k2 * r_squared;
    }
  }
  return 1.0;
}

DistortedNormalized distort_normalized(const NormalizedPoint& n,
                                       const DistortionCoeffs& d) {
  const double f = radial_factor(d, n.x * n.x + n.y * n.y);
  return {n.x * f, n.y * f};
}

Point2Px distort_pixel(const Point2Px& p, const CameraIntrinsics& k,
                       const DistortionCoeffs& d) {
  const NormalizedPoint n = normalize(p, k);
  const double f = radial_factor(d, n.x * n.x + n.y * n.y);
  return {p.u + (p.u - k.u0) * (f - 1.0), p.v + (p.v - k.v0) * (f - 1.0)};
}

namespace {

// Real roots of c3 x^3 + c2 x^2 + c1 x + c0 = 0, closed form with a
// discriminant guard for the multiple-root boundary.
std::vector<double> real_cubic_roots(double c3, double c2, double c1,
                                     double c0) {
  const double scale = std::max({std::abs(c2), std::abs(c1), std::abs(c0)});
  if (std::abs(c3) <= 1e-14 * std::max(scale, 1.0)) {
    // Degrades to a quadratic (or linear) equation.
    if (std::abs(c2) <= 1e-14 * std::max({std::abs(c1), std::abs(c0), 1.0})) {
      if (c1 == 0.0) return {};
      return {-c0 / c1};
    }
    const double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc < 0.0) return {};
    const double s = std::sqrt(disc);
    const double q = -0.5 * (c1 + std::copysign(s, c1));
    std::vector<double> roots{q / c2};
    if (q != 0.0) roots.push_back(c0 / q);
    else roots.push_back(-c1 / c2 - roots[0]);
    return roots;
  }

  const double a = c2 / c3, b = c1 / c3, c = c0 / c3;
  const double p = b - a * a / 3.0;
  const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  const double shift = -a / 3.0;

  const double half_q = 0.5 * q;
  const double third_p = p / 3.0;
  const double disc = half_q * half_q + third_p * third_p * third_p;
  const double guard =
      1e-14 * std::max(half_q * half_q + std::abs(third_p * third_p * third_p),
                       1e-300);

  std::vector<double> roots;
  if (disc > guard) {
    const double s = std::sqrt(disc);
    const double u = std::cbrt(-half_q + s);
    const double v = std::cbrt(-half_q - s);
    roots = {u + v + shift};
  } else if (disc < -guard) {
    const double m = 2.0 * std::sqrt(-third_p);
    const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
    const double theta = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) {
      roots.push_back(m * std::cos(theta - 2.0 * M_PI * k / 3.0) + shift);
    }
  } else {
    const double u = std::cbrt(-half_q);
    roots = {2.0 * u + shift, -u + shift};
  }
  return roots;
}

// Solves F(r) = r f(r) = r_d for the undistorted radius, Model1 only.
double invert_radius_model1(double r_d, const DistortionCoeffs& d) {
  double r = r_d;
  double prev_step = std::numeric_limits<double>::infinity();
  double damping = 1.0;
  for (int i = 0; i < 100; ++i) {
    const double f = radial_factor(d, r * r);
    if (!(f > 0.0) || !std::isfinite(f)) {
      fail(ErrorKind::NoConvergence, "radial factor left the valid range");
    }
    const double target = r_d / f;
    const double step = target - r;
    if (std::abs(step) > prev_step) damping *= 0.5;
    prev_step = std::abs(step);
    r += damping * step;
    if (std::abs(step) < 1e-12) break;
  }
  const double forward = r * radial_factor(d, r * r);
  if (std::abs(forward - r_d) > 1e-9) {
    fail(ErrorKind::NoConvergence, "point is outside the invertible radius");
  }
  return r;
}

struct BranchRoot {
  double w = 0.0;
  double residual = 0.0;
};

}  // namespace

NormalizedPoint undistort_normalized(const DistortedNormalized& q,
                                     const DistortionCoeffs& d) {
  const double r_d = std::hypot(q.x, q.y);
  if (r_d == 0.0) return {0.0, 0.0};

  if (d.model == RadialModel::Model1) {
    // No closed form; invert the scalar radius map.
    const double r = invert_radius_model1(r_d, d);
    const double s = r / r_d;
    return {q.x * s, q.y * s};
  }

  // Solve along the dominant coordinate w, with the other one c*w; this
  // keeps |c| <= 1 and covers the x' = 0 axis case by the swap.
  const bool x_dominant = std::abs(q.x) >= std::abs(q.y);
  const double wp = x_dominant ? q.x : q.y;
  const double cc = (x_dominant ? q.y : q.x) / wp;
  const double one_c2 = 1.0 + cc * cc;

  std::vector<double> candidates;
  if (d.model == RadialModel::Model2) {
    candidates = real_cubic_roots(d.k1 * one_c2, 0.0, 1.0, -wp);
  } else {
    // Model3: one cubic per sign branch, keep sign-consistent roots.
    const double sq = std::sqrt(one_c2);
    for (double s : {1.0, -1.0}) {
      for (double w : real_cubic_roots(d.k2 * one_c2, s * d.k1 * sq, 1.0, -wp)) {
        if (w == 0.0 || std::copysign(1.0, w) == s) candidates.push_back(w);
      }
    }
  }
  if (candidates.empty()) {
    fail(ErrorKind::NoRealRoot, "no sign-consistent real root");
  }

  std::vector<BranchRoot> ranked;
  for (double w : candidates) {
    const double r2 = w * w * one_c2;
    const double forward = w * radial_factor(d, r2);
    ranked.push_back({w, std::abs(forward - wp)});
  }
  const double tie = 1e-12 * (1.0 + std::abs(wp));
  std::sort(ranked.begin(), ranked.end(),
            [&](const BranchRoot& a, const BranchRoot& b) {
              if (std::abs(a.residual - b.residual) > tie)
                return a.residual < b.residual;
              return std::abs(a.w - wp) < std::abs(b.w - wp);
            });
  const double w = ranked.front().w;
  if (ranked.front().residual > 1e-9 * (1.0 + std::abs(wp))) {
    fail(ErrorKind::NoRealRoot, "best root does not reproduce the input");
  }
  return x_dominant ? NormalizedPoint{w, cc * w}
                    : NormalizedPoint{cc * w, w};
}

Point2Px undistort_pixel(const Point2Px& pd, const CameraIntrinsics& k,
                         const DistortionCoeffs& d) {
  const NormalizedPoint nd = normalize(pd, k);
  const NormalizedPoint n = undistort_normalized({nd.x, nd.y}, d);
  return denormalize(n, k);
}

GrayImage undistort_image(const GrayImage& img, const CameraIntrinsics& k,
                          const DistortionCoeffs& d) {
  GrayImage out;
  out.width = img.width;
  out.height = img.height;
  out.data.assign(img.data.size(), 0);
  for (int r = 0; r < out.height; ++r) {
    for (int c = 0; c < out.width; ++c) {
      const Point2Px src = distort_pixel({double(c), double(r)}, k, d);
      const double u = src.u, v = src.v;
      const int c0 = int(std::floor(u)), r0 = int(std::floor(v));
      if (c0 < 0 || r0 < 0 || c0 + 1 >= img.width || r0 + 1 >= img.height) {
        // Exact integer hits on the last row/column still count.
        if (u >= 0 && v >= 0 && u <= img.width - 1 && v <= img.height - 1 &&
            u == std::floor(u) && v == std::floor(v)) {
          out.at(r, c) = img.at(int(v), int(u));
        }
        continue;
      }
      const double fu = u - c0, fv = v - r0;
      const double val =
          (1 - fv) * ((1 - fu) * img.at(r0, c0) + fu * img.at(r0, c0 + 1)) +
          fv * ((1 - fu) * img.at(r0 + 1, c0) + fu * img.at(r0 + 1, c0 + 1));
      out.at(r, c) = std::uint8_t(std::lround(std::clamp(val, 0.0, 255.0)));
    }
  }
  return out;
}

}  // namespace gridcal
