#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "gridcal/distortion.hpp"
#include "gridcal/imaging.hpp"

using namespace gridcal;

namespace {

// Fitted coefficient sets per model (Microsoft, desktop, ODIS cameras).
const std::vector<DistortionCoeffs> kModel1Sets = {
    DistortionCoeffs::make(RadialModel::Model1, -0.2286, 0.1903),
    DistortionCoeffs::make(RadialModel::Model1, -0.3435, 0.1232),
    DistortionCoeffs::make(RadialModel::Model1, -0.3554, 0.1633),
};
const std::vector<DistortionCoeffs> kModel2Sets = {
    DistortionCoeffs::make(RadialModel::Model2, -0.1984, 0.0),
    DistortionCoeffs::make(RadialModel::Model2, -0.2765, 0.0),
    DistortionCoeffs::make(RadialModel::Model2, -0.2752, 0.0),
};
const std::vector<DistortionCoeffs> kModel3Sets = {
    DistortionCoeffs::make(RadialModel::Model3, -0.0215, -0.1565),
    DistortionCoeffs::make(RadialModel::Model3, -0.1067, -0.1577),
    DistortionCoeffs::make(RadialModel::Model3, -0.1192, -0.1365),
};

std::vector<DistortionCoeffs> all_sets() {
  std::vector<DistortionCoeffs> out = kModel1Sets;
  out.insert(out.end(), kModel2Sets.begin(), kModel2Sets.end());
  out.insert(out.end(), kModel3Sets.begin(), kModel3Sets.end());
  return out;
}

const CameraIntrinsics kOdis{260.7636, 255.1465, -0.2739, 140.0564,
                             113.1723};

}  // namespace

TEST_CASE("principal point is a fixed point of distortion") {
  const CameraIntrinsics k{300.0, 280.0, 0.5, 160.0, 120.0};
  for (const auto& d : all_sets()) {
    const Point2Px p = distort_pixel({k.u0, k.v0}, k, d);
    CHECK(p.u == doctest::Approx(k.u0).epsilon(1e-14));
    CHECK(p.v == doctest::Approx(k.v0).epsilon(1e-14));
  }
}

TEST_CASE("zero coefficients distort nothing") {
  const CameraIntrinsics k{300.0, 280.0, 0.5, 160.0, 120.0};
  for (RadialModel m :
       {RadialModel::Model1, RadialModel::Model2, RadialModel::Model3}) {
    const DistortionCoeffs d = DistortionCoeffs::make(m, 0.0, 0.0);
    const Point2Px p = distort_pixel({211.5, 37.25}, k, d);
    CHECK(p.u == doctest::Approx(211.5).epsilon(1e-15));
    CHECK(p.v == doctest::Approx(37.25).epsilon(1e-15));
  }
}

TEST_CASE("hand-evaluated Model1 distortion") {
  // x = 1, f = 1 - 0.2 + 0.1 = 0.9, so (100, 0) lands at (90, 0).
  const CameraIntrinsics k{100.0, 100.0, 0.0, 0.0, 0.0};
  const DistortionCoeffs d =
      DistortionCoeffs::make(RadialModel::Model1, -0.2, 0.1);
  const Point2Px p = distort_pixel({100.0, 0.0}, k, d);
  CHECK(p.u == doctest::Approx(90.0).epsilon(1e-12));
  CHECK(p.v == doctest::Approx(0.0));
}

TEST_CASE("pixel and camera-frame distortion routes agree") {
  const CameraIntrinsics k{260.76, 255.15, -0.27, 140.06, 113.17};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> du(20.0, 300.0);
  std::uniform_real_distribution<double> dv(20.0, 220.0);
  for (const auto& d : all_sets()) {
    for (int i = 0; i < 50; ++i) {
      const Point2Px p{du(rng), dv(rng)};
      const Point2Px via_pixels = distort_pixel(p, k, d);
      const NormalizedPoint n = normalize(p, k);
      const DistortedNormalized q = distort_normalized(n, d);
      const Point2Px via_camera = denormalize({q.x, q.y}, k);
      CHECK(std::abs(via_pixels.u - via_camera.u) < 1e-10);
      CHECK(std::abs(via_pixels.v - via_camera.v) < 1e-10);
    }
  }
}

TEST_CASE("undistort_normalized fixes the origin") {
  for (const auto& d : all_sets()) {
    const NormalizedPoint n = undistort_normalized({0.0, 0.0}, d);
    CHECK(n.x == 0.0);
    CHECK(n.y == 0.0);
  }
}

TEST_CASE("Model2 forward then backward recovers the point") {
  const DistortionCoeffs d =
      DistortionCoeffs::make(RadialModel::Model2, -0.2, 0.0);
  // x = 0.5 on the axis: x' = 0.5 (1 - 0.2 * 0.25) = 0.475.
  const DistortedNormalized q = distort_normalized({0.5, 0.0}, d);
  CHECK(q.x == doctest::Approx(0.475).epsilon(1e-15));
  const NormalizedPoint n = undistort_normalized(q, d);
  CHECK(n.x == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(std::abs(n.y) < 1e-15);
}

TEST_CASE("undistort round-trips a normalized grid, all fitted sets") {
  // 16x16 grid of distorted points with radius <= 0.8.
  for (const auto& d : all_sets()) {
    double worst = 0.0;
    for (int i = 0; i < 16; ++i) {
      for (int j = 0; j < 16; ++j) {
        const double x = -0.8 + 1.6 * i / 15.0;
        const double y = -0.8 + 1.6 * j / 15.0;
        if (std::hypot(x, y) > 0.8) continue;
        const NormalizedPoint n = undistort_normalized({x, y}, d);
        const DistortedNormalized back = distort_normalized(n, d);
        worst = std::max({worst, std::abs(back.x - x), std::abs(back.y - y)});
      }
    }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("distort then undistort is the identity inside the fold") {
  for (const auto& d : all_sets()) {
    double worst = 0.0;
    for (int i = 0; i < 16; ++i) {
      for (int j = 0; j < 16; ++j) {
        const double x = -0.8 + 1.6 * i / 15.0;
        const double y = -0.8 + 1.6 * j / 15.0;
        if (std::hypot(x, y) > 0.8) continue;
        const DistortedNormalized q = distort_normalized({x, y}, d);
        const NormalizedPoint n = undistort_normalized(q, d);
        worst = std::max({worst, std::abs(n.x - x), std::abs(n.y - y)});
      }
    }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("undistortion is an odd function") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> coord(-0.55, 0.55);
  for (const auto& d : all_sets()) {
    for (int i = 0; i < 40; ++i) {
      const DistortedNormalized q{coord(rng), coord(rng)};
      const NormalizedPoint a = undistort_normalized(q, d);
      const NormalizedPoint b = undistort_normalized({-q.x, -q.y}, d);
      CHECK(std::abs(a.x + b.x) < 1e-12);
      CHECK(std::abs(a.y + b.y) < 1e-12);
    }
  }
}

TEST_CASE("undistortion commutes with rotations about the center") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> radius(0.05, 0.7);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  for (const auto& d : all_sets()) {
    for (int i = 0; i < 40; ++i) {
      const double r = radius(rng);
      const double t0 = angle(rng);
      const double rot = angle(rng);
      const DistortedNormalized q{r * std::cos(t0), r * std::sin(t0)};
      const DistortedNormalized q_rot{r * std::cos(t0 + rot),
                                      r * std::sin(t0 + rot)};
      const NormalizedPoint a = undistort_normalized(q, d);
      const NormalizedPoint b = undistort_normalized(q_rot, d);
      const double ax = a.x * std::cos(rot) - a.y * std::sin(rot);
      const double ay = a.x * std::sin(rot) + a.y * std::cos(rot);
      CHECK(std::abs(ax - b.x) < 1e-10);
      CHECK(std::abs(ay - b.y) < 1e-10);
    }
  }
}

TEST_CASE("axis-aligned distorted points undistort on the axis") {
  // x' = 0 exercises the coordinate swap.
  const DistortionCoeffs d =
      DistortionCoeffs::make(RadialModel::Model3, -0.1192, -0.1365);
  const NormalizedPoint n = undistort_normalized({0.0, 0.4}, d);
  CHECK(n.x == 0.0);
  const DistortedNormalized back = distort_normalized(n, d);
  CHECK(back.y == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("undistort_pixel fixed point and identity") {
  for (const auto& d : all_sets()) {
    const Point2Px p = undistort_pixel({kOdis.u0, kOdis.v0}, kOdis, d);
    CHECK(p.u == doctest::Approx(kOdis.u0).epsilon(1e-12));
    CHECK(p.v == doctest::Approx(kOdis.v0).epsilon(1e-12));
  }
  const DistortionCoeffs none =
      DistortionCoeffs::make(RadialModel::Model1, 0.0, 0.0);
  const Point2Px p = undistort_pixel({17.0, 211.0}, kOdis, none);
  CHECK(p.u == doctest::Approx(17.0).epsilon(1e-13));
  CHECK(p.v == doctest::Approx(211.0).epsilon(1e-13));
}

TEST_CASE("full pixel round-trip over a 320x240 grid") {
  const DistortionCoeffs d =
      DistortionCoeffs::make(RadialModel::Model1, -0.3554, 0.1633);
  double worst = 0.0;
  for (int v = 0; v < 240; v += 10) {
    for (int u = 0; u < 320; u += 10) {
      const Point2Px pd{double(u), double(v)};
      const Point2Px ideal = undistort_pixel(pd, kOdis, d);
      const Point2Px back = distort_pixel(ideal, kOdis, d);
      worst = std::max({worst, std::abs(back.u - pd.u),
                        std::abs(back.v - pd.v)});
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("undistort_image with zero coefficients is byte-identical") {
  GrayImage img;
  img.width = 32;
  img.height = 24;
  img.data.resize(32 * 24);
  std::mt19937_64 rng(5);
  for (auto& px : img.data) px = std::uint8_t(rng() % 256);
  const CameraIntrinsics k{200.0, 195.0, 0.0, 16.0, 12.0};
  const DistortionCoeffs none =
      DistortionCoeffs::make(RadialModel::Model1, 0.0, 0.0);
  const GrayImage out = undistort_image(img, k, none);
  CHECK(out.data == img.data);
}

TEST_CASE("barrel undistortion moves outer pixels outward") {
  const DistortionCoeffs d =
      DistortionCoeffs::make(RadialModel::Model1, -0.3554, 0.1633);
  const Point2Px corner{300.0, 220.0};
  const Point2Px ideal = undistort_pixel(corner, kOdis, d);
  const double before = std::hypot(corner.u - kOdis.u0, corner.v - kOdis.v0);
  const double after = std::hypot(ideal.u - kOdis.u0, ideal.v - kOdis.v0);
  CHECK(after > before);
}

TEST_CASE("Model1 inversion reports divergence beyond the valid radius") {
  const DistortionCoeffs d =
      DistortionCoeffs::make(RadialModel::Model1, -2.5, 0.0);
  CHECK_THROWS_AS(undistort_normalized({5.0, 0.0}, d), CalibError);
}
