#include <doctest.h>

#include <cmath>
#include <random>

#include "gridcal/pose.hpp"
#include "gridcal/synth.hpp"

using namespace gridcal;

namespace {

const CameraIntrinsics kOdis{260.7636, 255.1465, -0.2739, 140.0564,
                             113.1723};
const DistortionCoeffs kOdisDist =
    DistortionCoeffs::make(RadialModel::Model1, -0.3554, 0.1633);

// Projects a world point through a ground-convention pose and distorts.
Point2Px observe(const Vec3& world, const GroundPose& pose,
                 const CameraIntrinsics& k, const DistortionCoeffs& d) {
  const Point2Px ideal = project({world.x(), world.y(), world.z()},
                                 pose.to_extrinsics(), k);
  return distort_pixel(ideal, k, d);
}

// A camera a little above the ground looking down and forward.
GroundPose camera_over_ground() {
  GroundPose g;
  g.r = rotation_from_euler_zyz({0.3, 2.2, -0.1});
  g.t = Vec3(10.0, -20.0, 55.0);  // cm above the ground plane
  return g;
}

}  // namespace

TEST_CASE("ground pose conversion round-trips") {
  const GroundPose g = camera_over_ground();
  const GroundPose back = GroundPose::from_extrinsics(g.to_extrinsics());
  CHECK((back.r.matrix() - g.r.matrix()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((back.t - g.t).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ground pose matches the standard projection") {
  const GroundPose g = camera_over_ground();
  const Extrinsics ex = g.to_extrinsics();
  const Vec3 world(14.0, -3.0, 0.0);
  // P_c = R^-1 (P_w - t) must equal R_s P_w + t_s.
  const Vec3 via_ground = g.r.transpose() * (world - g.t);
  const Vec3 via_standard = ex.rot * world + ex.t;
  CHECK((via_ground - via_standard).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pan_tilt_from_view recovers the constructed angles") {
  const EulerZYZ truth{0.35, 0.85, -0.45};
  const Rotation3 r = rotation_from_euler_zyz(truth);
  const Vec3 t(4.0, -6.0, 45.0);
  PlanarCorrespondences c;
  Extrinsics ex{r, t};
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      const Vec2 w(j * 2.6, i * 2.6);
      c.world.push_back(w);
      c.image.push_back(project({w.x(), w.y(), 0.0}, ex, kOdis));
    }
  }
  const EulerZYZ got = pan_tilt_from_view(c, kOdis);
  CHECK(std::abs(got.a - truth.a) < 1e-6);
  CHECK(std::abs(got.b - truth.b) < 1e-6);
  CHECK(std::abs(got.c - truth.c) < 1e-6);
}

TEST_CASE("a fronto-parallel wall view is gimbal degenerate") {
  PlanarCorrespondences c;
  Extrinsics ex;
  ex.t = Vec3(-6.0, -6.0, 45.0);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const Vec2 w(j * 2.6, i * 2.6);
      c.world.push_back(w);
      c.image.push_back(project({w.x(), w.y(), 0.0}, ex, kOdis));
    }
  }
  try {
    pan_tilt_from_view(c, kOdis);
    FAIL("expected GimbalDegenerate");
  } catch (const CalibError& e) {
    CHECK(e.kind() == ErrorKind::GimbalDegenerate);
  }
}

TEST_CASE("near-degenerate tilt still recovers b") {
  const EulerZYZ truth{0.0, 0.02, 0.0};
  Extrinsics ex{rotation_from_euler_zyz(truth), Vec3(-6.0, -6.0, 45.0)};
  PlanarCorrespondences c;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      const Vec2 w(j * 2.6, i * 2.6);
      c.world.push_back(w);
      c.image.push_back(project({w.x(), w.y(), 0.0}, ex, kOdis));
    }
  }
  const EulerZYZ got = pan_tilt_from_view(c, kOdis);
  CHECK(std::abs(got.b - truth.b) < 1e-6);
}

TEST_CASE("back projection inverts the ground-point observation") {
  const GroundPose g = camera_over_ground();
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> offset(-12.0, 12.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 world(g.t.x() + 30.0 + offset(rng), g.t.y() + offset(rng),
                     0.0);
    Point2Px px;
    try {
      px = observe(world, g, kOdis, kOdisDist);
    } catch (const CalibError&) {
      continue;  // outside the distortion's invertible range
    }
    const Vec3 got = back_project_to_ground(px, kOdis, kOdisDist, g);
    CHECK((got - world).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("the back-projected point reprojects to the same pixel") {
  const GroundPose g = camera_over_ground();
  const Vec3 world(g.t.x() + 35.0, g.t.y() + 5.0, 0.0);
  const Point2Px px = observe(world, g, kOdis, kOdisDist);
  const Vec3 ground = back_project_to_ground(px, kOdis, kOdisDist, g);
  const Point2Px back = observe(ground, g, kOdis, kOdisDist);
  CHECK(std::abs(back.u - px.u) < 1e-8);
  CHECK(std::abs(back.v - px.v) < 1e-8);
}

TEST_CASE("rays parallel to the ground cannot intersect it") {
  GroundPose g;
  // Camera looking horizontally: the optical axis stays at constant z.
  g.r = rotation_from_euler_zyz({0.0, M_PI / 2.0, 0.0});
  g.t = Vec3(0.0, 0.0, 40.0);
  const DistortionCoeffs none =
      DistortionCoeffs::make(RadialModel::Model1, 0.0, 0.0);
  try {
    back_project_to_ground({kOdis.u0, kOdis.v0}, kOdis, none, g);
    FAIL("expected RayParallelToPlane");
  } catch (const CalibError& e) {
    CHECK(e.kind() == ErrorKind::RayParallelToPlane);
  }
}

TEST_CASE("a correct assumed pose needs no correction") {
  const GroundPose g = camera_over_ground();
  LineObservation obs;
  obs.world_a = Vec3(g.t.x() + 30.0, g.t.y() - 10.0, 0.0);
  obs.world_b = Vec3(g.t.x() + 40.0, g.t.y() + 15.0, 0.0);
  obs.image_a = observe(obs.world_a, g, kOdis, kOdisDist);
  obs.image_b = observe(obs.world_b, g, kOdis, kOdisDist);
  const PoseCorrection corr = align_from_line(obs, kOdis, kOdisDist, g);
  CHECK(std::abs(corr.delta_theta) < 1e-10);
  CHECK((corr.t1 - g.t).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("a planted yaw and translation offset is recovered") {
  const GroundPose truth = camera_over_ground();
  // The robot thinks it is at `assumed`; reality is `truth` composed with
  // a yaw of 0.2 rad and a ground offset of (3, -4).
  GroundPose assumed;
  assumed.r = rotation_z(0.2) * truth.r;
  assumed.t = truth.t + Vec3(3.0, -4.0, 0.0);

  LineObservation obs;
  obs.world_a = Vec3(truth.t.x() + 30.0, truth.t.y() - 8.0, 0.0);
  obs.world_b = Vec3(truth.t.x() + 42.0, truth.t.y() + 12.0, 0.0);
  obs.image_a = observe(obs.world_a, truth, kOdis, kOdisDist);
  obs.image_b = observe(obs.world_b, truth, kOdis, kOdisDist);

  const PoseCorrection corr = align_from_line(obs, kOdis, kOdisDist, assumed);
  CHECK(std::abs(corr.delta_theta - 0.2) < 1e-8);
  CHECK((corr.t1 - truth.t).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("coincident image endpoints are degenerate") {
  const GroundPose g = camera_over_ground();
  LineObservation obs;
  obs.world_a = Vec3(g.t.x() + 30.0, g.t.y(), 0.0);
  obs.world_b = obs.world_a + Vec3(10.0, 0.0, 0.0);
  obs.image_a = observe(obs.world_a, g, kOdis, kOdisDist);
  obs.image_b = obs.image_a;  // both rays hit the same ground point
  try {
    align_from_line(obs, kOdis, kOdisDist, g);
    FAIL("expected DegenerateLine");
  } catch (const CalibError& e) {
    CHECK(e.kind() == ErrorKind::DegenerateLine);
  }
}

TEST_CASE("corrections are pure z-rotations that close the loop") {
  std::mt19937_64 rng(73);
  std::uniform_real_distribution<double> yaw(-0.6, 0.6);
  std::uniform_real_distribution<double> shift(-6.0, 6.0);
  for (int trial = 0; trial < 100; ++trial) {
    const GroundPose truth = camera_over_ground();
    const double planted_yaw = yaw(rng);
    GroundPose assumed;
    assumed.r = rotation_z(planted_yaw) * truth.r;
    assumed.t = truth.t + Vec3(shift(rng), shift(rng), 0.0);

    LineObservation obs;
    obs.world_a = Vec3(truth.t.x() + 32.0, truth.t.y() - 9.0, 0.0);
    obs.world_b = Vec3(truth.t.x() + 45.0, truth.t.y() + 10.0, 0.0);
    obs.image_a = observe(obs.world_a, truth, kOdis, kOdisDist);
    obs.image_b = observe(obs.world_b, truth, kOdis, kOdisDist);

    const PoseCorrection corr =
        align_from_line(obs, kOdis, kOdisDist, assumed);
    CHECK(std::abs(corr.delta_theta - planted_yaw) < 1e-6);
    CHECK((corr.t1 - truth.t).cwiseAbs().maxCoeff() < 1e-6);

    // Re-simulating from the corrected pose reproduces the observation.
    GroundPose corrected;
    corrected.r = rotation_z(-corr.delta_theta) * assumed.r;
    corrected.t = corr.t1;
    const Point2Px a = observe(obs.world_a, corrected, kOdis, kOdisDist);
    const Point2Px b = observe(obs.world_b, corrected, kOdis, kOdisDist);
    CHECK(std::abs(a.u - obs.image_a.u) < 1e-6);
    CHECK(std::abs(a.v - obs.image_a.v) < 1e-6);
    CHECK(std::abs(b.u - obs.image_b.u) < 1e-6);
    CHECK(std::abs(b.v - obs.image_b.v) < 1e-6);
  }
}

TEST_CASE("noisy observations keep the yaw error within two degrees") {
  std::mt19937_64 rng(79);
  std::normal_distribution<double> noise(0.0, 0.5);
  std::vector<double> errors;
  for (int trial = 0; trial < 100; ++trial) {
    const GroundPose truth = camera_over_ground();
    GroundPose assumed;
    const double planted = 0.15;
    assumed.r = rotation_z(planted) * truth.r;
    assumed.t = truth.t + Vec3(2.0, -3.0, 0.0);

    LineObservation obs;
    // Roughly a one-meter line about two meters out.
    obs.world_a = Vec3(truth.t.x() + 180.0, truth.t.y() - 50.0, 0.0);
    obs.world_b = Vec3(truth.t.x() + 195.0, truth.t.y() + 50.0, 0.0);
    try {
      obs.image_a = observe(obs.world_a, truth, kOdis, kOdisDist);
      obs.image_b = observe(obs.world_b, truth, kOdis, kOdisDist);
    } catch (const CalibError&) {
      continue;
    }
    obs.image_a.u += noise(rng);
    obs.image_a.v += noise(rng);
    obs.image_b.u += noise(rng);
    obs.image_b.v += noise(rng);
    const PoseCorrection corr =
        align_from_line(obs, kOdis, kOdisDist, assumed);
    errors.push_back(std::abs(corr.delta_theta - planted));
  }
  REQUIRE(errors.size() > 60);
  std::sort(errors.begin(), errors.end());
  const double median = errors[errors.size() / 2];
  const double p90 = errors[errors.size() * 9 / 10];
  CHECK(median < 1.0 * M_PI / 180.0);
  CHECK(p90 < 2.0 * M_PI / 180.0);
}
