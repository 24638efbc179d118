#include <doctest.h>

#include <cmath>
#include <numeric>

#include "gridcal/formats.hpp"
#include "gridcal/imaging.hpp"
#include "gridcal/synth.hpp"
#include "oracles.hpp"

using namespace gridcal;

namespace {

SceneConfig odis_scene() {
  SceneConfig c;
  c.width = 320;
  c.height = 240;
  c.intrinsics = {260.7636, 255.1465, -0.2739, 140.0564, 113.1723};
  c.distortion = DistortionCoeffs::make(RadialModel::Model1, -0.3554, 0.1633);
  c.poses = {
      pose_looking_at_target(c.target, {0.0, 0.30, 0.05}, 36.0),
      pose_looking_at_target(c.target, {M_PI / 2, 0.40, -M_PI / 2}, 38.0),
      pose_looking_at_target(c.target, {M_PI / 4, 0.50, -M_PI / 4}, 40.0),
      pose_looking_at_target(c.target, {-M_PI / 3, 0.35, M_PI / 3}, 37.0),
      pose_looking_at_target(c.target, {-M_PI / 6, 0.25, M_PI / 6}, 35.0),
  };
  return c;
}

// Boxes render near 20 px here, comfortably above the 5 px scan-line
// threshold; the small ODIS sensor leaves them at its resolution limit.
SceneConfig render_scene() {
  SceneConfig c;
  c.width = 640;
  c.height = 480;
  c.intrinsics = {700.0, 690.0, -0.4, 320.0, 240.0};
  c.distortion = DistortionCoeffs::make(RadialModel::Model1, 0.0, 0.0);
  c.poses = {
      pose_looking_at_target(c.target, {0.0, 0.30, 0.05}, 42.0),
      pose_looking_at_target(c.target, {M_PI / 2, 0.45, -M_PI / 2}, 46.0),
      pose_looking_at_target(c.target, {M_PI / 4, 0.60, -M_PI / 4}, 50.0),
      pose_looking_at_target(c.target, {-M_PI / 3, 0.40, M_PI / 3}, 46.0),
      pose_looking_at_target(c.target, {-M_PI / 6, 0.70, M_PI / 6}, 52.0),
  };
  return c;
}

}  // namespace

TEST_CASE("make_target lays out one box counterclockwise") {
  const std::vector<Vec2> t = make_target({1, 1, 1.3, 1.3});
  REQUIRE(t.size() == 4);
  CHECK(t[0] == Vec2(0.0, 0.0));
  CHECK(t[1] == Vec2(1.3, 0.0));
  CHECK(t[2] == Vec2(1.3, 1.3));
  CHECK(t[3] == Vec2(0.0, 1.3));
}

TEST_CASE("the default target has 256 corners") {
  CHECK(make_target({}).size() == 256);
}

TEST_CASE("gap equal to side gives a 2-side box pitch") {
  const std::vector<Vec2> t = make_target({2, 1, 1.3, 1.3});
  // Corresponding corners of adjacent boxes are 2 * side apart.
  CHECK(t[4].x() - t[0].x() == doctest::Approx(2.6));
}

TEST_CASE("synthetic projections match the scalar oracle") {
  SceneConfig config = odis_scene();
  const SyntheticScene scene = synth_views(config);

  oracles::ScalarCamera cam{config.intrinsics.alpha, config.intrinsics.gamma,
                            config.intrinsics.u0, config.intrinsics.beta,
                            config.intrinsics.v0, config.distortion.k1,
                            config.distortion.k2, 1};
  for (std::size_t i = 0; i < config.poses.size(); ++i) {
    const Mat3& m = config.poses[i].rot.matrix();
    const double r[9] = {m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1),
                         m(1, 2), m(2, 0), m(2, 1), m(2, 2)};
    const double t[3] = {config.poses[i].t.x(), config.poses[i].t.y(),
                         config.poses[i].t.z()};
    for (std::size_t j = 0; j < scene.corners_world.size(); ++j) {
      double ud = 0.0, vd = 0.0;
      oracles::scalar_project(cam, r, t, scene.corners_world[j].x(),
                              scene.corners_world[j].y(), 0.0, &ud, &vd);
      CHECK(std::abs(scene.exact_corners[i][j].u - ud) < 1e-12);
      CHECK(std::abs(scene.exact_corners[i][j].v - vd) < 1e-12);
    }
  }
}

TEST_CASE("fixed seeds reproduce corner files byte for byte") {
  SceneConfig config = odis_scene();
  config.noise_sigma = 0.5;
  config.seed = 1234;
  const SyntheticScene a = synth_views(config);
  const SyntheticScene b = synth_views(config);
  CornerFile fa, fb;
  for (std::size_t i = 0; i < a.observed_corners.size(); ++i) {
    fa.images.push_back({"view.pgm", a.observed_corners[i]});
    fb.images.push_back({"view.pgm", b.observed_corners[i]});
  }
  CHECK(write_corner_file(fa) == write_corner_file(fb));

  config.seed = 1235;
  const SyntheticScene c = synth_views(config);
  CHECK(c.observed_corners[0][0].u != a.observed_corners[0][0].u);
}

TEST_CASE("noise sigma is realized within 5 percent") {
  SceneConfig config = odis_scene();
  config.noise_sigma = 0.5;
  // 5 views x 256 corners x 2 coords = 2560 samples per call; pool a few
  // seeds to pass 10k samples.
  double ss = 0.0;
  long count = 0;
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    config.seed = seed;
    const SyntheticScene scene = synth_views(config);
    for (std::size_t i = 0; i < scene.observed_corners.size(); ++i) {
      for (std::size_t j = 0; j < scene.observed_corners[i].size(); ++j) {
        const double du =
            scene.observed_corners[i][j].u - scene.exact_corners[i][j].u;
        const double dv =
            scene.observed_corners[i][j].v - scene.exact_corners[i][j].v;
        ss += du * du + dv * dv;
        count += 2;
      }
    }
  }
  const double sigma = std::sqrt(ss / double(count));
  CHECK(sigma > 0.475);
  CHECK(sigma < 0.525);
}

TEST_CASE("poses that leave the frame are rejected with the view index") {
  SceneConfig config = odis_scene();
  config.poses.push_back(
      pose_looking_at_target(config.target, {0.0, 0.3, 0.0}, 8.0));
  try {
    synth_views(config);
    FAIL("expected PoseOutOfFrame");
  } catch (const CalibError& e) {
    CHECK(e.kind() == ErrorKind::PoseOutOfFrame);
    CHECK(e.detail() == 5);
  }
}

TEST_CASE("fronto-parallel render contains 64 dark regions") {
  SceneConfig config;
  config.width = 640;
  config.height = 480;
  config.intrinsics = {700.0, 700.0, 0.0, 320.0, 240.0};
  config.distortion = DistortionCoeffs::make(RadialModel::Model1, 0.0, 0.0);
  config.poses = {pose_looking_at_target(config.target, {0.0, 1e-4, 0.0},
                                         40.0)};
  const GrayImage img = render_pgm(config, 0);
  const RegionMap regions = label_components(binarize(img, 150));
  int big = 0;
  std::vector<long> area(regions.region_count + 1, 0);
  for (int l : regions.labels) ++area[l];
  for (int l = 1; l <= regions.region_count; ++l) {
    if (area[l] > 20) ++big;
  }
  CHECK(big == 64);
}

TEST_CASE("rendering is deterministic") {
  SceneConfig config = odis_scene();
  const GrayImage a = render_pgm(config, 2);
  const GrayImage b = render_pgm(config, 2);
  CHECK(a.data == b.data);
}

TEST_CASE("extraction recovers rendered corners in ground-truth order") {
  SceneConfig config = render_scene();
  const SyntheticScene scene = synth_views(config);

  for (std::size_t view = 0; view < config.poses.size(); ++view) {
    const GrayImage img = render_pgm(config, int(view));
    ExtractConfig cfg;
    const std::vector<QuadCorners> boxes = extract_corners(img, cfg);
    REQUIRE(boxes.size() == 64);

    double total = 0.0;
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      for (int k = 0; k < 4; ++k) {
        const Point2Px& got = boxes[b].c[k];
        const Point2Px& want = scene.exact_corners[view][4 * b + k];
        total += std::hypot(got.u - want.u, got.v - want.v);
      }
    }
    const double mean = total / 256.0;
    INFO("view ", view, " mean corner error ", mean);
    CHECK(mean < 0.5);
  }
}
