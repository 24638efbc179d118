#include "gridcal/synth.hpp"

#include <cmath>

#include "gridcal/distortion.hpp"

namespace gridcal {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// Counter-based generator: SplitMix64 finalizer over seed + counter.
std::uint64_t rand64(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t x = seed + (counter + 1) * kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double to_unit_open(std::uint64_t v) {
  return (double((v >> 11)) + 1.0) * 0x1.0p-53;  // (0, 1]
}

// Box-Muller pair for one sample index.
void gaussian_pair(std::uint64_t seed, std::uint64_t index, double* z0,
                   double* z1) {
  const double u1 = to_unit_open(rand64(seed, 2 * index));
  const double u2 = to_unit_open(rand64(seed, 2 * index + 1));
  const double mag = std::sqrt(-2.0 * std::log(u1));
  *z0 = mag * std::cos(2.0 * M_PI * u2);
  *z1 = mag * std::sin(2.0 * M_PI * u2);
}

}  // namespace

std::vector<Vec2> make_target(const TargetSpec& spec) {
  if (spec.boxes_x <= 0 || spec.boxes_y <= 0 || spec.side <= 0.0 ||
      spec.gap <= 0.0) {
    fail(ErrorKind::BadConfig, "target dimensions must be positive");
  }
  const double pitch = spec.side + spec.gap;
  std::vector<Vec2> corners;
  corners.reserve(4 * spec.boxes_x * spec.boxes_y);
  for (int i = 0; i < spec.boxes_y; ++i) {
    for (int j = 0; j < spec.boxes_x; ++j) {
      const double x0 = j * pitch;
      const double y0 = i * pitch;
      corners.emplace_back(x0, y0);
      corners.emplace_back(x0 + spec.side, y0);
      corners.emplace_back(x0 + spec.side, y0 + spec.side);
      corners.emplace_back(x0, y0 + spec.side);
    }
  }
  return corners;
}

Extrinsics pose_looking_at_target(const TargetSpec& target,
                                  const EulerZYZ& angles, double standoff) {
  const double pitch_x = (target.boxes_x - 1) * (target.side + target.gap);
  const double pitch_y = (target.boxes_y - 1) * (target.side + target.gap);
  const Vec3 center{(pitch_x + target.side) / 2.0,
                    (pitch_y + target.side) / 2.0, 0.0};
  Extrinsics ex;
  ex.rot = rotation_from_euler_zyz(angles);
  ex.t = Vec3(0.0, 0.0, standoff) - ex.rot * center;
  return ex;
}

SyntheticScene synth_views(const SceneConfig& config) {
  if (config.poses.empty()) {
    fail(ErrorKind::BadConfig, "need at least one pose");
  }
  SyntheticScene scene;
  scene.config = config;
  scene.corners_world = make_target(config.target);

  for (std::size_t i = 0; i < config.poses.size(); ++i) {
    std::vector<Point2Px> exact;
    exact.reserve(scene.corners_world.size());
    for (const Vec2& w : scene.corners_world) {
      const Vec3 pc =
          config.poses[i].rot * Vec3(w.x(), w.y(), 0.0) + config.poses[i].t;
      if (pc.z() <= kDepthTol) {
        fail(ErrorKind::PoseOutOfFrame,
             "view " + std::to_string(i) + " puts a corner behind the camera",
             long(i));
      }
      const Point2Px ideal = project({w.x(), w.y(), 0.0}, config.poses[i],
                                     config.intrinsics);
      const Point2Px pd =
          distort_pixel(ideal, config.intrinsics, config.distortion);
      if (pd.u < 0.0 || pd.u > config.width - 1 || pd.v < 0.0 ||
          pd.v > config.height - 1) {
        fail(ErrorKind::PoseOutOfFrame,
             "view " + std::to_string(i) + " projects outside the image",
             long(i));
      }
      exact.push_back(pd);
    }
    scene.exact_corners.push_back(exact);

    std::vector<Point2Px> observed = exact;
    if (config.noise_sigma > 0.0) {
      for (std::size_t j = 0; j < observed.size(); ++j) {
        double zu = 0.0, zv = 0.0;
        gaussian_pair(config.seed, i * scene.corners_world.size() + j, &zu,
                      &zv);
        observed[j].u += config.noise_sigma * zu;
        observed[j].v += config.noise_sigma * zv;
      }
    }
    scene.observed_corners.push_back(std::move(observed));
  }
  return scene;
}

CalibrationDataset SyntheticScene::dataset() const {
  CalibrationDataset d;
  d.world = corners_world;
  d.views = observed_corners;
  return d;
}

GrayImage render_pgm(const SceneConfig& config, int view_index) {
  if (view_index < 0 || view_index >= int(config.poses.size())) {
    fail(ErrorKind::BadConfig, "view index out of range");
  }
  // Validates the pose before rasterizing anything.
  {
    SceneConfig single = config;
    single.poses = {config.poses[view_index]};
    single.noise_sigma = 0.0;
    synth_views(single);
  }

  const Extrinsics& pose = config.poses[view_index];
  Mat3 h;
  h.col(0) = pose.rot.matrix().col(0);
  h.col(1) = pose.rot.matrix().col(1);
  h.col(2) = pose.t;
  const Mat3 plane_from_pixel = (config.intrinsics.matrix() * h).inverse();

  const TargetSpec& target = config.target;
  const double pitch = target.side + target.gap;
  auto in_box = [&](double x, double y) {
    if (x < 0.0 || y < 0.0) return false;
    const int jx = int(x / pitch);
    const int jy = int(y / pitch);
    if (jx >= target.boxes_x || jy >= target.boxes_y) return false;
    return x - jx * pitch <= target.side && y - jy * pitch <= target.side;
  };
  const bool distorted =
      config.distortion.k1 != 0.0 || config.distortion.k2 != 0.0;

  GrayImage img;
  img.width = config.width;
  img.height = config.height;
  img.data.resize(std::size_t(config.width) * config.height);

  for (int r = 0; r < config.height; ++r) {
    for (int c = 0; c < config.width; ++c) {
      int cover = 0;
      for (int sy = 0; sy < 4; ++sy) {
        for (int sx = 0; sx < 4; ++sx) {
          const double ud = c + (sx + 0.5) / 4.0 - 0.5;
          const double vd = r + (sy + 0.5) / 4.0 - 0.5;
          Point2Px ideal{ud, vd};
          if (distorted) {
            try {
              ideal = undistort_pixel({ud, vd}, config.intrinsics,
                                      config.distortion);
            } catch (const CalibError&) {
              continue;  // outside the invertible radius: background
            }
          }
          const Vec3 w = plane_from_pixel * Vec3(ideal.u, ideal.v, 1.0);
          if (std::abs(w.z()) < 1e-15) continue;
          if (in_box(w.x() / w.z(), w.y() / w.z())) ++cover;
        }
      }
      const double value =
          config.background +
          cover / 16.0 * (config.foreground - config.background);
      img.at(r, c) = std::uint8_t(std::lround(value));
    }
  }
  return img;
}

GrayImage render_checkerboard(int squares_x, int squares_y, int cell_px,
                              int margin_px, int foreground, int background) {
  GrayImage img;
  img.width = 2 * margin_px + squares_x * cell_px;
  img.height = 2 * margin_px + squares_y * cell_px;
  img.data.assign(std::size_t(img.width) * img.height,
                  std::uint8_t(background));
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      const int y = r - margin_px, x = c - margin_px;
      if (x < 0 || y < 0 || x >= squares_x * cell_px ||
          y >= squares_y * cell_px) {
        continue;
      }
      if (((x / cell_px) + (y / cell_px)) % 2 == 0) {
        img.at(r, c) = std::uint8_t(foreground);
      }
    }
  }
  return img;
}

}  // namespace gridcal
