#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gridcal/dataset.hpp"
#include "gridcal/distortion.hpp"
#include "gridcal/imaging.hpp"

namespace gridcal {

/// Planar grid of dark boxes: boxes_x columns by boxes_y rows, box side
/// and gap in cm.
struct TargetSpec {
  int boxes_x = 8;
  int boxes_y = 8;
  double side = 1.3;
  double gap = 1.3;
};

struct SceneConfig {
  int width = 320;
  int height = 240;
  CameraIntrinsics intrinsics;
  DistortionCoeffs distortion;
  TargetSpec target;
  std::vector<Extrinsics> poses;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  int foreground = 40;   // rendered box intensity
  int background = 220;
};

/// Ground truth plus the matching observations for every view.
struct SyntheticScene {
  SceneConfig config;
  std::vector<Vec2> corners_world;
  std::vector<std::vector<Point2Px>> exact_corners;     // projected+distorted
  std::vector<std::vector<Point2Px>> observed_corners;  // exact + noise

  CalibrationDataset dataset() const;
};

/// Ordered world corners: boxes row-major, within each box
/// counterclockwise from the corner nearest the origin.
std::vector<Vec2> make_target(const TargetSpec& spec);

/// Projects every corner through every pose, applies the radial model and
/// optionally additive Gaussian pixel noise from the counter-based
/// generator (SplitMix64 keyed by seed and sample index, Box-Muller).
SyntheticScene synth_views(const SceneConfig& config);

/// Rasterizes one view: 4x supersampled coverage of the dark boxes under
/// the exact projection chain (inverse homography per subsample).
GrayImage render_pgm(const SceneConfig& config, int view_index);

/// Places a pose so the target center lands on the optical axis at the
/// given standoff; angles are the ZYZ Euler parameters of the rotation.
Extrinsics pose_looking_at_target(const TargetSpec& target,
                                  const EulerZYZ& angles, double standoff);

/// Fronto-parallel checkerboard raster for the junction detector tests:
/// squares_x by squares_y cells of cell_px pixels, origin cell dark.
GrayImage render_checkerboard(int squares_x, int squares_y, int cell_px,
                              int margin_px, int foreground, int background);

}  // namespace gridcal
