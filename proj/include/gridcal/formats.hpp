#pragma once

#include <string>
#include <vector>

#include "gridcal/calib.hpp"
#include "gridcal/pose.hpp"
#include "gridcal/synth.hpp"

namespace gridcal {

/// One image block of a corner file.
struct CornerBlock {
  std::string source;
  std::vector<Point2Px> points;
};

struct CornerFile {
  std::vector<CornerBlock> images;
};

// Corner file, frozen text format:
//   images N points n
//   image <index> <source-filename>
//   u v                     (n lines, fixed 6 decimals)
std::string write_corner_file(const CornerFile& f);
CornerFile read_corner_file(const std::string& text);

// Result file: key = value lines in Table order (alpha, gamma, u0, beta,
// v0, k1, k2), a *_before block, the objective, then per-view lines
//   view <i>: euler_zyz a b c; t tx ty tz
// with angles in degrees, everything at fixed 6 decimals.
std::string write_result_file(const CalibrationResult& r);
CalibrationResult read_result_file(const std::string& text);

// Scene config: key = value plus "view i: euler_zyz a b c; t tx ty tz"
// lines, angles in degrees.
std::string write_scene_config(const SceneConfig& c);
SceneConfig read_scene_config(const std::string& text);

/// Pose-correction scene: assumed pose, line endpoints, observed pixels.
struct PoseScene {
  GroundPose assumed;
  LineObservation observation;
};

PoseScene read_pose_scene(const std::string& text);
std::string write_pose_scene(const PoseScene& s);

std::string read_text_file(const std::string& path);
std::vector<std::uint8_t> read_binary_file(const std::string& path);

/// Write-temp-then-rename so partial output never lands at the target.
void write_file_atomic(const std::string& path, const std::string& data);
void write_file_atomic(const std::string& path,
                       const std::vector<std::uint8_t>& data);

}  // namespace gridcal
