#include <CLI11.hpp>
#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include "gridcal/calib.hpp"
#include "gridcal/distortion.hpp"
#include "gridcal/formats.hpp"
#include "gridcal/imaging.hpp"
#include "gridcal/pose.hpp"
#include "gridcal/synth.hpp"

namespace {

using namespace gridcal;

// Exit code contract: 0 ok, 2 bad input, 3 extraction/application
// failure, 4 calibration failure.
int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::IoError:
    case ErrorKind::MalformedPgm:
    case ErrorKind::BadConfig:
    case ErrorKind::PoseOutOfFrame:
      return 2;
    case ErrorKind::WrongBoxCount:
    case ErrorKind::NotSimpleBoundary:
    case ErrorKind::TooFewPoints:
    case ErrorKind::TooFewResponses:
    case ErrorKind::DegeneratePoints:
    case ErrorKind::ParallelLines:
    case ErrorKind::DegenerateLine:
    case ErrorKind::RayParallelToPlane:
    case ErrorKind::NoRealRoot:
    case ErrorKind::NoConvergence:
      return 3;
    default:
      return 4;
  }
}

struct ExtractArgs {
  std::vector<std::string> images;
  int threshold = 150;
  int boxes_x = 8;
  int boxes_y = 8;
  double scan_threshold = 5.0;
  int area_min = 21;
  int area_max = 2999;
  bool no_edge_offset = false;
  std::string out = "corners.txt";
};

int run_extract(const ExtractArgs& args) {
  ExtractConfig cfg;
  cfg.threshold = args.threshold;
  cfg.boxes_x = args.boxes_x;
  cfg.boxes_y = args.boxes_y;
  cfg.scan_threshold = args.scan_threshold;
  cfg.area_min = args.area_min;
  cfg.area_max = args.area_max;
  cfg.edge_offset_compensation = !args.no_edge_offset;

  CornerFile file;
  for (const std::string& path : args.images) {
    const GrayImage img = load_pgm_file(path);
    CornerBlock block;
    block.source = path;
    try {
      for (const QuadCorners& q : extract_corners(img, cfg)) {
        for (const Point2Px& p : q.c) block.points.push_back(p);
      }
    } catch (const CalibError& e) {
      std::cerr << "extract: " << path << ": " << e.what() << "\n";
      return 3;
    }
    file.images.push_back(std::move(block));
  }
  write_file_atomic(args.out, write_corner_file(file));
  return 0;
}

struct CalibrateArgs {
  std::string corners;
  std::string out = "result.txt";
  int model = 1;
  int boxes_x = 8, boxes_y = 8;
  double side = 1.3, gap = 1.3;
  bool trace = false;
  bool seed_lls = false;
  double tol_x = 1e-5, tol_f = 1e-5;
  int max_iter = 200;
};

int run_calibrate(const CalibrateArgs& args) {
  const CornerFile file = read_corner_file(read_text_file(args.corners));
  TargetSpec target{args.boxes_x, args.boxes_y, args.side, args.gap};

  CalibrationDataset dataset;
  dataset.world = make_target(target);
  for (const auto& block : file.images) {
    if (block.points.size() != dataset.world.size()) {
      std::cerr << "calibrate: " << block.source << " has "
                << block.points.size() << " points, target needs "
                << dataset.world.size() << "\n";
      return 2;
    }
    dataset.views.push_back(block.points);
  }

  CalibConfig cfg;
  cfg.model = RadialModel(args.model);
  cfg.seed_distortion_with_lls = args.seed_lls;
  cfg.optim.tol_x = args.tol_x;
  cfg.optim.tol_f = args.tol_f;
  cfg.optim.max_iterations = args.max_iter;

  const CalibrationResult result = calibrate(dataset, cfg);

  std::string text = write_result_file(result);
  if (args.trace) {
    text += "# iteration trace\n";
    std::istringstream trace(result.iterations.format_table());
    std::string line;
    while (std::getline(trace, line)) text += "# " + line + "\n";
    std::cout << result.iterations.format_table();
  }
  write_file_atomic(args.out, text);

  std::cout << "J_before = " << result.before.objective
            << "  J_after = " << result.after.objective << "\n";
  return 0;
}

struct UndistortArgs {
  std::string image;
  std::string result;
  std::string out = "undistorted.pgm";
};

int run_undistort(const UndistortArgs& args) {
  const GrayImage img = load_pgm_file(args.image);
  const CalibrationResult result =
      read_result_file(read_text_file(args.result));
  const GrayImage out =
      undistort_image(img, result.after.intrinsics, result.after.distortion);
  write_file_atomic(args.out, write_pgm(out));
  return 0;
}

struct SynthArgs {
  std::string config;
  std::string out_dir = ".";
};

int run_synth(const SynthArgs& args) {
  const SceneConfig config = read_scene_config(read_text_file(args.config));
  const SyntheticScene scene = synth_views(config);

  CornerFile corners;
  for (std::size_t i = 0; i < config.poses.size(); ++i) {
    const std::string name = "view" + std::to_string(i) + ".pgm";
    const GrayImage img = render_pgm(config, int(i));
    write_file_atomic(args.out_dir + "/" + name, write_pgm(img));
    corners.images.push_back({name, scene.observed_corners[i]});
  }
  write_file_atomic(args.out_dir + "/corners.txt",
                    write_corner_file(corners));

  CalibrationResult truth;
  truth.after.intrinsics = config.intrinsics;
  truth.after.distortion = config.distortion;
  truth.after.views = config.poses;
  truth.after.objective = reprojection_objective(
      scene.dataset(), config.intrinsics, config.distortion, config.poses);
  truth.before = truth.after;
  write_file_atomic(args.out_dir + "/truth.txt", write_result_file(truth));
  return 0;
}

struct PoseArgs {
  std::string scene;
  std::string result;
};

int run_pose(const PoseArgs& args) {
  const PoseScene scene = read_pose_scene(read_text_file(args.scene));
  const CalibrationResult result =
      read_result_file(read_text_file(args.result));
  const PoseCorrection corr =
      align_from_line(scene.observation, result.after.intrinsics,
                      result.after.distortion, scene.assumed);
  std::printf("delta_theta_deg = %.6f\n", corr.delta_theta * 180.0 / M_PI);
  std::printf("t1 = %.6f %.6f %.6f\n", corr.t1.x(), corr.t1.y(),
              corr.t1.z());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planar-target camera calibration toolchain"};
  app.require_subcommand(1);

  ExtractArgs extract_args;
  auto* extract = app.add_subcommand(
      "extract", "Locate box corners in PGM images of the grid target");
  extract->add_option("images", extract_args.images, "input PGM images")
      ->required();
  extract->add_option("--threshold", extract_args.threshold,
                      "binarization threshold (default 150)");
  extract->add_option("--boxes-x", extract_args.boxes_x,
                      "target grid columns (default 8)");
  extract->add_option("--boxes-y", extract_args.boxes_y,
                      "target grid rows (default 8)");
  extract->add_option("--scan-threshold", extract_args.scan_threshold,
                      "scan-line split threshold in px (default 5)");
  extract->add_option("--area-min", extract_args.area_min,
                      "minimum region area (default 21)");
  extract->add_option("--area-max", extract_args.area_max,
                      "maximum region area (default 2999)");
  extract->add_flag("--no-edge-offset", extract_args.no_edge_offset,
                    "disable sub-pixel edge offset compensation");
  extract->add_option("--out", extract_args.out,
                      "corner file to write (default corners.txt)");

  CalibrateArgs calibrate_args;
  auto* calibrate = app.add_subcommand(
      "calibrate", "Estimate intrinsics/extrinsics from a corner file");
  calibrate->add_option("--corners", calibrate_args.corners, "corner file")
      ->required();
  calibrate->add_option("--model", calibrate_args.model,
                        "radial model 1|2|3 (default 1)")
      ->check(CLI::Range(1, 3));
  calibrate->add_option("--boxes-x", calibrate_args.boxes_x,
                        "target columns (default 8)");
  calibrate->add_option("--boxes-y", calibrate_args.boxes_y,
                        "target rows (default 8)");
  calibrate->add_option("--side", calibrate_args.side,
                        "box side in cm (default 1.3)");
  calibrate->add_option("--gap", calibrate_args.gap,
                        "box gap in cm (default 1.3)");
  calibrate->add_flag("--trace", calibrate_args.trace,
                      "print and append the iteration table");
  calibrate->add_flag("--seed-lls", calibrate_args.seed_lls,
                      "start refinement from the LLS distortion fit");
  calibrate->add_option("--tol-x", calibrate_args.tol_x,
                        "step tolerance (default 1e-5)");
  calibrate->add_option("--tol-f", calibrate_args.tol_f,
                        "objective tolerance (default 1e-5)");
  calibrate->add_option("--max-iter", calibrate_args.max_iter,
                        "iteration cap (default 200)");
  calibrate->add_option("--out", calibrate_args.out,
                        "result file to write (default result.txt)");

  UndistortArgs undistort_args;
  auto* undistort = app.add_subcommand(
      "undistort", "Resample an image with the calibrated distortion removed");
  undistort->add_option("image", undistort_args.image, "input PGM")
      ->required();
  undistort->add_option("--result", undistort_args.result, "result file")
      ->required();
  undistort->add_option("--out", undistort_args.out,
                        "output PGM (default undistorted.pgm)");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand(
      "synth", "Render a synthetic scene with ground truth");
  synth->add_option("--config", synth_args.config, "scene config file")
      ->required();
  synth->add_option("--out-dir", synth_args.out_dir,
                    "output directory (default .)");

  PoseArgs pose_args;
  auto* pose = app.add_subcommand(
      "pose", "Yaw/translation correction from one known ground line");
  pose->add_option("--scene", pose_args.scene, "pose scene file")->required();
  pose->add_option("--result", pose_args.result, "result file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (extract->parsed()) return run_extract(extract_args);
    if (calibrate->parsed()) return run_calibrate(calibrate_args);
    if (undistort->parsed()) return run_undistort(undistort_args);
    if (synth->parsed()) return run_synth(synth_args);
    if (pose->parsed()) return run_pose(pose_args);
  } catch (const gridcal::CalibError& e) {
    std::cerr << app.get_name() << ": " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << app.get_name() << ": " << e.what() << "\n";
    return 2;
  }
  return 2;
}
