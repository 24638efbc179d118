#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gridcal/geometry.hpp"

namespace gridcal {

/// Row-major 8-bit intensity raster. Pixel (row r, col c) sits at image
/// coordinates (u, v) = (c, r); pixel centers are at integers.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  std::uint8_t at(int r, int c) const { return data[r * width + c]; }
  std::uint8_t& at(int r, int c) { return data[r * width + c]; }
};

struct BinaryImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // 0 or 1

  bool at(int r, int c) const { return data[r * width + c] != 0; }
  void set(int r, int c, bool v) { data[r * width + c] = v ? 1 : 0; }
  bool in_bounds(int r, int c) const {
    return r >= 0 && r < height && c >= 0 && c < width;
  }
};

/// Connected-component labels, 0 = background, regions 1..region_count in
/// raster order of first encounter.
struct RegionMap {
  int width = 0;
  int height = 0;
  std::vector<int> labels;
  int region_count = 0;

  int at(int r, int c) const { return labels[r * width + c]; }
};

struct PixelCoord {
  int row = 0;
  int col = 0;
  bool operator==(const PixelCoord&) const = default;
};

/// Interior 8-boundary pixels of one region, in contour-following order
/// (closed loop for a filled region).
struct EdgeTrace {
  std::vector<PixelCoord> points;
};

/// Homogeneous line a*u + b*v + c = 0 with (a, b) unit length.
struct Line {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

/// Four sub-pixel corners of one detected box, ordered like the model
/// plane traversal: the box's grid-origin corner first, then around the
/// box following the world x-then-y sense.
struct QuadCorners {
  Point2Px c[4];
};

struct ExtractConfig {
  int threshold = 150;        // binarization cut, foreground is < threshold
  int boxes_x = 8;            // grid shape of the target
  int boxes_y = 8;
  double scan_threshold = 5.0;  // px, scan-line split criterion
  int area_min = 21;            // inclusive region-size gate
  int area_max = 2999;
  bool edge_offset_compensation = true;
};

/// Parses P2 (ASCII) or P5 (binary) PGM with maxval <= 255.
GrayImage load_pgm(const std::vector<std::uint8_t>& bytes);
GrayImage load_pgm_file(const std::string& path);
std::vector<std::uint8_t> write_pgm(const GrayImage& img);  // P5

/// Foreground = intensity strictly below the threshold (dark boxes on a
/// light background).
BinaryImage binarize(const GrayImage& img, int threshold);

/// 8-connectivity labeling.
RegionMap label_components(const BinaryImage& img);

/// Foreground pixels with at least one background 4-neighbor; the image
/// border counts as background.
BinaryImage interior_8_boundary(const BinaryImage& img);

/// Orders the interior 8-boundary of one region by Moore contour
/// following, starting at its topmost-then-leftmost pixel.
EdgeTrace trace_boundary(const RegionMap& regions, int label);

/// Recursive scan-line splitting of a closed contour. Returns sorted,
/// distinct indices into the trace, one per polygon vertex.
std::vector<int> scan_line_partition(const EdgeTrace& trace,
                                     double threshold);

/// Total-least-squares line through the points (perpendicular residuals).
Line fit_line(const std::vector<Point2Px>& points);

Point2Px line_intersection(const Line& l1, const Line& l2);

/// Table-driven box pipeline: binarize, label, gate by area, trace,
/// partition, fit and intersect. Succeeds only when exactly
/// boxes_x * boxes_y boxes survive; boxes come back row-major over the
/// grid with corners ordered per QuadCorners, both derived from a
/// homography fitted to the four extreme boxes so tilted views order the
/// same way as the model plane.
std::vector<QuadCorners> extract_corners(const GrayImage& img,
                                         const ExtractConfig& cfg);

/// Checkerboard junction detector: 7x7 quadrant kernel over the
/// thresholded +-1 mask, strongest `expected` response regions, each
/// refined to the response-weighted centroid. Experimental; not part of
/// the box pipeline.
std::vector<Point2Px> checkerboard_corners(const GrayImage& img,
                                           int expected,
                                           int threshold = 150);

}  // namespace gridcal
