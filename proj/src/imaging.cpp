#include "gridcal/imaging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>

#include "gridcal/homography.hpp"

namespace gridcal {

namespace {

// Whitespace/comment-aware token scanner for the PGM header.
struct PgmScanner {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;

  void skip_space_and_comments() {
    while (pos < bytes.size()) {
      const char ch = char(bytes[pos]);
      if (std::isspace(static_cast<unsigned char>(ch))) {
        ++pos;
      } else if (ch == '#') {
        while (pos < bytes.size() && char(bytes[pos]) != '\n') ++pos;
      } else {
        break;
      }
    }
  }

  int next_int() {
    skip_space_and_comments();
    if (pos >= bytes.size() ||
        !std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      fail(ErrorKind::MalformedPgm, "expected an integer header token");
    }
    long value = 0;
    while (pos < bytes.size() &&
           std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      value = value * 10 + (bytes[pos] - '0');
      if (value > 1'000'000'000L) {
        fail(ErrorKind::MalformedPgm, "header value out of range");
      }
      ++pos;
    }
    return int(value);
  }
};

}  // namespace

GrayImage load_pgm(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 2) fail(ErrorKind::MalformedPgm, "file too short");
  const char m0 = char(bytes[0]), m1 = char(bytes[1]);
  if (m0 != 'P' || (m1 != '2' && m1 != '5')) {
    fail(ErrorKind::MalformedPgm, "magic is not P2 or P5");
  }
  const bool binary = m1 == '5';

  PgmScanner scan{bytes, 2};
  const int width = scan.next_int();
  const int height = scan.next_int();
  const int maxval = scan.next_int();
  if (width <= 0 || height <= 0) {
    fail(ErrorKind::MalformedPgm, "non-positive dimensions");
  }
  if (maxval <= 0 || maxval > 255) {
    fail(ErrorKind::MalformedPgm, "maxval must be in [1, 255]");
  }

  GrayImage img;
  img.width = width;
  img.height = height;
  img.data.resize(std::size_t(width) * height);

  if (binary) {
    // Exactly one whitespace byte separates the header from the samples.
    if (scan.pos >= bytes.size() ||
        !std::isspace(static_cast<unsigned char>(bytes[scan.pos]))) {
      fail(ErrorKind::MalformedPgm, "missing separator before samples");
    }
    ++scan.pos;
    if (bytes.size() - scan.pos < img.data.size()) {
      fail(ErrorKind::MalformedPgm, "truncated sample data");
    }
    std::copy_n(bytes.begin() + scan.pos, img.data.size(), img.data.begin());
  } else {
    for (auto& px : img.data) {
      const int v = scan.next_int();
      if (v > maxval) fail(ErrorKind::MalformedPgm, "sample exceeds maxval");
      px = std::uint8_t(v);
    }
  }
  return img;
}

GrayImage load_pgm_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return load_pgm(bytes);
}

std::vector<std::uint8_t> write_pgm(const GrayImage& img) {
  const std::string header = "P5\n" + std::to_string(img.width) + " " +
                             std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.data.begin(), img.data.end());
  return out;
}

BinaryImage binarize(const GrayImage& img, int threshold) {
  BinaryImage out;
  out.width = img.width;
  out.height = img.height;
  out.data.resize(img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out.data[i] = img.data[i] < threshold ? 1 : 0;
  }
  return out;
}

namespace {

int find_root(std::vector<int>& parent, int x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

void unite(std::vector<int>& parent, int a, int b) {
  a = find_root(parent, a);
  b = find_root(parent, b);
  if (a != b) parent[std::max(a, b)] = std::min(a, b);
}

}  // namespace

RegionMap label_components(const BinaryImage& img) {
  RegionMap map;
  map.width = img.width;
  map.height = img.height;
  map.labels.assign(img.data.size(), 0);

  std::vector<int> provisional(img.data.size(), 0);
  std::vector<int> parent(1, 0);  // parent[0] unused (background)

  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      if (!img.at(r, c)) continue;
      // Previously scanned 8-neighbors.
      int neighbors[4] = {0, 0, 0, 0};
      int n = 0;
      if (c > 0 && img.at(r, c - 1)) neighbors[n++] = provisional[r * img.width + c - 1];
      if (r > 0) {
        if (c > 0 && img.at(r - 1, c - 1)) neighbors[n++] = provisional[(r - 1) * img.width + c - 1];
        if (img.at(r - 1, c)) neighbors[n++] = provisional[(r - 1) * img.width + c];
        if (c + 1 < img.width && img.at(r - 1, c + 1)) neighbors[n++] = provisional[(r - 1) * img.width + c + 1];
      }
      int label;
      if (n == 0) {
        label = int(parent.size());
        parent.push_back(label);
      } else {
        label = *std::min_element(neighbors, neighbors + n);
        for (int i = 0; i < n; ++i) unite(parent, label, neighbors[i]);
      }
      provisional[r * img.width + c] = label;
    }
  }

  // Final labels in raster order of first encounter.
  std::vector<int> remap(parent.size(), 0);
  int next = 0;
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    if (provisional[i] == 0) continue;
    const int root = find_root(parent, provisional[i]);
    if (remap[root] == 0) remap[root] = ++next;
    map.labels[i] = remap[root];
  }
  map.region_count = next;
  return map;
}

BinaryImage interior_8_boundary(const BinaryImage& img) {
  BinaryImage out;
  out.width = img.width;
  out.height = img.height;
  out.data.assign(img.data.size(), 0);
  auto bg = [&](int r, int c) { return !img.in_bounds(r, c) || !img.at(r, c); };
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      if (!img.at(r, c)) continue;
      if (bg(r - 1, c) || bg(r + 1, c) || bg(r, c - 1) || bg(r, c + 1)) {
        out.set(r, c, true);
      }
    }
  }
  return out;
}

namespace {

// Moore scan order, clockwise in image coordinates starting at west.
constexpr int kMooreDr[8] = {0, -1, -1, -1, 0, 1, 1, 1};
constexpr int kMooreDc[8] = {-1, -1, 0, 1, 1, 1, 0, -1};

int direction_index(const PixelCoord& from, const PixelCoord& to) {
  for (int i = 0; i < 8; ++i) {
    if (from.row + kMooreDr[i] == to.row && from.col + kMooreDc[i] == to.col) {
      return i;
    }
  }
  return -1;
}

}  // namespace

EdgeTrace trace_boundary(const RegionMap& regions, int label) {
  if (label < 1 || label > regions.region_count) {
    fail(ErrorKind::BadConfig, "region label out of range");
  }
  auto fg = [&](int r, int c) {
    return r >= 0 && r < regions.height && c >= 0 && c < regions.width &&
           regions.at(r, c) == label;
  };

  std::optional<PixelCoord> start;
  for (int r = 0; r < regions.height && !start; ++r) {
    for (int c = 0; c < regions.width; ++c) {
      if (regions.at(r, c) == label) {
        start = PixelCoord{r, c};
        break;
      }
    }
  }

  // Count of interior 8-boundary pixels this walk must cover.
  std::size_t boundary_size = 0;
  for (int r = 0; r < regions.height; ++r) {
    for (int c = 0; c < regions.width; ++c) {
      if (!fg(r, c)) continue;
      if (!fg(r - 1, c) || !fg(r + 1, c) || !fg(r, c - 1) || !fg(r, c + 1)) {
        ++boundary_size;
      }
    }
  }
  auto on_boundary = [&](const PixelCoord& p) {
    return !fg(p.row - 1, p.col) || !fg(p.row + 1, p.col) ||
           !fg(p.row, p.col - 1) || !fg(p.row, p.col + 1);
  };

  EdgeTrace trace;
  std::vector<int> visits(regions.labels.size(), 0);
  auto record = [&](const PixelCoord& p) {
    if (on_boundary(p)) {
      trace.points.push_back(p);
      ++visits[p.row * regions.width + p.col];
    }
  };

  PixelCoord current = *start;
  record(current);

  // Clockwise scan of the Moore neighborhood, starting just after the
  // background backtrack pixel; returns the direction of the first
  // foreground neighbor and the last background pixel examined before it.
  struct Step {
    int dir = -1;
    PixelCoord last_bg;
  };
  auto next_step = [&](const PixelCoord& from, int bg_dir) {
    Step s;
    s.last_bg = {from.row + kMooreDr[bg_dir], from.col + kMooreDc[bg_dir]};
    for (int i = 1; i <= 8; ++i) {
      const int dir = (bg_dir + i) % 8;
      const PixelCoord p{from.row + kMooreDr[dir], from.col + kMooreDc[dir]};
      if (fg(p.row, p.col)) {
        s.dir = dir;
        return s;
      }
      s.last_bg = p;
    }
    return s;
  };

  // West of the topmost-leftmost pixel is guaranteed background.
  const Step first = next_step(current, 0);
  if (first.dir >= 0) {
    const PixelCoord first_target{current.row + kMooreDr[first.dir],
                                  current.col + kMooreDc[first.dir]};
    Step step = first;
    while (true) {
      const PixelCoord next{current.row + kMooreDr[step.dir],
                            current.col + kMooreDc[step.dir]};
      const int bg_dir = direction_index(next, step.last_bg);
      if (bg_dir < 0) {
        fail(ErrorKind::NotSimpleBoundary, "backtrack left the neighborhood");
      }
      if (next == *start) {
        // Closed once the continuation repeats the very first move.
        const Step cont = next_step(next, bg_dir);
        if (cont.dir >= 0) {
          const PixelCoord target{next.row + kMooreDr[cont.dir],
                                  next.col + kMooreDc[cont.dir]};
          if (target == first_target) break;
        }
      }
      current = next;
      record(current);
      step = next_step(current, bg_dir);
      if (step.dir < 0) {
        fail(ErrorKind::NotSimpleBoundary, "walk reached an isolated pixel");
      }
      if (trace.points.size() > 4 * boundary_size + 16) {
        fail(ErrorKind::NotSimpleBoundary, "contour walk did not close");
      }
    }
  }

  if (trace.points.size() != boundary_size) {
    fail(ErrorKind::NotSimpleBoundary,
         "contour covers " + std::to_string(trace.points.size()) + " of " +
             std::to_string(boundary_size) + " boundary pixels");
  }
  for (const auto& p : trace.points) {
    if (visits[p.row * regions.width + p.col] != 1) {
      fail(ErrorKind::NotSimpleBoundary, "boundary pixel visited twice");
    }
  }
  return trace;
}

namespace {

double point_line_distance(const PixelCoord& p, const PixelCoord& a,
                           const PixelCoord& b) {
  const double dx = b.col - a.col, dy = b.row - a.row;
  const double len = std::hypot(dx, dy);
  return std::abs(dx * (p.row - a.row) - dy * (p.col - a.col)) / len;
}

void split_recursive(const std::vector<PixelCoord>& seq, int lo, int hi,
                     double threshold, std::vector<int>& out) {
  if (hi - lo < 2) return;
  double best = -1.0;
  int best_idx = -1;
  for (int j = lo + 1; j < hi; ++j) {
    const double dist = point_line_distance(seq[j], seq[lo], seq[hi]);
    if (dist > best) {
      best = dist;
      best_idx = j;
    }
  }
  if (best > threshold) {
    out.push_back(best_idx);
    split_recursive(seq, lo, best_idx, threshold, out);
    split_recursive(seq, best_idx, hi, threshold, out);
  }
}

}  // namespace

std::vector<int> scan_line_partition(const EdgeTrace& trace,
                                     double threshold) {
  const int n = int(trace.points.size());
  if (n < 3) fail(ErrorKind::TooFewPoints, "need at least 3 contour points");
  if (threshold <= 0) fail(ErrorKind::BadConfig, "threshold must be positive");
  const auto& pts = trace.points;

  // Seed with the adjacent pair whose connecting line is farthest from the
  // rest of the contour; that pair straddles a corner. Exhaustive O(n^2).
  int seed = 0;
  double seed_score = -1.0;
  for (int i = 0; i < n; ++i) {
    const PixelCoord& a = pts[i];
    const PixelCoord& b = pts[(i + 1) % n];
    double far = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i || j == (i + 1) % n) continue;
      far = std::max(far, point_line_distance(pts[j], a, b));
    }
    if (far > seed_score) {
      seed_score = far;
      seed = i;
    }
  }

  // Unroll the closed contour into an open chain from seed+1 around to seed.
  std::vector<PixelCoord> seq(n);
  for (int k = 0; k < n; ++k) seq[k] = pts[(seed + 1 + k) % n];

  std::vector<int> splits;
  split_recursive(seq, 0, n - 1, threshold, splits);

  std::vector<int> result{(seed + 1) % n};
  for (int k : splits) result.push_back((seed + 1 + k) % n);
  std::sort(result.begin(), result.end());
  result.erase(std::unique(result.begin(), result.end()), result.end());

  // The seed pair can land mid-side on a staircase step, and a degenerate
  // seed chord can make the recursion split at a step shoulder. Neither
  // is a vertex: merge away any partition that stays within the threshold
  // of its neighbours' chord, weakest first. Sides must therefore deviate
  // from their corner chords by more than the threshold, which bounds the
  // smallest usable box at roughly 3 thresholds across.
  while (result.size() >= 2) {
    double weakest = std::numeric_limits<double>::infinity();
    std::size_t weakest_at = 0;
    for (std::size_t k = 0; k < result.size(); ++k) {
      const PixelCoord& prev =
          pts[result[(k + result.size() - 1) % result.size()]];
      const PixelCoord& next = pts[result[(k + 1) % result.size()]];
      const PixelCoord& here = pts[result[k]];
      const double dist = (prev == next)
                              ? std::hypot(here.col - prev.col,
                                           here.row - prev.row)
                              : point_line_distance(here, prev, next);
      if (dist < weakest) {
        weakest = dist;
        weakest_at = k;
      }
    }
    if (weakest > threshold) break;
    result.erase(result.begin() + weakest_at);
  }
  return result;
}

Line fit_line(const std::vector<Point2Px>& points) {
  if (points.size() < 2) {
    fail(ErrorKind::DegeneratePoints, "need at least 2 points");
  }
  double mu = 0.0, mv = 0.0;
  for (const auto& p : points) {
    mu += p.u;
    mv += p.v;
  }
  mu /= double(points.size());
  mv /= double(points.size());

  double suu = 0.0, svv = 0.0, suv = 0.0;
  for (const auto& p : points) {
    const double du = p.u - mu, dv = p.v - mv;
    suu += du * du;
    svv += dv * dv;
    suv += du * dv;
  }
  if (suu + svv < 1e-12) {
    fail(ErrorKind::DegeneratePoints, "points coincide");
  }

  // Principal direction of the scatter; the normal is perpendicular.
  const double phi = 0.5 * std::atan2(2.0 * suv, suu - svv);
  Line l;
  l.a = -std::sin(phi);
  l.b = std::cos(phi);
  l.c = -(l.a * mu + l.b * mv);
  return l;
}

Point2Px line_intersection(const Line& l1, const Line& l2) {
  const double det = l1.a * l2.b - l2.a * l1.b;
  if (std::abs(det) < 1e-9) {
    fail(ErrorKind::ParallelLines, "lines are (near) parallel");
  }
  const double x = (l1.b * l2.c - l2.b * l1.c) / det;
  const double y = (l2.a * l1.c - l1.a * l2.c) / det;
  return {x, y};
}

namespace {

struct DetectedBox {
  QuadCorners corners;
  double cu = 0.0;
  double cv = 0.0;
};

// Median of a small vector (by copy).
double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

// Expected inward displacement of boundary-pixel centers given the
// binarization threshold and the image's foreground/background levels.
// The antialiased edge makes a pixel foreground once its dark coverage
// exceeds tau = (bg - thr) / (bg - fg); boundary centers then sit tau px
// inside the true edge on average, so the fitted side lines are shifted
// outward by that amount before intersecting.
double edge_offset(const GrayImage& img, const BinaryImage& bin,
                   int threshold) {
  const BinaryImage boundary = interior_8_boundary(bin);
  std::vector<double> fg_levels, bg_levels;
  auto any_fg_near = [&](int r, int c) {
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (bin.in_bounds(r + dr, c + dc) && bin.at(r + dr, c + dc)) {
          return true;
        }
      }
    }
    return false;
  };
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      if (bin.at(r, c)) {
        if (!boundary.at(r, c)) fg_levels.push_back(img.at(r, c));
      } else if (!any_fg_near(r, c)) {
        bg_levels.push_back(img.at(r, c));
      }
    }
  }
  if (fg_levels.empty() || bg_levels.empty()) return 0.0;
  const double fg = median_of(std::move(fg_levels));
  const double bg = median_of(std::move(bg_levels));
  if (bg - fg < 1.0) return 0.0;
  return std::clamp((bg - threshold) / (bg - fg), 0.0, 1.0);
}

// Starts the quad at `canon` and walks it in the positive-cross sense
// when ccw is true, the negative sense otherwise.
QuadCorners cycle_quad(const QuadCorners& q, int canon, bool ccw) {
  QuadCorners sorted;
  double area2 = 0.0;
  for (int i = 0; i < 4; ++i) {
    const auto& a = q.c[i];
    const auto& b = q.c[(i + 1) % 4];
    area2 += a.u * b.v - b.u * a.v;
  }
  const bool stored_ccw = area2 > 0.0;
  for (int i = 0; i < 4; ++i) {
    const int step = stored_ccw == ccw ? i : 4 - i;
    sorted.c[i] = q.c[(canon + step) % 4];
  }
  return sorted;
}

// Monotone-chain convex hull, counterclockwise in (u, v).
std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) -
           (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k > 1 ? k - 1 : k);
  return hull;
}

// The four hull vertices spanning the largest quadrilateral; these are
// the centroids of the grid's corner boxes.
std::array<Vec2, 4> extreme_quad(const std::vector<Vec2>& hull) {
  const std::size_t h = hull.size();
  auto tri = [&](std::size_t a, std::size_t b, std::size_t c) {
    return std::abs((hull[b] - hull[a]).x() * (hull[c] - hull[a]).y() -
                    (hull[b] - hull[a]).y() * (hull[c] - hull[a]).x());
  };
  double best = -1.0;
  std::array<std::size_t, 4> pick{0, 1, 2, 3};
  for (std::size_t a = 0; a < h; ++a) {
    for (std::size_t b = a + 1; b < h; ++b) {
      for (std::size_t c = b + 1; c < h; ++c) {
        for (std::size_t d = c + 1; d < h; ++d) {
          const double area = tri(a, b, c) + tri(a, c, d);
          if (area > best) {
            best = area;
            pick = {a, b, c, d};
          }
        }
      }
    }
  }
  return {hull[pick[0]], hull[pick[1]], hull[pick[2]], hull[pick[3]]};
}

}  // namespace

namespace {

// Row-major grid order and world-consistent corner order via the
// homography spanned by the four extreme boxes.
std::vector<QuadCorners> order_boxes(std::vector<DetectedBox> boxes,
                                     const ExtractConfig& cfg) {
  const std::size_t expected = std::size_t(cfg.boxes_x) * cfg.boxes_y;

  if (expected == 1) {
    // No grid to anchor to; start nearest the image top-left, positive
    // cross sense.
    int canon = 0;
    for (int i = 1; i < 4; ++i) {
      if (boxes[0].corners.c[i].u + boxes[0].corners.c[i].v <
          boxes[0].corners.c[canon].u + boxes[0].corners.c[canon].v) {
        canon = i;
      }
    }
    return {cycle_quad(boxes[0].corners, canon, true)};
  }
  if (cfg.boxes_x < 2 || cfg.boxes_y < 2) {
    fail(ErrorKind::BadConfig,
         "grid ordering needs at least 2 boxes per axis");
  }

  std::vector<Vec2> centroids;
  for (const auto& b : boxes) centroids.emplace_back(b.cu, b.cv);
  const std::vector<Vec2> hull = convex_hull(centroids);
  if (hull.size() < 4) {
    fail(ErrorKind::WrongBoxCount, "box centroids are degenerate",
         long(boxes.size()));
  }
  std::array<Vec2, 4> quad = extreme_quad(hull);

  // Anchor the grid origin at the extreme box nearest the image
  // top-left, matching the model plane's row-major traversal.
  int canon = 0;
  for (int i = 1; i < 4; ++i) {
    if (quad[i].x() + quad[i].y() < quad[canon].x() + quad[canon].y()) {
      canon = i;
    }
  }
  std::rotate(quad.begin(), quad.begin() + canon, quad.end());

  // Grid rows run along the more horizontal of the two quad edges
  // leaving the anchor; a square grid fits both assignments, so the
  // convention decides, not the fit.
  const Vec2 edge_next = quad[1] - quad[0];
  const Vec2 edge_prev = quad[3] - quad[0];
  const bool next_is_row = std::abs(edge_next.x()) * edge_prev.norm() >=
                           std::abs(edge_prev.x()) * edge_next.norm();

  PlanarCorrespondences anchor;
  anchor.world = {Vec2(0, 0), Vec2(cfg.boxes_x - 1, 0),
                  Vec2(cfg.boxes_x - 1, cfg.boxes_y - 1),
                  Vec2(0, cfg.boxes_y - 1)};
  for (int i = 0; i < 4; ++i) {
    const int idx = next_is_row ? i : (4 - i) % 4;
    anchor.image.push_back({quad[idx].x(), quad[idx].y()});
  }
  const Homography grid = estimate_homography(anchor);

  auto jacobian = [&](double x, double y, Vec2* dx, Vec2* dy) {
    const double eps = 1e-4;
    const Point2Px p0 = grid.apply(x, y);
    const Point2Px px = grid.apply(x + eps, y);
    const Point2Px py = grid.apply(x, y + eps);
    *dx = Vec2(px.u - p0.u, px.v - p0.v) / eps;
    *dy = Vec2(py.u - p0.u, py.v - p0.v) / eps;
  };

  std::vector<QuadCorners> out;
  std::vector<bool> used(boxes.size(), false);
  for (int i = 0; i < cfg.boxes_y; ++i) {
    for (int j = 0; j < cfg.boxes_x; ++j) {
      const Point2Px p = grid.apply(j, i);
      Vec2 dx, dy;
      jacobian(j, i, &dx, &dy);
      const double pitch = std::min(dx.norm(), dy.norm());

      std::size_t nearest = boxes.size();
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t b = 0; b < boxes.size(); ++b) {
        if (used[b]) continue;
        const double dist =
            std::hypot(p.u - boxes[b].cu, p.v - boxes[b].cv);
        if (dist < best) {
          best = dist;
          nearest = b;
        }
      }
      if (nearest == boxes.size() || best > 0.5 * pitch) {
        fail(ErrorKind::WrongBoxCount,
             "detected boxes do not form the expected grid",
             long(boxes.size()));
      }
      used[nearest] = true;

      // The box corner at the smaller world coordinates comes first and
      // traversal follows the world sense of the grid map.
      const DetectedBox& box = boxes[nearest];
      const Vec2 toward_origin = -(dx.normalized() + dy.normalized());
      int first = 0;
      double first_score = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < 4; ++k) {
        const Vec2 offset(box.corners.c[k].u - box.cu,
                          box.corners.c[k].v - box.cv);
        const double s = offset.dot(toward_origin);
        if (s > first_score) {
          first_score = s;
          first = k;
        }
      }
      const bool ccw = dx.x() * dy.y() - dx.y() * dy.x() > 0.0;
      out.push_back(cycle_quad(box.corners, first, ccw));
    }
  }
  return out;
}

}  // namespace

std::vector<QuadCorners> extract_corners(const GrayImage& img,
                                         const ExtractConfig& cfg) {
  if (cfg.boxes_x <= 0 || cfg.boxes_y <= 0) {
    fail(ErrorKind::BadConfig, "grid dimensions must be positive");
  }
  const BinaryImage bin = binarize(img, cfg.threshold);
  const RegionMap regions = label_components(bin);

  std::vector<long> area(regions.region_count + 1, 0);
  std::vector<double> sum_u(regions.region_count + 1, 0.0);
  std::vector<double> sum_v(regions.region_count + 1, 0.0);
  for (int r = 0; r < regions.height; ++r) {
    for (int c = 0; c < regions.width; ++c) {
      const int l = regions.at(r, c);
      if (l == 0) continue;
      ++area[l];
      sum_u[l] += c;
      sum_v[l] += r;
    }
  }

  const double offset =
      cfg.edge_offset_compensation ? edge_offset(img, bin, cfg.threshold) : 0.0;

  std::vector<DetectedBox> boxes;
  for (int label = 1; label <= regions.region_count; ++label) {
    if (area[label] < cfg.area_min || area[label] > cfg.area_max) continue;

    EdgeTrace trace;
    std::vector<int> parts;
    try {
      trace = trace_boundary(regions, label);
      parts = scan_line_partition(trace, cfg.scan_threshold);
    } catch (const CalibError&) {
      continue;  // not a box
    }
    if (parts.size() != 4) continue;

    const double centroid_u = sum_u[label] / double(area[label]);
    const double centroid_v = sum_v[label] / double(area[label]);

    Line lines[4];
    bool ok = true;
    const int n = int(trace.points.size());
    for (int k = 0; k < 4 && ok; ++k) {
      const int lo = parts[k];
      const int hi = parts[(k + 1) % 4];
      std::vector<Point2Px> side;
      for (int i = (lo + 1) % n; i != hi; i = (i + 1) % n) {
        side.push_back({double(trace.points[i].col),
                        double(trace.points[i].row)});
      }
      if (side.size() < 2) {
        ok = false;
        break;
      }
      try {
        Line l = fit_line(side);
        // Orient the normal away from the region, then push the line out
        // to the sub-pixel edge position.
        if (l.a * centroid_u + l.b * centroid_v + l.c > 0.0) {
          l.a = -l.a;
          l.b = -l.b;
          l.c = -l.c;
        }
        l.c -= offset;
        lines[k] = l;
      } catch (const CalibError&) {
        ok = false;
      }
    }
    if (!ok) continue;

    QuadCorners q;
    try {
      for (int k = 0; k < 4; ++k) {
        q.c[k] = line_intersection(lines[(k + 3) % 4], lines[k]);
      }
    } catch (const CalibError&) {
      continue;
    }

    // Convexity gate: uniform turn direction.
    double sign = 0.0;
    bool convex = true;
    for (int k = 0; k < 4; ++k) {
      const auto& a = q.c[k];
      const auto& b = q.c[(k + 1) % 4];
      const auto& c = q.c[(k + 2) % 4];
      const double cross =
          (b.u - a.u) * (c.v - b.v) - (b.v - a.v) * (c.u - b.u);
      if (k == 0) {
        sign = cross;
      } else if (cross * sign <= 0.0) {
        convex = false;
        break;
      }
    }
    if (!convex) continue;

    DetectedBox box;
    box.corners = q;
    for (int k = 0; k < 4; ++k) {
      box.cu += q.c[k].u / 4.0;
      box.cv += q.c[k].v / 4.0;
    }
    boxes.push_back(box);
  }

  const long expected = long(cfg.boxes_x) * cfg.boxes_y;
  if (long(boxes.size()) != expected) {
    fail(ErrorKind::WrongBoxCount,
         "found " + std::to_string(boxes.size()) + " boxes, expected " +
             std::to_string(expected),
         long(boxes.size()));
  }
  return order_boxes(std::move(boxes), cfg);
}

namespace {

// Quadrant kernel from the checkerboard detector; center row and column
// are zero so pure edges cancel.
constexpr int kCheckerKernel[7][7] = {
    {-1, -1, -1, 0, 1, 1, 1},
    {-1, -1, -1, 0, 1, 1, 1},
    {-1, -1, -1, 0, 1, 1, 1},
    {0, 0, 0, 0, 0, 0, 0},
    {1, 1, 1, 0, -1, -1, -1},
    {1, 1, 1, 0, -1, -1, -1},
    {1, 1, 1, 0, -1, -1, -1},
};

}  // namespace

std::vector<Point2Px> checkerboard_corners(const GrayImage& img, int expected,
                                           int threshold) {
  if (expected <= 0) fail(ErrorKind::BadConfig, "expected must be positive");
  const BinaryImage bin = binarize(img, threshold);

  // Convolve the +-1 mask where the whole window fits; the border ring
  // stays zero so partial windows never produce phantom responses.
  std::vector<int> response(std::size_t(img.width) * img.height, 0);
  for (int r = 3; r < img.height - 3; ++r) {
    for (int c = 3; c < img.width - 3; ++c) {
      int acc = 0;
      for (int dr = -3; dr <= 3; ++dr) {
        for (int dc = -3; dc <= 3; ++dc) {
          const int k = kCheckerKernel[dr + 3][dc + 3];
          if (k == 0) continue;
          acc += k * (bin.at(r + dr, c + dc) ? 1 : -1);
        }
      }
      response[r * img.width + c] = acc;
    }
  }

  BinaryImage nonzero;
  nonzero.width = img.width;
  nonzero.height = img.height;
  nonzero.data.resize(response.size());
  for (std::size_t i = 0; i < response.size(); ++i) {
    nonzero.data[i] = response[i] != 0 ? 1 : 0;
  }
  const RegionMap regions = label_components(nonzero);
  if (regions.region_count < expected) {
    fail(ErrorKind::TooFewResponses,
         "found " + std::to_string(regions.region_count) +
             " response regions, need " + std::to_string(expected),
         regions.region_count);
  }

  struct Candidate {
    int peak = 0;
    long peak_index = 0;
    double wsum = 0.0;
    double wu = 0.0;
    double wv = 0.0;
  };
  std::vector<Candidate> cands(regions.region_count + 1);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      const int label = regions.at(r, c);
      if (label == 0) continue;
      const int mag = std::abs(response[r * img.width + c]);
      auto& cand = cands[label];
      if (mag > cand.peak) {
        cand.peak = mag;
        cand.peak_index = long(r) * img.width + c;
      }
      cand.wsum += mag;
      cand.wu += mag * double(c);
      cand.wv += mag * double(r);
    }
  }

  std::vector<int> order;
  for (int l = 1; l <= regions.region_count; ++l) order.push_back(l);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (cands[a].peak != cands[b].peak) return cands[a].peak > cands[b].peak;
    return cands[a].peak_index < cands[b].peak_index;
  });

  std::vector<Point2Px> out;
  for (int i = 0; i < expected; ++i) {
    const auto& cand = cands[order[i]];
    out.push_back({cand.wu / cand.wsum, cand.wv / cand.wsum});
  }
  return out;
}

}  // namespace gridcal
