#include "gridcal/formats.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gridcal {

namespace {

constexpr double kRadToDeg = 180.0 / M_PI;
constexpr double kDegToRad = M_PI / 180.0;

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

// ZYZ serialization that tolerates the sin(b) = 0 poses a result file may
// legitimately contain.
EulerZYZ euler_zyz_any(const Rotation3& rot) {
  try {
    return euler_zyz_from_rotation(rot);
  } catch (const CalibError&) {
    const Mat3& r = rot.matrix();
    if (r(2, 2) > 0.0) {
      return {std::atan2(r(1, 0), r(0, 0)), 0.0, 0.0};
    }
    return {std::atan2(-r(1, 0), -r(0, 0)), M_PI, 0.0};
  }
}

// "view <i>: euler_zyz a b c; t tx ty tz" with angles in degrees.
std::string format_view_line(int index, const Extrinsics& ex) {
  const EulerZYZ e = euler_zyz_any(ex.rot);
  std::ostringstream out;
  out << "view " << index << ": euler_zyz " << fixed6(e.a * kRadToDeg) << " "
      << fixed6(e.b * kRadToDeg) << " " << fixed6(e.c * kRadToDeg) << "; t "
      << fixed6(ex.t.x()) << " " << fixed6(ex.t.y()) << " "
      << fixed6(ex.t.z());
  return out.str();
}

Extrinsics parse_view_line(const std::string& body) {
  // body is everything after the colon.
  std::istringstream in(body);
  std::string tag;
  EulerZYZ e;
  Extrinsics ex;
  in >> tag >> e.a >> e.b >> e.c;
  if (tag != "euler_zyz" || !in) {
    fail(ErrorKind::IoError, "bad view line: " + body);
  }
  in >> tag;
  if (tag != "t") {
    // allow "; t" parsed as ";" then "t"
    if (tag == ";") in >> tag;
    if (tag != "t") fail(ErrorKind::IoError, "bad view line: " + body);
  }
  double tx = 0, ty = 0, tz = 0;
  in >> tx >> ty >> tz;
  if (!in) fail(ErrorKind::IoError, "bad view line: " + body);
  e.a *= kDegToRad;
  e.b *= kDegToRad;
  e.c *= kDegToRad;
  ex.rot = rotation_from_euler_zyz(e);
  ex.t = Vec3(tx, ty, tz);
  return ex;
}

struct KeyValues {
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<std::pair<int, std::string>> views;

  bool has(const std::string& key) const {
    for (const auto& [k, v] : entries) {
      if (k == key) return true;
    }
    return false;
  }
  std::string get(const std::string& key) const {
    for (const auto& [k, v] : entries) {
      if (k == key) return v;
    }
    fail(ErrorKind::IoError, "missing key: " + key);
  }
  double get_num(const std::string& key) const {
    return std::stod(get(key));
  }
  double get_num_or(const std::string& key, double fallback) const {
    return has(key) ? get_num(key) : fallback;
  }
};

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  for (const std::string& raw : split_lines(text)) {
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("view ", 0) == 0) {
      const auto colon = line.find(':');
      if (colon == std::string::npos) {
        fail(ErrorKind::IoError, "bad view line: " + line);
      }
      const int index = std::stoi(trim(line.substr(5, colon - 5)));
      // Replace the "; t" separator with " t " for the stream parser.
      std::string body = line.substr(colon + 1);
      const auto semi = body.find(';');
      if (semi != std::string::npos) body[semi] = ' ';
      kv.views.emplace_back(index, trim(body));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::IoError, "expected key = value: " + line);
    }
    kv.entries.emplace_back(trim(line.substr(0, eq)),
                            trim(line.substr(eq + 1)));
  }
  return kv;
}

void append_parameter_block(std::ostringstream& out, const ParameterSet& ps,
                            const std::string& suffix) {
  out << "alpha" << suffix << " = " << fixed6(ps.intrinsics.alpha) << "\n";
  out << "gamma" << suffix << " = " << fixed6(ps.intrinsics.gamma) << "\n";
  out << "u0" << suffix << " = " << fixed6(ps.intrinsics.u0) << "\n";
  out << "beta" << suffix << " = " << fixed6(ps.intrinsics.beta) << "\n";
  out << "v0" << suffix << " = " << fixed6(ps.intrinsics.v0) << "\n";
  out << "k1" << suffix << " = " << fixed6(ps.distortion.k1) << "\n";
  out << "k2" << suffix << " = " << fixed6(ps.distortion.k2) << "\n";
  out << "objective" << suffix << " = " << fixed6(ps.objective) << "\n";
}

void read_parameter_block(const KeyValues& kv, ParameterSet* ps,
                          RadialModel model, const std::string& suffix) {
  ps->intrinsics.alpha = kv.get_num("alpha" + suffix);
  ps->intrinsics.gamma = kv.get_num("gamma" + suffix);
  ps->intrinsics.u0 = kv.get_num("u0" + suffix);
  ps->intrinsics.beta = kv.get_num("beta" + suffix);
  ps->intrinsics.v0 = kv.get_num("v0" + suffix);
  ps->distortion = DistortionCoeffs::make(model, kv.get_num("k1" + suffix),
                                          kv.get_num("k2" + suffix));
  ps->objective = kv.get_num("objective" + suffix);
}

}  // namespace

std::string write_corner_file(const CornerFile& f) {
  if (f.images.empty()) fail(ErrorKind::BadConfig, "no image blocks");
  const std::size_t n = f.images.front().points.size();
  std::ostringstream out;
  out << "images " << f.images.size() << " points " << n << "\n";
  for (std::size_t i = 0; i < f.images.size(); ++i) {
    if (f.images[i].points.size() != n) {
      fail(ErrorKind::BadConfig, "image blocks differ in point count");
    }
    out << "image " << i << " " << f.images[i].source << "\n";
    for (const Point2Px& p : f.images[i].points) {
      out << fixed6(p.u) << " " << fixed6(p.v) << "\n";
    }
  }
  return out.str();
}

CornerFile read_corner_file(const std::string& text) {
  std::istringstream in(text);
  std::string word;
  std::size_t n_images = 0, n_points = 0;
  in >> word;
  if (word != "images") fail(ErrorKind::IoError, "corner file: bad header");
  in >> n_images >> word >> n_points;
  if (!in || word != "points" || n_images == 0) {
    fail(ErrorKind::IoError, "corner file: bad header");
  }
  CornerFile f;
  for (std::size_t i = 0; i < n_images; ++i) {
    std::size_t index = 0;
    CornerBlock block;
    in >> word >> index >> block.source;
    if (!in || word != "image" || index != i) {
      fail(ErrorKind::IoError, "corner file: bad image header");
    }
    block.points.resize(n_points);
    for (auto& p : block.points) {
      in >> p.u >> p.v;
    }
    if (!in) fail(ErrorKind::IoError, "corner file: truncated points");
    f.images.push_back(std::move(block));
  }
  return f;
}

std::string write_result_file(const CalibrationResult& r) {
  std::ostringstream out;
  out << "model = " << int(r.after.distortion.model) << "\n";
  append_parameter_block(out, r.before, "_before");
  append_parameter_block(out, r.after, "");
  out << "views = " << r.after.views.size() << "\n";
  for (std::size_t i = 0; i < r.after.views.size(); ++i) {
    out << format_view_line(int(i), r.after.views[i]) << "\n";
  }
  return out.str();
}

CalibrationResult read_result_file(const std::string& text) {
  const KeyValues kv = parse_key_values(text);
  CalibrationResult r;
  const int model_num = int(kv.get_num("model"));
  if (model_num < 1 || model_num > 3) {
    fail(ErrorKind::IoError, "result file: bad model tag");
  }
  const RadialModel model = RadialModel(model_num);
  read_parameter_block(kv, &r.before, model, "_before");
  read_parameter_block(kv, &r.after, model, "");
  const std::size_t n_views = std::size_t(kv.get_num("views"));
  if (kv.views.size() != n_views) {
    fail(ErrorKind::IoError, "result file: view count mismatch");
  }
  r.after.views.resize(n_views);
  for (const auto& [index, body] : kv.views) {
    if (index < 0 || std::size_t(index) >= n_views) {
      fail(ErrorKind::IoError, "result file: view index out of range");
    }
    r.after.views[index] = parse_view_line(body);
  }
  return r;
}

std::string write_scene_config(const SceneConfig& c) {
  std::ostringstream out;
  out << "width = " << c.width << "\n";
  out << "height = " << c.height << "\n";
  out << "alpha = " << fixed6(c.intrinsics.alpha) << "\n";
  out << "gamma = " << fixed6(c.intrinsics.gamma) << "\n";
  out << "u0 = " << fixed6(c.intrinsics.u0) << "\n";
  out << "beta = " << fixed6(c.intrinsics.beta) << "\n";
  out << "v0 = " << fixed6(c.intrinsics.v0) << "\n";
  out << "model = " << int(c.distortion.model) << "\n";
  out << "k1 = " << fixed6(c.distortion.k1) << "\n";
  out << "k2 = " << fixed6(c.distortion.k2) << "\n";
  out << "boxes_x = " << c.target.boxes_x << "\n";
  out << "boxes_y = " << c.target.boxes_y << "\n";
  out << "side = " << fixed6(c.target.side) << "\n";
  out << "gap = " << fixed6(c.target.gap) << "\n";
  out << "noise_sigma = " << fixed6(c.noise_sigma) << "\n";
  out << "seed = " << c.seed << "\n";
  out << "foreground = " << c.foreground << "\n";
  out << "background = " << c.background << "\n";
  for (std::size_t i = 0; i < c.poses.size(); ++i) {
    out << format_view_line(int(i), c.poses[i]) << "\n";
  }
  return out.str();
}

SceneConfig read_scene_config(const std::string& text) {
  const KeyValues kv = parse_key_values(text);
  SceneConfig c;
  c.width = int(kv.get_num("width"));
  c.height = int(kv.get_num("height"));
  if (c.width <= 0 || c.height <= 0) {
    fail(ErrorKind::BadConfig, "scene: bad image size");
  }
  c.intrinsics.alpha = kv.get_num("alpha");
  c.intrinsics.gamma = kv.get_num("gamma");
  c.intrinsics.u0 = kv.get_num("u0");
  c.intrinsics.beta = kv.get_num("beta");
  c.intrinsics.v0 = kv.get_num("v0");
  const int model_num = int(kv.get_num_or("model", 1));
  if (model_num < 1 || model_num > 3) {
    fail(ErrorKind::BadConfig, "scene: bad model tag");
  }
  c.distortion = DistortionCoeffs::make(
      RadialModel(model_num), kv.get_num_or("k1", 0.0),
      kv.get_num_or("k2", 0.0));
  c.target.boxes_x = int(kv.get_num_or("boxes_x", 8));
  c.target.boxes_y = int(kv.get_num_or("boxes_y", 8));
  c.target.side = kv.get_num_or("side", 1.3);
  c.target.gap = kv.get_num_or("gap", 1.3);
  c.noise_sigma = kv.get_num_or("noise_sigma", 0.0);
  c.seed = std::uint64_t(kv.get_num_or("seed", 0));
  c.foreground = int(kv.get_num_or("foreground", 40));
  c.background = int(kv.get_num_or("background", 220));
  c.poses.resize(kv.views.size());
  for (const auto& [index, body] : kv.views) {
    if (index < 0 || std::size_t(index) >= kv.views.size()) {
      fail(ErrorKind::BadConfig, "scene: view index out of range");
    }
    c.poses[index] = parse_view_line(body);
  }
  return c;
}

std::string write_pose_scene(const PoseScene& s) {
  std::ostringstream out;
  const Extrinsics assumed = s.assumed.to_extrinsics();
  out << "pose: " << format_view_line(0, assumed).substr(8) << "\n";
  const auto vec_line = [&](const char* key, const Vec3& v) {
    out << key << " = " << fixed6(v.x()) << " " << fixed6(v.y()) << " "
        << fixed6(v.z()) << "\n";
  };
  vec_line("line_world_a", s.observation.world_a);
  vec_line("line_world_b", s.observation.world_b);
  out << "image_a = " << fixed6(s.observation.image_a.u) << " "
      << fixed6(s.observation.image_a.v) << "\n";
  out << "image_b = " << fixed6(s.observation.image_b.u) << " "
      << fixed6(s.observation.image_b.v) << "\n";
  return out.str();
}

PoseScene read_pose_scene(const std::string& text) {
  PoseScene s;
  bool have_pose = false;
  KeyValues kv;
  for (const std::string& raw : split_lines(text)) {
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("pose:", 0) == 0) {
      std::string body = line.substr(5);
      const auto semi = body.find(';');
      if (semi != std::string::npos) body[semi] = ' ';
      s.assumed = GroundPose::from_extrinsics(parse_view_line(trim(body)));
      have_pose = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::IoError, "pose scene: expected key = value: " + line);
    }
    kv.entries.emplace_back(trim(line.substr(0, eq)),
                            trim(line.substr(eq + 1)));
  }
  if (!have_pose) fail(ErrorKind::IoError, "pose scene: missing pose line");

  auto parse_vec = [&](const std::string& key) {
    std::istringstream in(kv.get(key));
    Vec3 v;
    in >> v.x() >> v.y() >> v.z();
    if (!in) fail(ErrorKind::IoError, "pose scene: bad vector for " + key);
    return v;
  };
  auto parse_px = [&](const std::string& key) {
    std::istringstream in(kv.get(key));
    Point2Px p;
    in >> p.u >> p.v;
    if (!in) fail(ErrorKind::IoError, "pose scene: bad point for " + key);
    return p;
  };
  s.observation.world_a = parse_vec("line_world_a");
  s.observation.world_b = parse_vec("line_world_b");
  s.observation.image_a = parse_px("image_a");
  s.observation.image_b = parse_px("image_b");
  return s;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::vector<std::uint8_t> read_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path);
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
}

namespace {

void write_atomic_impl(const std::string& path, const char* data,
                       std::size_t size) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::IoError, "cannot open " + tmp);
    out.write(data, std::streamsize(size));
    if (!out) fail(ErrorKind::IoError, "short write to " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    fail(ErrorKind::IoError, "cannot rename " + tmp + " to " + path);
  }
}

}  // namespace

void write_file_atomic(const std::string& path, const std::string& data) {
  write_atomic_impl(path, data.data(), data.size());
}

void write_file_atomic(const std::string& path,
                       const std::vector<std::uint8_t>& data) {
  write_atomic_impl(path, reinterpret_cast<const char*>(data.data()),
                    data.size());
}

}  // namespace gridcal
