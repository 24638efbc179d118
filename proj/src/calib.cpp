#include "gridcal/calib.hpp"

#include <cmath>

namespace gridcal {

Mat3 ConicB::matrix() const {
  Mat3 m;
  m << b(0), b(1), b(3),
       b(1), b(2), b(4),
       b(3), b(4), b(5);
  return m;
}

ConicB ConicB::from_matrix(const Mat3& m) {
  ConicB cb;
  cb.b << m(0, 0), m(0, 1), m(1, 1), m(0, 2), m(1, 2), m(2, 2);
  const double norm = cb.b.norm();
  if (norm < 1e-300) fail(ErrorKind::DegenerateViews, "zero conic");
  cb.b /= norm;
  return cb;
}

ConicB ConicB::from_intrinsics(const CameraIntrinsics& k) {
  const Mat3 ainv = k.inverse_matrix();
  return from_matrix(ainv.transpose() * ainv);
}

Eigen::Matrix<double, 6, 1> constraint_row(const Vec3& hi, const Vec3& hj) {
  Eigen::Matrix<double, 6, 1> v;
  v << hi(0) * hj(0),
       hi(0) * hj(1) + hi(1) * hj(0),
       hi(1) * hj(1),
       hi(2) * hj(0) + hi(0) * hj(2),
       hi(2) * hj(1) + hi(1) * hj(2),
       hi(2) * hj(2);
  return v;
}

ConicB estimate_B(const std::vector<Homography>& hs) {
  const std::size_t n = hs.size();
  if (n < 3) {
    fail(ErrorKind::InsufficientViews,
         "need at least 3 views, got " + std::to_string(n), long(n));
  }
  Eigen::MatrixXd v(2 * n, 6);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 h1 = hs[i].h.col(0);
    const Vec3 h2 = hs[i].h.col(1);
    v.row(2 * i) = constraint_row(h1, h2).transpose();
    v.row(2 * i + 1) =
        (constraint_row(h1, h1) - constraint_row(h2, h2)).transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(v, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(4) < 1e-10 * sv(0)) {
    fail(ErrorKind::DegenerateViews,
         "view set is singular (sigma5/sigma1 = " +
             std::to_string(sv(4) / sv(0)) + ")");
  }
  ConicB cb;
  cb.b = svd.matrixV().col(5);
  return cb;
}

CameraIntrinsics intrinsics_from_B(const ConicB& conic) {
  Eigen::Matrix<double, 6, 1> b = conic.b;
  if (b(0) < 0.0) b = -b;  // SVD sign is arbitrary
  const double b11 = b(0), b12 = b(1), b22 = b(2);
  const double b13 = b(3), b23 = b(4), b33 = b(5);

  if (b11 <= 0.0) {
    fail(ErrorKind::NegativeDiscriminant, "B11 must be positive");
  }
  const double den = b11 * b22 - b12 * b12;
  if (den <= 0.0) {
    fail(ErrorKind::NegativeDiscriminant, "B11*B22 - B12^2 not positive");
  }

  CameraIntrinsics k;
  k.v0 = (b12 * b13 - b11 * b23) / den;
  const double lambda =
      b33 - (b13 * b13 + k.v0 * (b12 * b13 - b11 * b23)) / b11;
  if (lambda / b11 <= 0.0) {
    fail(ErrorKind::NegativeDiscriminant, "alpha^2 radicand not positive");
  }
  k.alpha = std::sqrt(lambda / b11);
  if (lambda * b11 / den <= 0.0) {
    fail(ErrorKind::NegativeDiscriminant, "beta^2 radicand not positive");
  }
  k.beta = std::sqrt(lambda * b11 / den);
  k.gamma = -b12 * k.alpha * k.alpha * k.beta / lambda;
  // u0 with beta in the first term; the alpha form is the known misprint.
  k.u0 = k.gamma * k.v0 / k.beta - b13 * k.alpha * k.alpha / lambda;
  return k;
}

Rotation3 best_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) {
    u.col(2) = -u.col(2);  // smallest singular value
  }
  return Rotation3::from_matrix(u * v.transpose());
}

Extrinsics extrinsics_from_homography(const Homography& h,
                                      const CameraIntrinsics& k) {
  const Mat3 ainv = k.inverse_matrix();
  Mat3 cols = h.h;
  // The homography sign is only defined up to scale; pick the
  // representative that puts the plane in front of the camera.
  if ((ainv * cols.col(2)).z() < 0.0) cols = -cols;

  const Vec3 a1 = ainv * cols.col(0);
  const double norm1 = a1.norm();
  if (norm1 < 1e-12) {
    fail(ErrorKind::DegenerateHomography, "A^-1 h1 is numerically zero");
  }
  const double lambda = 1.0 / norm1;
  const Vec3 r1 = lambda * a1;
  const Vec3 r2 = lambda * (ainv * cols.col(1));
  const Vec3 r3 = r1.cross(r2);
  Mat3 raw;
  raw.col(0) = r1;
  raw.col(1) = r2;
  raw.col(2) = r3;

  Extrinsics ex;
  ex.rot = best_rotation(raw);
  ex.t = lambda * (ainv * cols.col(2));
  return ex;
}

DistortionCoeffs estimate_distortion(const CalibrationDataset& dataset,
                                     const CameraIntrinsics& k,
                                     const std::vector<Extrinsics>& views,
                                     RadialModel model) {
  const std::size_t rows = 2 * dataset.view_count() * dataset.point_count();
  if (rows < 2) {
    fail(ErrorKind::BadConfig, "need at least one observation");
  }
  const int cols = model == RadialModel::Model2 ? 1 : 2;
  Eigen::MatrixXd d_mat(rows, cols);
  Eigen::VectorXd d_vec(rows);

  std::size_t r = 0;
  for (std::size_t i = 0; i < dataset.view_count(); ++i) {
    for (std::size_t j = 0; j < dataset.point_count(); ++j) {
      const Point3W pw{dataset.world[j].x(), dataset.world[j].y(), 0.0};
      const Point2Px ideal = project(pw, views[i], k);
      const NormalizedPoint n = normalize(ideal, k);
      const double r2 = n.x * n.x + n.y * n.y;
      double phi1 = 0.0, phi2 = 0.0;
      switch (model) {
        case RadialModel::Model1:
          phi1 = r2;
          phi2 = r2 * r2;
          break;
        case RadialModel::Model2:
          phi1 = r2;
          break;
        case RadialModel::Model3:
          phi1 = std::sqrt(r2);
          phi2 = r2;
          break;
      }
      const Point2Px& obs = dataset.views[i][j];
      d_mat(r, 0) = (ideal.u - k.u0) * phi1;
      if (cols == 2) d_mat(r, 1) = (ideal.u - k.u0) * phi2;
      d_vec(r) = obs.u - ideal.u;
      ++r;
      d_mat(r, 0) = (ideal.v - k.v0) * phi1;
      if (cols == 2) d_mat(r, 1) = (ideal.v - k.v0) * phi2;
      d_vec(r) = obs.v - ideal.v;
      ++r;
    }
  }

  const Eigen::MatrixXd normal = d_mat.transpose() * d_mat;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal);
  const double emin = eig.eigenvalues().minCoeff();
  const double emax = eig.eigenvalues().maxCoeff();
  if (!(emin > 0.0) || emax / emin > 1e12 || emax < 1e-20) {
    fail(ErrorKind::IllConditioned,
         "distortion normal equations are ill-conditioned");
  }
  const Eigen::VectorXd sol = normal.ldlt().solve(d_mat.transpose() * d_vec);
  return DistortionCoeffs::make(model, sol(0), cols == 2 ? sol(1) : 0.0);
}

double reprojection_objective(const CalibrationDataset& dataset,
                              const CameraIntrinsics& k,
                              const DistortionCoeffs& d,
                              const std::vector<Extrinsics>& views) {
  double sum = 0.0;
  for (std::size_t i = 0; i < dataset.view_count(); ++i) {
    for (std::size_t j = 0; j < dataset.point_count(); ++j) {
      const Point3W pw{dataset.world[j].x(), dataset.world[j].y(), 0.0};
      const Point2Px m = distort_pixel(project(pw, views[i], k), k, d);
      const double du = dataset.views[i][j].u - m.u;
      const double dv = dataset.views[i][j].v - m.v;
      sum += du * du + dv * dv;
    }
  }
  return sum;
}

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const CalibError& e) {
    throw CalibError(e.kind(), std::string(name) + " stage: " + e.what(),
                     e.detail());
  }
}

}  // namespace

CalibrationResult calibrate(const CalibrationDataset& dataset,
                            const CalibConfig& cfg) {
  if (dataset.view_count() < 3) {
    fail(ErrorKind::InsufficientViews,
         "calibration needs at least 3 views, got " +
             std::to_string(dataset.view_count()),
         long(dataset.view_count()));
  }

  std::vector<Homography> hs = stage("homography", [&] {
    std::vector<Homography> out;
    for (const auto& view : dataset.views) {
      PlanarCorrespondences c;
      c.world = dataset.world;
      c.image = view;
      Homography h = estimate_homography(c);
      if (cfg.refine_homographies) h = refine_homography(c, h);
      out.push_back(h);
    }
    return out;
  });

  const ConicB conic = stage("conic", [&] { return estimate_B(hs); });
  const CameraIntrinsics k0 =
      stage("intrinsics", [&] { return intrinsics_from_B(conic); });

  const std::vector<Extrinsics> views0 = stage("extrinsics", [&] {
    std::vector<Extrinsics> out;
    for (const auto& h : hs) out.push_back(extrinsics_from_homography(h, k0));
    return out;
  });

  const DistortionCoeffs d_lls = stage("distortion", [&] {
    return estimate_distortion(dataset, k0, views0, cfg.model);
  });

  CalibrationResult result;
  result.before.intrinsics = k0;
  result.before.distortion = d_lls;
  result.before.views = views0;
  result.before.objective =
      stage("objective", [&] {
        return reprojection_objective(dataset, k0, d_lls, views0);
      });

  return stage("refinement", [&] {
    CalibProblem problem(dataset, cfg.model);
    const DistortionCoeffs d_seed =
        cfg.seed_distortion_with_lls
            ? d_lls
            : DistortionCoeffs::make(cfg.model, 0.0, 0.0);

    ParamVector p0 = problem.pack(k0, d_seed, views0);
    MinimizeResult res;
    for (int attempt = 0; attempt < 3; ++attempt) {
      res = minimize([&](const ParamVector& p) { return problem.objective(p); },
                     p0, cfg.optim);
      if (!problem.needs_rechart(res.p)) break;
      // Re-seed the Euler charts and continue from the same rotations.
      p0 = problem.pack(problem.unpack_intrinsics(res.p),
                        problem.unpack_distortion(res.p),
                        problem.unpack_views(res.p));
    }

    result.after.intrinsics = problem.unpack_intrinsics(res.p);
    result.after.distortion = problem.unpack_distortion(res.p);
    result.after.views = problem.unpack_views(res.p);
    result.after.objective = res.report.final_objective;
    result.iterations = res.report;
    return result;
  });
}

}  // namespace gridcal
