#include "gridcal/optim.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace gridcal {

namespace {

constexpr double kArmijoC1 = 1e-4;
constexpr double kChartMargin = 5e-2;

double checked_eval(const std::function<double(const ParamVector&)>& f,
                    const ParamVector& p, long& fcount) {
  ++fcount;
  const double value = f(p);
  return value;
}

}  // namespace

Eigen::VectorXd numeric_gradient(
    const std::function<double(const ParamVector&)>& objective,
    const ParamVector& p) {
  Eigen::VectorXd g(p.size());
  ParamVector q = p;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double h = std::max(1e-6, 1e-6 * std::abs(p(i)));
    q(i) = p(i) + h;
    const double fp = objective(q);
    q(i) = p(i) - h;
    const double fm = objective(q);
    q(i) = p(i);
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      fail(ErrorKind::NonFinite, "objective not finite near the base point");
    }
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

std::string ObjectiveReport::format_table() const {
  std::ostringstream out;
  out << "Iteration  Func-count       f(x)        Step-size   "
         "Directional-derivative\n";
  char line[160];
  for (const auto& row : iterations) {
    std::snprintf(line, sizeof(line), "%9d %11d %12.6g %15.6g %15.3g\n",
                  row.iteration, row.function_count, row.objective,
                  row.step_size, row.directional_derivative);
    out << line;
  }
  return out.str();
}

MinimizeResult minimize(
    const std::function<double(const ParamVector&)>& objective,
    const ParamVector& p0, const OptimConfig& cfg) {
  const Eigen::Index n = p0.size();
  long fcount = 0;

  // A trial point that throws or goes non-finite just fails the line
  // search; only the accepted iterates must stay finite.
  auto try_eval = [&](const ParamVector& p) {
    ++fcount;
    try {
      const double v = objective(p);
      return std::isfinite(v) ? v
                              : std::numeric_limits<double>::infinity();
    } catch (const CalibError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  ParamVector p = p0;
  double J = checked_eval(objective, p, fcount);
  if (!std::isfinite(J)) {
    fail(ErrorKind::NonFinite, "objective not finite at the start point");
  }

  auto gradient = [&](const ParamVector& at) {
    fcount += 2 * n;
    return numeric_gradient(objective, at);
  };

  Eigen::VectorXd g = gradient(p);
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;

  MinimizeResult result;
  result.p = p;
  result.report.final_objective = J;

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    Eigen::VectorXd d = -(H * g);
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      // Stale curvature; fall back to steepest descent.
      H.setIdentity();
      scaled = false;
      d = -g;
      slope = -g.squaredNorm();
      if (slope == 0.0) break;
    }

    double alpha = iter == 1 ? std::min(1.0, 1.0 / (1.0 + g.norm())) : 1.0;
    double phi = try_eval(p + alpha * d);
    int backtracks = 0;
    while (phi > J + kArmijoC1 * alpha * slope && backtracks < 60) {
      // Quadratic interpolation through phi(0), phi'(0), phi(alpha).
      double next = -slope * alpha * alpha / (2.0 * (phi - J - slope * alpha));
      if (!std::isfinite(next)) next = 0.5 * alpha;
      alpha = std::clamp(next, 0.1 * alpha, 0.5 * alpha);
      phi = try_eval(p + alpha * d);
      ++backtracks;
    }
    if (phi > J + kArmijoC1 * alpha * slope || !(phi <= J)) {
      break;  // no admissible step along d; accept the current point
    }
    if (backtracks == 0) {
      // The unit step was already acceptable; expand while the objective
      // keeps falling so plateaus are crossed in few iterations.
      for (int grow = 0; grow < 10; ++grow) {
        const double alpha_next = 2.0 * alpha;
        const double phi_next = try_eval(p + alpha_next * d);
        if (!(phi_next < phi) ||
            phi_next > J + kArmijoC1 * alpha_next * slope) {
          break;
        }
        alpha = alpha_next;
        phi = phi_next;
      }
    }

    const Eigen::VectorXd s = alpha * d;
    const ParamVector p_next = p + s;
    const double J_next = phi;

    result.report.iterations.push_back(
        {iter, int(fcount), J_next, alpha, slope});

    const double df = J - J_next;
    p = p_next;
    J = J_next;
    result.p = p;
    result.report.final_objective = J;

    if (df < cfg.tol_f || s.cwiseAbs().maxCoeff() < cfg.tol_x) break;
    if (iter == cfg.max_iterations) {
      result.report.hit_iteration_cap = true;
      break;
    }

    const Eigen::VectorXd g_next = gradient(p);
    const Eigen::VectorXd y = g_next - g;
    const double ys = y.dot(s);
    if (ys > 1e-10 * y.norm() * s.norm()) {
      if (!scaled) {
        H = (ys / y.squaredNorm()) * Eigen::MatrixXd::Identity(n, n);
        scaled = true;
      }
      const Eigen::VectorXd Hy = H * y;
      const double yHy = y.dot(Hy);
      H += ((ys + yHy) / (ys * ys)) * (s * s.transpose()) -
           (Hy * s.transpose() + s * Hy.transpose()) / ys;
    }
    g = g_next;
  }

  return result;
}

CalibProblem::CalibProblem(const CalibrationDataset& dataset,
                           RadialModel model)
    : dataset_(dataset), model_(model) {
  if (dataset_.view_count() == 0 || dataset_.point_count() == 0) {
    fail(ErrorKind::BadConfig, "empty calibration dataset");
  }
  for (const auto& view : dataset_.views) {
    if (view.size() != dataset_.point_count()) {
      fail(ErrorKind::BadConfig, "ragged observation list");
    }
  }
  charts_.assign(dataset_.view_count(), Rotation3::identity());
}

namespace {

double chart_margin(const Mat3& e) {
  const double sb = std::hypot(e(2, 0), e(2, 1));
  const double b = std::atan2(sb, e(2, 2));
  return std::min(b, M_PI - b);
}

}  // namespace

ParamVector CalibProblem::pack(const CameraIntrinsics& k,
                               const DistortionCoeffs& d,
                               const std::vector<Extrinsics>& views) {
  if (views.size() != dataset_.view_count()) {
    fail(ErrorKind::BadConfig, "view count mismatch");
  }
  ParamVector p(param_count());
  p(0) = k.alpha;
  p(1) = k.gamma;
  p(2) = k.u0;
  p(3) = k.beta;
  p(4) = k.v0;
  p(5) = d.k1;
  p(6) = model_ == RadialModel::Model2 ? 0.0 : d.k2;

  const Rotation3 quarter = rotation_y(M_PI / 2.0);
  for (std::size_t i = 0; i < views.size(); ++i) {
    const Rotation3& r = views[i].rot;
    // Keep the ZYZ chart away from sin(b) = 0 by optionally composing
    // with a fixed quarter turn: R = E(a,b,c) * chart.
    Rotation3 chart = Rotation3::identity();
    if (chart_margin(r.matrix()) < kChartMargin) {
      chart = quarter;
    }
    charts_[i] = chart;
    const Rotation3 e_rot = r * chart.transpose();
    const EulerZYZ e = euler_zyz_from_rotation(e_rot);
    p(7 + 6 * i + 0) = e.a;
    p(7 + 6 * i + 1) = e.b;
    p(7 + 6 * i + 2) = e.c;
    p(7 + 6 * i + 3) = views[i].t.x();
    p(7 + 6 * i + 4) = views[i].t.y();
    p(7 + 6 * i + 5) = views[i].t.z();
  }
  return p;
}

CameraIntrinsics CalibProblem::unpack_intrinsics(const ParamVector& p) const {
  CameraIntrinsics k;
  k.alpha = p(0);
  k.gamma = p(1);
  k.u0 = p(2);
  k.beta = p(3);
  k.v0 = p(4);
  return k;
}

DistortionCoeffs CalibProblem::unpack_distortion(const ParamVector& p) const {
  return DistortionCoeffs::make(model_, p(5), p(6));
}

std::vector<Extrinsics> CalibProblem::unpack_views(const ParamVector& p) const {
  std::vector<Extrinsics> views(dataset_.view_count());
  for (std::size_t i = 0; i < views.size(); ++i) {
    const EulerZYZ e{p(7 + 6 * i), p(7 + 6 * i + 1), p(7 + 6 * i + 2)};
    views[i].rot = rotation_from_euler_zyz(e) * charts_[i];
    views[i].t = Vec3(p(7 + 6 * i + 3), p(7 + 6 * i + 4), p(7 + 6 * i + 5));
  }
  return views;
}

Eigen::VectorXd CalibProblem::residuals(const ParamVector& p) const {
  if (!p.allFinite()) {
    fail(ErrorKind::NonFinite, "parameter vector is not finite");
  }
  const CameraIntrinsics k = unpack_intrinsics(p);
  const DistortionCoeffs d = unpack_distortion(p);
  const std::vector<Extrinsics> views = unpack_views(p);

  const std::size_t n = dataset_.point_count();
  Eigen::VectorXd r(2 * views.size() * n);
  for (std::size_t i = 0; i < views.size(); ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const Point3W pw{dataset_.world[j].x(), dataset_.world[j].y(), 0.0};
      Point2Px model;
      try {
        model = distort_pixel(project(pw, views[i], k), k, d);
      } catch (const CalibError& e) {
        fail(ErrorKind::NonFinite, std::string("model projection failed: ") +
                                       e.what());
      }
      const Point2Px& obs = dataset_.views[i][j];
      r(2 * (i * n + j)) = obs.u - model.u;
      r(2 * (i * n + j) + 1) = obs.v - model.v;
    }
  }
  return r;
}

double CalibProblem::objective(const ParamVector& p) const {
  return residuals(p).squaredNorm();
}

bool CalibProblem::needs_rechart(const ParamVector& p) const {
  for (std::size_t i = 0; i < dataset_.view_count(); ++i) {
    const double b = p(7 + 6 * i + 1);
    if (std::min(std::abs(b), std::abs(M_PI - std::abs(b))) < 1e-3) {
      return true;
    }
  }
  return false;
}

}  // namespace gridcal
