#include "gridcal/homography.hpp"

#include <cmath>
#include <iostream>

#include "gridcal/optim.hpp"

namespace gridcal {

Point2Px Homography::apply(double x, double y) const {
  const Vec3 m = map(x, y);
  if (std::abs(m.z()) < 1e-15) {
    fail(ErrorKind::DegenerateDepth, "point maps to the line at infinity");
  }
  return {m.x() / m.z(), m.y() / m.z()};
}

Homography Homography::canonical(const Mat3& m) {
  Mat3 h = m / m.norm();
  if (h(2, 2) < 0.0 && std::abs(h(2, 2)) > 1e-12) h = -h;
  return Homography{h};
}

Eigen::MatrixXd build_L(const PlanarCorrespondences& c) {
  Eigen::MatrixXd L(2 * c.size(), 9);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double X = c.world[i].x(), Y = c.world[i].y();
    const double u = c.image[i].u, v = c.image[i].v;
    L.row(2 * i)     << X, Y, 1, 0, 0, 0, -u * X, -u * Y, -u;
    L.row(2 * i + 1) << 0, 0, 0, X, Y, 1, -v * X, -v * Y, -v;
  }
  return L;
}

Homography estimate_homography(const PlanarCorrespondences& c) {
  if (c.size() < 4 || c.image.size() != c.world.size()) {
    fail(ErrorKind::RankDeficient, "need at least 4 correspondences");
  }
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (std::abs(c.image[i].u) > 1e4 || std::abs(c.image[i].v) > 1e4) {
      std::cerr << "warning: pixel coordinates exceed 1e4, the unnormalized "
                   "DLT system may be badly conditioned\n";
      break;
    }
  }

  const Eigen::MatrixXd L = build_L(c);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(L, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(7) < 1e-10 * sv(0)) {
    fail(ErrorKind::RankDeficient, "correspondences are degenerate");
  }

  const Eigen::VectorXd x = svd.matrixV().col(8);
  Mat3 h;
  h << x(0), x(1), x(2),
       x(3), x(4), x(5),
       x(6), x(7), x(8);
  return Homography::canonical(h);
}

double homography_objective(const PlanarCorrespondences& c,
                            const Homography& h) {
  double sum = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Point2Px m = h.apply(c.world[i].x(), c.world[i].y());
    const double du = c.image[i].u - m.u;
    const double dv = c.image[i].v - m.v;
    sum += du * du + dv * dv;
  }
  return sum;
}

namespace {

Eigen::VectorXd pixel_residuals(const PlanarCorrespondences& c,
                                const Mat3& h) {
  Eigen::VectorXd r(2 * c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Vec3 m = h * Vec3(c.world[i].x(), c.world[i].y(), 1.0);
    r(2 * i) = c.image[i].u - m.x() / m.z();
    r(2 * i + 1) = c.image[i].v - m.y() / m.z();
  }
  return r;
}

}  // namespace

Homography refine_homography(const PlanarCorrespondences& c,
                             const Homography& h0) {
  // Local 8-dof chart: freeze the largest entry of h0 and adjust the
  // other eight by Levenberg-Marquardt with a numeric Jacobian. The
  // canonical scale makes the perspective-row sensitivities huge, which
  // the damped normal equations absorb.
  int fixed = 0;
  double best = 0.0;
  for (int i = 0; i < 9; ++i) {
    const double m = std::abs(h0.h(i / 3, i % 3));
    if (m > best) {
      best = m;
      fixed = i;
    }
  }
  const double fixed_value = h0.h(fixed / 3, fixed % 3);

  auto assemble = [&](const Eigen::VectorXd& p) {
    Mat3 m;
    int j = 0;
    for (int i = 0; i < 9; ++i) {
      m(i / 3, i % 3) = i == fixed ? fixed_value : p(j++);
    }
    return m;
  };

  Eigen::VectorXd p(8);
  {
    int j = 0;
    for (int i = 0; i < 9; ++i) {
      if (i != fixed) p(j++) = h0.h(i / 3, i % 3);
    }
  }

  Eigen::VectorXd r = pixel_residuals(c, assemble(p));
  double objective = r.squaredNorm();
  double mu = -1.0;

  for (int iter = 0; iter < 100; ++iter) {
    Eigen::MatrixXd jac(r.size(), 8);
    Eigen::VectorXd q = p;
    for (int j = 0; j < 8; ++j) {
      const double h = std::max(1e-9, 1e-6 * std::abs(p(j)));
      q(j) = p(j) + h;
      const Eigen::VectorXd rp = pixel_residuals(c, assemble(q));
      q(j) = p(j) - h;
      const Eigen::VectorXd rm = pixel_residuals(c, assemble(q));
      q(j) = p(j);
      jac.col(j) = (rp - rm) / (2.0 * h);
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;
    if (mu < 0.0) mu = 1e-3 * jtj.diagonal().maxCoeff();

    bool stepped = false;
    for (int tries = 0; tries < 20; ++tries) {
      const Eigen::VectorXd delta =
          (jtj + mu * Eigen::MatrixXd::Identity(8, 8))
              .ldlt()
              .solve(-jtr);
      const Eigen::VectorXd p_new = p + delta;
      const Eigen::VectorXd r_new = pixel_residuals(c, assemble(p_new));
      const double obj_new = r_new.squaredNorm();
      if (std::isfinite(obj_new) && obj_new < objective) {
        p = p_new;
        r = r_new;
        const double drop = objective - obj_new;
        objective = obj_new;
        mu = std::max(mu / 3.0, 1e-18);
        stepped = true;
        if (drop < 1e-16 * (1.0 + objective) ||
            delta.cwiseAbs().maxCoeff() < 1e-14) {
          iter = 100;
        }
        break;
      }
      mu *= 4.0;
    }
    if (!stepped) break;
  }

  const Homography refined = Homography::canonical(assemble(p));
  return homography_objective(c, refined) <= homography_objective(c, h0)
             ? refined
             : h0;
}

}  // namespace gridcal
