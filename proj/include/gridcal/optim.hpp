#pragma once

#include <functional>
#include <vector>

#include "gridcal/dataset.hpp"
#include "gridcal/distortion.hpp"
#include "gridcal/geometry.hpp"

namespace gridcal {

/// Packed parameter vector, length 7 + 6N:
///   [alpha, gamma, u0, beta, v0, k1, k2] then per view [a, b, c, tx, ty, tz].
using ParamVector = Eigen::VectorXd;

struct IterationRow {
  int iteration = 0;
  int function_count = 0;
  double objective = 0.0;
  double step_size = 0.0;
  double directional_derivative = 0.0;
};

/// Line-by-line optimizer trace; objective is non-increasing over the
/// accepted iterates.
struct ObjectiveReport {
  std::vector<IterationRow> iterations;
  double final_objective = 0.0;
  bool hit_iteration_cap = false;
  std::string format_table() const;
};

struct OptimConfig {
  double tol_x = 1e-5;   // stop when step inf-norm falls below
  double tol_f = 1e-5;   // stop when objective decrease falls below
  int max_iterations = 200;
};

/// Reprojection problem over one dataset: projects each model point with
/// the per-view pose, applies the radial model, and differences against
/// the observations. Views whose initial rotation sits near the ZYZ
/// degeneracy get a fixed 90-degree chart rotation so that b stays inside
/// (0, pi); the chart composes on the right: R_view = E(a,b,c) * chart.
class CalibProblem {
 public:
  CalibProblem(const CalibrationDataset& dataset, RadialModel model);

  /// Chooses per-view charts from the seed poses and packs everything.
  ParamVector pack(const CameraIntrinsics& k, const DistortionCoeffs& d,
                   const std::vector<Extrinsics>& views);

  CameraIntrinsics unpack_intrinsics(const ParamVector& p) const;
  DistortionCoeffs unpack_distortion(const ParamVector& p) const;
  std::vector<Extrinsics> unpack_views(const ParamVector& p) const;

  /// Residual pairs (observed - modeled), 2Nn entries.
  Eigen::VectorXd residuals(const ParamVector& p) const;
  double objective(const ParamVector& p) const;

  std::size_t view_count() const { return dataset_.view_count(); }
  std::size_t param_count() const { return 7 + 6 * dataset_.view_count(); }
  RadialModel model() const { return model_; }

  /// True when some view's b coordinate drifted within 1e-3 of {0, pi};
  /// the caller should re-pack (fresh charts) and optimize again.
  bool needs_rechart(const ParamVector& p) const;

 private:
  CalibrationDataset dataset_;
  RadialModel model_;
  std::vector<Rotation3> charts_;
};

/// Central-difference gradient, h_i = max(1e-6, 1e-6 |p_i|).
Eigen::VectorXd numeric_gradient(
    const std::function<double(const ParamVector&)>& objective,
    const ParamVector& p);

struct MinimizeResult {
  ParamVector p;
  ObjectiveReport report;
};

/// BFGS quasi-Newton with a backtracking quadratic-interpolation line
/// search (Armijo c = 1e-4, contraction clamped to [0.1, 0.5]).
MinimizeResult minimize(
    const std::function<double(const ParamVector&)>& objective,
    const ParamVector& p0, const OptimConfig& cfg = {});

}  // namespace gridcal
