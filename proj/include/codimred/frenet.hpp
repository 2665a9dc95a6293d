#pragma once

#include "codimred/reduction.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace codimred {

using CurvatureFn = std::function<double(double)>;

/// Prescribed Frenet data of a unit-speed curve on [0, length].
///
/// `frame` holds d = dim chart columns at `start`, orthonormal in the model
/// metric (for ComplexProjective, horizontal at the representative). Missing
/// trailing curvatures are zero.
struct FrenetData {
  SpaceModel space;
  Point start;
  Mat frame;
  std::vector<CurvatureFn> curvatures;
  double length = 1.0;
  int steps = 1024;
};

struct FrenetResult {
  SpaceModel space;
  std::vector<CurvatureFn> curvatures;  ///< padded to d - 1 entries
  double step = 0.0;
  std::vector<double> t;
  DiscretizedCurve curve;
  std::vector<Mat> frames;   ///< chart columns e_1..e_d per sample
  std::vector<Vec> h;        ///< kappa_1 e_2, chart
  std::vector<Vec> nabla_h;  ///< kappa_1' e_2 + kappa_1 kappa_2 e_3, chart
  /// Largest orthonormality defect per unit length before re-orthonormalization.
  double max_orthonormality_drift = 0.0;

  [[nodiscard]] int dim() const { return space.dim(); }
  [[nodiscard]] double length() const { return t.back(); }
};

/// Joint RK4 for (gamma, e_1..e_d) with retraction and Gram-Schmidt after
/// every step. Throws GeometryError when the defect before correction
/// exceeds 1e-4.
[[nodiscard]] FrenetResult frenet_integrate(const FrenetData& data);

struct FrenetDiagnostics {
  double speed_defect = 0.0;     ///< max | |gamma'| - 1 | from central chords
  double frenet_residual = 0.0;  ///< max |nabla e_i - prescribed| over interior samples
};

[[nodiscard]] FrenetDiagnostics frenet_diagnostics(const FrenetResult& result);

/// Frame, point and curvatures at arc length t, from one RK4 step off the
/// nearest sample.
struct FrenetState {
  Point point;
  Mat frame;
};

[[nodiscard]] FrenetState frenet_state(const FrenetResult& result, double t);

struct MeanCurvatureApparatus {
  std::vector<Vec> h;        ///< frame coordinates
  std::vector<Vec> nabla_h;  ///< frame coordinates
  std::vector<Subspace> v;   ///< span{H, nabla-perp H}
  /// min over samples of sigma_2([H, nabla-perp H]) / |H|.
  double independence_margin = 0.0;
};

/// Requires |kappa_1| >= 1e-8 along the curve.
[[nodiscard]] MeanCurvatureApparatus mean_curvature_apparatus(const FrenetResult& result);

/// The curve as an immersion of [0, length].
[[nodiscard]] Immersion frenet_immersion(std::shared_ptr<const FrenetResult> result);

/// V = span{H, nabla-perp H} along frenet_immersion.
[[nodiscard]] NormalSubbundle frenet_bundle(std::shared_ptr<const FrenetResult> result);

/// Pointwise check nodes (cell midpoints) and the parallel-check path on
/// [0, length].
[[nodiscard]] std::vector<Vec> arc_grid(double length, int samples);
[[nodiscard]] std::vector<Vec> arc_path(double length, int samples);

struct FrenetChecks {
  int samples = 64;          ///< interior arc samples for pointwise checks
  int curve_samples = 256;   ///< samples of the arc for the parallel check
  double first_normal_tol = 1e-5;
  double parallel_tol = 1e-4;
  double invariance_tol = 1e-9;
};

struct FrenetScenario {
  std::shared_ptr<const FrenetResult> result;
  NormalSubbundle bundle;
  /// first_normal_contained, parallel_subbundle, curvature_invariant.
  std::vector<CheckReport> reports;
};

[[nodiscard]] FrenetScenario run_frenet_scenario(const FrenetData& data, const FrenetChecks& checks = {});

/// Start frame at origin(). For CP^n (n >= 2): e_1 = dz_1,
/// e_2 = cos(1) i dz_1 + sin(1) dz_2, e_3 = i dz_2, then the remaining
/// directions; otherwise frame(origin()).
[[nodiscard]] Mat default_frenet_frame(const SpaceModel& space);

/// kappa_1 = kappa_2 = 1, kappa_3 = kappa3 in CP^2 (c = 4) from [1:0:0]
/// with the default frame.
[[nodiscard]] FrenetData cp2_counterexample_data(double length = 2.0, int steps = 4096, double kappa3 = 0.0);

/// The same curvatures in the unit S^4 from its origin.
[[nodiscard]] FrenetData s4_transplant_data(double length = 2.0, int steps = 4096, double kappa3 = 0.0);

[[nodiscard]] FrenetScenario build_cp2_counterexample(double length = 2.0, int steps = 4096);

}  // namespace codimred
