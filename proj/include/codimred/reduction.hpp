#pragma once

#include "codimred/submanifold.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace codimred {

enum class Verdict { Pass, Inconclusive, Fail };

[[nodiscard]] const char* to_string(Verdict v);

/// Outcome of one numerical check. pass <=> residual < tolerance; the
/// verdict is Fail only when residual > 10 * tolerance.
struct CheckReport {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  Verdict verdict = Verdict::Fail;
  std::string location;                  ///< where the worst residual occurred
  std::vector<std::string> diagnostics;
  std::map<std::string, double> metrics;  ///< auxiliary figures
  std::vector<double> trace;              ///< per-sample residuals, in sample order
};

[[nodiscard]] CheckReport make_report(std::string name, double residual, double tolerance,
                                      std::string location = {});

// Hypotheses.

[[nodiscard]] CheckReport check_first_normal_contained(const NormalSubbundle& v,
                                                       const std::vector<Vec>& grid, double tol);

/// `curve` is a finely sampled path in parameter space. The residual at a
/// sample is |(1 - P_V) nabla-perp_{c'} xi_j| / (|xi_j| |c'|).
[[nodiscard]] CheckReport check_parallel_subbundle(const NormalSubbundle& v,
                                                   const std::vector<Vec>& curve, double tol);

/// W in frame coordinates at p.
[[nodiscard]] CheckReport check_curvature_invariant(const SpaceModel& space, const Point& p,
                                                    const Subspace& w, double tol);

/// Curvature invariance of TM + V at every grid point.
[[nodiscard]] CheckReport check_curvature_invariant_along(const NormalSubbundle& v,
                                                          const std::vector<Vec>& grid, double tol);

// Envelope N = exp(V_0).

struct EnvelopeOptions {
  double epsilon = 0.1;
  /// Nodes per bundle axis in [-epsilon, epsilon]; nodes outside the
  /// epsilon-ball are dropped.
  int s_nodes_per_axis = 3;
  /// Full rank means sigma_min >= ratio * sigma_max for the differential.
  double min_singular_ratio = 1e-3;
  int max_shrinks = 8;
};

class Envelope {
 public:
  [[nodiscard]] const NormalSubbundle& bundle() const { return bundle_; }
  [[nodiscard]] const Immersion& immersion() const { return bundle_.immersion(); }
  /// (u, s) -> exp_{F(u)}(sum s_j xi_j(u)) with a metric-orthonormal frame xi.
  [[nodiscard]] const Immersion& map() const { return map_; }
  [[nodiscard]] double epsilon() const { return epsilon_; }
  [[nodiscard]] int shrinks() const { return shrinks_; }
  [[nodiscard]] const std::vector<Vec>& nodes() const { return nodes_; }
  [[nodiscard]] int param_dim() const { return map_.param_dim(); }
  [[nodiscard]] Vec param(const Vec& u, const Vec& s) const;

 private:
  Envelope(NormalSubbundle bundle, Immersion map) : bundle_(std::move(bundle)), map_(std::move(map)) {}

  NormalSubbundle bundle_;
  Immersion map_;
  double epsilon_ = 0.0;
  int shrinks_ = 0;
  std::vector<Vec> nodes_;

  friend Envelope build_envelope(const NormalSubbundle&, const std::vector<Vec>&, const EnvelopeOptions&);
};

/// Metric-orthonormal Gram-Schmidt of chart columns at p.
[[nodiscard]] Mat orthonormal_chart_frame(const SpaceModel& space, const Point& p, const Mat& columns);

[[nodiscard]] Envelope build_envelope(const NormalSubbundle& v, const std::vector<Vec>& u_nodes,
                                      const EnvelopeOptions& opts = {});

[[nodiscard]] CheckReport check_totally_geodesic(const Envelope& env, double tol, std::uint64_t seed = 0,
                                                 int pairs_per_node = 3);

/// Closed parameter-space rectangles through envelope nodes, spanning pairs
/// of (u, s) axes.
[[nodiscard]] std::vector<std::vector<Vec>> grid_loops(const Envelope& env, int count);

/// Parameter path of an ambient curve lying on the envelope (Gauss-Newton
/// from the nearest node); throws GeometryError beyond the snap tolerance
/// of 1e-6 times the model scale.
[[nodiscard]] std::vector<Vec> snap_to_envelope(const Envelope& env, const DiscretizedCurve& curve);

/// Each path is a polyline in (u, s) space; corners become breakpoints.
[[nodiscard]] CheckReport check_tangent_preservation(const Envelope& env,
                                                     const std::vector<std::vector<Vec>>& paths, double tol);

// Jacobi fields.

struct JacobiOptions {
  double steps_per_unit_length = 256.0;
};

struct JacobiState {
  TangentVector j;
  TangentVector jdot;
};

/// J'' + R(J, g')g' = 0 along g(t) = exp(velocity, t), integrated in a
/// parallel frame.
[[nodiscard]] JacobiState jacobi_propagate(const SpaceModel& space, const TangentVector& velocity,
                                           const TangentVector& j0, const TangentVector& j0dot, double t,
                                           const JacobiOptions& opts = {});

/// Jacobi states at t_k = t_end k / samples, k = 0..samples.
[[nodiscard]] std::vector<JacobiState> jacobi_trajectory(const SpaceModel& space, const TangentVector& velocity,
                                                         const TangentVector& j0, const TangentVector& j0dot,
                                                         double t_end, int samples,
                                                         const JacobiOptions& opts = {});

/// Pairs (J(0), J'(0)) in frame coordinates at the geodesic start.
using JacobiConditions = std::vector<std::pair<Vec, Vec>>;

[[nodiscard]] JacobiConditions random_jacobi_conditions(const Subspace& w0, int count, std::uint64_t seed);

/// W0 in frame coordinates at the geodesic start.
[[nodiscard]] CheckReport check_jacobi_containment(const SpaceModel& space, const TangentVector& velocity,
                                                   const Subspace& w0, const JacobiConditions& conditions,
                                                   double t_end, double tol, int samples = 64);

// Holonomy along a homotopy sheet.

/// A piecewise-smooth map f(s, t) with f(s, 0) = p, smooth in t between the
/// declared breakpoints.
class HomotopySheet {
 public:
  using Map = std::function<Vec(double, double)>;

  HomotopySheet(SpaceModel space, Map f, std::vector<double> t_breaks = {}, int grid = 64);

  [[nodiscard]] const SpaceModel& space() const { return space_; }
  [[nodiscard]] const Point& base() const { return base_; }
  [[nodiscard]] int grid() const { return grid_; }
  [[nodiscard]] const std::vector<double>& breaks() const { return breaks_; }
  [[nodiscard]] Point at(double s, double t) const;

  /// Tangent parts of df/ds and df/dt (one-sided in t at breakpoints).
  [[nodiscard]] Vec ds(double s, double t) const;
  [[nodiscard]] Vec dt(double s, double t, int side = 0) const;

  /// t -> f(s, t) on [0, 1] and s' -> f(s', 1) on [0, s], with transport-
  /// admissible sampling; quadrature nodes of t-pieces are kept as samples.
  [[nodiscard]] DiscretizedCurve t_curve(double s) const;
  [[nodiscard]] DiscretizedCurve top_curve(double s) const;

  /// Quadrature cells per t-piece (multiple of 4) and the transport
  /// refinement factor inside each cell.
  struct Piece {
    double t0;
    double t1;
    int cells;
    int refine;
  };
  [[nodiscard]] std::vector<Piece> t_pieces(double s) const;

 private:
  SpaceModel space_;
  Map f_;
  std::vector<double> breaks_;
  int grid_;
  Point base_;
};

/// tau(s) in the basis frame(p).
[[nodiscard]] Mat holonomy_direct(const HomotopySheet& sheet, double s);

struct HolonomyIntegral {
  Mat value;                   ///< value(i, j) = <A(s) u_i, u_j> over frame(p)
  double refinement_gap = 0.0;  ///< fine vs. half-resolution quadrature
};

[[nodiscard]] HolonomyIntegral holonomy_integral(const HomotopySheet& sheet, double s);

/// <A(s)u, w> by quadrature; u, w in frame coordinates at p. Throws
/// GeometryError when the quadrature refinement check fails.
[[nodiscard]] double holonomy_derivative_integral(const HomotopySheet& sheet, double s, const Vec& u,
                                                  const Vec& w);

/// A(s) = tau'(s) tau(s)^{-1} with a five-point central stencil of step one
/// s-cell.
[[nodiscard]] Mat holonomy_generator_fd(const HomotopySheet& sheet, double s);

[[nodiscard]] CheckReport verify_holonomy_lemma(const HomotopySheet& sheet, const std::vector<double>& s_samples,
                                                double tol);

/// f(s, t) = exp_p(t V(s, t)) with V a random trigonometric polynomial in
/// frame coordinates of amplitude about `amplitude`.
[[nodiscard]] HomotopySheet random_sheet(const SpaceModel& space, const Point& p, std::uint64_t seed,
                                         double amplitude = 0.6, int grid = 64);

/// The two-stage sheet: the M-loop c(2st) for t <= 1/2, then the normal
/// geodesic exp((2t - 1) xi(s)) for t >= 1/2. `loop` maps [0, 1] to
/// parameter space with loop(0) = loop(1); `coeffs` gives xi(s) in the
/// orthonormalized frame of V at loop(s).
[[nodiscard]] HomotopySheet section_sheet(const NormalSubbundle& v, std::function<Vec(double)> loop,
                                          std::function<Vec(double)> coeffs, int grid = 64);

}  // namespace codimred
