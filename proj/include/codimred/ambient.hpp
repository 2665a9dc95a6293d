#pragma once

#include "codimred/geomcore.hpp"

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace codimred {

enum class SpaceKind { Euclidean, Sphere, Hyperbolic, ComplexProjective, Product };

/// A point given by its coordinates in the model's ambient chart.
///
/// Sphere: ||x|| = r. Hyperbolic: upper hyperboloid sheet, last coordinate
/// time-like, <x,x>_- = -r^2. ComplexProjective: unit representative z of
/// [z], stored as interleaved (Re z_0, Im z_0, Re z_1, ...).
struct Point {
  Vec coords;
};

/// A chart vector `dir` attached to `base`. For ComplexProjective the vector
/// is the horizontal lift at the representative stored in `base`.
struct TangentVector {
  Point base;
  Vec dir;
};

/// Ordered samples of a piecewise-smooth curve. `breakpoints` lists interior
/// sample indices where the curve may have a corner.
struct DiscretizedCurve {
  std::vector<Point> samples;
  std::vector<std::size_t> breakpoints;

  [[nodiscard]] const Point& front() const { return samples.front(); }
  [[nodiscard]] const Point& back() const { return samples.back(); }
};

struct TransportOptions {
  /// RK4 steps per unit arc length.
  double steps_per_unit_length = 512.0;
  /// Maximum admissible distance between consecutive samples, in units of
  /// the model scale.
  double max_step = 1e-2;
};

/// Symmetric-space ambient with exact metric, curvature, geodesics and
/// parallel transport. Immutable after construction.
///
/// Tangent spaces are identified with R^dim through `frame(p)`, an
/// orthonormal basis (w.r.t. the model metric) of chart vectors at p.
/// Subspaces of tangent spaces are always expressed in these frame
/// coordinates.
class SpaceModel {
 public:
  static SpaceModel euclidean(int n);
  static SpaceModel sphere(int n, double radius = 1.0);
  static SpaceModel hyperbolic(int n, double radius = 1.0);
  /// CP^n with holomorphic sectional curvature c; unit representatives in
  /// C^{n+1} carry the metric (4/c) Re<u,v>.
  static SpaceModel complex_projective(int n, double holomorphic_curvature = 4.0);
  static SpaceModel product(std::vector<SpaceModel> factors);

  [[nodiscard]] SpaceKind kind() const { return kind_; }
  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] int chart_dim() const { return chart_dim_; }
  /// Radius for Sphere/Hyperbolic, 2/sqrt(c) for ComplexProjective, 1 for
  /// Euclidean, max over factors for Product.
  [[nodiscard]] double scale() const;
  /// Radius or holomorphic curvature; 0 for Euclidean and Product.
  [[nodiscard]] double parameter() const { return param_; }
  [[nodiscard]] const std::vector<SpaceModel>& factors() const { return factors_; }
  [[nodiscard]] bool is_space_form() const;
  [[nodiscard]] std::string describe() const;

  // Points and tangency.
  [[nodiscard]] double constraint_defect(const Vec& coords) const;
  /// Validates the model constraint (relative tolerance 1e-8).
  [[nodiscard]] Point point(Vec coords) const;
  /// Retracts arbitrary chart coordinates onto the model.
  [[nodiscard]] Point normalize(const Vec& coords) const;
  /// A fixed reference point (north pole, hyperboloid vertex, [1:0:...:0]).
  [[nodiscard]] Point origin() const;
  [[nodiscard]] Vec project_to_tangent(const Point& p, const Vec& v) const;
  [[nodiscard]] double tangency_defect(const Point& p, const Vec& v) const;
  [[nodiscard]] TangentVector tangent(const Point& p, Vec dir) const;
  [[nodiscard]] bool same_point(const Point& p, const Point& q, double tol = 1e-12) const;

  // Frame coordinates.
  [[nodiscard]] Mat frame(const Point& p) const;
  [[nodiscard]] Vec to_frame(const Point& p, const Vec& v) const;
  [[nodiscard]] Mat to_frame_cols(const Point& p, const Mat& vs) const;
  [[nodiscard]] Vec from_frame(const Point& p, const Vec& coeffs) const;
  [[nodiscard]] Mat from_frame_cols(const Point& p, const Mat& coeffs) const;

  // Metric and curvature.
  [[nodiscard]] double metric(const Point& p, const Vec& u, const Vec& v) const;
  [[nodiscard]] double metric(const TangentVector& u, const TangentVector& v) const;
  [[nodiscard]] double norm(const Point& p, const Vec& v) const;
  [[nodiscard]] Vec curvature(const Point& p, const Vec& x, const Vec& y, const Vec& z) const;
  [[nodiscard]] TangentVector curvature(const TangentVector& x, const TangentVector& y,
                                        const TangentVector& z) const;
  /// R(x,y)z in frame coordinates at p.
  [[nodiscard]] Vec curvature_frame(const Point& p, const Vec& x, const Vec& y, const Vec& z) const;
  /// ComplexProjective only.
  [[nodiscard]] Vec complex_structure(const Point& p, const Vec& u) const;
  [[nodiscard]] TangentVector complex_structure(const TangentVector& u) const;

  // Geodesics.
  [[nodiscard]] Point exp_map(const Point& p, const Vec& v, double t = 1.0) const;
  [[nodiscard]] Point exp_map(const TangentVector& v, double t = 1.0) const;
  [[nodiscard]] Vec geodesic_velocity(const Point& p, const Vec& v, double t) const;
  [[nodiscard]] TangentVector geodesic_velocity(const TangentVector& v, double t) const;
  /// Closed-form parallel transport of w along t -> exp_map(p, v, t).
  [[nodiscard]] Vec geodesic_transport(const Point& p, const Vec& v, double t, const Vec& w) const;

  // Connection.
  /// Covariant derivative of a vector field V along a curve, given the chart
  /// velocity of the curve (of its representatives, for CP) and the chart
  /// derivative of V.
  [[nodiscard]] Vec covariant_derivative(const Point& p, const Vec& pdot, const Vec& field,
                                         const Vec& field_dot) const;
  /// Chart derivative of a parallel field v along a curve with velocity pdot.
  [[nodiscard]] Vec transport_rate(const Point& p, const Vec& pdot, const Vec& v) const;
  /// Covariant Hessian of an immersion from raw chart derivatives:
  /// returns nabla_{d_i} d_j given d_i, d_j and d_ij = d^2F/du_i du_j.
  [[nodiscard]] Vec covariant_hessian(const Point& p, const Vec& d_i, const Vec& d_j,
                                      const Vec& d_ij) const;

 private:
  SpaceModel() = default;

  template <class Fn>
  void for_each_block(Fn&& fn) const;

  SpaceKind kind_ = SpaceKind::Euclidean;
  int n_ = 0;
  int dim_ = 0;
  int chart_dim_ = 0;
  double param_ = 0.0;
  std::vector<SpaceModel> factors_;
};

// Curves.

/// Samples fn on [t0,t1] at n+1 uniform nodes; `break_params` are mapped to
/// the nearest node and declared as breakpoints.
DiscretizedCurve sample_curve(const SpaceModel& space, const std::function<Vec(double)>& fn,
                              double t0, double t1, int n,
                              const std::vector<double>& break_params = {});
DiscretizedCurve reversed(const DiscretizedCurve& curve);
/// Joins two curves sharing an endpoint; the join becomes a breakpoint.
DiscretizedCurve concatenate(const DiscretizedCurve& a, const DiscretizedCurve& b);
double curve_length(const SpaceModel& space, const DiscretizedCurve& curve);

/// Parallel transport of every column of `vectors` (chart vectors at the
/// curve start); returns the transported columns at every sample.
std::vector<Mat> transport_along(const SpaceModel& space, const DiscretizedCurve& curve,
                                 const Mat& vectors, const TransportOptions& opts = {});

TangentVector parallel_transport(const SpaceModel& space, const DiscretizedCurve& curve,
                                 const TangentVector& v, const TransportOptions& opts = {});

struct FrameTransport {
  Subspace subspace;  ///< frame coordinates at the curve end
  double orthonormality_defect = 0.0;  ///< before re-orthonormalization
};

/// Transports a subspace given in frame coordinates at the curve start.
FrameTransport transport_frame(const SpaceModel& space, const DiscretizedCurve& curve,
                               const Subspace& w, const TransportOptions& opts = {});

}  // namespace codimred
