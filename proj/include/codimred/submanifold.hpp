#pragma once

#include "codimred/ambient.hpp"

#include <functional>

namespace codimred {

/// A parametrized submanifold u in R^m -> F(u) of a model space.
///
/// `eval` returns chart coordinates of a point of the model (for
/// ComplexProjective, a unit representative that must depend smoothly on u).
/// Without an analytic jacobian, first derivatives use central differences
/// with step fd_step and second derivatives use step fd_step2.
///
/// Unless stated otherwise, tangent and normal vectors passed to or returned
/// by the operations below are frame coordinates at point(u).
class Immersion {
 public:
  using EvalFn = std::function<Vec(const Vec&)>;
  using JacobianFn = std::function<Mat(const Vec&)>;

  Immersion(SpaceModel space, int param_dim, EvalFn eval, JacobianFn jacobian = {});

  [[nodiscard]] const SpaceModel& space() const { return space_; }
  [[nodiscard]] int param_dim() const { return m_; }
  [[nodiscard]] bool has_jacobian() const { return static_cast<bool>(jacobian_); }
  [[nodiscard]] double fd_step() const { return h1_; }
  [[nodiscard]] double fd_step2() const { return h2_; }
  void set_fd_steps(double first, double second);

  /// Chart coordinates of F(u), unvalidated.
  [[nodiscard]] Vec eval(const Vec& u) const;
  /// F(u), validated against the model constraint.
  [[nodiscard]] Point point(const Vec& u) const;
  /// Raw chart derivatives dF/du_i as columns (chart_dim x m).
  [[nodiscard]] Mat differential(const Vec& u) const;
  /// Raw chart second derivative d^2F/du_i du_j.
  [[nodiscard]] Vec second_derivative(const Vec& u, int i, int j) const;

 private:
  void check_param(const Vec& u) const;

  SpaceModel space_;
  int m_;
  EvalFn eval_;
  JacobianFn jacobian_;
  double h1_ = 1e-5;
  double h2_ = 1e-4;
};

/// A rank-k subbundle of the normal bundle, given by a (not necessarily
/// orthonormal) frame of chart vectors at point(u).
class NormalSubbundle {
 public:
  using FrameFn = std::function<Mat(const Vec&)>;

  NormalSubbundle(Immersion immersion, int rank, FrameFn frame);

  /// The whole normal bundle near u0: normal projections of a fixed set of
  /// chart vectors chosen at u0.
  static NormalSubbundle full_normal(const Immersion& immersion, const Vec& u0);

  [[nodiscard]] const Immersion& immersion() const { return immersion_; }
  [[nodiscard]] int rank() const { return k_; }
  /// Chart frame (chart_dim x k).
  [[nodiscard]] Mat frame(const Vec& u) const;
  /// Frame coordinates of the frame (dim x k).
  [[nodiscard]] Mat frame_coords(const Vec& u) const;
  /// Orthonormal span in frame coordinates; throws on rank deficiency or
  /// when a frame vector is not normal to within 1e-6.
  [[nodiscard]] Subspace subspace(const Vec& u) const;

 private:
  Immersion immersion_;
  int k_;
  FrameFn frame_;
};

[[nodiscard]] Subspace tangent_space(const Immersion& f, const Vec& u);
[[nodiscard]] Subspace normal_space(const Immersion& f, const Vec& u);

/// Parameter-space coefficients a with sum a_i dF/du_i = X.
[[nodiscard]] Vec parameter_direction(const Immersion& f, const Vec& u, const Vec& x);

[[nodiscard]] Vec second_fundamental_form(const Immersion& f, const Vec& u, const Vec& x, const Vec& y);
[[nodiscard]] Vec shape_operator(const Immersion& f, const Vec& u, const Vec& xi, const Vec& x);

/// Normal part of the ambient derivative of a field of chart vectors
/// (horizontal lifts at eval(u) for ComplexProjective) in direction X.
[[nodiscard]] Vec normal_derivative(const Immersion& f, const Vec& u, const Vec& x,
                                    const std::function<Vec(const Vec&)>& field);

[[nodiscard]] Subspace first_normal_space(const Immersion& f, const Vec& u,
                                          const Tolerance& tol = Tolerance{1e-6, 1e-5});
[[nodiscard]] Vec mean_curvature(const Immersion& f, const Vec& u);

/// Metric-orthogonal projection of a chart vector onto the normal space at
/// F(u), returned as a chart vector.
[[nodiscard]] Vec normal_part_chart(const Immersion& f, const Vec& u, const Vec& v);

}  // namespace codimred
