#include "codimred/submanifold.hpp"

#include <cmath>
#include <sstream>

namespace codimred {

namespace {

std::string format_param(const Vec& u) {
  std::ostringstream os;
  os << "(";
  for (long i = 0; i < u.size(); ++i) os << (i ? ", " : "") << u(i);
  os << ")";
  return os.str();
}

struct Jet {
  Point p;
  Mat d;   // raw chart derivatives
  Mat tf;  // their frame coordinates
  Subspace tangent;
};

Jet first_jet(const Immersion& f, const Vec& u) {
  const SpaceModel& s = f.space();
  Jet j{f.point(u), f.differential(u), Mat(), Subspace(s.dim())};
  j.tf = s.to_frame_cols(j.p, j.d);
  j.tangent = orthonormalize(j.tf);
  if (j.tangent.dim() < f.param_dim()) {
    throw GeometryError("immersion: differential is rank deficient at u = " + format_param(u));
  }
  return j;
}

Vec coefficients(const Jet& j, const Vec& x) {
  if (x.size() != j.tf.rows()) throw DimensionError("tangent vector: dimension mismatch");
  if (containment_residual(j.tangent, x, 1e-14) > 1e-5) {
    throw GeometryError("vector is not tangent to the immersion");
  }
  return j.tf.colPivHouseholderQr().solve(x);
}

Vec normal_part(const Subspace& tangent, const Vec& v) { return v - project(tangent, v); }

void require_normal(const Jet& j, const Vec& xi) {
  if (xi.size() != j.tf.rows()) throw DimensionError("normal vector: dimension mismatch");
  if (project(j.tangent, xi).norm() > 1e-5 * std::max(1.0, xi.norm())) {
    throw GeometryError("vector is not normal to the immersion");
  }
}

// Frame coordinates of the covariant Hessian nabla_{d_i} d_j.
struct SecondJet {
  Jet jet;
  std::vector<Vec> hess;  // row-major m x m

  SecondJet(const Immersion& f, const Vec& u) : jet(first_jet(f, u)) {
    const int m = f.param_dim();
    hess.resize(static_cast<std::size_t>(m * m));
    for (int i = 0; i < m; ++i) {
      for (int k = i; k < m; ++k) {
        const Vec dik = f.second_derivative(u, i, k);
        const Vec h = f.space().to_frame(
            jet.p, f.space().covariant_hessian(jet.p, jet.d.col(i), jet.d.col(k), dik));
        hess[static_cast<std::size_t>(i * m + k)] = h;
        hess[static_cast<std::size_t>(k * m + i)] = h;
      }
    }
  }

  [[nodiscard]] Vec alpha(const Vec& x, const Vec& y) const {
    const Vec a = coefficients(jet, x);
    const Vec b = coefficients(jet, y);
    const long m = a.size();
    Vec v = Vec::Zero(jet.tf.rows());
    for (long i = 0; i < m; ++i) {
      for (long k = 0; k < m; ++k) v += a(i) * b(k) * hess[static_cast<std::size_t>(i * m + k)];
    }
    return normal_part(jet.tangent, v);
  }
};

}  // namespace

Immersion::Immersion(SpaceModel space, int param_dim, EvalFn eval, JacobianFn jacobian)
    : space_(std::move(space)), m_(param_dim), eval_(std::move(eval)), jacobian_(std::move(jacobian)) {
  if (m_ < 0) throw DimensionError("immersion: negative parameter dimension");
  if (m_ > space_.dim()) throw DimensionError("immersion: parameter dimension exceeds ambient dimension");
  if (!eval_) throw Error("immersion: missing evaluation function");
}

void Immersion::set_fd_steps(double first, double second) {
  if (!(first > 0.0) || !(second > 0.0)) throw Error("immersion: finite-difference steps must be positive");
  h1_ = first;
  h2_ = second;
}

void Immersion::check_param(const Vec& u) const {
  if (u.size() != m_) throw DimensionError("immersion: parameter dimension mismatch");
  require_finite(u, "immersion parameter");
}

Vec Immersion::eval(const Vec& u) const {
  check_param(u);
  Vec x = eval_(u);
  if (x.size() != space_.chart_dim()) throw DimensionError("immersion: eval returned wrong chart dimension");
  return x;
}

Point Immersion::point(const Vec& u) const { return space_.point(eval(u)); }

Mat Immersion::differential(const Vec& u) const {
  check_param(u);
  if (jacobian_) {
    Mat j = jacobian_(u);
    if (j.rows() != space_.chart_dim() || j.cols() != m_) {
      throw DimensionError("immersion: jacobian has wrong shape");
    }
    return j;
  }
  Mat d(space_.chart_dim(), m_);
  for (int i = 0; i < m_; ++i) {
    Vec up = u;
    Vec um = u;
    up(i) += h1_;
    um(i) -= h1_;
    d.col(i) = (eval(up) - eval(um)) / (2.0 * h1_);
  }
  return d;
}

Vec Immersion::second_derivative(const Vec& u, int i, int j) const {
  check_param(u);
  if (i < 0 || j < 0 || i >= m_ || j >= m_) throw DimensionError("immersion: derivative index out of range");
  if (jacobian_) {
    Vec up = u;
    Vec um = u;
    up(j) += h1_;
    um(j) -= h1_;
    return (differential(up).col(i) - differential(um).col(i)) / (2.0 * h1_);
  }
  const double h = h2_;
  if (i == j) {
    Vec up = u;
    Vec um = u;
    up(i) += h;
    um(i) -= h;
    return (eval(up) - 2.0 * eval(u) + eval(um)) / (h * h);
  }
  auto at = [&](double si, double sj) {
    Vec v = u;
    v(i) += si * h;
    v(j) += sj * h;
    return eval(v);
  };
  return (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h * h);
}

NormalSubbundle::NormalSubbundle(Immersion immersion, int rank, FrameFn frame)
    : immersion_(std::move(immersion)), k_(rank), frame_(std::move(frame)) {
  if (k_ < 0 || k_ > immersion_.space().dim() - immersion_.param_dim()) {
    throw DimensionError("normal subbundle: rank exceeds the codimension");
  }
  if (!frame_) throw Error("normal subbundle: missing frame function");
}

NormalSubbundle NormalSubbundle::full_normal(const Immersion& immersion, const Vec& u0) {
  const SpaceModel& s = immersion.space();
  const Point p = immersion.point(u0);
  const Mat fixed = s.from_frame_cols(p, normal_space(immersion, u0).basis());
  const Immersion f = immersion;
  return NormalSubbundle(immersion, static_cast<int>(fixed.cols()), [f, fixed](const Vec& u) {
    Mat out(fixed.rows(), fixed.cols());
    for (long j = 0; j < fixed.cols(); ++j) out.col(j) = normal_part_chart(f, u, fixed.col(j));
    return out;
  });
}

Mat NormalSubbundle::frame(const Vec& u) const {
  Mat m = frame_(u);
  if (m.rows() != immersion_.space().chart_dim() || m.cols() != k_) {
    throw DimensionError("normal subbundle: frame has wrong shape");
  }
  require_finite(m, "normal subbundle frame");
  return m;
}

Mat NormalSubbundle::frame_coords(const Vec& u) const {
  return immersion_.space().to_frame_cols(immersion_.point(u), frame(u));
}

Subspace NormalSubbundle::subspace(const Vec& u) const {
  const Mat c = frame_coords(u);
  if (k_ == 0) return Subspace(immersion_.space().dim());
  const Subspace t = tangent_space(immersion_, u);
  for (long j = 0; j < c.cols(); ++j) {
    if (project(t, c.col(j)).norm() > 1e-6 * std::max(1.0, c.col(j).norm())) {
      throw GeometryError("normal subbundle: frame vector is not normal at u = " + format_param(u));
    }
  }
  Subspace w = orthonormalize(c);
  if (w.dim() < k_) {
    throw GeometryError("normal subbundle: frame is rank deficient at u = " + format_param(u));
  }
  return w;
}

Subspace tangent_space(const Immersion& f, const Vec& u) { return first_jet(f, u).tangent; }

Subspace normal_space(const Immersion& f, const Vec& u) {
  return orthogonal_complement(first_jet(f, u).tangent);
}

Vec parameter_direction(const Immersion& f, const Vec& u, const Vec& x) {
  return coefficients(first_jet(f, u), x);
}

Vec normal_part_chart(const Immersion& f, const Vec& u, const Vec& v) {
  const SpaceModel& s = f.space();
  const Point p = f.point(u);
  const Mat d = f.differential(u);
  const long m = d.cols();
  Mat t(d.rows(), m);
  for (long i = 0; i < m; ++i) t.col(i) = s.project_to_tangent(p, d.col(i));
  const Vec vh = s.project_to_tangent(p, v);
  if (m == 0) return vh;
  Mat g(m, m);
  Vec r(m);
  for (long i = 0; i < m; ++i) {
    r(i) = s.metric(p, t.col(i), vh);
    for (long k = 0; k < m; ++k) g(i, k) = s.metric(p, t.col(i), t.col(k));
  }
  return vh - t * g.ldlt().solve(r);
}

Vec second_fundamental_form(const Immersion& f, const Vec& u, const Vec& x, const Vec& y) {
  return SecondJet(f, u).alpha(x, y);
}

Vec shape_operator(const Immersion& f, const Vec& u, const Vec& xi, const Vec& x) {
  const Jet j = first_jet(f, u);
  require_normal(j, xi);
  const Vec a = coefficients(j, x);
  const SpaceModel& s = f.space();
  const Vec xic = s.from_frame(j.p, xi);
  const double h = f.fd_step2();
  Vec v = Vec::Zero(s.chart_dim());
  for (int i = 0; i < f.param_dim(); ++i) {
    if (a(i) == 0.0) continue;
    Vec up = u;
    Vec um = u;
    up(i) += h;
    um(i) -= h;
    const Vec dxi = (normal_part_chart(f, up, xic) - normal_part_chart(f, um, xic)) / (2.0 * h);
    v += a(i) * s.covariant_derivative(j.p, j.d.col(i), xic, dxi);
  }
  return -project(j.tangent, s.to_frame(j.p, v));
}

Vec normal_derivative(const Immersion& f, const Vec& u, const Vec& x,
                      const std::function<Vec(const Vec&)>& field) {
  const Jet j = first_jet(f, u);
  const Vec a = coefficients(j, x);
  const SpaceModel& s = f.space();
  const Vec xi = field(u);
  if (xi.size() != s.chart_dim()) throw DimensionError("normal field: chart dimension mismatch");
  const double h = f.fd_step();
  Vec v = Vec::Zero(s.chart_dim());
  for (int i = 0; i < f.param_dim(); ++i) {
    if (a(i) == 0.0) continue;
    Vec up = u;
    Vec um = u;
    up(i) += h;
    um(i) -= h;
    const Vec dxi = (field(up) - field(um)) / (2.0 * h);
    v += a(i) * s.covariant_derivative(j.p, j.d.col(i), xi, dxi);
  }
  return normal_part(j.tangent, s.to_frame(j.p, v));
}

Subspace first_normal_space(const Immersion& f, const Vec& u, const Tolerance& tol) {
  const SecondJet sj(f, u);
  const Mat& e = sj.jet.tangent.basis();
  std::vector<Vec> values;
  for (long i = 0; i < e.cols(); ++i) {
    for (long k = i; k < e.cols(); ++k) values.push_back(sj.alpha(e.col(i), e.col(k)));
  }
  if (values.empty()) return Subspace(f.space().dim());
  return orthonormalize(std::span<const Vec>(values), tol);
}

Vec mean_curvature(const Immersion& f, const Vec& u) {
  const SecondJet sj(f, u);
  const Mat& e = sj.jet.tangent.basis();
  Vec h = Vec::Zero(f.space().dim());
  if (e.cols() == 0) return h;
  for (long i = 0; i < e.cols(); ++i) h += sj.alpha(e.col(i), e.col(i));
  return h / static_cast<double>(e.cols());
}

}  // namespace codimred
