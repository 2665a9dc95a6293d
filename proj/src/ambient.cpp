#include "codimred/ambient.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace codimred {

namespace {

// Minkowski form with the last coordinate time-like.
double minkowski(const Vec& x, const Vec& y) {
  const long n = x.size() - 1;
  return x.head(n).dot(y.head(n)) - x(n) * y(n);
}

// Multiplication by i on interleaved complex coordinates.
Vec times_i(const Vec& v) {
  Vec out(v.size());
  for (long k = 0; k + 1 < v.size(); k += 2) {
    out(k) = -v(k + 1);
    out(k + 1) = v(k);
  }
  return out;
}

Vec horizontal(const Vec& z, const Vec& v) {
  const Vec iz = times_i(z);
  return v - z.dot(v) * z - iz.dot(v) * iz;
}

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) throw Error(std::string(what) + " must be positive");
}

}  // namespace

SpaceModel SpaceModel::euclidean(int n) {
  if (n < 1) throw Error("Euclidean: dimension must be >= 1");
  SpaceModel m;
  m.kind_ = SpaceKind::Euclidean;
  m.n_ = m.dim_ = m.chart_dim_ = n;
  return m;
}

SpaceModel SpaceModel::sphere(int n, double radius) {
  if (n < 1) throw Error("Sphere: dimension must be >= 1");
  require_positive(radius, "Sphere radius");
  SpaceModel m;
  m.kind_ = SpaceKind::Sphere;
  m.n_ = m.dim_ = n;
  m.chart_dim_ = n + 1;
  m.param_ = radius;
  return m;
}

SpaceModel SpaceModel::hyperbolic(int n, double radius) {
  if (n < 1) throw Error("Hyperbolic: dimension must be >= 1");
  require_positive(radius, "Hyperbolic radius");
  SpaceModel m;
  m.kind_ = SpaceKind::Hyperbolic;
  m.n_ = m.dim_ = n;
  m.chart_dim_ = n + 1;
  m.param_ = radius;
  return m;
}

SpaceModel SpaceModel::complex_projective(int n, double holomorphic_curvature) {
  if (n < 1) throw Error("ComplexProjective: dimension must be >= 1");
  require_positive(holomorphic_curvature, "holomorphic sectional curvature");
  SpaceModel m;
  m.kind_ = SpaceKind::ComplexProjective;
  m.n_ = n;
  m.dim_ = 2 * n;
  m.chart_dim_ = 2 * n + 2;
  m.param_ = holomorphic_curvature;
  return m;
}

SpaceModel SpaceModel::product(std::vector<SpaceModel> factors) {
  if (factors.empty()) throw Error("Product: needs at least one factor");
  SpaceModel m;
  m.kind_ = SpaceKind::Product;
  for (const auto& f : factors) {
    m.dim_ += f.dim();
    m.chart_dim_ += f.chart_dim();
  }
  m.n_ = m.dim_;
  m.factors_ = std::move(factors);
  return m;
}

template <class Fn>
void SpaceModel::for_each_block(Fn&& fn) const {
  int chart_off = 0;
  int dim_off = 0;
  for (const auto& f : factors_) {
    fn(f, chart_off, dim_off);
    chart_off += f.chart_dim();
    dim_off += f.dim();
  }
}

double SpaceModel::scale() const {
  switch (kind_) {
    case SpaceKind::Euclidean: return 1.0;
    case SpaceKind::Sphere:
    case SpaceKind::Hyperbolic: return param_;
    case SpaceKind::ComplexProjective: return 2.0 / std::sqrt(param_);
    case SpaceKind::Product: {
      double s = 0.0;
      for (const auto& f : factors_) s = std::max(s, f.scale());
      return s;
    }
  }
  return 1.0;
}

bool SpaceModel::is_space_form() const {
  return kind_ == SpaceKind::Euclidean || kind_ == SpaceKind::Sphere ||
         kind_ == SpaceKind::Hyperbolic;
}

std::string SpaceModel::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case SpaceKind::Euclidean: os << "Euclidean(" << n_ << ")"; break;
    case SpaceKind::Sphere: os << "Sphere(" << n_ << ", r=" << param_ << ")"; break;
    case SpaceKind::Hyperbolic: os << "Hyperbolic(" << n_ << ", r=" << param_ << ")"; break;
    case SpaceKind::ComplexProjective: os << "ComplexProjective(" << n_ << ", c=" << param_ << ")"; break;
    case SpaceKind::Product: {
      os << "Product(";
      for (std::size_t i = 0; i < factors_.size(); ++i) os << (i ? ", " : "") << factors_[i].describe();
      os << ")";
      break;
    }
  }
  return os.str();
}

double SpaceModel::constraint_defect(const Vec& x) const {
  if (x.size() != chart_dim_) throw DimensionError("point: chart dimension mismatch");
  if (!x.allFinite()) return std::numeric_limits<double>::infinity();
  switch (kind_) {
    case SpaceKind::Euclidean: return 0.0;
    case SpaceKind::Sphere: return std::abs(x.norm() - param_) / param_;
    case SpaceKind::Hyperbolic: {
      if (x(n_) <= 0.0) return std::numeric_limits<double>::infinity();
      return std::abs(minkowski(x, x) + param_ * param_) / (param_ * param_);
    }
    case SpaceKind::ComplexProjective: return std::abs(x.norm() - 1.0);
    case SpaceKind::Product: {
      double d = 0.0;
      for_each_block([&](const SpaceModel& f, int co, int) {
        d = std::max(d, f.constraint_defect(x.segment(co, f.chart_dim())));
      });
      return d;
    }
  }
  return 0.0;
}

Point SpaceModel::point(Vec coords) const {
  if (constraint_defect(coords) > 1e-8) {
    throw GeometryError("point does not satisfy the " + describe() + " constraint");
  }
  return Point{std::move(coords)};
}

Point SpaceModel::normalize(const Vec& x) const {
  if (x.size() != chart_dim_) throw DimensionError("normalize: chart dimension mismatch");
  switch (kind_) {
    case SpaceKind::Euclidean: return Point{x};
    case SpaceKind::Sphere: return Point{x * (param_ / x.norm())};
    case SpaceKind::Hyperbolic: {
      const double q = -minkowski(x, x);
      if (!(q > 0.0)) throw GeometryError("normalize: vector is not time-like");
      Vec y = x * (param_ / std::sqrt(q));
      if (y(n_) < 0.0) y = -y;
      return Point{y};
    }
    case SpaceKind::ComplexProjective: return Point{x / x.norm()};
    case SpaceKind::Product: {
      Vec y(chart_dim_);
      for_each_block([&](const SpaceModel& f, int co, int) {
        y.segment(co, f.chart_dim()) = f.normalize(x.segment(co, f.chart_dim())).coords;
      });
      return Point{y};
    }
  }
  return Point{x};
}

Point SpaceModel::origin() const {
  Vec x = Vec::Zero(chart_dim_);
  switch (kind_) {
    case SpaceKind::Euclidean: break;
    case SpaceKind::Sphere:
    case SpaceKind::Hyperbolic: x(n_) = param_; break;
    case SpaceKind::ComplexProjective: x(0) = 1.0; break;
    case SpaceKind::Product:
      for_each_block([&](const SpaceModel& f, int co, int) {
        x.segment(co, f.chart_dim()) = f.origin().coords;
      });
      break;
  }
  return Point{x};
}

Vec SpaceModel::project_to_tangent(const Point& p, const Vec& v) const {
  const Vec& x = p.coords;
  if (v.size() != chart_dim_) throw DimensionError("tangent vector: chart dimension mismatch");
  switch (kind_) {
    case SpaceKind::Euclidean: return v;
    case SpaceKind::Sphere: return v - (x.dot(v) / x.squaredNorm()) * x;
    case SpaceKind::Hyperbolic: return v + (minkowski(v, x) / (-minkowski(x, x))) * x;
    case SpaceKind::ComplexProjective: return horizontal(x / x.norm(), v);
    case SpaceKind::Product: {
      Vec out(chart_dim_);
      for_each_block([&](const SpaceModel& f, int co, int) {
        out.segment(co, f.chart_dim()) = f.project_to_tangent(
            Point{x.segment(co, f.chart_dim())}, v.segment(co, f.chart_dim()));
      });
      return out;
    }
  }
  return v;
}

double SpaceModel::tangency_defect(const Point& p, const Vec& v) const {
  return (v - project_to_tangent(p, v)).norm();
}

TangentVector SpaceModel::tangent(const Point& p, Vec dir) const {
  if (tangency_defect(p, dir) > 1e-8 * std::max(1.0, dir.norm())) {
    throw GeometryError("vector is not tangent at its base point");
  }
  return TangentVector{p, std::move(dir)};
}

bool SpaceModel::same_point(const Point& p, const Point& q, double tol) const {
  if (p.coords.size() != q.coords.size()) return false;
  return (p.coords - q.coords).lpNorm<Eigen::Infinity>() <= tol * scale();
}

double SpaceModel::metric(const Point& p, const Vec& u, const Vec& v) const {
  switch (kind_) {
    case SpaceKind::Euclidean:
    case SpaceKind::Sphere: return u.dot(v);
    case SpaceKind::Hyperbolic: return minkowski(u, v);
    case SpaceKind::ComplexProjective: return (4.0 / param_) * u.dot(v);
    case SpaceKind::Product: {
      double s = 0.0;
      for_each_block([&](const SpaceModel& f, int co, int) {
        const int k = f.chart_dim();
        s += f.metric(Point{p.coords.segment(co, k)}, u.segment(co, k), v.segment(co, k));
      });
      return s;
    }
  }
  return 0.0;
}

double SpaceModel::metric(const TangentVector& u, const TangentVector& v) const {
  if (!same_point(u.base, v.base)) throw GeometryError("metric: base-point mismatch");
  return metric(u.base, u.dir, v.dir);
}

double SpaceModel::norm(const Point& p, const Vec& v) const {
  return std::sqrt(std::max(0.0, metric(p, v, v)));
}

Mat SpaceModel::frame(const Point& p) const {
  if (kind_ == SpaceKind::Product) {
    Mat b = Mat::Zero(chart_dim_, dim_);
    for_each_block([&](const SpaceModel& f, int co, int dof) {
      b.block(co, dof, f.chart_dim(), f.dim()) = f.frame(Point{p.coords.segment(co, f.chart_dim())});
    });
    return b;
  }
  // Metric Gram-Schmidt over tangent projections of the chart axes.
  Mat b(chart_dim_, dim_);
  int found = 0;
  for (int k = 0; k < chart_dim_ && found < dim_; ++k) {
    Vec v = project_to_tangent(p, Vec::Unit(chart_dim_, k));
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < found; ++j) v -= metric(p, b.col(j), v) * b.col(j);
    }
    const double nv = norm(p, v);
    if (nv < 1e-6) continue;
    b.col(found++) = v / nv;
  }
  if (found != dim_) throw GeometryError("frame: degenerate tangent space");
  return b;
}

Vec SpaceModel::to_frame(const Point& p, const Vec& v) const {
  const Mat b = frame(p);
  Vec c(dim_);
  for (int i = 0; i < dim_; ++i) c(i) = metric(p, b.col(i), v);
  return c;
}

Mat SpaceModel::to_frame_cols(const Point& p, const Mat& vs) const {
  const Mat b = frame(p);
  Mat c(dim_, vs.cols());
  for (long j = 0; j < vs.cols(); ++j) {
    for (int i = 0; i < dim_; ++i) c(i, j) = metric(p, b.col(i), vs.col(j));
  }
  return c;
}

Vec SpaceModel::from_frame(const Point& p, const Vec& coeffs) const {
  if (coeffs.size() != dim_) throw DimensionError("from_frame: dimension mismatch");
  return frame(p) * coeffs;
}

Mat SpaceModel::from_frame_cols(const Point& p, const Mat& coeffs) const {
  if (coeffs.rows() != dim_) throw DimensionError("from_frame: dimension mismatch");
  return frame(p) * coeffs;
}

Vec SpaceModel::curvature(const Point& p, const Vec& x, const Vec& y, const Vec& z) const {
  switch (kind_) {
    case SpaceKind::Euclidean: return Vec::Zero(chart_dim_);
    case SpaceKind::Sphere:
    case SpaceKind::Hyperbolic: {
      const double k = (kind_ == SpaceKind::Sphere ? 1.0 : -1.0) / (param_ * param_);
      return k * (metric(p, y, z) * x - metric(p, x, z) * y);
    }
    case SpaceKind::ComplexProjective: {
      // Fubini-Study; with g = (4/c) dot the c/4 prefactor cancels.
      const Vec jx = times_i(x);
      const Vec jy = times_i(y);
      const Vec jz = times_i(z);
      return y.dot(z) * x - x.dot(z) * y + jy.dot(z) * jx - jx.dot(z) * jy - 2.0 * jx.dot(y) * jz;
    }
    case SpaceKind::Product: {
      Vec out(chart_dim_);
      for_each_block([&](const SpaceModel& f, int co, int) {
        const int k = f.chart_dim();
        out.segment(co, k) = f.curvature(Point{p.coords.segment(co, k)}, x.segment(co, k),
                                         y.segment(co, k), z.segment(co, k));
      });
      return out;
    }
  }
  return Vec::Zero(chart_dim_);
}

TangentVector SpaceModel::curvature(const TangentVector& x, const TangentVector& y,
                                    const TangentVector& z) const {
  if (!same_point(x.base, y.base) || !same_point(x.base, z.base)) {
    throw GeometryError("curvature: base-point mismatch");
  }
  return TangentVector{x.base, curvature(x.base, x.dir, y.dir, z.dir)};
}

Vec SpaceModel::curvature_frame(const Point& p, const Vec& x, const Vec& y, const Vec& z) const {
  const Mat b = frame(p);
  const Vec r = curvature(p, b * x, b * y, b * z);
  Vec c(dim_);
  for (int i = 0; i < dim_; ++i) c(i) = metric(p, b.col(i), r);
  return c;
}

Vec SpaceModel::complex_structure(const Point& p, const Vec& u) const {
  if (kind_ != SpaceKind::ComplexProjective) {
    throw GeometryError("complex_structure: " + describe() + " is not complex projective");
  }
  (void)p;
  return times_i(u);
}

TangentVector SpaceModel::complex_structure(const TangentVector& u) const {
  return TangentVector{u.base, complex_structure(u.base, u.dir)};
}

Point SpaceModel::exp_map(const Point& p, const Vec& v, double t) const {
  const Vec& x = p.coords;
  switch (kind_) {
    case SpaceKind::Euclidean: return Point{x + t * v};
    case SpaceKind::Sphere:
    case SpaceKind::Hyperbolic: {
      const double a = norm(p, v);
      if (a == 0.0 || t == 0.0) return p;
      const double th = a * t / param_;
      if (kind_ == SpaceKind::Sphere) return Point{std::cos(th) * x + (param_ / a) * std::sin(th) * v};
      return Point{std::cosh(th) * x + (param_ / a) * std::sinh(th) * v};
    }
    case SpaceKind::ComplexProjective: {
      const double a = v.norm();
      if (a == 0.0 || t == 0.0) return p;
      return Point{std::cos(a * t) * x + (std::sin(a * t) / a) * v};
    }
    case SpaceKind::Product: {
      Vec out(chart_dim_);
      for_each_block([&](const SpaceModel& f, int co, int) {
        const int k = f.chart_dim();
        out.segment(co, k) = f.exp_map(Point{x.segment(co, k)}, v.segment(co, k), t).coords;
      });
      return Point{out};
    }
  }
  return p;
}

Point SpaceModel::exp_map(const TangentVector& v, double t) const { return exp_map(v.base, v.dir, t); }

Vec SpaceModel::geodesic_velocity(const Point& p, const Vec& v, double t) const {
  const Vec& x = p.coords;
  switch (kind_) {
    case SpaceKind::Euclidean: return v;
    case SpaceKind::Sphere:
    case SpaceKind::Hyperbolic: {
      const double a = norm(p, v);
      if (a == 0.0) return v;
      const double th = a * t / param_;
      if (kind_ == SpaceKind::Sphere) return -(a / param_) * std::sin(th) * x + std::cos(th) * v;
      return (a / param_) * std::sinh(th) * x + std::cosh(th) * v;
    }
    case SpaceKind::ComplexProjective: {
      const double a = v.norm();
      if (a == 0.0) return v;
      return -a * std::sin(a * t) * x + std::cos(a * t) * v;
    }
    case SpaceKind::Product: {
      Vec out(chart_dim_);
      for_each_block([&](const SpaceModel& f, int co, int) {
        const int k = f.chart_dim();
        out.segment(co, k) = f.geodesic_velocity(Point{x.segment(co, k)}, v.segment(co, k), t);
      });
      return out;
    }
  }
  return v;
}

TangentVector SpaceModel::geodesic_velocity(const TangentVector& v, double t) const {
  return TangentVector{exp_map(v, t), geodesic_velocity(v.base, v.dir, t)};
}

Vec SpaceModel::geodesic_transport(const Point& p, const Vec& v, double t, const Vec& w) const {
  switch (kind_) {
    case SpaceKind::Euclidean: return w;
    case SpaceKind::Sphere:
    case SpaceKind::Hyperbolic: {
      const double a = norm(p, v);
      if (a == 0.0) return w;
      const Vec u = v / a;
      const double c = metric(p, w, u);
      return c * geodesic_velocity(p, v, t) / a + (w - c * u);
    }
    case SpaceKind::ComplexProjective: {
      const double a = v.norm();
      if (a == 0.0) return w;
      const Vec u = v / a;
      const Vec iu = times_i(u);
      const double ca = u.dot(w);
      const double cb = iu.dot(w);
      const Vec vel = geodesic_velocity(p, v, t) / a;
      return ca * vel + cb * times_i(vel) + (w - ca * u - cb * iu);
    }
    case SpaceKind::Product: {
      Vec out(chart_dim_);
      for_each_block([&](const SpaceModel& f, int co, int) {
        const int k = f.chart_dim();
        out.segment(co, k) = f.geodesic_transport(Point{p.coords.segment(co, k)}, v.segment(co, k),
                                                  t, w.segment(co, k));
      });
      return out;
    }
  }
  return w;
}

Vec SpaceModel::covariant_derivative(const Point& p, const Vec& pdot, const Vec& field,
                                     const Vec& field_dot) const {
  switch (kind_) {
    case SpaceKind::Euclidean: return field_dot;
    case SpaceKind::Sphere:
    case SpaceKind::Hyperbolic: return project_to_tangent(p, field_dot);
    case SpaceKind::ComplexProjective: {
      const Vec z = p.coords / p.coords.norm();
      const double theta_dot = pdot.dot(times_i(z));
      return horizontal(z, field_dot) - theta_dot * times_i(field);
    }
    case SpaceKind::Product: {
      Vec out(chart_dim_);
      for_each_block([&](const SpaceModel& f, int co, int) {
        const int k = f.chart_dim();
        out.segment(co, k) = f.covariant_derivative(Point{p.coords.segment(co, k)}, pdot.segment(co, k),
                                                    field.segment(co, k), field_dot.segment(co, k));
      });
      return out;
    }
  }
  return field_dot;
}

Vec SpaceModel::transport_rate(const Point& p, const Vec& pdot, const Vec& v) const {
  const Vec& x = p.coords;
  switch (kind_) {
    case SpaceKind::Euclidean: return Vec::Zero(chart_dim_);
    case SpaceKind::Sphere: return -(v.dot(pdot) / x.squaredNorm()) * x;
    case SpaceKind::Hyperbolic: return (minkowski(v, pdot) / (-minkowski(x, x))) * x;
    case SpaceKind::ComplexProjective: {
      const Vec z = x / x.norm();
      const Vec iz = times_i(z);
      const double theta_dot = pdot.dot(iz);
      const Vec h = horizontal(z, pdot);
      return theta_dot * times_i(v) - v.dot(h) * z - v.dot(times_i(h)) * iz;
    }
    case SpaceKind::Product: {
      Vec out(chart_dim_);
      for_each_block([&](const SpaceModel& f, int co, int) {
        const int k = f.chart_dim();
        out.segment(co, k) =
            f.transport_rate(Point{x.segment(co, k)}, pdot.segment(co, k), v.segment(co, k));
      });
      return out;
    }
  }
  return Vec::Zero(chart_dim_);
}

Vec SpaceModel::covariant_hessian(const Point& p, const Vec& d_i, const Vec& d_j,
                                  const Vec& d_ij) const {
  switch (kind_) {
    case SpaceKind::Euclidean: return d_ij;
    case SpaceKind::Sphere:
    case SpaceKind::Hyperbolic: return project_to_tangent(p, d_ij);
    case SpaceKind::ComplexProjective: {
      const Vec z = p.coords / p.coords.norm();
      const Vec iz = times_i(z);
      return horizontal(z, d_ij) - d_j.dot(iz) * times_i(horizontal(z, d_i)) -
             d_i.dot(iz) * times_i(horizontal(z, d_j));
    }
    case SpaceKind::Product: {
      Vec out(chart_dim_);
      for_each_block([&](const SpaceModel& f, int co, int) {
        const int k = f.chart_dim();
        out.segment(co, k) = f.covariant_hessian(Point{p.coords.segment(co, k)}, d_i.segment(co, k),
                                                 d_j.segment(co, k), d_ij.segment(co, k));
      });
      return out;
    }
  }
  return d_ij;
}

}  // namespace codimred
