#include "codimred/frenet.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace codimred {

namespace {

constexpr double kDefectLimit = 1e-4;
constexpr double kDerivativeStep = 1e-5;

struct State {
  Vec x;
  Mat e;
};

double kappa(const std::vector<CurvatureFn>& k, std::size_t i, double t) {
  return i < k.size() && k[i] ? k[i](t) : 0.0;
}

double kappa_prime(const CurvatureFn& k, double t) {
  if (!k) return 0.0;
  return (k(t + kDerivativeStep) - k(t - kDerivativeStep)) / (2.0 * kDerivativeStep);
}

// Right-hand side of the Frenet system, chart vectors.
Mat prescribed(const std::vector<CurvatureFn>& k, double t, const Mat& e) {
  Mat r = Mat::Zero(e.rows(), e.cols());
  for (long j = 0; j + 1 < e.cols(); ++j) {
    const double kj = kappa(k, static_cast<std::size_t>(j), t);
    r.col(j) += kj * e.col(j + 1);
    r.col(j + 1) -= kj * e.col(j);
  }
  return r;
}

State derivative(const SpaceModel& s, const std::vector<CurvatureFn>& k, double t, const State& y) {
  State d{y.e.col(0), prescribed(k, t, y.e)};
  const Point p{y.x};
  for (long j = 0; j < y.e.cols(); ++j) d.e.col(j) += s.transport_rate(p, d.x, y.e.col(j));
  return d;
}

State rk4(const SpaceModel& s, const std::vector<CurvatureFn>& k, double t, const State& y, double h) {
  auto axpy = [](const State& a, double c, const State& b) { return State{a.x + c * b.x, a.e + c * b.e}; };
  const State k1 = derivative(s, k, t, y);
  const State k2 = derivative(s, k, t + h / 2, axpy(y, h / 2, k1));
  const State k3 = derivative(s, k, t + h / 2, axpy(y, h / 2, k2));
  const State k4 = derivative(s, k, t + h, axpy(y, h, k3));
  return State{y.x + h / 6 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x),
               y.e + h / 6 * (k1.e + 2 * k2.e + 2 * k3.e + k4.e)};
}

double frame_defect(const SpaceModel& s, const Point& p, const Mat& e) {
  double d = 0.0;
  for (long i = 0; i < e.cols(); ++i) {
    d = std::max(d, s.tangency_defect(p, e.col(i)));
    for (long j = i; j < e.cols(); ++j) {
      d = std::max(d, std::abs(s.metric(p, e.col(i), e.col(j)) - (i == j ? 1.0 : 0.0)));
    }
  }
  return d;
}

// Retract onto the model, project to the tangent space, Gram-Schmidt.
State correct(const SpaceModel& s, const State& y) {
  const Point p = s.normalize(y.x);
  State out{p.coords, Mat(y.e.rows(), y.e.cols())};
  for (long i = 0; i < y.e.cols(); ++i) {
    Vec v = s.project_to_tangent(p, y.e.col(i));
    for (long j = 0; j < i; ++j) v -= s.metric(p, out.e.col(j), v) * out.e.col(j);
    const double n = s.norm(p, v);
    if (!(n > 0.5)) throw GeometryError("frenet: frame degenerated");
    out.e.col(i) = v / n;
  }
  return out;
}

void validate(const FrenetData& data) {
  const SpaceModel& s = data.space;
  const int d = s.dim();
  if (data.frame.rows() != s.chart_dim() || data.frame.cols() != d) {
    throw DimensionError("frenet: initial frame must have dim columns of chart dimension");
  }
  if (static_cast<int>(data.curvatures.size()) > d - 1) throw DimensionError("frenet: too many curvatures");
  if (!(data.length > 0.0) || !std::isfinite(data.length)) throw Error("frenet: arc length must be positive");
  if (data.steps < 2) throw Error("frenet: need at least two steps");
  const Point p = s.point(data.start.coords);
  if (frame_defect(s, p, data.frame) > 1e-9) throw GeometryError("frenet: initial frame is not orthonormal");

  // Curvatures before the first identically vanishing one must be positive.
  const int probes = std::min(data.steps, 256);
  bool vanished = false;
  for (std::size_t i = 0; i < data.curvatures.size() && !vanished; ++i) {
    bool zero = true;
    bool positive = true;
    for (int k = 0; k <= probes; ++k) {
      const double v = kappa(data.curvatures, i, data.length * k / probes);
      if (!std::isfinite(v)) throw Error("frenet: curvature is not finite");
      zero = zero && v == 0.0;
      positive = positive && v > 0.0;
    }
    if (zero) {
      vanished = true;
    } else if (!positive) {
      std::ostringstream os;
      os << "frenet: kappa_" << i + 1 << " must be positive";
      throw GeometryError(os.str());
    }
  }
}

}  // namespace

FrenetResult frenet_integrate(const FrenetData& data) {
  validate(data);
  const SpaceModel& s = data.space;
  const int d = s.dim();
  FrenetResult r{s, data.curvatures, 0.0, {}, {}, {}, {}, {}, 0.0};
  r.curvatures.resize(static_cast<std::size_t>(std::max(d - 1, 0)));
  r.step = data.length / data.steps;
  const std::size_t n = static_cast<std::size_t>(data.steps) + 1;
  r.t.reserve(n);
  r.curve.samples.reserve(n);
  r.frames.reserve(n);

  State y{data.start.coords, data.frame};
  for (int k = 0; k <= data.steps; ++k) {
    const double t = k * r.step;
    if (k > 0) {
      const State raw = rk4(s, r.curvatures, t - r.step, y, r.step);
      const double defect = frame_defect(s, s.normalize(raw.x), raw.e);
      if (defect > kDefectLimit) {
        std::ostringstream os;
        os << "frenet: frame defect " << defect << " at t = " << t;
        throw GeometryError(os.str());
      }
      r.max_orthonormality_drift = std::max(r.max_orthonormality_drift, defect / r.step);
      y = correct(s, raw);
    }
    r.t.push_back(t);
    r.curve.samples.push_back(Point{y.x});
    r.frames.push_back(y.e);
    const double k1 = kappa(r.curvatures, 0, t);
    r.h.push_back(k1 * y.e.col(1 % d));
    Vec nh = r.curvatures.empty() ? Vec(Vec::Zero(s.chart_dim())) : Vec(kappa_prime(r.curvatures[0], t) * y.e.col(1 % d));
    if (d > 2) nh += k1 * kappa(r.curvatures, 1, t) * y.e.col(2);
    r.nabla_h.push_back(nh);
  }
  return r;
}

FrenetDiagnostics frenet_diagnostics(const FrenetResult& r) {
  const SpaceModel& s = r.space;
  FrenetDiagnostics out;
  const double h = r.step;
  // Fourth-order central differences.
  auto diff = [h](const Vec& m2, const Vec& m1, const Vec& p1, const Vec& p2) -> Vec {
    return (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
  };
  const auto& x = r.curve.samples;
  for (std::size_t k = 2; k + 2 < r.t.size(); ++k) {
    const Point& p = x[k];
    const Vec v = diff(x[k - 2].coords, x[k - 1].coords, x[k + 1].coords, x[k + 2].coords);
    out.speed_defect = std::max(out.speed_defect, std::abs(s.norm(p, s.project_to_tangent(p, v)) - 1.0));
    const Mat& e = r.frames[k];
    const Mat rhs = prescribed(r.curvatures, r.t[k], e);
    for (long i = 0; i < e.cols(); ++i) {
      const Vec de = diff(r.frames[k - 2].col(i), r.frames[k - 1].col(i), r.frames[k + 1].col(i), r.frames[k + 2].col(i));
      const Vec cov = s.covariant_derivative(p, e.col(0), e.col(i), de);
      out.frenet_residual = std::max(out.frenet_residual, s.norm(p, cov - rhs.col(i)));
    }
  }
  return out;
}

FrenetState frenet_state(const FrenetResult& r, double t) {
  const double len = r.length();
  if (!std::isfinite(t) || t < -r.step || t > len + r.step) {
    std::ostringstream os;
    os << "frenet: arc parameter " << t << " outside [0, " << len << "]";
    throw GeometryError(os.str());
  }
  const long last = static_cast<long>(r.t.size()) - 1;
  const long k = std::clamp(std::lround(t / r.step), 0L, last);
  const auto i = static_cast<std::size_t>(k);
  const double dt = t - r.t[i];
  if (dt == 0.0) return FrenetState{r.curve.samples[i], r.frames[i]};
  const State y = correct(r.space, rk4(r.space, r.curvatures, r.t[i], State{r.curve.samples[i].coords, r.frames[i]}, dt));
  return FrenetState{Point{y.x}, y.e};
}

MeanCurvatureApparatus mean_curvature_apparatus(const FrenetResult& r) {
  const SpaceModel& s = r.space;
  MeanCurvatureApparatus out;
  out.independence_margin = INFINITY;
  for (std::size_t k = 0; k < r.t.size(); ++k) {
    const Point& p = r.curve.samples[k];
    const double hn = s.norm(p, r.h[k]);
    if (!(hn >= 1e-8)) {
      std::ostringstream os;
      os << "frenet: kappa_1 vanishes at t = " << r.t[k];
      throw GeometryError(os.str());
    }
    Mat m(s.dim(), 2);
    m.col(0) = s.to_frame(p, r.h[k]);
    m.col(1) = s.to_frame(p, r.nabla_h[k]);
    out.h.push_back(m.col(0));
    out.nabla_h.push_back(m.col(1));
    out.v.push_back(orthonormalize(m));
    const double sigma = Eigen::JacobiSVD<Mat>(m).singularValues()(1);
    out.independence_margin = std::min(out.independence_margin, sigma / hn);
  }
  return out;
}

Immersion frenet_immersion(std::shared_ptr<const FrenetResult> r) {
  if (!r) throw Error("frenet: missing result");
  const SpaceModel s = r->space;
  return Immersion(
      s, 1, [r](const Vec& u) { return frenet_state(*r, u(0)).point.coords; },
      [r](const Vec& u) {
        Mat j(r->space.chart_dim(), 1);
        j.col(0) = frenet_state(*r, u(0)).frame.col(0);
        return j;
      });
}

NormalSubbundle frenet_bundle(std::shared_ptr<const FrenetResult> r) {
  if (!r) throw Error("frenet: missing result");
  if (r->dim() < 3) throw DimensionError("frenet: span{H, nabla H} needs dimension at least 3");
  return NormalSubbundle(frenet_immersion(r), 2, [r](const Vec& u) {
    const double t = u(0);
    const Mat e = frenet_state(*r, t).frame;
    const double k1 = kappa(r->curvatures, 0, t);
    Mat m(e.rows(), 2);
    m.col(0) = k1 * e.col(1);
    m.col(1) = kappa_prime(r->curvatures[0], t) * e.col(1) + k1 * kappa(r->curvatures, 1, t) * e.col(2);
    return m;
  });
}

std::vector<Vec> arc_grid(double length, int samples) {
  if (samples < 1) throw Error("frenet: need a positive sample count");
  std::vector<Vec> g;
  for (int k = 0; k < samples; ++k) g.push_back(Vec::Constant(1, length * (k + 0.5) / samples));
  return g;
}

std::vector<Vec> arc_path(double length, int samples) {
  if (samples < 1) throw Error("frenet: need a positive sample count");
  std::vector<Vec> c;
  for (int k = 0; k <= samples; ++k) c.push_back(Vec::Constant(1, length * (0.005 + 0.99 * k / samples)));
  return c;
}

FrenetScenario run_frenet_scenario(const FrenetData& data, const FrenetChecks& checks) {
  auto r = std::make_shared<const FrenetResult>(frenet_integrate(data));
  NormalSubbundle v = frenet_bundle(r);
  const std::vector<Vec> grid = arc_grid(r->length(), checks.samples);
  std::vector<CheckReport> reports;
  reports.push_back(check_first_normal_contained(v, grid, checks.first_normal_tol));
  reports.push_back(check_parallel_subbundle(v, arc_path(r->length(), checks.curve_samples), checks.parallel_tol));
  reports.push_back(check_curvature_invariant_along(v, grid, checks.invariance_tol));
  return FrenetScenario{r, std::move(v), std::move(reports)};
}

Mat default_frenet_frame(const SpaceModel& space) {
  const Point o = space.origin();
  if (space.kind() != SpaceKind::ComplexProjective || space.dim() < 4) return space.frame(o);
  // Unit chart vectors have metric length 2 / sqrt(c).
  const double unit = space.scale();
  Mat seed = Mat::Zero(space.chart_dim(), 3);
  seed(2, 0) = 1.0;
  seed(3, 1) = std::cos(1.0);
  seed(4, 1) = std::sin(1.0);
  seed(5, 2) = 1.0;
  Mat e(space.chart_dim(), space.dim());
  e.leftCols(3) = seed / unit;
  const Mat base = space.frame(o);
  int found = 3;
  for (long k = 0; k < base.cols() && found < space.dim(); ++k) {
    Vec v = base.col(k);
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < found; ++j) v -= space.metric(o, e.col(j), v) * e.col(j);
    }
    const double n = space.norm(o, v);
    if (n < 1e-6) continue;
    e.col(found++) = v / n;
  }
  return e;
}

FrenetData cp2_counterexample_data(double length, int steps, double kappa3) {
  const SpaceModel cp2 = SpaceModel::complex_projective(2);
  auto one = [](double) { return 1.0; };
  return FrenetData{cp2, cp2.origin(), default_frenet_frame(cp2), {one, one, [kappa3](double) { return kappa3; }},
                    length, steps};
}

FrenetData s4_transplant_data(double length, int steps, double kappa3) {
  const SpaceModel s4 = SpaceModel::sphere(4);
  auto one = [](double) { return 1.0; };
  return FrenetData{s4, s4.origin(), default_frenet_frame(s4), {one, one, [kappa3](double) { return kappa3; }},
                    length, steps};
}

FrenetScenario build_cp2_counterexample(double length, int steps) {
  return run_frenet_scenario(cp2_counterexample_data(length, steps));
}

}  // namespace codimred
