#include "codimred/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace codimred {

namespace {

std::string fmt(const Vec& u) {
  std::ostringstream os;
  os.precision(6);
  os << "(";
  for (long i = 0; i < u.size(); ++i) os << (i ? ", " : "") << u(i);
  os << ")";
  return os.str();
}

// Target distance between consecutive samples of curves built for transport.
double sample_spacing(const SpaceModel& space) { return 0.4 * TransportOptions{}.max_step * space.scale(); }

struct Worst {
  double value = -1.0;
  std::string where;

  template <class Fn>
  void offer(double v, Fn&& describe) {
    if (v > value || std::isnan(v)) {
      value = v;
      where = describe();
    }
  }
};

double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

Vec concat(const Vec& a, const Vec& b) {
  Vec out(a.size() + b.size());
  out << a, b;
  return out;
}

}  // namespace

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Inconclusive: return "INCONCLUSIVE";
    case Verdict::Fail: return "FAIL";
  }
  return "FAIL";
}

CheckReport make_report(std::string name, double residual, double tolerance, std::string location) {
  if (!(tolerance > 0.0)) throw Error("check tolerance must be positive");
  CheckReport r;
  r.name = std::move(name);
  r.residual = residual;
  r.tolerance = tolerance;
  r.location = std::move(location);
  r.pass = residual < tolerance;
  if (r.pass) {
    r.verdict = Verdict::Pass;
  } else if (!std::isfinite(residual) || residual > 10.0 * tolerance) {
    r.verdict = Verdict::Fail;
  } else {
    r.verdict = Verdict::Inconclusive;
    r.diagnostics.push_back("inconclusive: residual between tolerance and 10x tolerance; refine grids");
  }
  return r;
}

CheckReport check_first_normal_contained(const NormalSubbundle& v, const std::vector<Vec>& grid, double tol) {
  if (grid.empty()) throw Error("first normal check: empty grid");
  const Immersion& f = v.immersion();
  Worst worst;
  std::vector<double> trace;
  int max_dim = 0;
  for (const Vec& u : grid) {
    const Subspace n1 = first_normal_space(f, u);
    max_dim = std::max(max_dim, n1.dim());
    const double r = subspace_residual(n1, v.subspace(u));
    trace.push_back(r);
    worst.offer(r, [&] { return "u=" + fmt(u); });
  }
  CheckReport rep = make_report("first_normal_contained", worst.value, tol, worst.where);
  rep.trace = std::move(trace);
  rep.metrics["max_first_normal_dim"] = max_dim;
  return rep;
}

CheckReport check_parallel_subbundle(const NormalSubbundle& v, const std::vector<Vec>& curve, double tol) {
  if (curve.size() < 2) throw Error("parallel check: curve needs at least two samples");
  const Immersion& f = v.immersion();
  const SpaceModel& space = f.space();
  Worst worst;
  std::vector<double> trace;
  Subspace prev(space.chart_dim());
  for (std::size_t k = 0; k < curve.size(); ++k) {
    const Vec& u = curve[k];
    const Subspace vs = v.subspace(u);
    // Compare chart spans; frame(p) itself may turn quickly between samples.
    const Subspace chart_span = orthonormalize(v.frame(u));
    if (k > 0 && subspace_residual(chart_span, prev) > 0.5) {
      throw GeometryError("parallel check: frame discontinuity between samples " + std::to_string(k - 1) +
                          " and " + std::to_string(k));
    }
    prev = chart_span;
    const Vec dir = (k == 0) ? Vec(curve[1] - curve[0])
                    : (k + 1 == curve.size()) ? Vec(curve[k] - curve[k - 1])
                                              : Vec(curve[k + 1] - curve[k - 1]);
    const Point p = f.point(u);
    const Vec x = space.to_frame(p, f.differential(u) * dir);
    const Mat frame = v.frame(u);
    double r = 0.0;
    for (long j = 0; j < frame.cols(); ++j) {
      const Vec nd = normal_derivative(f, u, x, [&v, j](const Vec& w) { return Vec(v.frame(w).col(j)); });
      const double scale = space.norm(p, frame.col(j)) * x.norm();
      r = std::max(r, (nd - project(vs, nd)).norm() / scale);
    }
    trace.push_back(r);
    worst.offer(r, [&] { return "u=" + fmt(u); });
  }
  CheckReport rep = make_report("parallel_subbundle", worst.value, tol, worst.where);
  rep.trace = std::move(trace);
  return rep;
}

CheckReport check_curvature_invariant(const SpaceModel& space, const Point& p, const Subspace& w, double tol) {
  if (w.ambient_dim() != space.dim()) throw DimensionError("curvature invariance: subspace dimension mismatch");
  const Mat& b = w.basis();
  Worst worst;
  worst.value = 0.0;
  for (long i = 0; i < b.cols(); ++i) {
    for (long j = i + 1; j < b.cols(); ++j) {
      for (long l = 0; l < b.cols(); ++l) {
        const Vec r = space.curvature_frame(p, b.col(i), b.col(j), b.col(l));
        const double res = containment_residual(w, r, 1e-10);
        worst.offer(res, [&] {
          return "basis triple (" + std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(l) + ")";
        });
      }
    }
  }
  return make_report("curvature_invariant", worst.value, tol, worst.where);
}

CheckReport check_curvature_invariant_along(const NormalSubbundle& v, const std::vector<Vec>& grid, double tol) {
  if (grid.empty()) throw Error("curvature invariance: empty grid");
  const Immersion& f = v.immersion();
  Worst worst;
  std::vector<double> trace;
  for (const Vec& u : grid) {
    const Subspace w = span_union(tangent_space(f, u), v.subspace(u));
    const double r = check_curvature_invariant(f.space(), f.point(u), w, tol).residual;
    trace.push_back(r);
    worst.offer(r, [&] { return "u=" + fmt(u); });
  }
  CheckReport rep = make_report("curvature_invariant", worst.value, tol, worst.where);
  rep.trace = std::move(trace);
  return rep;
}

Mat orthonormal_chart_frame(const SpaceModel& space, const Point& p, const Mat& columns) {
  Mat out = columns;
  for (long j = 0; j < out.cols(); ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (long i = 0; i < j; ++i) out.col(j) -= space.metric(p, out.col(i), out.col(j)) * out.col(i);
    }
    const double n = space.norm(p, out.col(j));
    if (!(n > 1e-12)) throw GeometryError("frame is rank deficient");
    out.col(j) /= n;
  }
  return out;
}

Vec Envelope::param(const Vec& u, const Vec& s) const {
  if (u.size() != immersion().param_dim() || s.size() != bundle_.rank()) {
    throw DimensionError("envelope: parameter dimension mismatch");
  }
  return concat(u, s);
}

Envelope build_envelope(const NormalSubbundle& v, const std::vector<Vec>& u_nodes, const EnvelopeOptions& opts) {
  if (u_nodes.empty()) throw Error("envelope: no parameter nodes");
  if (!(opts.epsilon > 0.0)) throw Error("envelope: epsilon must be positive");
  if (opts.s_nodes_per_axis < 1 || opts.max_shrinks < 0) throw Error("envelope: invalid grid options");
  const Immersion& f = v.immersion();
  const SpaceModel& space = f.space();
  const int m = f.param_dim();
  const int k = v.rank();
  for (const Vec& u : u_nodes) (void)v.subspace(u);

  Immersion map(space, m + k, [v, m, k](const Vec& q) {
    const Immersion& base = v.immersion();
    const Vec u = q.head(m);
    const Vec s = q.tail(k);
    Vec x = base.eval(u);
    if (k == 0 || s.isZero(0.0)) return x;
    const Point p{x};
    const Mat e = orthonormal_chart_frame(base.space(), p, v.frame(u));
    return base.space().exp_map(p, e * s, 1.0).coords;
  });
  map.set_fd_steps(f.fd_step(), f.fd_step2());

  Envelope env(v, map);
  double eps = opts.epsilon;
  for (int shrink = 0;; ++shrink) {
    // Bundle-coordinate nodes inside the eps-ball.
    std::vector<Vec> s_nodes;
    const int n = opts.s_nodes_per_axis;
    long total = 1;
    for (int i = 0; i < k; ++i) total *= n;
    for (long idx = 0; idx < total; ++idx) {
      Vec s(k);
      long rest = idx;
      for (int i = 0; i < k; ++i) {
        const long c = rest % n;
        rest /= n;
        s(i) = (n == 1) ? 0.0 : -eps + 2.0 * eps * static_cast<double>(c) / (n - 1);
      }
      if (s.norm() <= eps * (1.0 + 1e-12)) s_nodes.push_back(s);
    }
    std::vector<Vec> nodes;
    for (const Vec& u : u_nodes) {
      for (const Vec& s : s_nodes) nodes.push_back(concat(u, s));
    }
    bool full_rank = true;
    std::string bad;
    for (const Vec& q : nodes) {
      const Point x = map.point(q);
      const Mat d = space.to_frame_cols(x, map.differential(q));
      const Eigen::JacobiSVD<Mat> svd(d);
      const Vec sv = svd.singularValues();
      if (sv.size() < m + k || !(sv(sv.size() - 1) >= opts.min_singular_ratio * sv(0))) {
        full_rank = false;
        bad = fmt(q);
        break;
      }
    }
    if (full_rank) {
      env.epsilon_ = eps;
      env.shrinks_ = shrink;
      env.nodes_ = std::move(nodes);
      return env;
    }
    if (shrink == opts.max_shrinks) {
      throw GeometryError("envelope: differential is rank deficient at " + bad + " after " +
                          std::to_string(opts.max_shrinks) + " halvings of epsilon");
    }
    eps *= 0.5;
  }
}

CheckReport check_totally_geodesic(const Envelope& env, double tol, std::uint64_t seed, int pairs_per_node) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  const Immersion& map = env.map();
  Worst worst;
  std::vector<double> trace;
  for (const Vec& q : env.nodes()) {
    const Subspace t = tangent_space(map, q);
    double r = 0.0;
    for (int trial = 0; trial < pairs_per_node; ++trial) {
      Vec a(t.dim());
      Vec b(t.dim());
      for (int i = 0; i < t.dim(); ++i) a(i) = g(rng);
      for (int i = 0; i < t.dim(); ++i) b(i) = g(rng);
      const Vec x = t.basis() * a;
      const Vec y = t.basis() * b;
      r = std::max(r, second_fundamental_form(map, q, x, y).norm() / (x.norm() * y.norm()));
    }
    trace.push_back(r);
    worst.offer(r, [&] { return "(u,s)=" + fmt(q); });
  }
  CheckReport rep = make_report("totally_geodesic", worst.value, tol, worst.where);
  rep.trace = std::move(trace);
  rep.metrics["epsilon"] = env.epsilon();
  rep.metrics["shrinks"] = env.shrinks();
  rep.metrics["seed"] = static_cast<double>(seed);
  return rep;
}

std::vector<std::vector<Vec>> grid_loops(const Envelope& env, int count) {
  const int m = env.immersion().param_dim();
  const int k = env.bundle().rank();
  const int d = m + k;
  std::vector<Vec> bases;
  for (const Vec& q : env.nodes()) {
    if (q.tail(k).isZero(0.0)) bases.push_back(q);
  }
  std::vector<double> width(static_cast<std::size_t>(d), 0.5 * env.epsilon());
  for (int i = 0; i < m; ++i) {
    double lo = bases.front()(i);
    double hi = lo;
    for (const Vec& b : bases) {
      lo = std::min(lo, b(i));
      hi = std::max(hi, b(i));
    }
    width[static_cast<std::size_t>(i)] = (hi > lo) ? std::min(0.25 * (hi - lo), 0.5) : 0.25;
  }
  std::vector<std::pair<int, int>> axes;
  for (int a = 0; a < d; ++a) {
    for (int b = a + 1; b < d; ++b) axes.emplace_back(a, b);
  }
  std::vector<std::vector<Vec>> loops;
  for (int i = 0; i < count; ++i) {
    const Vec& base = bases[static_cast<std::size_t>(i) % bases.size()];
    if (axes.empty()) {
      Vec end = base;
      end(0) += width[0];
      loops.push_back({base, end});
      continue;
    }
    const auto [a, b] = axes[static_cast<std::size_t>(i) % axes.size()];
    const double sign = ((i / static_cast<int>(axes.size())) % 2 == 0) ? 1.0 : -1.0;
    Vec da = Vec::Zero(d);
    Vec db = Vec::Zero(d);
    da(a) = width[static_cast<std::size_t>(a)];
    db(b) = sign * width[static_cast<std::size_t>(b)];
    loops.push_back({base, Vec(base + da), Vec(base + da + db), Vec(base + db), base});
  }
  return loops;
}

std::vector<Vec> snap_to_envelope(const Envelope& env, const DiscretizedCurve& curve) {
  const Immersion& map = env.map();
  const SpaceModel& space = map.space();
  const double tol = 1e-6 * space.scale();
  auto residual = [&](const Vec& q, const Point& x) {
    const Point e = map.point(q);
    return space.to_frame(e, x.coords - e.coords);
  };
  std::vector<Vec> out;
  Vec q;
  for (const Point& x : curve.samples) {
    if (out.empty()) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec& node : env.nodes()) {
        const double r = residual(node, x).norm();
        if (r < best) {
          best = r;
          q = node;
        }
      }
    }
    for (int it = 0; it < 30; ++it) {
      const Point e = map.point(q);
      const Mat jac = space.to_frame_cols(e, map.differential(q));
      const Vec r = space.to_frame(e, x.coords - e.coords);
      const Vec step = jac.colPivHouseholderQr().solve(r);
      q += step;
      if (step.norm() < 1e-14) break;
    }
    const double dist = residual(q, x).norm();
    if (!(dist <= tol)) {
      throw GeometryError("snap: curve sample is " + std::to_string(dist) + " away from the envelope");
    }
    out.push_back(q);
  }
  return out;
}

namespace {

// Samples a parameter polyline on the envelope; vertices where the path
// turns become breakpoints.
DiscretizedCurve path_curve(const Immersion& map, const std::vector<Vec>& path) {
  const SpaceModel& space = map.space();
  const double spacing = sample_spacing(space);
  DiscretizedCurve c;
  c.samples.push_back(map.point(path.front()));
  for (std::size_t e = 0; e + 1 < path.size(); ++e) {
    const Vec a = path[e];
    const Vec b = path[e + 1];
    auto at = [&](double t) { return Vec((1.0 - t) * a + t * b); };
    const int probe = 8;
    double len = 0.0;
    Point prev = map.point(a);
    for (int i = 1; i <= probe; ++i) {
      const Point next = map.point(at(static_cast<double>(i) / probe));
      len += space.norm(prev, space.project_to_tangent(prev, next.coords - prev.coords));
      prev = next;
    }
    const int n = std::max(1, static_cast<int>(std::ceil(len / spacing)));
    if (e > 0) {
      const Vec d0 = path[e] - path[e - 1];
      const Vec d1 = b - a;
      const double cosang = d0.dot(d1) / std::max(1e-300, d0.norm() * d1.norm());
      if (cosang < 0.999) c.breakpoints.push_back(c.samples.size() - 1);
    }
    for (int i = 1; i <= n; ++i) c.samples.push_back(map.point(i == n ? b : at(static_cast<double>(i) / n)));
  }
  return c;
}

}  // namespace

CheckReport check_tangent_preservation(const Envelope& env, const std::vector<std::vector<Vec>>& paths,
                                       double tol) {
  if (paths.empty()) throw Error("tangent preservation: no loops");
  const Immersion& map = env.map();
  Worst worst;
  std::vector<double> trace;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto& path = paths[i];
    if (path.size() < 2) throw Error("tangent preservation: path needs at least two vertices");
    const DiscretizedCurve c = path_curve(map, path);
    const Subspace t0 = tangent_space(map, path.front());
    const Subspace t1 = tangent_space(map, path.back());
    const FrameTransport moved = transport_frame(map.space(), c, t0);
    const double r = subspace_residual(moved.subspace, t1);
    trace.push_back(r);
    worst.offer(r, [&] { return "loop " + std::to_string(i) + " from (u,s)=" + fmt(path.front()); });
  }
  CheckReport rep = make_report("tangent_preservation", worst.value, tol, worst.where);
  rep.trace = std::move(trace);
  rep.metrics["loops"] = static_cast<double>(paths.size());
  return rep;
}

// Jacobi fields.

std::vector<JacobiState> jacobi_trajectory(const SpaceModel& space, const TangentVector& velocity,
                                           const TangentVector& j0, const TangentVector& j0dot, double t_end,
                                           int samples, const JacobiOptions& opts) {
  if (samples < 1) throw Error("jacobi: need at least one sample");
  if (!(opts.steps_per_unit_length > 0.0)) throw Error("jacobi: step density must be positive");
  const Point& p = velocity.base;
  if (!space.same_point(j0.base, p, 1e-10) || !space.same_point(j0dot.base, p, 1e-10)) {
    throw GeometryError("jacobi: initial conditions are not based at the geodesic start");
  }
  const Vec& v = velocity.dir;
  (void)space.tangent(p, v);
  (void)space.tangent(p, j0.dir);
  (void)space.tangent(p, j0dot.dir);
  const int d = space.dim();
  const Mat f0 = space.frame(p);

  auto frame_at = [&](double t) {
    Mat e(space.chart_dim(), d);
    for (int a = 0; a < d; ++a) e.col(a) = space.geodesic_transport(p, v, t, f0.col(a));
    return e;
  };
  // Jacobi operator K_ab = <R(E_b, g')g', E_a> in the parallel frame.
  auto jacobi_operator = [&](double t) {
    const Point x = space.exp_map(p, v, t);
    const Vec g = space.geodesic_velocity(p, v, t);
    const Mat e = frame_at(t);
    Mat k(d, d);
    for (int b = 0; b < d; ++b) {
      const Vec r = space.curvature(x, e.col(b), g, g);
      for (int a = 0; a < d; ++a) k(a, b) = space.metric(x, e.col(a), r);
    }
    return k;
  };

  Vec c = space.to_frame(p, j0.dir);
  Vec cd = space.to_frame(p, j0dot.dir);
  auto state = [&](double t) {
    const Point x = space.exp_map(p, v, t);
    const Mat e = frame_at(t);
    return JacobiState{TangentVector{x, e * c}, TangentVector{x, e * cd}};
  };

  std::vector<JacobiState> out;
  out.push_back(state(0.0));
  const double speed = space.norm(p, v);
  const double dt_sample = t_end / samples;
  const int sub = std::max(4, static_cast<int>(std::ceil(std::abs(dt_sample) * std::max(speed, 1e-12) *
                                                         opts.steps_per_unit_length)));
  const double h = dt_sample / sub;
  Mat k_here = jacobi_operator(0.0);
  for (int sidx = 0; sidx < samples; ++sidx) {
    for (int step = 0; step < sub; ++step) {
      const double t = sidx * dt_sample + step * h;
      const Mat k_mid = jacobi_operator(t + 0.5 * h);
      const Mat k_next = jacobi_operator(t + h);
      const Vec a1 = cd;
      const Vec b1 = -k_here * c;
      const Vec a2 = cd + 0.5 * h * b1;
      const Vec b2 = -k_mid * (c + 0.5 * h * a1);
      const Vec a3 = cd + 0.5 * h * b2;
      const Vec b3 = -k_mid * (c + 0.5 * h * a2);
      const Vec a4 = cd + h * b3;
      const Vec b4 = -k_next * (c + h * a3);
      c += (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
      cd += (h / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
      k_here = k_next;
    }
    out.push_back(state((sidx + 1) * dt_sample));
  }
  return out;
}

JacobiState jacobi_propagate(const SpaceModel& space, const TangentVector& velocity, const TangentVector& j0,
                             const TangentVector& j0dot, double t, const JacobiOptions& opts) {
  return jacobi_trajectory(space, velocity, j0, j0dot, t, 1, opts).back();
}

JacobiConditions random_jacobi_conditions(const Subspace& w0, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  JacobiConditions out;
  for (int i = 0; i < count; ++i) {
    Vec a(w0.dim());
    Vec b(w0.dim());
    for (int j = 0; j < w0.dim(); ++j) a(j) = g(rng);
    for (int j = 0; j < w0.dim(); ++j) b(j) = g(rng);
    out.emplace_back(w0.basis() * a, w0.basis() * b);
  }
  return out;
}

CheckReport check_jacobi_containment(const SpaceModel& space, const TangentVector& velocity, const Subspace& w0,
                                     const JacobiConditions& conditions, double t_end, double tol, int samples) {
  if (conditions.empty()) throw Error("jacobi containment: no initial conditions");
  if (samples < 1) throw Error("jacobi containment: need at least one sample");
  const Point& p = velocity.base;
  const Vec& v = velocity.dir;
  const CheckReport inv = check_curvature_invariant(space, p, w0, 1e-9);

  const double len = std::abs(t_end) * space.norm(p, v);
  const int refine = std::max(1, static_cast<int>(std::ceil(len / (samples * sample_spacing(space)))));
  const DiscretizedCurve geo = sample_curve(
      space, [&](double t) { return space.exp_map(p, v, t).coords; }, 0.0, t_end, samples * refine);
  const auto moved = transport_along(space, geo, space.from_frame_cols(p, w0.basis()));

  std::vector<Subspace> wt;
  for (int kk = 0; kk <= samples; ++kk) {
    const std::size_t idx = static_cast<std::size_t>(kk * refine);
    wt.push_back(orthonormalize(space.to_frame_cols(geo.samples[idx], moved[idx])));
  }
  std::vector<double> trace(static_cast<std::size_t>(samples) + 1, 0.0);
  Worst worst;
  const int generic = std::max(1, static_cast<int>(std::lround(0.618 * samples)));
  Mat spread(space.dim(), static_cast<long>(conditions.size()));
  for (std::size_t ci = 0; ci < conditions.size(); ++ci) {
    const auto& [a, b] = conditions[ci];
    const auto traj = jacobi_trajectory(space, velocity, TangentVector{p, space.from_frame(p, a)},
                                        TangentVector{p, space.from_frame(p, b)}, t_end, samples);
    for (int kk = 0; kk <= samples; ++kk) {
      const auto& st = traj[static_cast<std::size_t>(kk)];
      const Vec jf = space.to_frame(st.j.base, st.j.dir);
      if (kk == generic) spread.col(static_cast<long>(ci)) = jf;
      const double r = containment_residual(wt[static_cast<std::size_t>(kk)], jf, 1e-12);
      trace[static_cast<std::size_t>(kk)] = std::max(trace[static_cast<std::size_t>(kk)], r);
      worst.offer(r, [&] {
        std::ostringstream os;
        os << "condition " << ci << " at t=" << t_end * kk / samples;
        return os.str();
      });
    }
  }
  CheckReport rep = make_report("jacobi_containment", worst.value, tol, worst.where);
  rep.trace = std::move(trace);
  rep.metrics["w0_invariance_residual"] = inv.residual;
  const int span = orthonormalize(spread, Tolerance{1e-6, 1e-6}).dim();
  rep.metrics["jacobi_span_dim"] = span;
  rep.metrics["w0_dim"] = w0.dim();
  if (!inv.pass) rep.diagnostics.push_back("W0 is not curvature invariant (residual " + std::to_string(inv.residual) + ")");
  if (span != w0.dim()) {
    rep.diagnostics.push_back("Jacobi fields span " + std::to_string(span) + " dimensions, W0 has " +
                              std::to_string(w0.dim()));
  }
  return rep;
}

// Homotopy sheets.

HomotopySheet::HomotopySheet(SpaceModel space, Map f, std::vector<double> t_breaks, int grid)
    : space_(std::move(space)), f_(std::move(f)), breaks_(std::move(t_breaks)), grid_(grid), base_{Vec()} {
  if (!f_) throw Error("sheet: missing map");
  if (grid_ < 4) throw Error("sheet: grid must have at least 4 cells");
  std::sort(breaks_.begin(), breaks_.end());
  for (double b : breaks_) {
    if (!(b > 0.0 && b < 1.0)) throw Error("sheet: breakpoints must lie in (0,1)");
  }
  base_ = space_.point(f_(0.0, 0.0));
  for (int i = 0; i <= grid_; ++i) {
    const double s = static_cast<double>(i) / grid_;
    const Vec q = f_(s, 0.0);
    if (q.size() != base_.coords.size() ||
        (q - base_.coords).lpNorm<Eigen::Infinity>() > 1e-10 * space_.scale()) {
      throw GeometryError("sheet: f(s,0) must equal the base point (fails at s=" + std::to_string(s) + ")");
    }
  }
}

Point HomotopySheet::at(double s, double t) const { return space_.point(f_(s, t)); }

Vec HomotopySheet::ds(double s, double t) const {
  const double h = 1e-5;
  return space_.project_to_tangent(at(s, t), (f_(s + h, t) - f_(s - h, t)) / (2.0 * h));
}

Vec HomotopySheet::dt(double s, double t, int side) const {
  const double h = 1e-5;
  Vec d;
  if (side == 0) {
    d = (f_(s, t + h) - f_(s, t - h)) / (2.0 * h);
  } else {
    const double sg = side > 0 ? 1.0 : -1.0;
    d = sg * (-3.0 * f_(s, t) + 4.0 * f_(s, t + sg * h) - f_(s, t + 2.0 * sg * h)) / (2.0 * h);
  }
  return space_.project_to_tangent(at(s, t), d);
}

std::vector<HomotopySheet::Piece> HomotopySheet::t_pieces(double s) const {
  std::vector<double> cuts{0.0};
  for (double b : breaks_) cuts.push_back(b);
  cuts.push_back(1.0);
  const double spacing = sample_spacing(space_);
  std::vector<Piece> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double t0 = cuts[i];
    const double t1 = cuts[i + 1];
    int cells = static_cast<int>(std::ceil(grid_ * (t1 - t0) - 1e-9));
    cells = std::max(4, 4 * ((cells + 3) / 4));
    const int probe = 4 * cells;
    double len = 0.0;
    Point prev = at(s, t0);
    for (int k = 1; k <= probe; ++k) {
      const Point next = at(s, t0 + (t1 - t0) * k / probe);
      len += space_.norm(prev, space_.project_to_tangent(prev, next.coords - prev.coords));
      prev = next;
    }
    const int refine = std::max(1, static_cast<int>(std::ceil(len / (cells * spacing))));
    out.push_back(Piece{t0, t1, cells, refine});
  }
  return out;
}

DiscretizedCurve HomotopySheet::t_curve(double s) const {
  DiscretizedCurve c;
  for (const Piece& pc : t_pieces(s)) {
    const DiscretizedCurve part = sample_curve(
        space_, [&](double t) { return f_(s, t); }, pc.t0, pc.t1, pc.cells * pc.refine);
    c = c.samples.empty() ? part : concatenate(c, part);
  }
  c.samples.front() = base_;
  return c;
}

DiscretizedCurve HomotopySheet::top_curve(double s) const {
  const int probe = 16;
  double len = 0.0;
  Point prev = at(0.0, 1.0);
  for (int k = 1; k <= probe; ++k) {
    const Point next = at(s * k / probe, 1.0);
    len += space_.norm(prev, space_.project_to_tangent(prev, next.coords - prev.coords));
    prev = next;
  }
  const int n = std::max(4, static_cast<int>(std::ceil(len / sample_spacing(space_))));
  return sample_curve(space_, [&](double sp) { return f_(sp, 1.0); }, 0.0, s, n);
}

Mat holonomy_direct(const HomotopySheet& sheet, double s) {
  const SpaceModel& space = sheet.space();
  const Point& p = sheet.base();
  DiscretizedCurve loop = concatenate(sheet.t_curve(0.0), sheet.top_curve(s));
  loop = concatenate(loop, reversed(sheet.t_curve(s)));
  loop.samples.back() = p;
  const auto moved = transport_along(space, loop, space.frame(p));
  return space.to_frame_cols(p, moved.back());
}

HolonomyIntegral holonomy_integral(const HomotopySheet& sheet, double s) {
  const SpaceModel& space = sheet.space();
  const auto pieces = sheet.t_pieces(s);
  const DiscretizedCurve c = sheet.t_curve(s);
  const auto u = transport_along(space, c, space.frame(sheet.base()));
  const int d = space.dim();
  Mat fine = Mat::Zero(d, d);
  Mat coarse = Mat::Zero(d, d);
  std::size_t offset = 0;
  for (const auto& pc : pieces) {
    const double h = (pc.t1 - pc.t0) / pc.cells;
    for (int q = 0; q <= pc.cells; ++q) {
      const double t = (q == pc.cells) ? pc.t1 : pc.t0 + q * h;
      const std::size_t idx = offset + static_cast<std::size_t>(q * pc.refine);
      const Point& x = c.samples[idx];
      const int side = (q == 0) ? 1 : (q == pc.cells ? -1 : 0);
      const Vec fs = sheet.ds(s, t);
      const Vec ft = sheet.dt(s, t, side);
      const Mat& frame = u[idx];
      Mat g(d, d);
      for (int i = 0; i < d; ++i) {
        const Vec r = space.curvature(x, fs, ft, frame.col(i));
        for (int j = 0; j < d; ++j) g(i, j) = space.metric(x, r, frame.col(j));
      }
      const double wf = (q == 0 || q == pc.cells) ? 1.0 : (q % 2 ? 4.0 : 2.0);
      fine += (h / 3.0) * wf * g;
      if (q % 2 == 0) {
        const int qc = q / 2;
        const int cc = pc.cells / 2;
        const double wc = (qc == 0 || qc == cc) ? 1.0 : (qc % 2 ? 4.0 : 2.0);
        coarse += (2.0 * h / 3.0) * wc * g;
      }
    }
    offset += static_cast<std::size_t>(pc.cells * pc.refine);
  }
  return HolonomyIntegral{fine, max_abs(fine - coarse)};
}

double holonomy_derivative_integral(const HomotopySheet& sheet, double s, const Vec& u, const Vec& w) {
  const int d = sheet.space().dim();
  if (u.size() != d || w.size() != d) throw DimensionError("holonomy integral: vector dimension mismatch");
  const HolonomyIntegral hi = holonomy_integral(sheet, s);
  if (hi.refinement_gap > 1e-5) {
    throw GeometryError("holonomy integral: quadrature refinement disagreement " +
                        std::to_string(hi.refinement_gap) + " (undeclared breakpoint?)");
  }
  return u.dot(hi.value * w);
}

namespace {

struct FdGenerator {
  Mat a;
  Mat tau;
};

FdGenerator fd_generator(const HomotopySheet& sheet, double s) {
  const double h = 1.0 / sheet.grid();
  const Mat tau = holonomy_direct(sheet, s);
  const Mat deriv = (holonomy_direct(sheet, s - 2 * h) - 8.0 * holonomy_direct(sheet, s - h) +
                     8.0 * holonomy_direct(sheet, s + h) - holonomy_direct(sheet, s + 2 * h)) /
                    (12.0 * h);
  return FdGenerator{deriv * tau.transpose(), tau};
}

}  // namespace

Mat holonomy_generator_fd(const HomotopySheet& sheet, double s) { return fd_generator(sheet, s).a; }

CheckReport verify_holonomy_lemma(const HomotopySheet& sheet, const std::vector<double>& s_samples, double tol) {
  if (s_samples.empty()) throw Error("holonomy lemma: no s samples");
  Worst worst;
  std::vector<double> trace;
  double agreement = 0.0;
  double skew_int = 0.0;
  double skew_fd = 0.0;
  double orth = 0.0;
  double gap = 0.0;
  double entry = 0.0;
  for (double s : s_samples) {
    const HolonomyIntegral hi = holonomy_integral(sheet, s);
    const FdGenerator g = fd_generator(sheet, s);
    const Mat& i = hi.value;
    const double ag = max_abs(i - g.a.transpose());
    const double si = max_abs(i + i.transpose());
    const double sf = max_abs(g.a + g.a.transpose());
    agreement = std::max(agreement, ag);
    skew_int = std::max(skew_int, si);
    skew_fd = std::max(skew_fd, sf);
    orth = std::max(orth, max_abs(g.tau.transpose() * g.tau - Mat::Identity(i.rows(), i.cols())));
    gap = std::max(gap, hi.refinement_gap);
    entry = std::max({entry, max_abs(i), max_abs(g.a)});
    const double r = std::max({ag, si, sf});
    trace.push_back(r);
    worst.offer(r, [&] { return "s=" + std::to_string(s); });
  }
  CheckReport rep = make_report("holonomy_lemma", worst.value, tol, worst.where);
  rep.trace = std::move(trace);
  rep.metrics["agreement"] = agreement;
  rep.metrics["skew_integral"] = skew_int;
  rep.metrics["skew_fd"] = skew_fd;
  rep.metrics["orthogonality_defect"] = orth;
  rep.metrics["refinement_gap"] = gap;
  rep.metrics["max_entry"] = entry;
  if (gap > 1e-5) rep.diagnostics.push_back("quadrature refinement disagreement; check declared breakpoints");
  return rep;
}

HomotopySheet random_sheet(const SpaceModel& space, const Point& p, std::uint64_t seed, double amplitude,
                           int grid) {
  std::mt19937_64 rng(seed);
  const int d = space.dim();
  std::normal_distribution<double> g(0.0, amplitude / std::sqrt(6.0 * d));
  std::vector<Vec> c(6, Vec(d));
  for (auto& v : c) {
    for (int i = 0; i < d; ++i) v(i) = g(rng);
  }
  const Point base = space.point(p.coords);
  const Mat frame = space.frame(base);
  return HomotopySheet(
      space,
      [space, base, frame, c](double s, double t) {
        const Vec v = c[0] + s * c[1] + t * c[2] + std::sin(std::numbers::pi * s) * c[3] + s * t * c[4] +
                      std::cos(2.0 * t) * s * s * c[5];
        return space.exp_map(base, frame * v, t).coords;
      },
      {}, grid);
}

HomotopySheet section_sheet(const NormalSubbundle& v, std::function<Vec(double)> loop,
                            std::function<Vec(double)> coeffs, int grid) {
  if (!loop || !coeffs) throw Error("section sheet: missing loop or section");
  const SpaceModel& space = v.immersion().space();
  return HomotopySheet(
      space,
      [v, loop, coeffs](double s, double t) {
        const Immersion& f = v.immersion();
        if (t <= 0.5) return f.eval(loop(2.0 * s * t));
        const Vec u = loop(s);
        const Point x{f.eval(u)};
        const Vec a = coeffs(s);
        if (a.size() != v.rank()) throw DimensionError("section sheet: coefficient dimension mismatch");
        const Mat e = orthonormal_chart_frame(f.space(), x, v.frame(u));
        return f.space().exp_map(x, e * a, 2.0 * t - 1.0).coords;
      },
      {0.5}, grid);
}

}  // namespace codimred
