#include "codimred/reduction.hpp"

#include "fixtures.hpp"
#include "holonomy_oracle.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace codimred;
using namespace codimred::testing;

namespace {

constexpr double kPi = std::numbers::pi;

NormalSubbundle rotating_bundle(double phi, double w) {
  return NormalSubbundle(latitude(3, phi), 1, [phi, w](const Vec& u) {
    Mat m(4, 1);
    m.col(0) = std::cos(w * u(0)) * latitude_meridian(3, phi, u(0)) + std::sin(w * u(0)) * Vec::Unit(4, 3);
    return m;
  });
}

NormalSubbundle fourth_axis_bundle(double phi) {
  return NormalSubbundle(latitude(3, phi), 1, [](const Vec&) {
    Mat m(4, 1);
    m.col(0) = Vec::Unit(4, 3);
    return m;
  });
}

// Frame coordinates at [1:0:0] of a fixed non-J-adapted orthonormal triple.
Subspace cp2_generic_triple(const SpaceModel& cp2) {
  const Point p = cp2.origin();
  Mat c = Mat::Zero(6, 3);
  c(2, 0) = 1.0;
  c(3, 1) = std::cos(1.0);
  c(4, 1) = std::sin(1.0);
  c(5, 2) = 1.0;
  return orthonormalize(cp2.to_frame_cols(p, c));
}

Subspace cp2_complex_line(const SpaceModel& cp2) {
  const Point p = cp2.origin();
  Mat c = Mat::Zero(6, 2);
  c(2, 0) = 1.0;
  c(3, 1) = 1.0;
  return orthonormalize(cp2.to_frame_cols(p, c));
}

}  // namespace

TEST(CheckReport, VerdictBands) {
  EXPECT_EQ(make_report("a", 0.5, 1.0).verdict, Verdict::Pass);
  const CheckReport mid = make_report("b", 5.0, 1.0);
  EXPECT_FALSE(mid.pass);
  EXPECT_EQ(mid.verdict, Verdict::Inconclusive);
  EXPECT_FALSE(mid.diagnostics.empty());
  EXPECT_EQ(make_report("c", 11.0, 1.0).verdict, Verdict::Fail);
  EXPECT_EQ(make_report("d", std::nan(""), 1.0).verdict, Verdict::Fail);
  EXPECT_FALSE(make_report("e", 1.0, 1.0).pass);
  EXPECT_THROW((void)make_report("f", 0.0, 0.0), Error);
}

TEST(FirstNormalContained, Examples) {
  const auto grid = param_grid(0.0, 2 * kPi, 12);
  const NormalSubbundle full = NormalSubbundle::full_normal(latitude(3, 0.6), vec({0.0}));
  EXPECT_TRUE(check_first_normal_contained(full, param_grid(-0.3, 0.3, 6), 1e-6).pass);

  const NormalSubbundle geo = fourth_axis_bundle(kPi / 2);
  EXPECT_LT(check_first_normal_contained(geo, grid, 1e-6).residual, 1e-6);

  const CheckReport ok = check_first_normal_contained(meridian_bundle(0.6), grid, 1e-6);
  EXPECT_TRUE(ok.pass) << ok.residual;
  EXPECT_EQ(ok.trace.size(), grid.size());

  const CheckReport bad = check_first_normal_contained(fourth_axis_bundle(0.6), grid, 1e-6);
  EXPECT_EQ(bad.verdict, Verdict::Fail);
  EXPECT_NEAR(bad.residual, 1.0, 1e-6);
}

TEST(ParallelSubbundle, Examples) {
  const auto curve = param_grid(0.0, 2 * kPi, 64);
  const NormalSubbundle full = NormalSubbundle::full_normal(latitude(3, 0.6), vec({0.0}));
  EXPECT_TRUE(check_parallel_subbundle(full, param_grid(-0.3, 0.3, 16), 1e-5).pass);

  const CheckReport mer = check_parallel_subbundle(meridian_bundle(0.6), curve, 1e-5);
  EXPECT_TRUE(mer.pass) << mer.residual;
  EXPECT_TRUE(check_parallel_subbundle(fourth_axis_bundle(0.6), curve, 1e-5).pass);

  // A frame rotating towards e_4 leaves the span at rate w / sin(phi).
  const CheckReport rot = check_parallel_subbundle(rotating_bundle(0.6, 0.8), curve, 1e-5);
  EXPECT_EQ(rot.verdict, Verdict::Fail);
  EXPECT_NEAR(rot.residual, 0.8 / std::sin(0.6), 1e-5);
}

TEST(ParallelSubbundle, DetectsFrameJumps) {
  const NormalSubbundle jumpy(latitude(3, 0.6), 1, [](const Vec& u) {
    Mat m(4, 1);
    m.col(0) = u(0) < 1.0 ? latitude_meridian(3, 0.6, u(0)) : Vec(Vec::Unit(4, 3));
    return m;
  });
  EXPECT_THROW((void)check_parallel_subbundle(jumpy, param_grid(0.0, 2.0, 20), 1e-5), GeometryError);
}

TEST(CurvatureInvariant, SpaceFormsAndComplexLines) {
  std::mt19937_64 rng(31);
  for (const auto& m : {SpaceModel::euclidean(4), SpaceModel::sphere(4), SpaceModel::hyperbolic(4, 2.0)}) {
    const Point p = random_point(m, rng);
    EXPECT_TRUE(check_curvature_invariant(m, p, orthonormalize(random_mat(rng, 4, 3)), 1e-9).pass);
  }
  const SpaceModel cp2 = SpaceModel::complex_projective(2);
  EXPECT_LT(check_curvature_invariant(cp2, cp2.origin(), cp2_complex_line(cp2), 1e-9).residual, 1e-12);
  const CheckReport triple = check_curvature_invariant(cp2, cp2.origin(), cp2_generic_triple(cp2), 1e-9);
  EXPECT_EQ(triple.verdict, Verdict::Fail);
  EXPECT_GT(triple.residual, 0.05);
  EXPECT_FALSE(triple.location.empty());
}

TEST(CurvatureInvariant, AlongSubmanifold) {
  const auto grid = param_grid(0.0, 2 * kPi, 8);
  EXPECT_LT(check_curvature_invariant_along(meridian_bundle(0.6), grid, 1e-9).residual, 1e-9);
  EXPECT_LT(check_curvature_invariant_along(cp1_bundle(kPi / 6), grid, 1e-9).residual, 1e-9);
}

TEST(Envelope, PointBallAndZeroSection) {
  const SpaceModel s2 = SpaceModel::sphere(2);
  const Immersion point(s2, 0, [](const Vec&) { return vec({0.0, 0.0, 1.0}); });
  const NormalSubbundle all = NormalSubbundle::full_normal(point, Vec(0));
  const Envelope ball = build_envelope(all, {Vec(0)}, EnvelopeOptions{0.5});
  EXPECT_EQ(ball.param_dim(), 2);
  EXPECT_EQ(ball.shrinks(), 0);
  EXPECT_EQ(ball.nodes().size(), 5u);
  for (const Vec& q : ball.nodes()) EXPECT_EQ(tangent_space(ball.map(), q).dim(), 2);

  const NormalSubbundle v = meridian_bundle(0.6);
  const Envelope env = build_envelope(v, param_grid(0.0, 2 * kPi, 6));
  for (const Vec& q : env.nodes()) {
    const Vec u = q.head(1);
    EXPECT_LT((env.map().eval(env.param(u, vec({0.0}))) - v.immersion().eval(u)).norm(), 1e-12);
    EXPECT_EQ(tangent_space(env.map(), q).dim(), 2);
    EXPECT_LT(std::abs(env.map().eval(q)(3)), 1e-14);
  }
}

TEST(Envelope, EpsilonShrinksAwayFromFocalPoints) {
  // Meridian geodesics from the latitude phi reach the pole at distance phi.
  const double phi = 0.5;
  const Envelope env = build_envelope(meridian_bundle(phi), param_grid(0.0, 1.0, 2), EnvelopeOptions{phi});
  EXPECT_EQ(env.shrinks(), 1);
  EXPECT_DOUBLE_EQ(env.epsilon(), phi / 2);
  EnvelopeOptions strict{phi};
  strict.max_shrinks = 0;
  EXPECT_THROW((void)build_envelope(meridian_bundle(phi), param_grid(0.0, 1.0, 2), strict), GeometryError);
}

TEST(TotallyGeodesic, Examples) {
  const Immersion line(SpaceModel::euclidean(3), 1, [](const Vec& t) { return vec({t(0), 2.0 * t(0), 0.0}); });
  const NormalSubbundle strip(line, 1, [](const Vec&) {
    Mat m(3, 1);
    m << 0.0, 0.0, 1.0;
    return m;
  });
  EXPECT_LT(check_totally_geodesic(build_envelope(strip, param_grid(-1, 1, 4)), 1e-4).residual, 1e-6);

  const CheckReport band = check_totally_geodesic(build_envelope(meridian_bundle(0.6), param_grid(0, 6, 6)), 1e-4, 7);
  EXPECT_TRUE(band.pass) << band.residual;

  const CheckReport cp1 = check_totally_geodesic(build_envelope(cp1_bundle(kPi / 6), param_grid(0, 6, 6)), 1e-4, 7);
  EXPECT_TRUE(cp1.pass) << cp1.residual;

  // Coning a latitude towards e_4 does not give a totally geodesic surface.
  const CheckReport cone = check_totally_geodesic(build_envelope(fourth_axis_bundle(0.6), param_grid(0, 6, 6)), 1e-4);
  EXPECT_EQ(cone.verdict, Verdict::Fail);
}

TEST(TangentPreservation, GridLoops) {
  const Envelope band = build_envelope(meridian_bundle(0.6), param_grid(0, 6, 6));
  const auto loops = grid_loops(band, 12);
  ASSERT_EQ(loops.size(), 12u);
  const CheckReport ok = check_tangent_preservation(band, loops, 1e-4);
  EXPECT_TRUE(ok.pass) << ok.residual;
  EXPECT_EQ(ok.trace.size(), 12u);

  const CheckReport cone = check_tangent_preservation(build_envelope(fourth_axis_bundle(0.6), param_grid(0, 6, 6)),
                                                      grid_loops(band, 12), 1e-4);
  EXPECT_EQ(cone.verdict, Verdict::Fail);
}

TEST(TangentPreservation, OctantLoopInEquatorialSphere) {
  // N is the geodesic 2-ball in the equatorial S^2 of S^3 around its pole.
  const SpaceModel s3 = SpaceModel::sphere(3);
  const Immersion point(s3, 0, [](const Vec&) { return vec({0, 0, 1, 0}); });
  const NormalSubbundle plane(point, 2, [](const Vec&) {
    Mat m = Mat::Zero(4, 2);
    m(0, 0) = 1.0;
    m(1, 1) = 1.0;
    return m;
  });
  const Envelope ball = build_envelope(plane, {Vec(0)}, EnvelopeOptions{1.6});
  const DiscretizedCurve oct = octant_loop(1.0, 200);
  DiscretizedCurve lifted;
  for (const Point& x : oct.samples) lifted.samples.push_back(Point{vec({x.coords(0), x.coords(1), x.coords(2), 0})});
  const auto path = snap_to_envelope(ball, lifted);
  ASSERT_EQ(path.size(), lifted.samples.size());
  const CheckReport r = check_tangent_preservation(ball, {path}, 1e-4);
  EXPECT_TRUE(r.pass) << r.residual;

  DiscretizedCurve off = lifted;
  off.samples[50].coords = s3.normalize(off.samples[50].coords + vec({0, 0, 0, 1e-3})).coords;
  EXPECT_THROW((void)snap_to_envelope(ball, off), GeometryError);
}

TEST(Jacobi, ClassicalSolutions) {
  const SpaceModel e3 = SpaceModel::euclidean(3);
  const Point o = e3.origin();
  const TangentVector vel{o, vec({1, 0, 0})};
  const auto js = jacobi_propagate(e3, vel, {o, vec({0, 1, 0})}, {o, vec({0, 2, 3})}, 1.5);
  EXPECT_LT((js.j.dir - vec({0, 4, 4.5})).norm(), 1e-12);
  EXPECT_LT((js.jdot.dir - vec({0, 2, 3})).norm(), 1e-12);

  const SpaceModel s2 = SpaceModel::sphere(2);
  const Point n = s2.origin();
  const TangentVector sv{n, vec({1, 0, 0})};
  const auto traj = jacobi_trajectory(s2, sv, {n, vec({0, 0, 0})}, {n, vec({0, 1, 0})}, 3.0, 30);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = 3.0 * k / 30;
    EXPECT_NEAR(s2.norm(traj[k].j.base, traj[k].j.dir), std::abs(std::sin(t)), 1e-5);
  }

  for (const auto& m : test_models()) {
    std::mt19937_64 rng(5);
    const Point p = random_point(m, rng);
    const Vec v = random_tangent(m, p, rng);
    const auto tr = jacobi_propagate(m, {p, v}, {p, v}, {p, Vec::Zero(m.chart_dim())}, 1.3);
    EXPECT_LT((tr.j.dir - m.geodesic_velocity(p, v, 1.3)).norm(), 1e-9) << m.describe();
  }
}

TEST(Jacobi, Linearity) {
  std::mt19937_64 rng(17);
  for (const auto& m : test_models()) {
    const Point p = random_point(m, rng);
    const TangentVector vel{p, random_tangent(m, p, rng)};
    const Vec a0 = random_tangent(m, p, rng), a1 = random_tangent(m, p, rng);
    const Vec b0 = random_tangent(m, p, rng), b1 = random_tangent(m, p, rng);
    const double x = 0.7, y = -1.9;
    const auto ja = jacobi_propagate(m, vel, {p, a0}, {p, a1}, 1.1);
    const auto jb = jacobi_propagate(m, vel, {p, b0}, {p, b1}, 1.1);
    const auto jc = jacobi_propagate(m, vel, {p, x * a0 + y * b0}, {p, x * a1 + y * b1}, 1.1);
    EXPECT_LT((jc.j.dir - x * ja.j.dir - y * jb.j.dir).norm(), 1e-7) << m.describe();
    EXPECT_LT((jc.jdot.dir - x * ja.jdot.dir - y * jb.jdot.dir).norm(), 1e-7) << m.describe();
  }
}

TEST(Jacobi, RejectsMisplacedInitialConditions) {
  const SpaceModel s2 = SpaceModel::sphere(2);
  const Point n = s2.origin();
  const Point q = s2.point(vec({1, 0, 0}));
  EXPECT_THROW((void)jacobi_propagate(s2, {n, vec({1, 0, 0})}, {q, vec({0, 1, 0})}, {n, vec({0, 1, 0})}, 1.0),
               GeometryError);
  EXPECT_THROW((void)jacobi_propagate(s2, {n, vec({1, 0, 0})}, {n, vec({0, 0, 1})}, {n, vec({0, 1, 0})}, 1.0),
               GeometryError);
}

TEST(JacobiContainment, InvariantAndNonInvariantSubspaces) {
  std::mt19937_64 rng(3);
  const SpaceModel s3 = SpaceModel::sphere(3);
  const Point p = random_point(s3, rng);
  const Subspace w = orthonormalize(random_mat(rng, 3, 2));
  const Vec v = s3.from_frame(p, w.basis_vector(0));
  const CheckReport ok = check_jacobi_containment(s3, {p, v}, w, random_jacobi_conditions(w, 20, 1), 2.0, 1e-4);
  EXPECT_TRUE(ok.pass) << ok.residual;
  EXPECT_EQ(ok.metrics.at("jacobi_span_dim"), 2.0);

  const SpaceModel cp2 = SpaceModel::complex_projective(2);
  const Point o = cp2.origin();
  const Subspace line = cp2_complex_line(cp2);
  const CheckReport cl = check_jacobi_containment(cp2, {o, cp2.from_frame(o, line.basis_vector(0))}, line,
                                                  random_jacobi_conditions(line, 20, 2), 2.0, 1e-4);
  EXPECT_TRUE(cl.pass) << cl.residual;

  const Subspace triple = cp2_generic_triple(cp2);
  const CheckReport bad = check_jacobi_containment(cp2, {o, cp2.from_frame(o, triple.basis_vector(0))}, triple,
                                                   random_jacobi_conditions(triple, 20, 3), 2.0, 1e-4);
  EXPECT_GT(bad.residual, 1e-3);
  EXPECT_FALSE(bad.diagnostics.empty());
}

TEST(Holonomy, DirectTransportIdentities) {
  const SpaceModel s3 = SpaceModel::sphere(3);
  std::mt19937_64 rng(4);
  const Point p = random_point(s3, rng);
  const HomotopySheet sheet = random_sheet(s3, p, 11, 0.6, 32);
  EXPECT_LT(max_abs_diff(holonomy_direct(sheet, 0.0), Mat::Identity(3, 3)), 1e-9);
  const Mat tau = holonomy_direct(sheet, 0.6);
  EXPECT_LT(max_abs_diff(tau.transpose() * tau, Mat::Identity(3, 3)), 1e-6);

  const SpaceModel e3 = SpaceModel::euclidean(3);
  const HomotopySheet flat = random_sheet(e3, e3.origin(), 12, 0.6, 32);
  EXPECT_LT(max_abs_diff(holonomy_direct(flat, 0.7), Mat::Identity(3, 3)), 1e-14);

  // f(s,t) = f(0,t): the three legs cancel.
  const Vec a = s3.from_frame(p, vec({0.3, -0.2, 0.5}));
  const HomotopySheet degenerate(s3, [&](double, double t) { return s3.exp_map(p, a * std::sin(2 * t), 1.0).coords; }, {}, 32);
  EXPECT_LT(max_abs_diff(holonomy_direct(degenerate, 0.8), Mat::Identity(3, 3)), 1e-9);
  const CheckReport dr = verify_holonomy_lemma(degenerate, {0.5}, 1e-4);
  EXPECT_LT(dr.metrics.at("max_entry"), 1e-8);
}

TEST(Holonomy, OctantSweepRotatesAtQuarterPi) {
  // Geodesics from the pole sweeping a quarter of the upper hemisphere:
  // tau(s) rotates by the swept area s pi / 2.
  const SpaceModel s2 = SpaceModel::sphere(2);
  const Point n = s2.origin();
  const HomotopySheet sweep(s2, [&](double s, double t) {
    const double a = kPi * s / 2;
    return s2.exp_map(n, vec({std::cos(a), std::sin(a), 0.0}) * (kPi / 2), t).coords;
  });
  const Mat i = holonomy_integral(sweep, 0.5).value;
  const Mat a = holonomy_generator_fd(sweep, 0.5);
  EXPECT_NEAR(std::abs(i(0, 1)), kPi / 2, 1e-4);
  EXPECT_NEAR(std::abs(a(0, 1)), kPi / 2, 1e-4);
  EXPECT_NEAR(i(0, 1), a(1, 0), 1e-4);
  const Vec u = vec({1, 0});
  EXPECT_NEAR(holonomy_derivative_integral(sweep, 0.5, u, u), 0.0, 1e-12);
}

TEST(Holonomy, FlatSheetsVanish) {
  const SpaceModel e4 = SpaceModel::euclidean(4);
  const CheckReport r = verify_holonomy_lemma(random_sheet(e4, e4.origin(), 2), {0.3, 0.7}, 1e-4);
  EXPECT_TRUE(r.pass);
  EXPECT_LT(r.metrics.at("max_entry"), 1e-9);
}

TEST(Holonomy, RandomSheetDualOracle) {
  for (const auto& m : {SpaceModel::sphere(3), SpaceModel::complex_projective(2)}) {
    std::mt19937_64 rng(8);
    const HomotopySheet sheet = random_sheet(m, random_point(m, rng, 0.5), 21);
    const CheckReport r = verify_holonomy_lemma(sheet, {0.5}, 1e-4);
    EXPECT_TRUE(r.pass) << m.describe() << " " << r.residual;
    EXPECT_LT(r.metrics.at("skew_integral"), 1e-5);
    EXPECT_LT(r.metrics.at("skew_fd"), 1e-5);
    EXPECT_GT(r.metrics.at("max_entry"), 1e-2);
  }
}

TEST(Holonomy, SectionSheetWithCorner) {
  const NormalSubbundle v = meridian_bundle(0.6);
  const HomotopySheet sheet = section_sheet(v, [](double s) { return vec({0.8 * std::sin(kPi * s)}); },
                                            [](double s) { return vec({0.3 + 0.2 * s}); });
  const CheckReport r = verify_holonomy_lemma(sheet, {0.25, 0.75}, 1e-4);
  EXPECT_TRUE(r.pass) << r.residual;
  EXPECT_GT(r.metrics.at("max_entry"), 0.1);
}

TEST(Holonomy, UndeclaredCornerIsDetected) {
  // Geodesic to q(s), then a geodesic in a direction transverse to the first
  // leg; the corner sits inside a quadrature cell.
  const SpaceModel s2 = SpaceModel::sphere(2);
  const Point n = s2.origin();
  const double c = 0.37;
  auto f = [s2, n, c](double s, double t) {
    const Vec a = 0.8 * vec({std::cos(s), std::sin(s), 0.0});
    if (t <= c) return s2.exp_map(n, a, t / c).coords;
    const Point q = s2.exp_map(n, a, 1.0);
    const Vec b = s2.project_to_tangent(q, vec({0.2, -0.5 - 0.3 * s, 0.3}));
    return s2.exp_map(q, b, (t - c) / (1.0 - c)).coords;
  };
  const HomotopySheet declared(s2, f, {c});
  EXPECT_TRUE(verify_holonomy_lemma(declared, {0.5}, 1e-4).pass);
  const Vec u = vec({1, 0});
  const Vec w = vec({0, 1});
  EXPECT_NO_THROW((void)holonomy_derivative_integral(declared, 0.5, u, w));
  const HomotopySheet hidden(s2, f);
  EXPECT_GT(holonomy_integral(hidden, 0.5).refinement_gap, 1e-4);
  EXPECT_THROW((void)holonomy_derivative_integral(hidden, 0.5, u, w), GeometryError);
}

TEST(Holonomy, RejectsSheetsNotPinnedAtBase) {
  const SpaceModel s2 = SpaceModel::sphere(2);
  EXPECT_THROW(HomotopySheet(s2, [&](double s, double t) {
                 return s2.exp_map(s2.origin(), vec({s + 0.1, t, 0.0}), 0.5).coords;
               }),
               GeometryError);
}
