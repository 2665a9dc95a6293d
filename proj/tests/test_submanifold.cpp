#include "codimred/submanifold.hpp"

#include "fixtures.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

using namespace codimred;
using namespace codimred::testing;

namespace {

constexpr double kPi = std::numbers::pi;

Vec chart(const Immersion& f, const Vec& u, const Vec& frame_coords) {
  return f.space().from_frame(f.point(u), frame_coords);
}

Immersion unit_sphere_in_r3() {
  return Immersion(SpaceModel::euclidean(3), 2, [](const Vec& u) {
    return vec({std::sin(u(0)) * std::cos(u(1)), std::sin(u(0)) * std::sin(u(1)), std::cos(u(0))});
  });
}

std::vector<Immersion> generic_surfaces() {
  std::vector<Immersion> out;
  out.emplace_back(SpaceModel::sphere(3), 2, [](const Vec& u) {
    const Vec x = vec({std::cos(u(0)) * std::cos(u(1)), std::sin(u(0)) * std::cos(u(1)),
                       std::sin(u(1)) + 0.3 * u(0) * u(1), 0.5 + 0.2 * u(0) * u(0)});
    return Vec(x / x.norm());
  });
  out.emplace_back(SpaceModel::hyperbolic(3, 0.8), 2, [](const Vec& u) {
    const Vec a = vec({u(0), u(1), 0.4 * u(0) * u(1) + 0.3 * std::sin(u(1))});
    Vec x(4);
    x << a, std::sqrt(0.64 + a.squaredNorm());
    return x;
  });
  out.emplace_back(SpaceModel::complex_projective(2), 2, [](const Vec& u) {
    const Vec z = interleave({Complex(1.0, 0.1 * u(1)), Complex(0.3 * u(0) + 0.1 * u(0) * u(1), 0.2 * u(1)),
                              Complex(0.2 * u(1) * u(1), 0.4 * u(0))});
    return Vec(z / z.norm());
  });
  out.emplace_back(SpaceModel::euclidean(4), 2, [](const Vec& u) {
    return vec({u(0), u(1), std::sin(u(0) * u(1)), std::cosh(0.5 * u(0)) - u(1) * u(1)});
  });
  return out;
}

}  // namespace

TEST(TangentSpace, Examples) {
  const Immersion great(SpaceModel::sphere(2), 1, [](const Vec& u) {
    return vec({std::cos(u(0)), std::sin(u(0)), 0.0});
  });
  const Subspace t = tangent_space(great, vec({0.0}));
  ASSERT_EQ(t.dim(), 1);
  EXPECT_NEAR(std::abs(chart(great, vec({0.0}), t.basis_vector(0)).dot(vec({0, 1, 0}))), 1.0, 1e-9);

  const Immersion plane(SpaceModel::euclidean(3), 2, [](const Vec& u) {
    return vec({u(0) + u(1), u(0) - u(1), 2.0});
  });
  for (double s : {-1.0, 0.0, 2.5}) {
    const Subspace tp = tangent_space(plane, vec({s, -s}));
    EXPECT_EQ(tp.dim(), 2);
    EXPECT_LT(containment_residual(tp, vec({1, 0, 0})), 1e-12);
    EXPECT_LT(containment_residual(tp, vec({0, 1, 0})), 1e-12);
  }

  const double phi = 0.7;
  const Immersion lat = latitude(2, phi);
  for (double u : {0.0, 1.0, 4.0}) {
    const Vec t_exact = vec({-std::sin(u), std::cos(u), 0.0});
    const Vec got = chart(lat, vec({u}), tangent_space(lat, vec({u})).basis_vector(0));
    EXPECT_NEAR(std::abs(got.dot(t_exact)), 1.0, 1e-9);
  }
}

TEST(TangentSpace, RankDeficiencyIsReported) {
  const Immersion constant(SpaceModel::sphere(2), 1, [](const Vec&) { return vec({0, 0, 1}); });
  EXPECT_THROW((void)tangent_space(constant, vec({0.0})), GeometryError);
  EXPECT_THROW((void)tangent_space(latitude(2, 0.5), vec({0.0, 1.0})), DimensionError);
}

TEST(NormalSpace, Examples) {
  const Immersion great(SpaceModel::sphere(2), 1, [](const Vec& u) {
    return vec({std::cos(u(0)), std::sin(u(0)), 0.0});
  });
  for (double u : {0.0, 0.8, 3.0}) {
    const Subspace nu = normal_space(great, vec({u}));
    ASSERT_EQ(nu.dim(), 1);
    EXPECT_NEAR(std::abs(chart(great, vec({u}), nu.basis_vector(0))(2)), 1.0, 1e-9);
  }
  for (const auto& f : generic_surfaces()) {
    const Vec u = vec({0.2, -0.3});
    const Subspace t = tangent_space(f, u);
    const Subspace nu = normal_space(f, u);
    EXPECT_EQ(nu.dim(), f.space().dim() - 2);
    EXPECT_LT((t.basis().transpose() * nu.basis()).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_EQ(normal_space(unit_sphere_in_r3(), vec({1.0, 0.5})).dim(), 1);
}

TEST(SecondFundamentalForm, TotallyGeodesicAndAffineVanish) {
  const Immersion equator = latitude(2, kPi / 2);
  const Vec u = vec({0.4});
  const Vec e = tangent_space(equator, u).basis_vector(0);
  EXPECT_LT(second_fundamental_form(equator, u, e, e).norm(), 1e-7);

  const Immersion line(SpaceModel::euclidean(3), 1, [](const Vec& t) {
    return vec({1.0 + 2.0 * t(0), -t(0), 0.5 * t(0)});
  });
  const Vec el = tangent_space(line, u).basis_vector(0);
  EXPECT_LT(second_fundamental_form(line, u, el, el).norm(), 1e-7);
}

TEST(SecondFundamentalForm, LatitudeCircleCurvatureIsCotangent) {
  for (double phi : {0.3, 0.7, 1.2, 2.0, 2.8}) {
    const Immersion lat = latitude(2, phi);
    for (double u : {0.0, 2.0}) {
      const Vec e = tangent_space(lat, vec({u})).basis_vector(0);
      const Vec a = second_fundamental_form(lat, vec({u}), e, e);
      EXPECT_NEAR(a.norm(), std::abs(1.0 / std::tan(phi)), 1e-5) << "phi " << phi;
      // Points along the meridian, towards the nearer pole.
      const Vec m = chart(lat, vec({u}), a);
      EXPECT_LT(std::abs(m.dot(vec({-std::sin(u), std::cos(u), 0.0}))), 1e-6);
    }
  }
}

TEST(SecondFundamentalForm, CircleInComplexLineMatchesSphereOfRadiusHalf) {
  // CP^1 with c = 4 is a round sphere of radius 1/2; [cos a : sin a e^{iu}]
  // sits at polar angle 2a, so the geodesic curvature is 2 cot(2a).
  for (double a : {kPi / 6, 0.4, 0.6}) {
    const Immersion f = cp1_circle(a);
    const Vec u = vec({0.9});
    const Vec e = tangent_space(f, u).basis_vector(0);
    const Vec alpha = second_fundamental_form(f, u, e, e);
    EXPECT_NEAR(alpha.norm(), std::abs(2.0 / std::tan(2.0 * a)), 1e-5);
    const Vec ac = chart(f, u, alpha);
    EXPECT_LT(std::hypot(ac(4), ac(5)), 1e-6);
  }
}

TEST(SecondFundamentalForm, FiniteDifferenceRichardsonSlope) {
  const double phi = 0.9;
  const Immersion base = latitude(2, phi);
  const Vec u = vec({0.3});
  const Vec e = tangent_space(base, u).basis_vector(0);
  const double exact = 1.0 / std::tan(phi);
  std::vector<double> hs{1e-2, 5e-3, 2.5e-3}, errs;
  for (double h : hs) {
    Immersion f = base;
    f.set_fd_steps(1e-6, h);
    errs.push_back(std::abs(second_fundamental_form(f, u, e, e).norm() - exact));
  }
  EXPECT_GE(fit_slope(hs, errs), 1.9) << errs[0] << " " << errs[2];
}

TEST(ShapeOperator, Examples) {
  const Immersion equator = latitude(2, kPi / 2);
  const Vec u = vec({1.1});
  const Vec e = tangent_space(equator, u).basis_vector(0);
  const Vec xi = normal_space(equator, u).basis_vector(0);
  EXPECT_LT(shape_operator(equator, u, xi, e).norm(), 1e-7);

  const Immersion s2 = unit_sphere_in_r3();
  for (const Vec& v : {vec({0.7, 0.2}), vec({2.0, -1.0})}) {
    const Point p = s2.point(v);
    const Vec outward = s2.space().to_frame(p, p.coords);
    const Subspace t = tangent_space(s2, v);
    for (int i = 0; i < 2; ++i) {
      const Vec x = t.basis_vector(i);
      EXPECT_LT((shape_operator(s2, v, outward, x) + x).norm(), 1e-6);
    }
  }
}

TEST(ShapeOperator, RejectsNonNormalAndNonTangentInputs) {
  const Immersion lat = latitude(2, 0.6);
  const Vec u = vec({0.0});
  const Vec e = tangent_space(lat, u).basis_vector(0);
  EXPECT_THROW((void)shape_operator(lat, u, e, e), GeometryError);
  const Vec n = normal_space(lat, u).basis_vector(0);
  EXPECT_THROW((void)second_fundamental_form(lat, u, n, e), GeometryError);
}

TEST(NormalDerivative, Examples) {
  // Constant normal along a Euclidean line.
  const Immersion line(SpaceModel::euclidean(3), 1, [](const Vec& t) { return vec({t(0), 0.0, 0.0}); });
  const Vec x = vec({1.0, 0.0, 0.0});
  EXPECT_LT(normal_derivative(line, vec({0.3}), x, [](const Vec&) { return vec({0, 1, 1}); }).norm(), 1e-9);

  // Latitude circle in S^3 with a normal frame rotating at rate w.
  const double phi = 0.8;
  const double w = 1.7;
  const Immersion lat = latitude(3, phi);
  auto n1 = [phi](double u) {
    return vec({std::cos(phi) * std::cos(u), std::cos(phi) * std::sin(u), -std::sin(phi), 0.0});
  };
  const Vec e4 = vec({0, 0, 0, 1});
  auto xi = [&](const Vec& u) { return Vec(std::cos(w * u(0)) * n1(u(0)) + std::sin(w * u(0)) * e4); };
  for (double u0 : {0.0, 1.3}) {
    const Vec u = vec({u0});
    const Point p = lat.point(u);
    const Vec unit = lat.space().to_frame(p, vec({-std::sin(u0), std::cos(u0), 0, 0}));
    const Vec got = lat.space().from_frame(p, normal_derivative(lat, u, unit, xi));
    const Vec expected = (w / std::sin(phi)) * (-std::sin(w * u0) * n1(u0) + std::cos(w * u0) * e4);
    EXPECT_LT((got - expected).norm(), 1e-6);
  }

  // The meridian normal of a latitude in S^3 is normal-parallel.
  auto par = [&](const Vec& u) { return n1(u(0)); };
  const Vec u = vec({0.5});
  const Vec e = tangent_space(lat, u).basis_vector(0);
  EXPECT_LT(normal_derivative(lat, u, e, par).norm(), 1e-8);
}

TEST(NormalDerivative, MetricCompatibility) {
  for (const auto& f : generic_surfaces()) {
    const Vec u0 = vec({0.1, 0.2});
    const NormalSubbundle nu = NormalSubbundle::full_normal(f, u0);
    if (nu.rank() < 2) continue;
    auto xi = [&](const Vec& u) { return Vec(nu.frame(u).col(0)); };
    auto eta = [&](const Vec& u) { return Vec(nu.frame(u).col(1)); };
    const Vec dir = vec({0.6, -0.8});
    const Mat d = f.differential(u0);
    const Point p = f.point(u0);
    const Vec x = f.space().to_frame(p, d * dir);
    const double h = 1e-5;
    auto inner = [&](double t) {
      const Vec u = u0 + t * dir;
      return f.space().metric(f.point(u), xi(u), eta(u));
    };
    const double lhs = (inner(h) - inner(-h)) / (2 * h);
    const Vec xf = f.space().to_frame(p, xi(u0));
    const Vec ef = f.space().to_frame(p, eta(u0));
    const double rhs = normal_derivative(f, u0, x, xi).dot(ef) + xf.dot(normal_derivative(f, u0, x, eta));
    EXPECT_NEAR(lhs, rhs, 1e-6) << f.space().describe();
  }
}

TEST(FirstNormalSpace, Examples) {
  const Immersion equator = latitude(3, kPi / 2);
  EXPECT_EQ(first_normal_space(equator, vec({0.2})).dim(), 0);

  const Immersion lat = latitude(2, 0.5);
  const Subspace n1 = first_normal_space(lat, vec({0.2}));
  ASSERT_EQ(n1.dim(), 1);
  EXPECT_LT(subspace_residual(n1, normal_space(lat, vec({0.2}))), 1e-9);

  const Immersion lat3 = latitude(3, 0.5);
  const Subspace n13 = first_normal_space(lat3, vec({0.2}));
  ASSERT_EQ(n13.dim(), 1);
  const Vec merid = vec({std::cos(0.5) * std::cos(0.2), std::cos(0.5) * std::sin(0.2), -std::sin(0.5), 0});
  EXPECT_LT(containment_residual(n13, lat3.space().to_frame(lat3.point(vec({0.2})), merid)), 1e-6);
}

TEST(MeanCurvature, Examples) {
  EXPECT_LT(mean_curvature(latitude(2, kPi / 2), vec({0.7})).norm(), 1e-7);
  for (double phi : {0.4, 1.0, 2.5}) {
    EXPECT_NEAR(mean_curvature(latitude(2, phi), vec({0.7})).norm(), std::abs(1.0 / std::tan(phi)), 1e-5);
  }
  const Immersion equatorial_s2(SpaceModel::sphere(3), 2, [](const Vec& u) {
    return vec({std::sin(u(0)) * std::cos(u(1)), std::sin(u(0)) * std::sin(u(1)), std::cos(u(0)), 0.0});
  });
  EXPECT_LT(mean_curvature(equatorial_s2, vec({1.0, 0.3})).norm(), 1e-6);
}

TEST(SubmanifoldProperties, SymmetryNormalityCompatibility) {
  std::mt19937_64 rng(21);
  for (const auto& f : generic_surfaces()) {
    for (int trial = 0; trial < 10; ++trial) {
      const Vec u = random_vec(rng, 2, 0.3);
      const Subspace t = tangent_space(f, u);
      const Subspace nu = normal_space(f, u);
      const Vec x = t.basis() * random_vec(rng, 2);
      const Vec y = t.basis() * random_vec(rng, 2);
      const Vec xi = nu.basis() * random_vec(rng, nu.dim());
      const Vec axy = second_fundamental_form(f, u, x, y);
      EXPECT_LT((axy - second_fundamental_form(f, u, y, x)).norm(), 1e-5);
      EXPECT_GT(containment_residual(t, axy, 1e-12), 1.0 - 1e-5);
      EXPECT_LT(std::abs(axy.dot(xi) - shape_operator(f, u, xi, x).dot(y)), 1e-5) << f.space().describe();
      EXPECT_LT(subspace_residual(first_normal_space(f, u), nu), 1e-6);
    }
  }
}

TEST(SubmanifoldProperties, AnalyticJacobianAgrees) {
  const double phi = 1.1;
  const Immersion fd = latitude(2, phi);
  const Immersion exact(SpaceModel::sphere(2), 1, [phi](const Vec& u) {
    return vec({std::sin(phi) * std::cos(u(0)), std::sin(phi) * std::sin(u(0)), std::cos(phi)});
  }, [phi](const Vec& u) {
    Mat j(3, 1);
    j << -std::sin(phi) * std::sin(u(0)), std::sin(phi) * std::cos(u(0)), 0.0;
    return j;
  });
  const Vec u = vec({0.4});
  const Vec e = tangent_space(exact, u).basis_vector(0);
  EXPECT_LT((second_fundamental_form(exact, u, e, e) - second_fundamental_form(fd, u, e, e)).norm(), 1e-6);
}
