#pragma once

// Small analytic submanifolds shared by several test files.

#include "codimred/submanifold.hpp"

#include "test_support.hpp"

#include <cmath>
#include <complex>

namespace codimred::testing {

using Complex = std::complex<double>;

inline Vec interleave(std::initializer_list<Complex> zs) {
  Vec v(2 * static_cast<long>(zs.size()));
  long k = 0;
  for (Complex z : zs) {
    v(k++) = z.real();
    v(k++) = z.imag();
  }
  return v;
}

/// Latitude circle at polar angle phi in the unit S^n (n >= 2), lying in the
/// first three coordinates.
inline Immersion latitude(int n, double phi) {
  return Immersion(SpaceModel::sphere(n), 1, [n, phi](const Vec& u) {
    Vec x = Vec::Zero(n + 1);
    x(0) = std::sin(phi) * std::cos(u(0));
    x(1) = std::sin(phi) * std::sin(u(0));
    x(2) = std::cos(phi);
    return x;
  });
}

/// Unit meridian normal of the latitude circle, pointing away from e_3.
inline Vec latitude_meridian(int n, double phi, double u) {
  Vec x = Vec::Zero(n + 1);
  x(0) = std::cos(phi) * std::cos(u);
  x(1) = std::cos(phi) * std::sin(u);
  x(2) = -std::sin(phi);
  return x;
}

/// [cos a : sin a e^{iu} : 0], a circle in the totally geodesic CP^1.
inline Immersion cp1_circle(double a) {
  return Immersion(SpaceModel::complex_projective(2), 1, [a](const Vec& u) {
    return interleave({Complex(std::cos(a), 0.0), std::sin(a) * std::polar(1.0, u(0)), Complex(0.0, 0.0)});
  });
}

/// Horizontal unit normal of cp1_circle inside CP^1 at representative z.
inline Vec cp1_circle_normal(double a, double u) {
  return interleave({Complex(-std::sin(a), 0.0), std::cos(a) * std::polar(1.0, u), Complex(0.0, 0.0)});
}

/// V = span{H} along latitude(3, phi).
inline NormalSubbundle meridian_bundle(double phi) {
  return NormalSubbundle(latitude(3, phi), 1, [phi](const Vec& u) {
    Mat m(4, 1);
    m.col(0) = latitude_meridian(3, phi, u(0));
    return m;
  });
}

/// The normal of cp1_circle inside CP^1, so TM + V is a complex line.
inline NormalSubbundle cp1_bundle(double a) {
  return NormalSubbundle(cp1_circle(a), 1, [a](const Vec& u) {
    Mat m(6, 1);
    m.col(0) = cp1_circle_normal(a, u(0));
    return m;
  });
}

inline std::vector<Vec> param_grid(double lo, double hi, int n) {
  std::vector<Vec> g;
  for (int i = 0; i <= n; ++i) g.push_back(vec({lo + (hi - lo) * i / n}));
  return g;
}

}  // namespace codimred::testing
