#pragma once

#include "codimred/ambient.hpp"

#include <cmath>
#include <initializer_list>
#include <random>
#include <vector>

namespace codimred::testing {

inline Vec random_vec(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

inline Mat random_mat(std::mt19937_64& rng, int rows, int cols) {
  Mat m(rows, cols);
  for (int j = 0; j < cols; ++j) m.col(j) = random_vec(rng, rows);
  return m;
}

/// A random point of the model, reached from origin() by a geodesic.
inline Point random_point(const SpaceModel& space, std::mt19937_64& rng, double spread = 0.8) {
  const Point o = space.origin();
  const Vec v = space.from_frame(o, random_vec(rng, space.dim(), spread / std::sqrt(space.dim())));
  return space.exp_map(o, v, 1.0);
}

inline Vec random_tangent(const SpaceModel& space, const Point& p, std::mt19937_64& rng) {
  return space.from_frame(p, random_vec(rng, space.dim()));
}

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<long>(xs.size()));
  long i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

/// Least-squares slope of log(err) against log(h).
inline double fit_slope(const std::vector<double>& h, const std::vector<double>& err) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    mx += std::log(h[i]);
    my += std::log(err[i]);
  }
  mx /= h.size();
  my /= h.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    sxy += (std::log(h[i]) - mx) * (std::log(err[i]) - my);
    sxx += (std::log(h[i]) - mx) * (std::log(h[i]) - mx);
  }
  return sxy / sxx;
}

inline double max_abs_diff(const Mat& a, const Mat& b) { return (a - b).cwiseAbs().maxCoeff(); }

inline std::vector<SpaceModel> test_models() {
  return {SpaceModel::euclidean(3),
          SpaceModel::sphere(3, 1.0),
          SpaceModel::sphere(2, 2.5),
          SpaceModel::hyperbolic(3, 1.0),
          SpaceModel::hyperbolic(2, 0.7),
          SpaceModel::complex_projective(2, 4.0),
          SpaceModel::complex_projective(3, 1.5),
          SpaceModel::product({SpaceModel::sphere(2), SpaceModel::hyperbolic(2)})};
}

}  // namespace codimred::testing
