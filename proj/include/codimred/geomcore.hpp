#pragma once

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace codimred {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Absolute residual bound plus a relative singular-value cutoff.
///
/// `abs` doubles as the norm below which a vector is treated as zero by
/// the rank-revealing routines.
struct Tolerance {
  double abs = 1e-9;
  double rank_rel = 1e-8;

  /// Validating constructor: abs > 0 and 0 < rank_rel < 1.
  static Tolerance make(double abs, double rank_rel);
};

/// Orthonormal-frame subspace of R^n (columns of `basis()` are orthonormal).
class Subspace {
 public:
  /// The zero subspace of R^ambient_dim.
  explicit Subspace(int ambient_dim);

  static Subspace full(int ambient_dim);

  [[nodiscard]] int dim() const { return static_cast<int>(basis_.cols()); }
  [[nodiscard]] int ambient_dim() const { return static_cast<int>(basis_.rows()); }
  [[nodiscard]] const Mat& basis() const { return basis_; }
  [[nodiscard]] Vec basis_vector(int i) const { return basis_.col(i); }
  [[nodiscard]] Mat projector() const { return basis_ * basis_.transpose(); }

  /// Largest |<b_i,b_j> - delta_ij|.
  [[nodiscard]] double orthonormality_defect() const;

 private:
  explicit Subspace(Mat basis) : basis_(std::move(basis)) {}
  Mat basis_;

  friend Subspace orthonormalize(const Mat& columns, const Tolerance& tol);
};

/// Rank-revealing modified Gram-Schmidt (one re-orthogonalization pass)
/// over the columns of `columns`. A column is dropped when its residual norm
/// falls below rank_rel times the largest input norm seen so far, or below
/// tol.abs.
Subspace orthonormalize(const Mat& columns, const Tolerance& tol = {});
Subspace orthonormalize(std::span<const Vec> vectors, const Tolerance& tol = {});

Vec project(const Subspace& w, const Vec& v);

/// ||v - P_W v|| / ||v|| clamped to [0,1]; 0 when ||v|| <= zero_floor.
double containment_residual(const Subspace& w, const Vec& v, double zero_floor = 0.0);

/// max_i containment_residual(W, u_i) over U's basis.
double subspace_residual(const Subspace& u, const Subspace& w);

Subspace orthogonal_complement(const Subspace& w, const Tolerance& tol = {});

/// Span of U and W together.
Subspace span_union(const Subspace& u, const Subspace& w, const Tolerance& tol = {});

/// Throws DimensionError unless every entry is finite.
void require_finite(const Vec& v, const char* what);
void require_finite(const Mat& m, const char* what);

}  // namespace codimred
