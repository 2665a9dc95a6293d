#include "codimred/geomcore.hpp"

#include <algorithm>
#include <cmath>

namespace codimred {

namespace {

void require_same_dim(long a, long b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                         " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

Tolerance Tolerance::make(double abs, double rank_rel) {
  if (!(abs > 0.0)) throw Error("Tolerance: abs must be positive");
  if (!(rank_rel > 0.0 && rank_rel < 1.0)) throw Error("Tolerance: rank_rel must lie in (0,1)");
  return Tolerance{abs, rank_rel};
}

Subspace::Subspace(int ambient_dim) : basis_(Mat::Zero(ambient_dim, 0)) {
  if (ambient_dim < 0) throw DimensionError("Subspace: negative ambient dimension");
}

Subspace Subspace::full(int ambient_dim) {
  return Subspace(Mat(Mat::Identity(ambient_dim, ambient_dim)));
}

double Subspace::orthonormality_defect() const {
  if (dim() == 0) return 0.0;
  const Mat gram = basis_.transpose() * basis_;
  return (gram - Mat::Identity(dim(), dim())).cwiseAbs().maxCoeff();
}

Subspace orthonormalize(const Mat& columns, const Tolerance& tol) {
  require_finite(columns, "orthonormalize");
  const long n = columns.rows();
  Mat q(n, std::min<long>(n, columns.cols()));
  long rank = 0;
  double largest = 0.0;
  for (long c = 0; c < columns.cols(); ++c) {
    Vec r = columns.col(c);
    largest = std::max(largest, r.norm());
    for (int pass = 0; pass < 2; ++pass) {
      for (long k = 0; k < rank; ++k) r -= q.col(k).dot(r) * q.col(k);
    }
    const double norm = r.norm();
    if (norm <= tol.abs || norm <= tol.rank_rel * largest || rank == n) continue;
    q.col(rank++) = r / norm;
  }
  return Subspace(Mat(q.leftCols(rank)));
}

Subspace orthonormalize(std::span<const Vec> vectors, const Tolerance& tol) {
  if (vectors.empty()) throw DimensionError("orthonormalize: empty vector list has no dimension");
  const long n = vectors.front().size();
  Mat cols(n, static_cast<long>(vectors.size()));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    require_same_dim(vectors[i].size(), n, "orthonormalize");
    cols.col(static_cast<long>(i)) = vectors[i];
  }
  return orthonormalize(cols, tol);
}

Vec project(const Subspace& w, const Vec& v) {
  require_same_dim(w.ambient_dim(), v.size(), "project");
  return w.basis() * (w.basis().transpose() * v);
}

double containment_residual(const Subspace& w, const Vec& v, double zero_floor) {
  require_same_dim(w.ambient_dim(), v.size(), "containment_residual");
  const double norm = v.norm();
  if (norm <= zero_floor || norm == 0.0) return 0.0;
  return std::clamp((v - project(w, v)).norm() / norm, 0.0, 1.0);
}

double subspace_residual(const Subspace& u, const Subspace& w) {
  require_same_dim(u.ambient_dim(), w.ambient_dim(), "subspace_residual");
  double worst = 0.0;
  for (int i = 0; i < u.dim(); ++i) worst = std::max(worst, containment_residual(w, u.basis_vector(i)));
  return worst;
}

Subspace orthogonal_complement(const Subspace& w, const Tolerance& tol) {
  const int n = w.ambient_dim();
  Mat cols(n, w.dim() + n);
  cols << w.basis(), Mat::Identity(n, n);
  const Subspace all = orthonormalize(cols, tol);
  return orthonormalize(Mat(all.basis().rightCols(all.dim() - w.dim())), tol);
}

Subspace span_union(const Subspace& u, const Subspace& w, const Tolerance& tol) {
  require_same_dim(u.ambient_dim(), w.ambient_dim(), "span_union");
  Mat cols(u.ambient_dim(), u.dim() + w.dim());
  cols << u.basis(), w.basis();
  return orthonormalize(cols, tol);
}

void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw DimensionError(std::string(what) + ": non-finite entry");
}

void require_finite(const Mat& m, const char* what) {
  if (!m.allFinite()) throw DimensionError(std::string(what) + ": non-finite entry");
}

}  // namespace codimred
