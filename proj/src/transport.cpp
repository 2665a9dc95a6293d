#include "codimred/ambient.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace codimred {

namespace {

using Complex = std::complex<double>;

struct Block {
  int offset;
  int size;
};

// Chart blocks carrying a U(1) gauge (complex projective factors).
void collect_gauge_blocks(const SpaceModel& space, int offset, std::vector<Block>& out) {
  if (space.kind() == SpaceKind::ComplexProjective) {
    out.push_back({offset, space.chart_dim()});
  } else if (space.kind() == SpaceKind::Product) {
    for (const auto& f : space.factors()) {
      collect_gauge_blocks(f, offset, out);
      offset += f.chart_dim();
    }
  }
}

// <a,b>_C = sum conj(a_k) b_k on an interleaved block.
Complex hermitian(const Vec& a, const Vec& b, const Block& blk) {
  Complex s{0.0, 0.0};
  for (int k = blk.offset; k < blk.offset + blk.size; k += 2) {
    s += std::conj(Complex(a(k), a(k + 1))) * Complex(b(k), b(k + 1));
  }
  return s;
}

void multiply_block(Vec& v, const Block& blk, Complex phase) {
  for (int k = blk.offset; k < blk.offset + blk.size; k += 2) {
    const Complex c = phase * Complex(v(k), v(k + 1));
    v(k) = c.real();
    v(k + 1) = c.imag();
  }
}

void multiply_block(Mat& m, const Block& blk, Complex phase) {
  for (long j = 0; j < m.cols(); ++j) {
    Vec col = m.col(j);
    multiply_block(col, blk, phase);
    m.col(j) = col;
  }
}

// Lagrange value and derivative weights at tau for consecutive integer nodes
// first..first+count-1.
void lagrange_weights(double tau, int first, int count, double* w, double* dw) {
  for (int i = 0; i < count; ++i) {
    const double xi = first + i;
    double denom = 1.0;
    double value = 1.0;
    double deriv = 0.0;
    for (int j = 0; j < count; ++j) {
      if (j == i) continue;
      const double xj = first + j;
      denom *= xi - xj;
      double term = 1.0;
      for (int k = 0; k < count; ++k) {
        if (k == i || k == j) continue;
        term *= tau - (first + k);
      }
      deriv += term;
      value *= tau - xj;
    }
    w[i] = value / denom;
    dw[i] = deriv / denom;
  }
}

// One smooth piece of a discretized curve, interpolated by 4-point Lagrange
// stencils that never cross the piece ends.
class Piece {
 public:
  Piece(const SpaceModel& space, const std::vector<Vec>& nodes) : space_(space), nodes_(nodes) {}

  [[nodiscard]] int segments() const { return static_cast<int>(nodes_.size()) - 1; }

  void eval(int segment, double tau, Point& x, Vec& xdot) const {
    const int count = std::min<int>(4, static_cast<int>(nodes_.size()));
    const int first = std::clamp(segment - 1, 0, static_cast<int>(nodes_.size()) - count);
    double w[4];
    double dw[4];
    lagrange_weights(tau, first, count, w, dw);
    Vec pos = Vec::Zero(space_.chart_dim());
    xdot = Vec::Zero(space_.chart_dim());
    for (int i = 0; i < count; ++i) {
      pos += w[i] * nodes_[first + i];
      xdot += dw[i] * nodes_[first + i];
    }
    x = space_.normalize(pos);
  }

 private:
  const SpaceModel& space_;
  const std::vector<Vec>& nodes_;
};

Mat rate(const SpaceModel& space, const Point& x, const Vec& xdot, const Mat& v) {
  Mat out(v.rows(), v.cols());
  for (long j = 0; j < v.cols(); ++j) out.col(j) = space.transport_rate(x, xdot, v.col(j));
  return out;
}

Mat project_columns(const SpaceModel& space, const Point& x, const Mat& v) {
  Mat out(v.rows(), v.cols());
  for (long j = 0; j < v.cols(); ++j) out.col(j) = space.project_to_tangent(x, v.col(j));
  return out;
}

}  // namespace

DiscretizedCurve sample_curve(const SpaceModel& space, const std::function<Vec(double)>& fn,
                              double t0, double t1, int n, const std::vector<double>& break_params) {
  if (n < 1) throw Error("sample_curve: need at least one segment");
  DiscretizedCurve c;
  c.samples.reserve(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) {
    const double t = (k == n) ? t1 : t0 + (t1 - t0) * k / n;
    c.samples.push_back(space.point(fn(t)));
  }
  for (double b : break_params) {
    const long idx = std::lround((b - t0) / (t1 - t0) * n);
    if (idx > 0 && idx < n) c.breakpoints.push_back(static_cast<std::size_t>(idx));
  }
  std::sort(c.breakpoints.begin(), c.breakpoints.end());
  c.breakpoints.erase(std::unique(c.breakpoints.begin(), c.breakpoints.end()), c.breakpoints.end());
  return c;
}

DiscretizedCurve reversed(const DiscretizedCurve& curve) {
  DiscretizedCurve r;
  r.samples.assign(curve.samples.rbegin(), curve.samples.rend());
  const std::size_t last = curve.samples.size() - 1;
  for (auto it = curve.breakpoints.rbegin(); it != curve.breakpoints.rend(); ++it) {
    r.breakpoints.push_back(last - *it);
  }
  return r;
}

DiscretizedCurve concatenate(const DiscretizedCurve& a, const DiscretizedCurve& b) {
  if (a.samples.empty() || b.samples.empty()) throw Error("concatenate: empty curve");
  if ((a.back().coords - b.front().coords).lpNorm<Eigen::Infinity>() > 1e-9) {
    throw GeometryError("concatenate: curves do not share an endpoint");
  }
  DiscretizedCurve c = a;
  const std::size_t join = a.samples.size() - 1;
  if (join > 0 && b.samples.size() > 1) c.breakpoints.push_back(join);
  c.samples.insert(c.samples.end(), b.samples.begin() + 1, b.samples.end());
  for (std::size_t bp : b.breakpoints) c.breakpoints.push_back(bp + join);
  return c;
}

double curve_length(const SpaceModel& space, const DiscretizedCurve& curve) {
  double len = 0.0;
  for (std::size_t k = 0; k + 1 < curve.samples.size(); ++k) {
    const Point& p = curve.samples[k];
    len += space.norm(p, space.project_to_tangent(p, curve.samples[k + 1].coords - p.coords));
  }
  return len;
}

std::vector<Mat> transport_along(const SpaceModel& space, const DiscretizedCurve& curve,
                                 const Mat& vectors, const TransportOptions& opts) {
  if (curve.samples.empty()) throw Error("transport: empty curve");
  if (vectors.rows() != space.chart_dim()) throw DimensionError("transport: chart dimension mismatch");
  const Point& start = curve.front();
  for (long j = 0; j < vectors.cols(); ++j) {
    if (space.tangency_defect(start, vectors.col(j)) > 1e-8 * std::max(1.0, vectors.col(j).norm())) {
      throw GeometryError("transport: vector is not based at the curve start");
    }
  }

  // Fix a continuous gauge for complex projective blocks.
  std::vector<Block> blocks;
  collect_gauge_blocks(space, 0, blocks);
  const std::size_t n = curve.samples.size();
  std::vector<Vec> nodes(n);
  std::vector<std::vector<Complex>> phase(n, std::vector<Complex>(blocks.size(), Complex{1.0, 0.0}));
  nodes[0] = curve.samples[0].coords;
  for (std::size_t k = 1; k < n; ++k) {
    nodes[k] = curve.samples[k].coords;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const Complex h = hermitian(nodes[k - 1], nodes[k], blocks[b]);
      if (std::abs(h) < 0.5) throw GeometryError("transport: curve too coarse (gauge lost)");
      phase[k][b] = std::conj(h) / std::abs(h);
      multiply_block(nodes[k], blocks[b], phase[k][b]);
    }
  }

  const double max_len = opts.max_step * space.scale() * (1.0 + 1e-9);
  std::vector<double> seg_len(n > 0 ? n - 1 : 0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const Point p{nodes[k]};
    seg_len[k] = space.norm(p, space.project_to_tangent(p, nodes[k + 1] - nodes[k]));
    if (seg_len[k] > max_len) {
      throw GeometryError("transport: curve too coarse (step " + std::to_string(seg_len[k]) +
                          " exceeds " + std::to_string(max_len) + ")");
    }
  }

  std::vector<std::size_t> cuts{0};
  for (std::size_t bp : curve.breakpoints) {
    if (bp > cuts.back() && bp < n - 1) cuts.push_back(bp);
  }
  cuts.push_back(n - 1);

  std::vector<Mat> out(n);
  Mat v = vectors;
  out[0] = v;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const std::size_t k0 = cuts[c];
    const std::size_t k1 = cuts[c + 1];
    if (k1 == k0) continue;
    const std::vector<Vec> piece_nodes(nodes.begin() + static_cast<long>(k0),
                                       nodes.begin() + static_cast<long>(k1) + 1);
    const Piece piece(space, piece_nodes);
    for (int seg = 0; seg < piece.segments(); ++seg) {
      const std::size_t k = k0 + static_cast<std::size_t>(seg);
      const int substeps = std::max(1, static_cast<int>(std::ceil(seg_len[k] * opts.steps_per_unit_length)));
      const double h = 1.0 / substeps;
      Point x;
      Vec xdot;
      for (int s = 0; s < substeps; ++s) {
        const double tau = seg + s * h;
        piece.eval(seg, tau, x, xdot);
        const Mat k1m = rate(space, x, xdot, v);
        piece.eval(seg, tau + 0.5 * h, x, xdot);
        const Mat k2m = rate(space, x, xdot, v + 0.5 * h * k1m);
        const Mat k3m = rate(space, x, xdot, v + 0.5 * h * k2m);
        const bool last = (s + 1 == substeps);
        piece.eval(seg, last ? seg + 1.0 : tau + h, x, xdot);
        if (last) x = Point{nodes[k + 1]};
        const Mat k4m = rate(space, x, xdot, v + h * k3m);
        v += (h / 6.0) * (k1m + 2.0 * k2m + 2.0 * k3m + k4m);
        v = project_columns(space, x, v);
      }
      out[k + 1] = v;
    }
  }

  // Back to the gauge of the original samples.
  for (std::size_t k = 1; k < n; ++k) {
    for (std::size_t b = 0; b < blocks.size(); ++b) multiply_block(out[k], blocks[b], std::conj(phase[k][b]));
  }
  return out;
}

TangentVector parallel_transport(const SpaceModel& space, const DiscretizedCurve& curve,
                                 const TangentVector& v, const TransportOptions& opts) {
  if (curve.samples.empty()) throw Error("transport: empty curve");
  if (!space.same_point(v.base, curve.front(), 1e-10)) {
    throw GeometryError("parallel_transport: vector is not based at the curve start");
  }
  Mat cols(v.dir.size(), 1);
  cols.col(0) = v.dir;
  const auto all = transport_along(space, curve, cols, opts);
  return TangentVector{curve.back(), all.back().col(0)};
}

FrameTransport transport_frame(const SpaceModel& space, const DiscretizedCurve& curve,
                               const Subspace& w, const TransportOptions& opts) {
  if (w.ambient_dim() != space.dim()) throw DimensionError("transport_frame: subspace dimension mismatch");
  if (w.dim() == 0) return FrameTransport{Subspace(space.dim()), 0.0};
  const Mat chart = space.from_frame_cols(curve.front(), w.basis());
  const auto all = transport_along(space, curve, chart, opts);
  const Mat coeffs = space.to_frame_cols(curve.back(), all.back());
  const Mat gram = coeffs.transpose() * coeffs;
  const double defect = (gram - Mat::Identity(w.dim(), w.dim())).cwiseAbs().maxCoeff();
  return FrameTransport{orthonormalize(coeffs, Tolerance{1e-12, 1e-8}), defect};
}

}  // namespace codimred
