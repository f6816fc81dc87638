#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "hbws/common.hpp"
#include "hbws/rng.hpp"

namespace hbws {

/// Power angle spectrum: a sum of exponential clusters, each truncated to a
/// rectangular (azimuth, elevation) window. eta controls the anisotropy;
/// eta = 0 is uniform density over the windows.
struct PasSpec {
  struct Cluster {
    double theta_center;  // azimuth, [-pi/2, pi/2)
    double phi_center;    // elevation, [0, pi)
  };
  std::vector<Cluster> clusters;
  double eta = 0.0;
  double half_width = std::numbers::pi / 20.0;

  double density(double theta, double phi) const {
    double acc = 0.0;
    for (const auto& c : clusters) {
      const double dt = theta - c.theta_center;
      const double dp = phi - c.phi_center;
      if (std::abs(dt) <= half_width && std::abs(dp) <= half_width)
        acc += std::exp(-eta * std::abs(dt) - eta * std::abs(dp));
    }
    return acc;
  }

  bool inside_support(double theta, double phi) const {
    for (const auto& c : clusters)
      if (std::abs(theta - c.theta_center) <= half_width && std::abs(phi - c.phi_center) <= half_width)
        return true;
    return false;
  }

  /// Three-cluster scenario used throughout the anisotropic experiments.
  static PasSpec three_cluster(double eta) {
    using std::numbers::pi;
    PasSpec pas;
    pas.eta = eta;
    pas.clusters = {{-3.0 * pi / 10.0, 6.0 * pi / 10.0},
                    {0.0, 8.0 * pi / 10.0},
                    {pi / 5.0, 7.0 * pi / 10.0}};
    return pas;
  }
};

/// Per-element positions in wavelengths. Horizontal offsets enter the array
/// response through sin(phi)sin(theta), vertical offsets through cos(phi).
struct ArrayGeometry {
  RVector horizontal;
  RVector vertical;

  int size() const { return int(horizontal.size()); }

  static ArrayGeometry uniform_planar(int rows, int cols, double spacing = 0.5) {
    if (rows < 1 || cols < 1) throw ArgumentError("uniform_planar: need rows, cols >= 1");
    ArrayGeometry g;
    g.horizontal.resize(rows * cols);
    g.vertical.resize(rows * cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        g.horizontal(r * cols + c) = c * spacing;
        g.vertical(r * cols + c) = r * spacing;
      }
    return g;
  }
};

/// Transmit correlation eigensystem plus per-user receive correlations.
struct ChannelModel {
  CMatrix e_tx;                   // N x N unitary, descending eigenvalue order
  RVector lambda_tx;              // length N, descending, >= 0
  std::vector<CMatrix> rx_blocks; // one M2 x M2 Hermitian PSD block per user
  int m1 = 0;
  int m2 = 0;

  int n() const { return int(lambda_tx.size()); }
  int m() const { return m1 * m2; }

  /// Isotropic-in-the-reduced-space model: R_tx = I_n, R_rx,m = I_m2.
  static ChannelModel isotropic(int n, int m1, int m2) {
    ChannelModel mdl;
    mdl.e_tx = CMatrix::Identity(n, n);
    mdl.lambda_tx = RVector::Ones(n);
    mdl.rx_blocks.assign(m1, CMatrix::Identity(m2, m2));
    mdl.m1 = m1;
    mdl.m2 = m2;
    return mdl;
  }
};

/// Spatial correlation matrix of a geometry under a PAS, by midpoint-rule
/// quadrature of the array response outer product with the sin(phi) Jacobian
/// over the union of the cluster windows. Diagonal is exactly 1; the result
/// is symmetrized to exact Hermitian.
inline CMatrix pas_correlation(const PasSpec& pas, const ArrayGeometry& geom,
                               int points_per_window = 64) {
  using std::numbers::pi;
  if (pas.clusters.empty()) throw ArgumentError("pas_correlation: empty PAS support");
  if (points_per_window < 64) throw ArgumentError("pas_correlation: need >= 64 points per window");
  const int n = geom.size();
  const double step = 2.0 * pas.half_width / points_per_window;
  double tmin = pi, tmax = -pi, pmin = pi, pmax = 0.0;
  for (const auto& c : pas.clusters) {
    tmin = std::min(tmin, c.theta_center - pas.half_width);
    tmax = std::max(tmax, c.theta_center + pas.half_width);
    pmin = std::min(pmin, c.phi_center - pas.half_width);
    pmax = std::max(pmax, c.phi_center + pas.half_width);
  }
  tmin = std::max(tmin, -pi / 2.0);
  tmax = std::min(tmax, pi / 2.0);
  pmin = std::max(pmin, 0.0);
  pmax = std::min(pmax, pi);
  const int nt = std::max(1, int(std::ceil((tmax - tmin) / step)));
  const int np = std::max(1, int(std::ceil((pmax - pmin) / step)));

  std::vector<double> weights;
  std::vector<std::pair<double, double>> angles;
  for (int it = 0; it < nt; ++it) {
    const double theta = tmin + (it + 0.5) * (tmax - tmin) / nt;
    for (int ip = 0; ip < np; ++ip) {
      const double phi = pmin + (ip + 0.5) * (pmax - pmin) / np;
      if (!pas.inside_support(theta, phi)) continue;
      const double w = pas.density(theta, phi) * std::sin(phi);
      if (w <= 0.0) continue;
      weights.push_back(w);
      angles.emplace_back(theta, phi);
    }
  }
  if (weights.empty()) throw ArgumentError("pas_correlation: degenerate PAS support");

  const int g = int(weights.size());
  CMatrix v(n, g);
  double total = 0.0;
  for (int i = 0; i < g; ++i) {
    const auto [theta, phi] = angles[i];
    const double sh = std::sin(phi) * std::sin(theta);
    const double cv = std::cos(phi);
    for (int a = 0; a < n; ++a) {
      const double arg = 2.0 * pi * (geom.horizontal(a) * sh + geom.vertical(a) * cv);
      v(a, i) = Complex(std::cos(arg), std::sin(arg)) * std::sqrt(weights[i]);
    }
    total += weights[i];
  }
  CMatrix r = (v * v.adjoint()) / total;
  r = 0.5 * (r + r.adjoint().eval());
  for (int a = 0; a < n; ++a) r(a, a) = 1.0;
  return r;
}

struct EigenSystem {
  CMatrix vectors;  // columns, descending eigenvalue order, phase-fixed
  RVector values;   // descending
};

/// Hermitian eigendecomposition with descending eigenvalues and a
/// deterministic phase fix (largest-magnitude entry of each eigenvector made
/// real positive) so repeated runs agree bitwise.
inline EigenSystem eigendecompose_sorted(const CMatrix& r, double tol = 1e-10) {
  if (r.rows() != r.cols()) throw ArgumentError("eigendecompose_sorted: matrix not square");
  const double scale = std::max(1.0, r.norm());
  if ((r - r.adjoint()).norm() > tol * scale)
    throw ArgumentError("eigendecompose_sorted: matrix not Hermitian within tolerance");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (r + r.adjoint()));
  const Eigen::Index n = r.rows();
  EigenSystem out;
  out.vectors.resize(n, n);
  out.values.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = es.eigenvalues()(n - 1 - i);  // ascending -> descending
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index imax = 0;
    double vmax = 0.0;
    for (Eigen::Index rr = 0; rr < n; ++rr) {
      const double m = std::abs(out.vectors(rr, c));
      if (m > vmax) {
        vmax = m;
        imax = rr;
      }
    }
    const Complex a = out.vectors(imax, c);
    if (std::abs(a) > 0.0) out.vectors.col(c) *= std::conj(a) / std::abs(a);
  }
  return out;
}

/// M x D matrix with i.i.d. CN(0,1) entries, drawn in row-major order.
inline CMatrix sample_iid_gaussian_channel(int m, int d, Rng& rng) {
  if (m < 1 || d < 1) throw ArgumentError("sample_iid_gaussian_channel: need m, d >= 1");
  CMatrix h(m, d);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < d; ++j) h(i, j) = rng.next_cgauss();
  return h;
}

/// Hermitian PSD square root via eigendecomposition with eigenvalue clamping
/// at zero.
inline CMatrix psd_sqrt(const CMatrix& r, double tol = 1e-8) {
  const EigenSystem es = eigendecompose_sorted(r, tol);
  RVector s = es.values.cwiseMax(0.0).cwiseSqrt();
  return es.vectors * s.asDiagonal() * es.vectors.adjoint();
}

/// The reduced-space objects downstream capacity code consumes: top-D
/// transmit eigensystem and the block-diagonal receive correlation.
struct EffectiveModel {
  CMatrix e_d;       // N x D
  RVector lambda_d;  // length D, descending, clamped >= 0
  CMatrix r_rx;      // M x M block diagonal
  CMatrix r_rx_sqrt; // principal square root
  int m1 = 0;
  int m2 = 0;

  int d() const { return int(lambda_d.size()); }
  int m() const { return m1 * m2; }
};

inline EffectiveModel effective_group_model(const ChannelModel& model, int d) {
  if (d < 1 || d > model.n())
    throw DimensionError("effective_group_model: need 1 <= d <= N");
  EffectiveModel em;
  em.e_d = model.e_tx.leftCols(d);
  em.lambda_d = model.lambda_tx.head(d).cwiseMax(0.0);
  em.m1 = model.m1;
  em.m2 = model.m2;
  const int m = model.m();
  em.r_rx = CMatrix::Zero(m, m);
  for (int u = 0; u < model.m1; ++u)
    em.r_rx.block(u * model.m2, u * model.m2, model.m2, model.m2) = model.rx_blocks[u];
  em.r_rx_sqrt = psd_sqrt(em.r_rx);
  return em;
}

}  // namespace hbws
