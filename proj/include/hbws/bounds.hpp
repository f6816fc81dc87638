#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "hbws/capacity.hpp"
#include "hbws/channel.hpp"
#include "hbws/common.hpp"
#include "hbws/grassmann.hpp"
#include "hbws/rng.hpp"
#include "hbws/switchset.hpp"

namespace hbws {

/// Digamma function psi(x) for x > 0 via the standard recurrence
/// psi(x) = psi(x+1) - 1/x plus the asymptotic series at large argument.
/// Absolute error below 1e-12 for x >= 1e-3.
inline double digamma(double x) {
  if (!(x > 0.0)) throw ArgumentError("digamma: need x > 0");
  double acc = 0.0;
  while (x < 12.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  // asymptotic expansion: log x - 1/(2x) - sum B_2n / (2n x^(2n))
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = inv2 * (1.0 / 12.0 -
                  inv2 * (1.0 / 120.0 -
                  inv2 * (1.0 / 252.0 -
                  inv2 * (1.0 / 240.0 -
                  inv2 * (1.0 / 132.0 -
                  inv2 * (691.0 / 32760.0 -
                  inv2 * (1.0 / 12.0)))))));
  return acc + std::log(x) - 0.5 * inv - series;
}

/// beta = M log(rho/M) + log|R_rx| + sum_{m'=1}^{M} psi(D - m' + 1), in nats.
/// The digamma sum is the expected log-determinant of the M x D Wishart
/// channel Gram matrix.
inline double beta_term(int m, int d, double rho, const CMatrix& r_rx) {
  if (m < 1) throw ArgumentError("beta_term: need m >= 1");
  if (d < m) throw ArgumentError("beta_term: need d >= m (Wishart degrees of freedom)");
  if (rho <= 0.0) throw ArgumentError("beta_term: need rho > 0");
  if (r_rx.rows() != m || r_rx.cols() != m) throw DimensionError("beta_term: r_rx must be M x M");
  Eigen::FullPivLU<CMatrix> lu(r_rx);
  const double logdet_r = std::log(std::abs(lu.determinant()));
  double psi_sum = 0.0;
  for (int mp = 1; mp <= m; ++mp) psi_sum += digamma(double(d - mp + 1));
  return m * std::log(rho / m) + logdet_r + psi_sum;
}

/// Monte Carlo higher-dimension lower bound (nats unless cfg.bits):
/// E max_i log(1 + alpha |det(V' Q_i)|^2) over i.i.d. H and uniform Stiefel V,
/// with alpha = (rho/M)^M |R_rx| |H H'|. Valid only for the isotropic reduced
/// eigenvalue profile Lambda = I.
inline CapacityEstimate clb1_mc(const CMatrix& t, const SwitchFamily& family,
                                const EffectiveModel& model, const SchemeConfig& cfg,
                                long long n, std::uint64_t seed) {
  cfg.validate();
  if (n < 100) throw ArgumentError("clb1_mc: need n >= 100");
  if ((model.lambda_d - RVector::Ones(model.d())).cwiseAbs().maxCoeff() > 1e-12)
    throw ArgumentError("clb1_mc: requires isotropic reduced eigenvalues (Lambda = I)");
  const SelectionEnsemble ens(t, family);
  const int m = model.m();
  const int d = model.d();
  const int k = cfg.k;
  Eigen::FullPivLU<CMatrix> lu_r(model.r_rx);
  const double det_r = std::abs(lu_r.determinant());
  const double log_rho_m = double(m) * std::log(cfg.rho / m);
  const Rng root(seed);
  const auto mom = detail::mc_run(n, [&](long long i) {
    Rng rng = root.split(i);
    const CMatrix h = sample_iid_gaussian_channel(m, d, rng);
    const CMatrix v = sample_stiefel_uniform(d, k, rng);
    // log alpha, kept in the log domain to avoid overflow of |HH'|
    Eigen::FullPivLU<CMatrix> lu(h * h.adjoint());
    const double log_alpha = log_rho_m + std::log(det_r) + std::log(std::abs(lu.determinant()));
    double best = 0.0;
    for (const auto& q : ens.q) {
      if (q.size() == 0) continue;
      const double p = std::abs((v.adjoint() * q).determinant());
      best = std::max(best, p * p);
    }
    return std::log1p(std::exp(log_alpha) * best);
  });
  return detail::to_estimate(mom, cfg, seed);
}

/// How the o(D) exponent correction is chosen: fixed at zero by default, or a
/// linear sensitivity knob epsilon = c * D * K.
struct EpsilonPolicy {
  double c = 0.0;  // in [-0.5, 0.5]
  double epsilon(int d, int k) const {
    if (c < -0.5 || c > 0.5) throw ArgumentError("EpsilonPolicy: need c in [-0.5, 0.5]");
    return c * double(d) * double(k);
  }
  std::string tag() const { return c == 0.0 ? "eps=0" : ("eps=" + std::to_string(c) + "*D*K"); }
};

struct ClosedBound {
  double value = 0.0;  // nats
  double delta = 0.0;  // minimum pairwise Fubini-Study distance
  bool degenerate = false;
  bool beta_warning = false;  // beta < 2: monotone-in-delta guarantee absent
};

/// Closed-form packing bound (nats):
/// |S| ((1 - cos^{2/K}(delta/2)) / K)^{DK + eps} (beta + log cos^2(delta/2)).
inline ClosedBound clb_closed(const CMatrix& t, const SwitchFamily& family, int m, double beta,
                              EpsilonPolicy eps = {}) {
  if (m < 1) throw ArgumentError("clb_closed: need m >= 1");
  const int d = int(t.rows());
  const int k = family.k;
  ClosedBound out;
  out.delta = detail::f_fs_or_zero(t, family);
  out.beta_warning = beta < 2.0;
  const double c = std::cos(out.delta / 2.0);
  const double density = (1.0 - std::pow(c * c, 1.0 / k)) / double(k);
  const double exponent = double(d) * double(k) + eps.epsilon(d, k);
  const double tail = beta + std::log(c * c);
  out.value = double(family.size()) * std::pow(density, exponent) * tail;
  // arccos reads an exactly coincident pair as ~sqrt(machine eps), so treat
  // any delta at that scale as a degenerate packing
  out.degenerate = out.delta <= 1e-7 || tail <= 0.0;
  return out;
}

/// Combined report: Monte Carlo and closed-form lower bounds for one design.
struct BoundReport {
  CapacityEstimate clb1;
  double clb_closed_value = 0.0;  // same units as clb1 (cfg.bits)
  double delta = 0.0;
  double beta = 0.0;  // nats
  std::string epsilon_policy;
  bool degenerate = false;
};

inline BoundReport bound_report(const CMatrix& t, const SwitchFamily& family,
                                const EffectiveModel& model, const SchemeConfig& cfg,
                                long long n, std::uint64_t seed, EpsilonPolicy eps = {}) {
  BoundReport rep;
  rep.clb1 = clb1_mc(t, family, model, cfg, n, seed);
  rep.beta = beta_term(model.m(), model.d(), cfg.rho, model.r_rx);
  const ClosedBound cb = clb_closed(t, family, model.m(), rep.beta, eps);
  rep.clb_closed_value = cfg.bits ? cb.value / std::numbers::ln2 : cb.value;
  rep.delta = cb.delta;
  rep.epsilon_policy = eps.tag();
  rep.degenerate = cb.degenerate;
  return rep;
}

struct GaussianMoments {
  double mean = 0.0;      // nats
  double crosscov = 0.0;  // nats^2
};

/// Gaussian-approximation moments for the per-selection log-det values:
/// mean = M log(rho K^{3/2} / (M sqrt(K+1))) + log|R_rx|,
/// crosscov(i,j) = M log(1 + ||Q_j' Q_i||_F^2 / K^2).
inline GaussianMoments gaussian_moments(const CMatrix& q_i, const CMatrix& q_j,
                                        const SchemeConfig& cfg, const CMatrix& r_rx) {
  if (q_i.rows() != q_j.rows() || q_i.cols() != q_j.cols())
    throw DimensionError("gaussian_moments: shape mismatch");
  const int k = int(q_i.cols());
  const int m = cfg.m();
  Eigen::FullPivLU<CMatrix> lu(r_rx);
  GaussianMoments out;
  out.mean = m * std::log(cfg.rho * std::pow(double(k), 1.5) / (m * std::sqrt(double(k + 1)))) +
             std::log(std::abs(lu.determinant()));
  const double fro2 = (q_j.adjoint() * q_i).squaredNorm();
  out.crosscov = m * std::log1p(fro2 / (double(k) * double(k)));
  return out;
}

}  // namespace hbws
