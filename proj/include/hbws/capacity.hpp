#pragma once

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "hbws/channel.hpp"
#include "hbws/common.hpp"
#include "hbws/grassmann.hpp"
#include "hbws/rng.hpp"
#include "hbws/switchset.hpp"

namespace hbws {

enum class Scheme { HBwS, HBaCSI, HBiCSI, ZfHBwS };

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::HBwS: return "HBwS";
    case Scheme::HBaCSI: return "HBaCSI";
    case Scheme::HBiCSI: return "HBiCSI";
    case Scheme::ZfHBwS: return "ZF-HBwS";
  }
  return "?";
}

struct SchemeConfig {
  Scheme scheme = Scheme::HBwS;
  int d = 1;
  int l = 1;
  int k = 1;
  int m1 = 1;
  int m2 = 1;
  double rho = 1.0;   // linear SNR
  double zeta = 0.0;  // symbol duration / coherence time
  bool bits = true;   // report in bits (log2); nats internally

  int m() const { return m1 * m2; }

  void validate() const {
    if (d < 1 || l < 1 || k < 1 || m1 < 1 || m2 < 1)
      throw ArgumentError("SchemeConfig: dimensions must be >= 1");
    if (k < m()) throw ArgumentError("SchemeConfig: requires K >= M1*M2");
    if (l < k) throw ArgumentError("SchemeConfig: requires L >= K");
    if (rho < 0.0) throw ArgumentError("SchemeConfig: rho must be >= 0");
    if (zeta < 0.0) throw ArgumentError("SchemeConfig: zeta must be >= 0");
  }
};

/// Monte Carlo mean with standard error. Units follow the SchemeConfig that
/// produced the estimate (bits by default).
struct CapacityEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long long samples = 0;
  std::uint64_t seed = 0;
};

namespace detail {

struct McMoments {
  double sum = 0.0;
  double sumsq = 0.0;
  long long n = 0;
};

inline int thread_count() {
  if (const char* env = std::getenv("HBWS_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 1;
}

/// Runs per_sample(i) for i in [0,n) and reduces (sum, sumsq) blockwise in a
/// fixed 1024-sample block order, so the result is bitwise independent of
/// the worker count.
inline McMoments mc_run(long long n, const std::function<double(long long)>& per_sample) {
  constexpr long long kBlock = 1024;
  const long long blocks = (n + kBlock - 1) / kBlock;
  std::vector<McMoments> partial(blocks);
  auto do_block = [&](long long b) {
    McMoments m;
    const long long hi = std::min(n, (b + 1) * kBlock);
    for (long long i = b * kBlock; i < hi; ++i) {
      const double v = per_sample(i);
      m.sum += v;
      m.sumsq += v * v;
      ++m.n;
    }
    partial[b] = m;
  };
  const int workers = std::min<long long>(thread_count(), blocks);
  if (workers <= 1) {
    for (long long b = 0; b < blocks; ++b) do_block(b);
  } else {
    std::vector<std::thread> pool;
    std::atomic<long long> next{0};
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (long long b = next++; b < blocks; b = next++) do_block(b);
      });
    for (auto& th : pool) th.join();
  }
  McMoments total;
  for (const auto& m : partial) {
    total.sum += m.sum;
    total.sumsq += m.sumsq;
    total.n += m.n;
  }
  return total;
}

inline CapacityEstimate to_estimate(const McMoments& m, const SchemeConfig& cfg,
                                    std::uint64_t seed) {
  CapacityEstimate est;
  est.samples = m.n;
  est.seed = seed;
  double mean = m.sum / double(m.n);
  double var = 0.0;
  if (m.n > 1) var = std::max(0.0, (m.sumsq - m.sum * m.sum / double(m.n)) / double(m.n - 1));
  double se = std::sqrt(var / double(m.n));
  if (cfg.bits) {
    mean /= std::numbers::ln2;
    se /= std::numbers::ln2;
  }
  est.mean = mean;
  est.std_error = se;
  return est;
}

}  // namespace detail

/// Per-realization hSNR value for one selection:
/// log|I_M + (rho/M) R^1/2 H L^1/2 Q Q' L^1/2 H' R^1/2|, in nats, via
/// Cholesky of the M x M Gram form. The argument is I + PSD, always
/// nonsingular.
inline double instantaneous_logdet(const CMatrix& q, const CMatrix& h, const CMatrix& r_rx_sqrt,
                                   double rho, const RVector& lambda_d) {
  const Eigen::Index m = h.rows();
  if (q.rows() != h.cols() || lambda_d.size() != h.cols() || r_rx_sqrt.rows() != m ||
      r_rx_sqrt.cols() != m)
    throw DimensionError("instantaneous_logdet: shape mismatch");
  if (rho < 0.0) throw ArgumentError("instantaneous_logdet: rho must be >= 0");
  if (rho == 0.0) return 0.0;
  const int big_m = int(m);
  const CMatrix b = r_rx_sqrt * h * lambda_d.cwiseSqrt().asDiagonal() * q;
  const CMatrix gram =
      CMatrix::Identity(m, m) + (rho / double(big_m)) * (b * b.adjoint());
  Eigen::LLT<CMatrix> llt(gram);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) logdet += std::log(llt.matrixL()(i, i).real());
  return 2.0 * logdet;
}

/// Orthonormalized selections of a beamformer, precomputed once per
/// (t, family). Selections that are rank deficient under t are recorded and
/// scored -inf during maximization.
struct SelectionEnsemble {
  std::vector<CMatrix> q;           // empty matrix marks a degenerate selection
  long long degenerate_count = 0;

  SelectionEnsemble() = default;
  SelectionEnsemble(const CMatrix& t, const SwitchFamily& family) {
    q.reserve(family.size());
    for (const auto& s : family.subsets) {
      try {
        q.push_back(orthonormalize_selection(t, s).first);
      } catch (const SingularSelectionError&) {
        q.emplace_back();
        ++degenerate_count;
      }
    }
    if (q.empty()) throw ArgumentError("SelectionEnsemble: empty family");
  }
};

/// Exhaustive argmax of instantaneous_logdet over the family; ties broken by
/// lowest index. Returns (1-based index, value in nats).
inline std::pair<int, double> best_selection(const SelectionEnsemble& ens, const CMatrix& h,
                                             const CMatrix& r_rx_sqrt, double rho,
                                             const RVector& lambda_d) {
  if (ens.q.empty()) throw ArgumentError("best_selection: empty family");
  int best_i = -1;
  double best_v = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ens.q.size(); ++i) {
    if (ens.q[i].size() == 0) continue;  // degenerate selection, scored -inf
    const double v = instantaneous_logdet(ens.q[i], h, r_rx_sqrt, rho, lambda_d);
    if (v > best_v) {
      best_v = v;
      best_i = int(i);
    }
  }
  if (best_i < 0) throw SingularSelectionError("best_selection: every selection degenerate");
  return {best_i + 1, best_v};
}

inline std::pair<int, double> best_selection(const CMatrix& t, const SwitchFamily& family,
                                             const CMatrix& h, const CMatrix& r_rx_sqrt,
                                             double rho, const RVector& lambda_d) {
  return best_selection(SelectionEnsemble(t, family), h, r_rx_sqrt, rho, lambda_d);
}

/// Monte Carlo estimate of the ergodic hSNR sum capacity of HBwS with
/// brute-force switch selection. Sample i draws its channel from substream i
/// of the root seed, so estimates are reproducible and pairable across
/// schemes.
inline CapacityEstimate hsnr_capacity_mc(const CMatrix& t, const SwitchFamily& family,
                                         const EffectiveModel& model, const SchemeConfig& cfg,
                                         long long n, std::uint64_t seed) {
  cfg.validate();
  if (n < 100) throw ArgumentError("hsnr_capacity_mc: need n >= 100");
  const SelectionEnsemble ens(t, family);
  const Rng root(seed);
  const int m = model.m();
  const int d = model.d();
  const auto mom = detail::mc_run(n, [&](long long i) {
    Rng rng = root.split(i);
    const CMatrix h = sample_iid_gaussian_channel(m, d, rng);
    return best_selection(ens, h, model.r_rx_sqrt, cfg.rho, model.lambda_d).second;
  });
  return detail::to_estimate(mom, cfg, seed);
}

/// Fixed-beamformer baselines. HBaCSI: first K columns of the identity, no
/// selection. HBiCSI: per realization, the top-K eigenvectors of
/// L^1/2 H' R H L^1/2 in the reduced space.
inline CapacityEstimate baseline_capacity(Scheme kind, const EffectiveModel& model,
                                          const SchemeConfig& cfg, long long n,
                                          std::uint64_t seed) {
  cfg.validate();
  if (n < 100) throw ArgumentError("baseline_capacity: need n >= 100");
  if (kind != Scheme::HBaCSI && kind != Scheme::HBiCSI)
    throw ArgumentError("baseline_capacity: kind must be HBaCSI or HBiCSI");
  const int m = model.m();
  const int d = model.d();
  const int k = cfg.k;
  if (k > d) throw DimensionError("baseline_capacity: need K <= D");
  const Rng root(seed);
  const CMatrix q_acsi = CMatrix::Identity(d, k);
  const RVector lam_sqrt = model.lambda_d.cwiseSqrt();
  const auto mom = detail::mc_run(n, [&](long long i) {
    Rng rng = root.split(i);
    const CMatrix h = sample_iid_gaussian_channel(m, d, rng);
    if (kind == Scheme::HBaCSI)
      return instantaneous_logdet(q_acsi, h, model.r_rx_sqrt, cfg.rho, model.lambda_d);
    const CMatrix a = model.r_rx_sqrt * h * lam_sqrt.asDiagonal();  // M x D
    Eigen::SelfAdjointEigenSolver<CMatrix> es(a.adjoint() * a);
    CMatrix q(d, k);
    for (int j = 0; j < k; ++j) q.col(j) = es.eigenvectors().col(d - 1 - j);
    return instantaneous_logdet(q, h, model.r_rx_sqrt, cfg.rho, model.lambda_d);
  });
  return detail::to_estimate(mom, cfg, seed);
}

/// Zero-forcing sum rate with max-min fairness to a scheduled user subset,
/// maximized over the switch family per realization. Selections with a
/// singular scheduled Gram matrix score -inf for that realization.
inline CapacityEstimate zf_sum_rate_mc(const CMatrix& t, const SwitchFamily& family,
                                       const EffectiveModel& model, const SchemeConfig& cfg,
                                       const std::vector<int>& scheduled_users, long long n,
                                       std::uint64_t seed) {
  cfg.validate();
  if (n < 100) throw ArgumentError("zf_sum_rate_mc: need n >= 100");
  if (scheduled_users.empty() || int(scheduled_users.size()) * cfg.m2 > cfg.k)
    throw ArgumentError("zf_sum_rate_mc: need 1 <= |scheduled| * M2 <= K");
  const SelectionEnsemble ens(t, family);
  const int m = model.m();
  const int d = model.d();
  const int msc = int(scheduled_users.size()) * model.m2;
  std::vector<int> rows;
  for (int u : scheduled_users) {
    if (u < 1 || u > model.m1) throw ArgumentError("zf_sum_rate_mc: user index out of range");
    for (int a = 0; a < model.m2; ++a) rows.push_back((u - 1) * model.m2 + a);
  }
  const Rng root(seed);
  const auto mom = detail::mc_run(n, [&](long long i) {
    Rng rng = root.split(i);
    const CMatrix h = sample_iid_gaussian_channel(m, d, rng);
    const CMatrix heff = model.r_rx_sqrt * h * model.lambda_d.cwiseSqrt().asDiagonal();
    CMatrix hsc(msc, d);
    for (int r = 0; r < msc; ++r) hsc.row(r) = heff.row(rows[r]);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& q : ens.q) {
      if (q.size() == 0) continue;
      const CMatrix a = hsc * q;  // Msc x K
      const CMatrix gram = a * a.adjoint();
      Eigen::FullPivLU<CMatrix> lu(gram);
      if (!lu.isInvertible()) continue;
      const double tr = lu.inverse().trace().real();
      if (!(tr > 0.0) || !std::isfinite(tr)) continue;
      best = std::max(best, double(msc) * std::log1p(cfg.rho / tr));
    }
    return std::isfinite(best) ? best : 0.0;
  });
  return detail::to_estimate(mom, cfg, seed);
}

/// Channel-estimation pre-log factor for a scheme.
inline double prelog_factor(const SchemeConfig& cfg) {
  double factor = 1.0;
  switch (cfg.scheme) {
    case Scheme::HBwS:
    case Scheme::ZfHBwS:
      factor = 1.0 - std::ceil(double(std::min(cfg.d, cfg.l)) / cfg.k) * cfg.zeta;
      break;
    case Scheme::HBaCSI:
      factor = 1.0 - cfg.zeta;
      break;
    case Scheme::HBiCSI:
      factor = 1.0 - std::ceil(double(cfg.d) / cfg.k) * cfg.zeta;
      break;
  }
  return factor;
}

/// Scales a capacity estimate by the scheme's pre-log overhead factor.
inline CapacityEstimate throughput(const CapacityEstimate& est, const SchemeConfig& cfg) {
  const double factor = prelog_factor(cfg);
  if (factor < 0.0)
    throw InfeasibleError("throughput: estimation overhead exceeds coherence budget (factor " +
                          std::to_string(factor) + ")");
  CapacityEstimate out = est;
  out.mean *= factor;
  out.std_error *= factor;
  return out;
}

}  // namespace hbws
