#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hbws/common.hpp"
#include "hbws/rng.hpp"
#include "hbws/switchset.hpp"

namespace hbws {

inline constexpr double kHalfPi = std::numbers::pi / 2.0;

/// Relative smallest-singular-value tolerance below which a selected column
/// set is treated as rank deficient.
inline constexpr double kRankTol = 1e-8;

inline bool is_semi_unitary(const CMatrix& a, double tol = 1e-10) {
  const CMatrix g = a.adjoint() * a;
  return (g - CMatrix::Identity(a.cols(), a.cols())).norm() <= tol;
}

/// Fubini-Study distance between the column spans of two semi-unitary D x K
/// matrices: arccos sqrt(|det(a' b b' a)|) = arccos |det(b' a)|, in [0, pi/2].
inline double fubini_study_distance(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("fubini_study_distance: shape mismatch");
  if (a.cols() > a.rows())
    throw DimensionError("fubini_study_distance: need K <= D");
  double c = std::abs((b.adjoint() * a).determinant());
  if (c > 1.0 + 1e-12)
    throw NumericalError("fubini_study_distance: |det| = " + std::to_string(c) +
                         " > 1; inputs are not semi-unitary");
  c = std::clamp(c, 0.0, 1.0);
  return std::acos(c);
}

/// Orthonormalizes the columns of t selected by a 1-based index subset.
/// Returns (q, g) with q = t[:,subset] * g, q'q = I, and g full rank upper
/// triangular (QR with positive real diagonal of R).
inline std::pair<CMatrix, CMatrix> orthonormalize_selection(const CMatrix& t,
                                                            const std::vector<int>& subset) {
  const Eigen::Index d = t.rows();
  const Eigen::Index k = subset.size();
  if (k < 1 || k > d) throw DimensionError("orthonormalize_selection: need 1 <= K <= D");
  CMatrix a(d, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const int idx = subset[j];
    if (idx < 1 || idx > t.cols())
      throw DimensionError("orthonormalize_selection: column index out of range");
    a.col(j) = t.col(idx - 1);
  }
  if (k == 1) {  // fast path: a single column only needs normalization
    const double norm = a.col(0).norm();
    if (norm <= kRankTol)
      throw SingularSelectionError("orthonormalize_selection: rank-deficient subset {" +
                                   std::to_string(subset[0]) + "}");
    CMatrix g(1, 1);
    g(0, 0) = 1.0 / norm;
    return {a / norm, std::move(g)};
  }
  Eigen::JacobiSVD<CMatrix> svd(a);
  const auto& sv = svd.singularValues();
  if (sv(k - 1) <= kRankTol * sv(0)) {
    std::string s = "{";
    for (Eigen::Index j = 0; j < k; ++j) s += (j ? "," : "") + std::to_string(subset[j]);
    throw SingularSelectionError("orthonormalize_selection: rank-deficient subset " + s + "}");
  }
  Eigen::HouseholderQR<CMatrix> qr(a);
  CMatrix q = qr.householderQ() * CMatrix::Identity(d, k);
  CMatrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  // fix phases so R has positive real diagonal
  for (Eigen::Index j = 0; j < k; ++j) {
    const Complex rjj = r(j, j);
    const double m = std::abs(rjj);
    const Complex ph = (m > 0.0) ? rjj / m : Complex(1.0, 0.0);
    q.col(j) *= ph;
    r.row(j) *= std::conj(ph);
  }
  const CMatrix g = r.triangularView<Eigen::Upper>().solve(CMatrix::Identity(k, k));
  return {std::move(q), std::move(g)};
}

/// Draws a matrix uniformly distributed over the Stiefel manifold U(d,k):
/// i.i.d. CN(0,1) entries followed by QR with positive real diagonal of R.
inline CMatrix sample_stiefel_uniform(int d, int k, Rng& rng) {
  if (k < 1 || k > d) throw DimensionError("sample_stiefel_uniform: need 1 <= k <= d");
  CMatrix a(d, k);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < k; ++j) a(i, j) = rng.next_cgauss();
  Eigen::HouseholderQR<CMatrix> qr(a);
  CMatrix q = qr.householderQ() * CMatrix::Identity(d, k);
  const CMatrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (int j = 0; j < k; ++j) {
    const Complex rjj = r(j, j);
    const double m = std::abs(rjj);
    q.col(j) *= (m > 0.0) ? rjj / m : Complex(1.0, 0.0);
  }
  return q;
}

/// Canonical form of a reduced-dimensional beamformer: unit-norm columns
/// whose anchor entry (first nonzero entry scanned from row 1) is real and
/// nonnegative. Column scaling leaves the hSNR sum capacity unchanged, so
/// this resolves the scale/phase ambiguity without loss.
inline CMatrix canonicalize(const CMatrix& t) {
  CMatrix out = t;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const double norm = out.col(c).norm();
    if (norm <= 0.0) throw ArgumentError("canonicalize: zero column " + std::to_string(c + 1));
    Eigen::Index anchor = -1;
    for (Eigen::Index rr = 0; rr < out.rows(); ++rr) {
      if (std::abs(out(rr, c)) > 1e-12 * norm) {
        anchor = rr;
        break;
      }
    }
    if (anchor < 0) throw ArgumentError("canonicalize: zero column " + std::to_string(c + 1));
    const Complex a = out(anchor, c);
    out.col(c) *= std::conj(a) / (norm * std::abs(a));
  }
  return out;
}

/// Minimum pairwise Fubini-Study distance among the orthonormalized
/// selections of t, i.e. f_FS(t) for the given switch family.
inline double min_pairwise_fs(const CMatrix& t, const SwitchFamily& family) {
  if (family.size() < 2) throw ArgumentError("min_pairwise_fs: need at least two subsets");
  std::vector<CMatrix> qs;
  qs.reserve(family.size());
  for (const auto& s : family.subsets) qs.push_back(orthonormalize_selection(t, s).first);
  double best = kHalfPi;
  for (std::size_t i = 0; i < qs.size(); ++i)
    for (std::size_t j = i + 1; j < qs.size(); ++j)
      best = std::min(best, fubini_study_distance(qs[i], qs[j]));
  return best;
}

namespace detail {

/// Total variant used inside searches: a candidate that makes some selection
/// rank deficient scores 0 instead of throwing, so trajectories stay defined.
inline double f_fs_or_zero(const CMatrix& t, const SwitchFamily& family) {
  try {
    return min_pairwise_fs(t, family);
  } catch (const SingularSelectionError&) {
    return 0.0;
  }
}

/// Smooth soft-min relaxation of f_FS: -(1/s) log sum exp(-s d_ij).
/// Singular candidates score -inf and are never accepted.
inline double f_fs_smooth(const CMatrix& t, const SwitchFamily& family, double sharpness) {
  std::vector<CMatrix> qs;
  qs.reserve(family.size());
  try {
    for (const auto& s : family.subsets) qs.push_back(orthonormalize_selection(t, s).first);
  } catch (const SingularSelectionError&) {
    return -std::numeric_limits<double>::infinity();
  }
  double dmin = std::numeric_limits<double>::infinity();
  std::vector<double> ds;
  ds.reserve(qs.size() * (qs.size() - 1) / 2);
  for (std::size_t i = 0; i < qs.size(); ++i)
    for (std::size_t j = i + 1; j < qs.size(); ++j) {
      ds.push_back(fubini_study_distance(qs[i], qs[j]));
      dmin = std::min(dmin, ds.back());
    }
  double acc = 0.0;
  for (double d : ds) acc += std::exp(-sharpness * (d - dmin));
  return dmin - std::log(acc) / sharpness;
}

struct AscentOptions {
  double gamma = 0.05;       // geodesic step scale
  double delta = 1e-5;       // finite-difference step
  double sharpness = 10.0;   // soft-min relaxation constant
  int max_iterations = 200;
  int max_backtracks = 12;
  std::vector<double>* accepted_trace = nullptr;  // accepted smooth objective values
};

/// Per-column gradient ascent on the unit-sphere product manifold with a
/// numerically differentiated objective. The gradient of the smooth
/// objective is taken entrywise with separate real/imaginary perturbations
/// (the objective is non-holomorphic), projected tangentially per column and
/// applied as a geodesic step; iterates are re-canonicalized and a step is
/// accepted only if the smooth objective strictly increases, with step-size
/// halving before termination.
inline CMatrix soft_min_ascent(CMatrix t, const std::function<double(const CMatrix&)>& objective,
                               AscentOptions opts = {}) {
  const Eigen::Index d = t.rows(), l = t.cols();
  double f_cur = objective(t);
  double gamma = opts.gamma;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    CMatrix grad(d, l);
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < l; ++j) {
        CMatrix tp = t;
        tp(i, j) += opts.delta;
        const double fr = (objective(tp) - f_cur) / opts.delta;
        tp(i, j) = t(i, j) + Complex(0.0, opts.delta);
        const double fi = (objective(tp) - f_cur) / opts.delta;
        grad(i, j) = Complex(fr, fi);
      }
    }
    bool accepted = false;
    for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
      CMatrix cand = t;
      for (Eigen::Index j = 0; j < l; ++j) {
        const CVector col = t.col(j);
        const CVector tang = grad.col(j) - col * (col.adjoint() * grad.col(j));
        const double tn = tang.norm();
        if (tn < 1e-14) continue;
        cand.col(j) = col * std::cos(gamma * tn) + tang * (std::sin(gamma * tn) / tn);
      }
      try {
        cand = canonicalize(cand);
      } catch (const ArgumentError&) {
        gamma *= 0.5;
        continue;
      }
      const double f_new = objective(cand);
      if (f_new > f_cur) {
        t = std::move(cand);
        f_cur = f_new;
        if (opts.accepted_trace) opts.accepted_trace->push_back(f_cur);
        accepted = true;
        break;
      }
      gamma *= 0.5;
    }
    if (!accepted) break;
  }
  return t;
}

inline SwitchFamily singleton_family(int l) {
  SwitchFamily fam{l, 1, {}};
  for (int i = 1; i <= l; ++i) fam.subsets.push_back({i});
  return fam;
}

}  // namespace detail

struct LinePackOptions {
  int restarts = 8;
  int iterations = 200;
  std::uint64_t seed = 0;
  double sharpness = 10.0;
};

/// Grassmannian line packing: a canonical D x L matrix locally maximizing the
/// minimum pairwise column Fubini-Study distance. For l <= d the optimum
/// pi/2 is attained exactly by any semi-unitary matrix; for l > d we run
/// random-restart manifold gradient ascent on the soft-min surrogate.
inline CMatrix line_pack(int d, int l, LinePackOptions opts = {}) {
  if (d < 1 || l < 1) throw ArgumentError("line_pack: need d, l >= 1");
  if (l <= d) return CMatrix::Identity(d, l);  // canonical, exactly semi-unitary
  const SwitchFamily lines = detail::singleton_family(l);
  auto objective = [&](const CMatrix& t) {
    return detail::f_fs_smooth(t, lines, opts.sharpness);
  };
  Rng root(opts.seed, 0x11e9ac5);
  CMatrix best;
  double best_min = -1.0;
  for (int r = 0; r < opts.restarts; ++r) {
    Rng rng = root.split(r);
    CMatrix t0(d, l);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < l; ++j) t0(i, j) = rng.next_cgauss();
    t0 = canonicalize(t0);
    detail::AscentOptions ao;
    ao.gamma = 0.1;
    ao.sharpness = opts.sharpness;
    ao.max_iterations = opts.iterations;
    const CMatrix t = detail::soft_min_ascent(t0, objective, ao);
    const double score = detail::f_fs_or_zero(t, lines);
    if (score > best_min) {
      best_min = score;
      best = t;
    }
  }
  return best;
}

}  // namespace hbws
