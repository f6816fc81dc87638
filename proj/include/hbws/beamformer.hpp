#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "hbws/common.hpp"
#include "hbws/grassmann.hpp"
#include "hbws/switchset.hpp"

namespace hbws {

/// DFT-based seed for l <= d: top l x l block is the unitary DFT, remaining
/// rows zero, canonicalized. Preferred over generic line packings when the
/// result will be skewed toward a dominant eigen-subspace.
inline CMatrix dft_seed(int d, int l) {
  if (l > d) throw ArgumentError("dft_seed: need l <= d (use line_pack for l > d)");
  if (d < 1 || l < 1) throw ArgumentError("dft_seed: need d, l >= 1");
  using std::numbers::pi;
  CMatrix t = CMatrix::Zero(d, l);
  const double s = 1.0 / std::sqrt(double(l));
  for (int a = 0; a < l; ++a)
    for (int b = 0; b < l; ++b) {
      const double arg = 2.0 * pi * double(a) * double(b) / double(l);
      t(a, b) = Complex(std::cos(arg), std::sin(arg)) * s;
    }
  return canonicalize(t);
}

/// Greedy column permutation: repeatedly tries all single swaps per column
/// and applies the best strictly improving one until a full pass changes
/// nothing. Output is a column permutation of the input with
/// f_FS(out) >= f_FS(in).
inline CMatrix greedy_permute(const CMatrix& t, const SwitchFamily& family,
                              std::vector<double>* accepted_trace = nullptr) {
  if (family.l != int(t.cols()))
    throw DimensionError("greedy_permute: family L does not match beamformer columns");
  CMatrix cur = t;
  double f_cur = detail::f_fs_or_zero(cur, family);
  const Eigen::Index l = t.cols();
  bool changed = true;
  while (changed) {
    changed = false;
    for (Eigen::Index c = 0; c < l; ++c) {
      Eigen::Index best_j = -1;
      double best_f = f_cur;
      for (Eigen::Index j = 0; j < l; ++j) {
        if (j == c) continue;
        CMatrix cand = cur;
        cand.col(c).swap(cand.col(j));
        const double f = detail::f_fs_or_zero(cand, family);
        if (f > best_f) {
          best_f = f;
          best_j = j;
        }
      }
      if (best_j >= 0) {
        cur.col(c).swap(cur.col(best_j));
        f_cur = best_f;
        if (accepted_trace) accepted_trace->push_back(f_cur);
        changed = true;
      }
    }
  }
  return cur;
}

struct GradientAscentOptions {
  double gamma = 0.05;
  double delta = 1e-5;
  double sharpness = 10.0;
  int max_iterations = 200;
  std::vector<double>* accepted_trace = nullptr;
};

/// Numerical gradient ascent of the soft-min relaxation of f_FS over the
/// product of unit spheres (per-column tangential projection + geodesic
/// step). Accepted steps strictly increase the relaxed objective; the
/// returned matrix is the trajectory iterate with the best exact f_FS, so
/// the exact objective never decreases either.
inline CMatrix gradient_ascent(const CMatrix& t, const SwitchFamily& family,
                               GradientAscentOptions opts = {}) {
  if (opts.gamma <= 0.0 || opts.delta <= 0.0)
    throw ArgumentError("gradient_ascent: gamma and delta must be positive");
  if (family.l != int(t.cols()))
    throw DimensionError("gradient_ascent: family L does not match beamformer columns");
  auto objective = [&](const CMatrix& x) {
    return detail::f_fs_smooth(x, family, opts.sharpness);
  };
  detail::AscentOptions ao;
  ao.gamma = opts.gamma;
  ao.delta = opts.delta;
  ao.sharpness = opts.sharpness;
  ao.max_iterations = opts.max_iterations;
  ao.accepted_trace = opts.accepted_trace;
  const CMatrix out = detail::soft_min_ascent(t, objective, ao);
  return detail::f_fs_or_zero(out, family) >= detail::f_fs_or_zero(t, family) ? out : t;
}

/// Companding skew for anisotropic channels: T_ani = E_d diag(lambda^xi) t.
/// Downstream capacity code re-orthonormalizes per selection, so no column
/// normalization here.
inline CMatrix skew_anisotropic(const CMatrix& e_d, const RVector& lambda_d, const CMatrix& t,
                                double xi = 1.0) {
  if (e_d.cols() != t.rows() || lambda_d.size() != t.rows())
    throw DimensionError("skew_anisotropic: dimension mismatch");
  if (lambda_d.maxCoeff() <= 0.0)
    throw ArgumentError("skew_anisotropic: all-zero eigenvalue vector");
  RVector s = lambda_d;
  if (xi != 1.0)
    for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = std::pow(std::max(s(i), 0.0), xi);
  return e_d * s.asDiagonal() * t;
}

/// The reduced-space beamformer a skewed design presents to the capacity
/// model, in canonical form. Equivalent to skew_anisotropic followed by
/// projection onto the reduced space.
inline CMatrix skewed_reduced(const RVector& lambda_d, const CMatrix& t, double xi = 1.0) {
  if (lambda_d.size() != t.rows()) throw DimensionError("skewed_reduced: dimension mismatch");
  if (lambda_d.maxCoeff() <= 0.0) throw ArgumentError("skewed_reduced: all-zero eigenvalue vector");
  RVector s = lambda_d;
  if (xi != 1.0)
    for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = std::pow(std::max(s(i), 0.0), xi);
  return canonicalize(s.asDiagonal() * t);
}

/// Two-stage hardware decomposition: t_var carries the adaptive part
/// (e_d diag(lambda) t[:,1:D]), t_fix = [I_D | t[:,1:D]^-1 t[:,D+1:L]] can be
/// built from fixed components. The product reconstructs the full
/// (possibly skewed) beamformer.
struct TwoStageBeamformer {
  CMatrix t_var;  // N x D
  CMatrix t_fix;  // D x L, leading D x D identity block
};

inline TwoStageBeamformer two_stage_decompose(const CMatrix& t, const CMatrix& e_d,
                                              const RVector* lambda_d = nullptr) {
  const Eigen::Index d = t.rows(), l = t.cols();
  if (l < d) throw DimensionError("two_stage_decompose: need L >= D");
  if (e_d.cols() != d) throw DimensionError("two_stage_decompose: e_d column count != D");
  const CMatrix lead = t.leftCols(d);
  Eigen::JacobiSVD<CMatrix> svd(lead);
  const auto& sv = svd.singularValues();
  if (sv(d - 1) <= 0.0 || sv(0) / sv(d - 1) >= 1e8)
    throw NumericalError(
        "two_stage_decompose: leading D x D block ill-conditioned; "
        "reorder columns (e.g. greedy_permute) first");
  TwoStageBeamformer out;
  if (lambda_d) {
    if (lambda_d->size() != d) throw DimensionError("two_stage_decompose: lambda_d length != D");
    out.t_var = e_d * lambda_d->asDiagonal() * lead;
  } else {
    out.t_var = e_d * lead;
  }
  out.t_fix.resize(d, l);
  out.t_fix.leftCols(d) = CMatrix::Identity(d, d);
  if (l > d) out.t_fix.rightCols(l - d) = lead.partialPivLu().solve(t.rightCols(l - d));
  return out;
}

/// Column permutation index used by the eigenbeam comparison design:
/// mu(l) = mod((l-1)K + floor((l-1)K/L), L) + 1, 1-based.
inline int sudarshan_mu(int ell, int l, int k) {
  const long long a = (long long)(ell - 1) * k;
  return int((a + a / l) % l) + 1;
}

/// Comparison beamformer built from permuted transmit eigenvectors.
inline CMatrix sudarshan_baseline(const CMatrix& e_tx, int l, int k) {
  if (l > e_tx.cols()) throw DimensionError("sudarshan_baseline: need l <= N");
  CMatrix t(e_tx.rows(), l);
  for (int c = 1; c <= l; ++c) t.col(c - 1) = e_tx.col(sudarshan_mu(c, l, k) - 1);
  return t;
}

/// Reduced-space form of the comparison beamformer (columns of I_D permuted
/// by mu), valid for l <= d.
inline CMatrix sudarshan_reduced(int d, int l, int k) {
  if (l > d) throw DimensionError("sudarshan_reduced: need l <= d");
  CMatrix t = CMatrix::Zero(d, l);
  for (int c = 1; c <= l; ++c) t(sudarshan_mu(c, l, k) - 1, c - 1) = 1.0;
  return t;
}

}  // namespace hbws
