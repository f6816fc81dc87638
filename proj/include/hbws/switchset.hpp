#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <vector>

#include "hbws/common.hpp"

namespace hbws {

/// An ordered family of K-element switch positions over input ports {1..L}.
/// Each subset stands for the L x K selection matrix picking those columns
/// of the identity. Subsets are stored sorted ascending and are pairwise
/// distinct.
struct SwitchFamily {
  int l = 0;
  int k = 0;
  std::vector<std::vector<int>> subsets;

  std::size_t size() const { return subsets.size(); }

  void validate() const {
    if (l < 1 || k < 1 || k > l) throw ArgumentError("SwitchFamily: need l >= k >= 1");
    for (const auto& s : subsets) {
      if (int(s.size()) != k) throw ArgumentError("SwitchFamily: subset size != k");
      if (!std::is_sorted(s.begin(), s.end())) throw ArgumentError("SwitchFamily: subset not sorted");
      for (int e : s)
        if (e < 1 || e > l) throw ArgumentError("SwitchFamily: index out of [1, l]");
      if (std::adjacent_find(s.begin(), s.end()) != s.end())
        throw ArgumentError("SwitchFamily: repeated index in subset");
    }
    auto sorted = subsets;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ArgumentError("SwitchFamily: duplicate subsets");
  }
};

namespace detail {

inline bool is_prime(int n) {
  if (n < 2) return false;
  for (int d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

inline int largest_prime_leq(int n) {
  for (int p = n; p >= 2; --p)
    if (is_prime(p)) return p;
  return 0;
}

inline unsigned long long binomial(int n, int r) {
  if (r < 0 || r > n) return 0;
  r = std::min(r, n - r);
  unsigned long long acc = 1;
  for (int i = 1; i <= r; ++i) acc = acc * (n - r + i) / i;
  return acc;
}

}  // namespace detail

/// All selections picking one port from each of K exclusive banks of width
/// floor(l/k). Ports beyond k*floor(l/k) are unused. This is the S_all
/// architecture: each up-conversion chain owns one 1-to-floor(l/k) switch.
inline SwitchFamily enumerate_banked(int l, int k) {
  if (l < 1 || k < 1 || k > l) throw ArgumentError("enumerate_banked: need l >= k >= 1");
  const int w = l / k;
  SwitchFamily fam{l, k, {}};
  std::vector<int> cur(k);
  // odometer over bank offsets, first bank outermost
  std::vector<int> off(k, 0);
  while (true) {
    for (int b = 0; b < k; ++b) cur[b] = b * w + off[b] + 1;
    fam.subsets.push_back(cur);
    int b = k - 1;
    while (b >= 0 && ++off[b] == w) off[b--] = 0;
    if (b < 0) break;
  }
  return fam;
}

/// All C(l,k) subsets in lexicographic order. Guarded by a size cap since the
/// full family is only a reference at desk scale.
inline SwitchFamily enumerate_full(int l, int k, std::uint64_t cap = 1000000) {
  if (l < 1 || k < 1 || k > l) throw ArgumentError("enumerate_full: need l >= k >= 1");
  if (detail::binomial(l, k) > cap)
    throw ArgumentError("enumerate_full: C(l,k) exceeds cap; use enumerate_banked or frankl_babai");
  SwitchFamily fam{l, k, {}};
  std::vector<int> cur(k);
  std::iota(cur.begin(), cur.end(), 1);
  while (true) {
    fam.subsets.push_back(cur);
    int i = k - 1;
    while (i >= 0 && cur[i] == l - (k - 1 - i)) --i;
    if (i < 0) break;
    ++cur[i];
    for (int j = i + 1; j < k; ++j) cur[j] = cur[j - 1] + 1;
  }
  return fam;
}

/// Frankl-Babai bounded-overlap family: q^(kappa+1) subsets with pairwise
/// intersections <= kappa, q the largest prime <= l/k. Subset i picks port
/// k'*q + (f_i(k') mod q) + 1 in bank k', where f_i is the degree-kappa
/// polynomial whose coefficients are the base-q digits of i.
inline SwitchFamily frankl_babai(int l, int k, int kappa) {
  if (l < 1 || k < 1 || k > l) throw ArgumentError("frankl_babai: need l >= k >= 1");
  if (kappa < 0) throw ArgumentError("frankl_babai: need kappa >= 0");
  const int q = detail::largest_prime_leq(l / k);
  if (q < k) {
    throw InfeasibleError("frankl_babai: largest prime q=" + std::to_string(q) +
                          " <= l/k is smaller than k=" + std::to_string(k) +
                          "; l >= 2k^2 is sufficient for feasibility");
  }
  std::uint64_t count = 1;
  for (int j = 0; j <= kappa; ++j) count *= std::uint64_t(q);
  SwitchFamily fam{l, k, {}};
  fam.subsets.reserve(count);
  std::vector<std::uint64_t> digits(kappa + 1);
  for (std::uint64_t i = 1; i <= count; ++i) {
    std::uint64_t v = i;
    for (int j = 0; j <= kappa; ++j) {
      digits[j] = v % q;
      v /= q;
    }
    std::vector<int> subset(k);
    for (int kp = 0; kp < k; ++kp) {
      // Horner evaluation of f(kp) mod q
      std::uint64_t f = 0;
      for (int j = kappa; j >= 0; --j) f = (f * std::uint64_t(kp) + digits[j]) % q;
      subset[kp] = kp * q + int(f) + 1;
    }
    fam.subsets.push_back(std::move(subset));
  }
  return fam;
}

/// Exhaustive maximum of |B_i intersect B_j| over unordered pairs.
inline int max_pairwise_overlap(const SwitchFamily& fam) {
  if (fam.size() < 2) throw ArgumentError("max_pairwise_overlap: need at least two subsets");
  int best = 0;
  std::vector<int> tmp(fam.k);
  for (std::size_t i = 0; i < fam.size(); ++i) {
    for (std::size_t j = i + 1; j < fam.size(); ++j) {
      auto it = std::set_intersection(fam.subsets[i].begin(), fam.subsets[i].end(),
                                      fam.subsets[j].begin(), fam.subsets[j].end(), tmp.begin());
      best = std::max(best, int(it - tmp.begin()));
    }
  }
  return best;
}

struct FamilySizeBounds {
  std::uint64_t lower = 0;       // q^(kappa+1)
  std::uint64_t upper_num = 0;   // C(l, kappa+1)
  std::uint64_t upper_den = 0;   // C(k, kappa+1)
  int q = 0;
  double upper() const { return double(upper_num) / double(upper_den); }
};

/// Size bounds for the largest K-uniform family with pairwise intersections
/// <= kappa: q^(kappa+1) <= |B| <= C(l,kappa+1)/C(k,kappa+1), valid for
/// l >= 2k^2.
inline FamilySizeBounds theorem4_bounds(int l, int k, int kappa) {
  if (kappa < 0) throw ArgumentError("theorem4_bounds: need kappa >= 0");
  if (l < 2 * k * k)
    throw InfeasibleError("theorem4_bounds: requires l >= 2k^2 (got l=" + std::to_string(l) +
                          ", k=" + std::to_string(k) + ")");
  FamilySizeBounds b;
  b.q = detail::largest_prime_leq(l / k);
  b.lower = 1;
  for (int j = 0; j <= kappa; ++j) b.lower *= std::uint64_t(b.q);
  b.upper_num = detail::binomial(l, kappa + 1);
  b.upper_den = detail::binomial(k, kappa + 1);
  return b;
}

/// Text serialization: header "L K", then one subset per line as 1-based
/// space-separated indices. Round-trips bit-exactly.
inline void write_family(std::ostream& os, const SwitchFamily& fam) {
  os << fam.l << ' ' << fam.k << '\n';
  for (const auto& s : fam.subsets) {
    for (int i = 0; i < fam.k; ++i) os << (i ? " " : "") << s[i];
    os << '\n';
  }
}

inline SwitchFamily read_family(std::istream& is) {
  SwitchFamily fam;
  if (!(is >> fam.l >> fam.k)) throw ArgumentError("read_family: bad header");
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<int> s(fam.k);
    for (int i = 0; i < fam.k; ++i)
      if (!(ls >> s[i])) throw ArgumentError("read_family: short subset line");
    fam.subsets.push_back(std::move(s));
  }
  fam.validate();
  return fam;
}

/// FNV-1a hash of the serialized family, used to tag beamformer dumps.
inline std::uint64_t family_hash(const SwitchFamily& fam) {
  std::ostringstream os;
  write_family(os, fam);
  std::uint64_t h = 1469598103934665603ull;
  for (char c : os.str()) {
    h ^= std::uint64_t(static_cast<unsigned char>(c));
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace hbws
