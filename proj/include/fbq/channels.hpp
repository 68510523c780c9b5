#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fbq/corelin.hpp"
#include "fbq/rng.hpp"

namespace fbq {

// Point-to-point MIMO channel, entries iid complex Gaussian with variance
// 1/n_r so that each transmit antenna sees unit total received fading power.
struct MimoChannel {
  std::size_t n_t = 0;
  std::size_t n_r = 0;
  std::vector<cplx> h;  // n_r x n_t, row-major

  const cplx& at(std::size_t r, std::size_t t) const { return h[r * n_t + t]; }
};

inline MimoChannel sample_mimo(std::size_t n_t, std::size_t n_r, Rng rng) {
  if (n_t < 1 || n_r < 1) throw std::invalid_argument("sample_mimo: antenna counts must be >= 1");
  MimoChannel ch;
  ch.n_t = n_t;
  ch.n_r = n_r;
  ch.h.resize(n_t * n_r);
  const double sd = 1.0 / std::sqrt(static_cast<double>(n_r));
  for (cplx& z : ch.h) z = sd * rng.complex_gaussian();
  return ch;
}

// H^H H, the n_t x n_t transmit-side covariance.
inline CovarianceMatrix mimo_covariance(const MimoChannel& ch) {
  const std::size_t nt = ch.n_t;
  const std::size_t nr = ch.n_r;
  std::vector<cplx> a(nt * nt, 0.0);
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t j = i; j < nt; ++j) {
      cplx s = 0.0;
      for (std::size_t r = 0; r < nr; ++r) s += std::conj(ch.at(r, i)) * ch.at(r, j);
      a[i * nt + j] = s;
      a[j * nt + i] = std::conj(s);
    }
  // exact Hermitian symmetry by construction
  return CovarianceMatrix(nt, std::move(a));
}

// log2(1 + rho * |H v|^2) for one channel draw; the ergodic capacity is the
// average of this over draws.
inline double instantaneous_rate(const CVec& v, const MimoChannel& ch, double rho) {
  if (rho <= 0.0) throw std::invalid_argument("instantaneous_rate: rho must be positive");
  if (v.size() != ch.n_t) throw std::invalid_argument("instantaneous_rate: dimension mismatch");
  double p = 0.0;
  for (std::size_t r = 0; r < ch.n_r; ++r) {
    cplx acc = 0.0;
    for (std::size_t t = 0; t < ch.n_t; ++t) acc += ch.at(r, t) * v[t];
    p += std::norm(acc);
  }
  return std::log2(1.0 + rho * p);
}

// Per-path gain variances for one user; the sum is the user's total gain.
struct PowerProfile {
  std::vector<double> path_var;

  static PowerProfile uniform(std::size_t l, double total_gain) {
    if (l < 1) throw std::invalid_argument("PowerProfile: need at least one path");
    PowerProfile p;
    p.path_var.assign(l, total_gain / static_cast<double>(l));
    return p;
  }

  double total() const {
    double s = 0.0;
    for (double v : path_var) s += v;
    return s;
  }
};

// N x N banded lower-triangular Toeplitz channel matrix: entry (i, j) is
// gains[i - j] when 0 <= i - j < L, else 0.  This is truncated linear
// convolution; there is no cyclic wrap.
inline std::vector<cplx> build_cdma_channel_matrix(const CVec& gains, std::size_t n) {
  const std::size_t l = gains.size();
  if (l < 1 || l > n) throw std::invalid_argument("build_cdma_channel_matrix: need 1 <= L <= N");
  std::vector<cplx> c(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = (i + 1 >= l ? i + 1 - l : 0); j <= i; ++j)
      c[i * n + j] = gains[i - j];
  return c;
}

// One reverse-link CDMA draw: user 1's channel matrix, the interfering
// signature matrix H1 = [C_2 s_2 ... C_K s_K], and everything needed to
// recompute them.
struct CdmaInstance {
  std::size_t n = 0;  // processing gain
  std::size_t k = 0;  // total users, user 1 included
  std::size_t l = 0;  // fading paths
  double sigma2 = 0.0;
  double alpha = 1.0;

  std::vector<cplx> c1;                // N x N
  std::vector<cplx> h1;                // N x (K-1), column-major
  std::vector<CVec> interferer_sigs;   // s_2 ... s_K
  std::vector<CVec> path_gains;        // per user, index 0 = user 1
};

// Draws all path gains and the K-1 interferer signatures (iid isotropic
// unit-norm, same ensemble as the RVQ entries).
inline CdmaInstance sample_cdma(std::size_t n, std::size_t k, std::size_t l,
                                const PowerProfile& user1_profile, double sigma2, Rng rng) {
  if (k < 1) throw std::invalid_argument("sample_cdma: need K >= 1");
  if (user1_profile.path_var.size() != l)
    throw std::invalid_argument("sample_cdma: profile length != L");
  CdmaInstance inst;
  inst.n = n;
  inst.k = k;
  inst.l = l;
  inst.sigma2 = sigma2;
  inst.alpha = user1_profile.total();

  Rng gain_rng = rng.derive(1);
  Rng sig_rng = rng.derive(2);
  const PowerProfile interferer_profile = PowerProfile::uniform(l, 1.0);

  inst.path_gains.resize(k);
  for (std::size_t u = 0; u < k; ++u) {
    const PowerProfile& prof = (u == 0) ? user1_profile : interferer_profile;
    Rng r = gain_rng.derive(u);
    CVec g(l);
    for (std::size_t p = 0; p < l; ++p) g[p] = std::sqrt(prof.path_var[p]) * r.complex_gaussian();
    inst.path_gains[u] = std::move(g);
  }
  inst.c1 = build_cdma_channel_matrix(inst.path_gains[0], n);

  inst.interferer_sigs.resize(k - 1);
  inst.h1.assign(n * (k - 1), 0.0);
  for (std::size_t u = 1; u < k; ++u) {
    Rng r = sig_rng.derive(u);
    CVec s(n);
    for (cplx& z : s) z = r.complex_gaussian();
    UnitVector su = UnitVector::normalized(std::move(s));
    const std::vector<cplx> ck = build_cdma_channel_matrix(inst.path_gains[u], n);
    for (std::size_t i = 0; i < n; ++i) {
      cplx acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += ck[i * n + j] * su.v[j];
      inst.h1[(u - 1) * n + i] = acc;
    }
    inst.interferer_sigs[u - 1] = std::move(su.v);
  }
  return inst;
}

// C1^H H1 H1^H C1: the matrix whose quadratic form in s_1 is user 1's
// interference power sum_k |s_1^H C1^H C_k s_k|^2.
inline CovarianceMatrix interference_covariance(const CdmaInstance& inst) {
  const std::size_t n = inst.n;
  const std::size_t m = inst.k - 1;
  // G = H1^H C1, m x n
  std::vector<cplx> g(m * n, 0.0);
  for (std::size_t u = 0; u < m; ++u)
    for (std::size_t j = 0; j < n; ++j) {
      cplx acc = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        acc += std::conj(inst.h1[u * n + i]) * inst.c1[i * n + j];
      g[u * n + j] = acc;
    }
  std::vector<cplx> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      cplx s = 0.0;
      for (std::size_t u = 0; u < m; ++u) s += std::conj(g[u * n + i]) * g[u * n + j];
      a[i * n + j] = s;
      a[j * n + i] = std::conj(s);
    }
  return CovarianceMatrix(n, std::move(a));
}

// Matched-filter output SINR for user 1 with signature s1:
//   (s1^H C1^H C1 s1)^2 / (I_1 + sigma^2 s1^H C1^H C1 s1).
inline double sinr_matched_filter(const UnitVector& s1, const CdmaInstance& inst) {
  const std::size_t n = inst.n;
  if (s1.dim() != n) throw std::invalid_argument("sinr_matched_filter: dimension mismatch");
  // C1 s1
  CVec cs(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    cplx acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += inst.c1[i * n + j] * s1.v[j];
    cs[i] = acc;
  }
  const double sig = norm2(cs);  // s1^H C1^H C1 s1
  // I_1 = |H1^H C1 s1|^2
  double i1 = 0.0;
  for (std::size_t u = 0; u + 1 < inst.k; ++u) {
    cplx acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::conj(inst.h1[u * n + i]) * cs[i];
    i1 += std::norm(acc);
  }
  const double denom = i1 + inst.sigma2 * sig;
  if (denom <= 0.0)
    throw std::domain_error("sinr_matched_filter: zero denominator (no noise, no interference)");
  return sig * sig / denom;
}

}  // namespace fbq
