#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbq {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;
using RVec = std::vector<double>;

// Accumulator for search cost.  Unit: one scalar multiply-accumulate in the
// arithmetic the operation itself runs in (complex for quadratic forms and
// inner products, real for the embedded tree searches).  Reported figures
// divide by the vector dimension N to get equivalent N-dimensional inner
// products.
struct OpCounter {
  std::uint64_t macs = 0;
  void add(std::uint64_t n) { macs += n; }
};

inline double norm2(const CVec& v) {
  double s = 0.0;
  for (const cplx& z : v) s += std::norm(z);
  return s;
}

// u^H v
inline cplx inner(const CVec& u, const CVec& v) {
  if (u.size() != v.size()) throw std::invalid_argument("inner: dimension mismatch");
  cplx s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += std::conj(u[i]) * v[i];
  return s;
}

// Unit-norm complex vector; tolerance 1e-9 on the norm.
struct UnitVector {
  CVec v;

  UnitVector() = default;
  explicit UnitVector(CVec x) : v(std::move(x)) {
    if (v.empty()) throw std::invalid_argument("UnitVector: empty vector");
    if (std::abs(std::sqrt(norm2(v)) - 1.0) > 1e-9)
      throw std::invalid_argument("UnitVector: norm deviates from 1");
  }

  static UnitVector normalized(CVec x) {
    const double n = std::sqrt(norm2(x));
    if (n == 0.0) throw std::invalid_argument("UnitVector: zero vector");
    for (cplx& z : x) z /= n;
    UnitVector u;
    u.v = std::move(x);
    return u;
  }

  std::size_t dim() const { return v.size(); }
};

// Hermitian positive-semidefinite N x N matrix, row-major.
// Hermitian symmetry is checked at construction to 1e-9 elementwise;
// positive semidefiniteness is a statistical property of how the matrices
// are formed (S S^H products) and is checked by the test suite.
class CovarianceMatrix {
 public:
  CovarianceMatrix() = default;

  CovarianceMatrix(std::size_t n, std::vector<cplx> a) : n_(n), a_(std::move(a)) {
    if (n_ == 0 || a_.size() != n_ * n_)
      throw std::invalid_argument("CovarianceMatrix: bad dimensions");
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i; j < n_; ++j) {
        const cplx d = a_[i * n_ + j] - std::conj(a_[j * n_ + i]);
        if (std::abs(d) > 1e-9)
          throw std::invalid_argument("CovarianceMatrix: not Hermitian");
      }
  }

  std::size_t dim() const { return n_; }
  const cplx& at(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  const std::vector<cplx>& data() const { return a_; }

  double trace_real() const {
    double t = 0.0;
    for (std::size_t i = 0; i < n_; ++i) t += a_[i * n_ + i].real();
    return t;
  }

 private:
  std::size_t n_ = 0;
  std::vector<cplx> a_;
};

struct EigenSystem {
  RVec eigenvalues;                // descending
  std::vector<CVec> eigenvectors;  // eigenvectors[i] pairs with eigenvalues[i]
};

// v^H M v as a real scalar.  Counts N^2 + N complex MACs.
inline double quadratic_form(const CVec& v, const CovarianceMatrix& m, OpCounter& counter) {
  const std::size_t n = m.dim();
  if (v.size() != n) throw std::invalid_argument("quadratic_form: dimension mismatch");
  cplx acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cplx row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += m.at(i, j) * v[j];
    acc += std::conj(v[i]) * row;
  }
  counter.add(n * n + n);
  return acc.real();
}

inline double quadratic_form(const UnitVector& v, const CovarianceMatrix& m, OpCounter& counter) {
  return quadratic_form(v.v, m, counter);
}

// [Re(v); Im(v)] as a 2N real vector.  Preserves the Euclidean norm, and for
// unit u, v:  |embed(u) - embed(v)|^2 = 2 - 2 Re(u^H v).
inline RVec embed_real(const CVec& v) {
  RVec r(2 * v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    r[i] = v[i].real();
    r[i + v.size()] = v[i].imag();
  }
  return r;
}

// 2N x 2N real matrix [[Re M, -Im M], [Im M, Re M]], row-major.
// Satisfies embed(v)^T Mhat embed(v) = v^H M v exactly.
struct RealEmbeddedMatrix {
  std::size_t n2 = 0;  // 2N
  std::vector<double> a;

  double at(std::size_t i, std::size_t j) const { return a[i * n2 + j]; }
};

inline RealEmbeddedMatrix embed_covariance(const CovarianceMatrix& m) {
  const std::size_t n = m.dim();
  RealEmbeddedMatrix r;
  r.n2 = 2 * n;
  r.a.assign(4 * n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double re = m.at(i, j).real();
      const double im = m.at(i, j).imag();
      r.a[i * r.n2 + j] = re;
      r.a[(i + n) * r.n2 + (j + n)] = re;
      r.a[i * r.n2 + (j + n)] = -im;
      r.a[(i + n) * r.n2 + j] = im;
    }
  return r;
}

// r^T Mhat r.  Counts (2N)^2 + 2N real MACs.
inline double real_quadratic_form(std::span<const double> r, const RealEmbeddedMatrix& m,
                                  OpCounter& counter) {
  const std::size_t d = m.n2;
  if (r.size() != d) throw std::invalid_argument("real_quadratic_form: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < d; ++j) row += m.a[i * d + j] * r[j];
    acc += r[i] * row;
  }
  counter.add(d * d + d);
  return acc;
}

namespace detail {

// Rotate a vector's global phase so its largest-magnitude entry is
// real-positive.  Makes eigenvectors reproducible across runs.
inline void normalize_phase(CVec& v) {
  std::size_t k = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double mag = std::norm(v[i]);
    if (mag > best) {
      best = mag;
      k = i;
    }
  }
  const double mag = std::abs(v[k]);
  if (mag == 0.0) return;
  const cplx rot = std::conj(v[k]) / mag;
  for (cplx& z : v) z *= rot;
}

}  // namespace detail

// Full eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
// rotations.  Eigenvalues are returned in descending order so that
// eigenvector 0 maximizes the quadratic form and eigenvector N-1 minimizes
// it.  Throws if the sweep cap (10 N^2) is hit before the off-diagonal mass
// is annihilated.
inline EigenSystem eigen_decompose(const CovarianceMatrix& m) {
  const std::size_t n = m.dim();
  std::vector<cplx> a = m.data();
  std::vector<cplx> q(n * n, 0.0);  // accumulated rotations, columns = eigenvectors
  for (std::size_t i = 0; i < n; ++i) q[i * n + i] = 1.0;

  auto off_norm = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += std::norm(a[i * n + j]);
    return std::sqrt(s);
  };

  double scale = 0.0;
  for (const cplx& z : a) scale = std::max(scale, std::abs(z));
  const double tol = (scale == 0.0 ? 0.0 : 1e-14 * scale);

  const std::size_t max_sweeps = 10 * n * n;
  std::size_t sweep = 0;
  while (off_norm() > tol * n) {
    if (++sweep > max_sweeps) {
      std::ostringstream msg;
      msg << "eigen_decompose: no convergence after " << max_sweeps
          << " sweeps, off-diagonal norm " << off_norm();
      throw std::runtime_error(msg.str());
    }
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t qq = p + 1; qq < n; ++qq) {
        const cplx apq = a[p * n + qq];
        if (std::abs(apq) <= tol) continue;
        const double app = a[p * n + p].real();
        const double aqq = a[qq * n + qq].real();
        // unitary rotation annihilating a[p][q]
        const double mag = std::abs(apq);
        const cplx phase = apq / mag;
        const double beta = (aqq - app) / (2.0 * mag);
        const double t = (beta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(beta) + std::sqrt(beta * beta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const cplx s = phase * (t * c);
        // A <- J^H A J with J = [[c, s],[-conj(s), c]] acting on (p, q)
        for (std::size_t i = 0; i < n; ++i) {
          const cplx aip = a[i * n + p];
          const cplx aiq = a[i * n + qq];
          a[i * n + p] = c * aip - std::conj(s) * aiq;
          a[i * n + qq] = s * aip + c * aiq;
        }
        for (std::size_t j = 0; j < n; ++j) {
          const cplx apj = a[p * n + j];
          const cplx aqj = a[qq * n + j];
          a[p * n + j] = c * apj - s * aqj;
          a[qq * n + j] = std::conj(s) * apj + c * aqj;
        }
        a[p * n + p] = cplx(a[p * n + p].real(), 0.0);
        a[qq * n + qq] = cplx(a[qq * n + qq].real(), 0.0);
        a[p * n + qq] = 0.0;
        a[qq * n + p] = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const cplx qip = q[i * n + p];
          const cplx qiq = q[i * n + qq];
          q[i * n + p] = c * qip - std::conj(s) * qiq;
          q[i * n + qq] = s * qip + c * qiq;
        }
      }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return a[i * n + i].real() > a[j * n + j].real();
  });

  EigenSystem es;
  es.eigenvalues.resize(n);
  es.eigenvectors.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    es.eigenvalues[k] = a[src * n + src].real();
    CVec v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = q[i * n + src];
    detail::normalize_phase(v);
    es.eigenvectors[k] = std::move(v);
  }
  return es;
}

}  // namespace fbq
