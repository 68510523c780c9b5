#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fbq/corelin.hpp"
#include "fbq/rng.hpp"

namespace fbq {

// Thrown when a requested codebook would exceed the configured entry cap.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Ordered set of 2^B iid isotropically distributed unit-norm vectors of
// dimension N, stored flat.
class Codebook {
 public:
  Codebook() = default;
  Codebook(std::size_t dim, unsigned bits, std::vector<cplx> data)
      : dim_(dim), bits_(bits), data_(std::move(data)) {
    if (dim_ == 0 || data_.size() != (std::size_t{1} << bits_) * dim_)
      throw std::invalid_argument("Codebook: bad dimensions");
  }

  std::size_t dim() const { return dim_; }
  unsigned bits() const { return bits_; }
  std::size_t size() const { return std::size_t{1} << bits_; }

  std::span<const cplx> entry(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }

  CVec entry_vec(std::size_t i) const {
    const auto e = entry(i);
    return CVec(e.begin(), e.end());
  }

  const std::vector<cplx>& data() const { return data_; }

 private:
  std::size_t dim_ = 0;
  unsigned bits_ = 0;
  std::vector<cplx> data_;
};

inline constexpr std::size_t kDefaultCodebookCap = std::size_t{1} << 24;

// Each entry is g/|g| with g iid standard complex Gaussian.  Entry j is
// drawn from the substream (rng, j), so the B-bit codebook is a prefix of
// the (B+1)-bit codebook generated from the same stream.
inline Codebook generate_rvq(std::size_t n, unsigned bits, const Rng& rng,
                             std::size_t entry_cap = kDefaultCodebookCap) {
  if (n < 1) throw std::invalid_argument("generate_rvq: need N >= 1");
  if (bits >= 63 || (std::size_t{1} << bits) > entry_cap)
    throw CapacityError("generate_rvq: 2^B exceeds the codebook entry cap");
  const std::size_t count = std::size_t{1} << bits;
  std::vector<cplx> data(count * n);
  for (std::size_t j = 0; j < count; ++j) {
    Rng r = rng.derive(j);
    double s = 0.0;
    for (std::size_t d = 0; d < n; ++d) {
      const cplx z = r.complex_gaussian();
      data[j * n + d] = z;
      s += std::norm(z);
    }
    const double inv = 1.0 / std::sqrt(s);
    for (std::size_t d = 0; d < n; ++d) data[j * n + d] *= inv;
  }
  return Codebook(n, bits, std::move(data));
}

struct Selection {
  std::size_t index = 0;
  UnitVector vector;
};

namespace detail {

inline double entry_quadratic_form(std::span<const cplx> v, const CovarianceMatrix& m) {
  const std::size_t n = m.dim();
  cplx acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cplx row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += m.at(i, j) * v[j];
    acc += std::conj(v[i]) * row;
  }
  return acc.real();
}

inline Selection make_selection(const Codebook& cb, std::size_t idx) {
  Selection s;
  s.index = idx;
  s.vector = UnitVector::normalized(cb.entry_vec(idx));
  return s;
}

}  // namespace detail

// argmax_j v_j^H M v_j, ties to the lowest index.  2^B (N^2 + N) MACs.
inline Selection select_max_quadratic(const Codebook& cb, const CovarianceMatrix& m,
                                      OpCounter& counter) {
  if (cb.dim() != m.dim()) throw std::invalid_argument("select_max_quadratic: dimension mismatch");
  std::size_t best = 0;
  double best_val = detail::entry_quadratic_form(cb.entry(0), m);
  for (std::size_t j = 1; j < cb.size(); ++j) {
    const double val = detail::entry_quadratic_form(cb.entry(j), m);
    if (val > best_val) {
      best_val = val;
      best = j;
    }
  }
  counter.add(cb.size() * (m.dim() * m.dim() + m.dim()));
  return detail::make_selection(cb, best);
}

// argmin mirror of select_max_quadratic.
inline Selection select_min_quadratic(const Codebook& cb, const CovarianceMatrix& m,
                                      OpCounter& counter) {
  if (cb.dim() != m.dim()) throw std::invalid_argument("select_min_quadratic: dimension mismatch");
  std::size_t best = 0;
  double best_val = detail::entry_quadratic_form(cb.entry(0), m);
  for (std::size_t j = 1; j < cb.size(); ++j) {
    const double val = detail::entry_quadratic_form(cb.entry(j), m);
    if (val < best_val) {
      best_val = val;
      best = j;
    }
  }
  counter.add(cb.size() * (m.dim() * m.dim() + m.dim()));
  return detail::make_selection(cb, best);
}

// argmax_j Re(u^H v_j), the nearest neighbor of u in Euclidean distance.
// Sign-sensitive: quantizing -u picks a different entry than u.  2^B N MACs.
inline Selection select_nearest_neighbor(const Codebook& cb, const UnitVector& u,
                                         OpCounter& counter) {
  if (cb.dim() != u.dim()) throw std::invalid_argument("select_nearest_neighbor: dimension mismatch");
  const std::size_t n = cb.dim();
  std::size_t best = 0;
  double best_val = -2.0;
  for (std::size_t j = 0; j < cb.size(); ++j) {
    const auto e = cb.entry(j);
    cplx ip = 0.0;
    for (std::size_t d = 0; d < n; ++d) ip += std::conj(u.v[d]) * e[d];
    if (ip.real() > best_val) {
      best_val = ip.real();
      best = j;
    }
  }
  counter.add(cb.size() * n);
  return detail::make_selection(cb, best);
}

// argmax_j |u^H v_j|^2, invariant to the global phase of u.  2^B (N+1) MACs.
inline Selection select_closest_in_angle(const Codebook& cb, const UnitVector& u,
                                         OpCounter& counter) {
  if (cb.dim() != u.dim()) throw std::invalid_argument("select_closest_in_angle: dimension mismatch");
  const std::size_t n = cb.dim();
  std::size_t best = 0;
  double best_val = -1.0;
  for (std::size_t j = 0; j < cb.size(); ++j) {
    const auto e = cb.entry(j);
    cplx ip = 0.0;
    for (std::size_t d = 0; d < n; ++d) ip += std::conj(u.v[d]) * e[d];
    const double val = std::norm(ip);
    if (val > best_val) {
      best_val = val;
      best = j;
    }
  }
  counter.add(cb.size() * (n + 1));
  return detail::make_selection(cb, best);
}

}  // namespace fbq
