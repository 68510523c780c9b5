#pragma once

#include <cmath>
#include <stdexcept>

namespace fbq {

// Large-system ratios: feedback bits per degree of freedom, load, antenna
// ratio, SNR, user-1 gain, noise variance.
struct LargeSystemParams {
  double b_bar = 0.0;   // B/N or B/N_t
  double k_bar = 0.0;   // K/N
  double nr_bar = 1.0;  // N_r/N_t
  double rho = 1.0;     // linear SNR
  double alpha = 1.0;
  double sigma2 = 0.0;
};

// |v~^H u_1|^2 -> 1 - 2^(-b_bar) as (N, B) -> infinity.
inline double overlap_limit(double b_bar) {
  if (b_bar < 0.0) throw std::invalid_argument("overlap_limit: b_bar must be >= 0");
  return 1.0 - std::exp2(-b_bar);
}

// Limit of sum_{i>=2} lambda_i |v~^H u_i|^2:  2^(-b_bar) * mean eigenvalue.
inline double lemma1_residual(double b_bar, double mean_eigenvalue) {
  if (b_bar < 0.0) throw std::invalid_argument("lemma1_residual: b_bar must be >= 0");
  if (mean_eigenvalue < 0.0)
    throw std::invalid_argument("lemma1_residual: mean eigenvalue must be >= 0");
  return std::exp2(-b_bar) * mean_eigenvalue;
}

// cdf of |v~^H u_2|^2 conditioned on |v~^H u_1|^2 >= s1_sq:
//   F(x) = 1 - (1 - x / (1 - s1_sq))^(N-1),  0 <= x <= 1 - s1_sq.
inline double conditional_overlap_cdf(double x, double s1_sq, std::size_t n) {
  if (n < 2) throw std::invalid_argument("conditional_overlap_cdf: need N >= 2");
  if (s1_sq < 0.0 || s1_sq >= 1.0)
    throw std::invalid_argument("conditional_overlap_cdf: need 0 <= s1_sq < 1");
  if (x < 0.0 || x > 1.0 - s1_sq)
    throw std::invalid_argument("conditional_overlap_cdf: x outside [0, 1 - s1_sq]");
  return 1.0 - std::pow(1.0 - x / (1.0 - s1_sq), static_cast<double>(n - 1));
}

// Companion conditional mean of the same overlap: (1 - s1_sq) / N.
inline double conditional_overlap_mean(double s1_sq, std::size_t n) {
  if (n < 2) throw std::invalid_argument("conditional_overlap_mean: need N >= 2");
  if (s1_sq < 0.0 || s1_sq >= 1.0)
    throw std::invalid_argument("conditional_overlap_mean: need 0 <= s1_sq < 1");
  return (1.0 - s1_sq) / static_cast<double>(n);
}

enum class SpectrumModel {
  kMimo,  // ratio = N_r/N_t, H entries have variance 1/N_r; mean eigenvalue 1/ratio
  kCdma,  // ratio = K/N, unit interferer gains; mean eigenvalue = ratio
};

struct SpectrumStats {
  double lambda_max = 0.0;
  double lambda_min = 0.0;
  double mean = 0.0;
};

// Limiting extreme and mean eigenvalues of the relevant Wishart-type
// spectrum.  The two models normalize differently, so the caller must say
// which one it wants.
inline SpectrumStats mp_spectrum_stats(double ratio, SpectrumModel model) {
  if (ratio <= 0.0) throw std::invalid_argument("mp_spectrum_stats: ratio must be positive");
  SpectrumStats s;
  const double inv_sqrt = 1.0 / std::sqrt(ratio);
  s.lambda_max = (1.0 + inv_sqrt) * (1.0 + inv_sqrt);
  s.lambda_min = std::max(0.0, (1.0 - inv_sqrt) * (1.0 - inv_sqrt));
  s.mean = model == SpectrumModel::kMimo ? 1.0 / ratio : ratio;
  return s;
}

// Large-system capacity of the nearest-neighbor quantized beamformer,
// bits per channel use:
//   log2(1 + rho (1 + 1/sqrt(nr_bar))^2 (1 - 2^-b_bar) + (rho/nr_bar) 2^-b_bar).
inline double theorem1_capacity(const LargeSystemParams& p) {
  if (p.nr_bar <= 0.0) throw std::invalid_argument("theorem1_capacity: nr_bar must be positive");
  if (p.rho < 0.0) throw std::invalid_argument("theorem1_capacity: rho must be >= 0");
  const SpectrumStats s = mp_spectrum_stats(p.nr_bar, SpectrumModel::kMimo);
  const double q = std::exp2(-p.b_bar);
  return std::log2(1.0 + p.rho * s.lambda_max * (1.0 - q) + p.rho * s.mean * q);
}

// Large-system SINR of the nearest-neighbor quantized signature with a
// matched filter, two load regimes:
//   k_bar <= 1:  alpha / (k_bar 2^(1-b_bar) + alpha sigma^2)
//   k_bar  > 1:  alpha / ((1 - 1/sqrt(k_bar))^2 (1 - 2^-b_bar)
//                          + k_bar 2^-b_bar + alpha sigma^2)
inline double theorem2_sinr(const LargeSystemParams& p) {
  if (p.k_bar < 0.0) throw std::invalid_argument("theorem2_sinr: k_bar must be >= 0");
  if (p.sigma2 < 0.0) throw std::invalid_argument("theorem2_sinr: sigma2 must be >= 0");
  if (p.alpha <= 0.0) throw std::invalid_argument("theorem2_sinr: alpha must be positive");
  const double q = std::exp2(-p.b_bar);
  double denom;
  if (p.k_bar <= 1.0) {
    denom = p.k_bar * 2.0 * q + p.alpha * p.sigma2;
  } else {
    const double root = 1.0 - 1.0 / std::sqrt(p.k_bar);
    denom = root * root * (1.0 - q) + p.k_bar * q + p.alpha * p.sigma2;
  }
  if (denom <= 0.0) throw std::domain_error("theorem2_sinr: zero denominator");
  return p.alpha / denom;
}

inline double to_db(double linear) { return 10.0 * std::log10(linear); }

}  // namespace fbq
