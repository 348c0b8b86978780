#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace ttsprep::detail {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Iterative radix-2 Cooley-Tukey, in place. Size must be a power of two.
inline void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  if (!is_power_of_two(n)) throw std::invalid_argument("fft size must be a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// One-sided DFT of a real frame zero-padded to n_fft. Returns n_fft/2 + 1 bins.
inline std::vector<std::complex<double>> rfft_onesided(std::span<const double> x, std::size_t n_fft) {
  std::vector<std::complex<double>> a(n_fft, std::complex<double>(0.0, 0.0));
  const std::size_t m = x.size() < n_fft ? x.size() : n_fft;
  for (std::size_t i = 0; i < m; ++i) a[i] = std::complex<double>(x[i], 0.0);
  fft_inplace(a);
  a.resize(n_fft / 2 + 1);
  return a;
}

}  // namespace ttsprep::detail
