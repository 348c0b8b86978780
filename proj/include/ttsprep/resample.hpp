#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "ttsprep/audio_buffer.hpp"
#include "ttsprep/errors.hpp"

namespace ttsprep {

struct InvalidRate : Error {
  using Error::Error;
};

namespace detail {

// Zeroth-order modified Bessel function of the first kind (power series).
inline double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  const double hx = x / 2.0;
  for (int k = 1; k < 64; ++k) {
    term *= (hx / k) * (hx / k);
    sum += term;
    if (term < sum * 1e-18) break;
  }
  return sum;
}

}  // namespace detail

// Polyphase windowed-sinc rate converter. The prototype lowpass is a Kaiser
// window (beta 12) over +-half_taps input samples with the cutoff pulled to
// 0.9 of the narrower Nyquist, and each phase is normalized to unit DC gain.
class SincResampler {
 public:
  static constexpr int kTapsPerPhase = 64;
  static constexpr double kKaiserBeta = 12.0;
  static constexpr double kCutoffScale = 0.9;
  static constexpr int kMaxPhases = 1 << 13;

  SincResampler(int source_rate, int target_rate) : src_(source_rate), dst_(target_rate) {
    if (source_rate <= 0) throw InvalidRate("source rate must be positive");
    if (target_rate <= 0) throw InvalidRate("target rate must be positive");
    const long g = std::gcd(static_cast<long>(source_rate), static_cast<long>(target_rate));
    up_ = target_rate / g;
    down_ = source_rate / g;
    phases_ = up_ <= kMaxPhases ? static_cast<int>(up_) : kMaxPhases;
    build_table();
  }

  // Output length is round(n * target / source), half up.
  std::size_t output_length(std::size_t n) const {
    const auto num = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(up_);
    return static_cast<std::size_t>((2 * num + static_cast<std::uint64_t>(down_)) /
                                    (2 * static_cast<std::uint64_t>(down_)));
  }

  std::vector<float> apply(const std::vector<float>& x) const {
    const std::size_t out_len = output_length(x.size());
    std::vector<float> y(out_len);
    const auto n_in = static_cast<std::int64_t>(x.size());
    const int half = kTapsPerPhase / 2;
    for (std::size_t n = 0; n < out_len; ++n) {
      const auto t = static_cast<std::int64_t>(n) * down_;  // position in units of 1/up_
      const auto center = t / up_;
      const auto rem = t % up_;
      const int phase = phases_ == up_
                            ? static_cast<int>(rem)
                            : static_cast<int>((rem * phases_ + up_ / 2) / up_) % phases_;
      const double* taps = table_.data() + static_cast<std::size_t>(phase) * kTapsPerPhase;
      double acc = 0.0;
      for (int k = 0; k < kTapsPerPhase; ++k) {
        const std::int64_t m = center - half + 1 + k;
        if (m < 0 || m >= n_in) continue;
        acc += taps[k] * static_cast<double>(x[static_cast<std::size_t>(m)]);
      }
      y[n] = static_cast<float>(acc);
    }
    return y;
  }

  int source_rate() const { return src_; }
  int target_rate() const { return dst_; }

 private:
  void build_table() {
    const double ratio = static_cast<double>(up_) / static_cast<double>(down_);
    const double cutoff = kCutoffScale * (ratio < 1.0 ? ratio : 1.0);
    const int half = kTapsPerPhase / 2;
    const double i0_beta = detail::bessel_i0(kKaiserBeta);
    table_.resize(static_cast<std::size_t>(phases_) * kTapsPerPhase);
    for (int p = 0; p < phases_; ++p) {
      const double frac = static_cast<double>(p) / static_cast<double>(phases_);
      double* taps = table_.data() + static_cast<std::size_t>(p) * kTapsPerPhase;
      double sum = 0.0;
      for (int k = 0; k < kTapsPerPhase; ++k) {
        const double tau = (k - half + 1) - frac;  // offset from the output instant
        const double u = tau / half;
        double w = 0.0;
        if (u > -1.0 && u < 1.0) {
          w = detail::bessel_i0(kKaiserBeta * std::sqrt(1.0 - u * u)) / i0_beta;
        }
        const double arg = std::numbers::pi * cutoff * tau;
        const double s = std::abs(arg) < 1e-12 ? 1.0 : std::sin(arg) / arg;
        taps[k] = cutoff * s * w;
        sum += taps[k];
      }
      for (int k = 0; k < kTapsPerPhase; ++k) taps[k] /= sum;
    }
  }

  int src_;
  int dst_;
  std::int64_t up_ = 1;
  std::int64_t down_ = 1;
  int phases_ = 1;
  std::vector<double> table_;
};

// Band-limited resampling; identical rates return the input unchanged.
inline AudioBuffer resample(const AudioBuffer& buf, int target_rate) {
  if (target_rate <= 0) throw InvalidRate("target rate must be positive");
  if (buf.sample_rate <= 0) throw InvalidRate("buffer carries no sample rate");
  if (target_rate == buf.sample_rate) return buf;
  SincResampler rs(buf.sample_rate, target_rate);
  AudioBuffer out;
  out.sample_rate = target_rate;
  out.samples = rs.apply(buf.samples);
  return out;
}

}  // namespace ttsprep
