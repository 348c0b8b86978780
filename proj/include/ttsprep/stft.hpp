#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "ttsprep/audio_buffer.hpp"
#include "ttsprep/errors.hpp"
#include "ttsprep/fft.hpp"
#include "ttsprep/mat.hpp"

namespace ttsprep {

struct InvalidSpectrogramConfig : Error {
  using Error::Error;
};

struct SpectrogramConfig {
  int n_fft = 1024;
  int hop = 256;
  int win_length = 1024;

  void validate() const {
    if (n_fft <= 0 || !detail::is_power_of_two(static_cast<std::size_t>(n_fft)))
      throw InvalidSpectrogramConfig("n_fft must be a positive power of two");
    if (win_length <= 0 || win_length > n_fft)
      throw InvalidSpectrogramConfig("win_length must be in 1..n_fft");
    if (hop <= 0 || hop > win_length)
      throw InvalidSpectrogramConfig("hop must be in 1..win_length");
  }

  std::size_t n_frames(std::size_t n_samples) const {
    return 1 + n_samples / static_cast<std::size_t>(hop);
  }
};

namespace detail {

// Periodic (DFT-even) Hann window.
inline std::vector<double> hann_periodic(int length) {
  std::vector<double> w(static_cast<std::size_t>(length));
  for (int n = 0; n < length; ++n)
    w[static_cast<std::size_t>(n)] =
        0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * n / length));
  return w;
}

// Sample index after mirroring i into [0, n) without repeating the edges.
inline std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const std::ptrdiff_t period = 2 * (static_cast<std::ptrdiff_t>(n) - 1);
  std::ptrdiff_t j = i % period;
  if (j < 0) j += period;
  if (j >= static_cast<std::ptrdiff_t>(n)) j = period - j;
  return static_cast<std::size_t>(j);
}

}  // namespace detail

// One-sided STFT magnitudes, (n_fft/2 + 1) x n_frames. Frames are centered on
// multiples of hop over a reflect-padded signal and weighted by a periodic
// Hann window, so n_frames = 1 + floor(len / hop) for every input length.
inline Mat<double> stft_magnitude(const AudioBuffer& buf, const SpectrogramConfig& cfg) {
  cfg.validate();
  if (buf.empty()) throw EmptyAudio("cannot take the STFT of an empty buffer");

  const std::size_t n = buf.size();
  const std::size_t n_fft = static_cast<std::size_t>(cfg.n_fft);
  const std::size_t n_bins = n_fft / 2 + 1;
  const std::size_t n_frames = cfg.n_frames(n);
  const auto window = detail::hann_periodic(cfg.win_length);
  // Center a shorter window inside the FFT frame.
  const std::size_t win_offset = (n_fft - static_cast<std::size_t>(cfg.win_length)) / 2;

  Mat<double> mag(n_bins, n_frames);
  std::vector<double> frame(n_fft);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(t) * cfg.hop -
                                 static_cast<std::ptrdiff_t>(n_fft / 2);
    std::fill(frame.begin(), frame.end(), 0.0);
    for (std::size_t w = 0; w < window.size(); ++w) {
      const std::ptrdiff_t src = start + static_cast<std::ptrdiff_t>(win_offset + w);
      const std::size_t idx = detail::reflect_index(src, n);
      frame[win_offset + w] = static_cast<double>(buf.samples[idx]) * window[w];
    }
    auto spectrum = detail::rfft_onesided(frame, n_fft);
    for (std::size_t k = 0; k < n_bins; ++k) mag(k, t) = std::abs(spectrum[k]);
  }
  return mag;
}

}  // namespace ttsprep
