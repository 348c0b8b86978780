#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ttsprep/audio_buffer.hpp"
#include "ttsprep/errors.hpp"
#include "ttsprep/mat.hpp"
#include "ttsprep/stft.hpp"
#include "ttsprep/version.hpp"

namespace ttsprep {

struct NegativeFrequency : Error {
  using Error::Error;
};

struct InvalidRange : Error {
  using Error::Error;
};

struct WrongSampleRate : Error {
  using Error::Error;
};

// Slaney-style mel scale: linear below 1 kHz at 3/200 mel per Hz, logarithmic
// above with a step of ln(6.4)/27 per mel.
inline double hz_to_mel_slaney(double f) {
  if (f < 0.0) throw NegativeFrequency("frequency must be non-negative");
  constexpr double lin_slope = 200.0 / 3.0;
  if (f < 1000.0) return f / lin_slope;
  const double log_step = std::log(6.4) / 27.0;
  return 15.0 + std::log(f / 1000.0) / log_step;
}

inline double mel_to_hz_slaney(double mel) {
  if (mel < 0.0) throw NegativeFrequency("mel value must be non-negative");
  constexpr double lin_slope = 200.0 / 3.0;
  if (mel < 15.0) return mel * lin_slope;
  const double log_step = std::log(6.4) / 27.0;
  return 1000.0 * std::exp(log_step * (mel - 15.0));
}

struct MelConfig {
  int n_mels = 80;
  double fmin = 0.0;
  double fmax = 8000.0;
  float clip_floor = 1e-5f;

  void validate(int sample_rate) const {
    if (n_mels < 1) throw InvalidRange("n_mels must be at least 1");
    if (fmin < 0.0 || fmin >= fmax) throw InvalidRange("need 0 <= fmin < fmax");
    if (fmax > sample_rate / 2.0 + 1e-9)
      throw InvalidRange("fmax exceeds Nyquist for " + std::to_string(sample_rate) + " Hz");
    if (!(clip_floor > 0.0f)) throw InvalidRange("clip_floor must be positive");
  }
};

// Triangular filterbank with Slaney area normalization. break_freqs holds the
// n_mels + 2 breakpoints equally spaced in mel; filter m spans
// (break_freqs[m], break_freqs[m+2]) and its triangle peaks at peak_gain[m] =
// 2 / (break_freqs[m+2] - break_freqs[m]).
struct MelFilterbank {
  Mat<double> weights;  // n_mels x (n_fft/2 + 1)
  std::vector<double> break_freqs;
  std::vector<double> peak_gain;
  int sample_rate = 0;
  MelConfig config;
};

inline MelFilterbank mel_filterbank(const MelConfig& cfg, int n_fft, int sample_rate) {
  cfg.validate(sample_rate);
  const std::size_t n_mels = static_cast<std::size_t>(cfg.n_mels);
  const std::size_t n_bins = static_cast<std::size_t>(n_fft) / 2 + 1;

  MelFilterbank fb;
  fb.sample_rate = sample_rate;
  fb.config = cfg;
  fb.break_freqs.resize(n_mels + 2);
  const double mel_min = hz_to_mel_slaney(cfg.fmin);
  const double mel_max = hz_to_mel_slaney(cfg.fmax);
  for (std::size_t i = 0; i < n_mels + 2; ++i) {
    const double mel = mel_min + (mel_max - mel_min) * static_cast<double>(i) /
                                     static_cast<double>(n_mels + 1);
    fb.break_freqs[i] = mel_to_hz_slaney(mel);
  }

  fb.peak_gain.resize(n_mels);
  fb.weights = Mat<double>(n_mels, n_bins);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = fb.break_freqs[m];
    const double mid = fb.break_freqs[m + 1];
    const double hi = fb.break_freqs[m + 2];
    const double enorm = 2.0 / (hi - lo);
    fb.peak_gain[m] = enorm;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      const double up = (f - lo) / (mid - lo);
      const double down = (hi - f) / (hi - mid);
      const double tri = std::max(0.0, std::min(up, down));
      fb.weights(m, k) = tri * enorm;
    }
  }
  return fb;
}

struct MelSpectrogram {
  int n_mels = 0;
  int n_frames = 0;
  int sample_rate = 0;
  int hop = 0;
  std::vector<float> values;  // row-major, natural-log amplitudes

  float at(int mel, int frame) const {
    return values[static_cast<std::size_t>(mel) * static_cast<std::size_t>(n_frames) +
                  static_cast<std::size_t>(frame)];
  }
};

// Log-mel spectrogram: ln(max(filterbank . |STFT|, clip_floor)). The buffer
// must already be at the filterbank's sample rate; prep resamples beforehand.
inline MelSpectrogram mel_spectrogram(const AudioBuffer& buf, const SpectrogramConfig& s_cfg,
                                      const MelFilterbank& fb) {
  if (buf.sample_rate != fb.sample_rate)
    throw WrongSampleRate("buffer is " + std::to_string(buf.sample_rate) + " Hz, filterbank wants " +
                          std::to_string(fb.sample_rate) + " Hz");
  const auto mag = stft_magnitude(buf, s_cfg);

  MelSpectrogram mel;
  mel.n_mels = static_cast<int>(fb.weights.rows);
  mel.n_frames = static_cast<int>(mag.cols);
  mel.sample_rate = buf.sample_rate;
  mel.hop = s_cfg.hop;
  mel.values.resize(fb.weights.rows * mag.cols);
  const double floor = static_cast<double>(fb.config.clip_floor);
  for (std::size_t m = 0; m < fb.weights.rows; ++m) {
    for (std::size_t t = 0; t < mag.cols; ++t) {
      double acc = 0.0;
      for (std::size_t k = 0; k < fb.weights.cols; ++k) acc += fb.weights(m, k) * mag(k, t);
      mel.values[m * mag.cols + t] = static_cast<float>(std::log(std::max(acc, floor)));
    }
  }
  return mel;
}

inline MelSpectrogram mel_spectrogram(const AudioBuffer& buf, const SpectrogramConfig& s_cfg,
                                      const MelConfig& m_cfg) {
  if (buf.sample_rate != kCanonicalSampleRate)
    throw WrongSampleRate("expected the canonical " + std::to_string(kCanonicalSampleRate) +
                          " Hz, got " + std::to_string(buf.sample_rate) + " Hz");
  return mel_spectrogram(buf, s_cfg, mel_filterbank(m_cfg, s_cfg.n_fft, buf.sample_rate));
}

}  // namespace ttsprep
