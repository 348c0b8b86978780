#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ttsprep/audio_buffer.hpp"
#include "ttsprep/errors.hpp"
#include "ttsprep/fft.hpp"
#include "ttsprep/resample.hpp"

namespace ttsprep {

struct BadSampleRate : Error {
  using Error::Error;
};

struct InvalidVadConfig : Error {
  using Error::Error;
};

struct VadConfig {
  int aggressiveness = 3;  // 0..3, higher removes more
  int frame_ms = 30;       // one of 10, 20, 30
  int padding_ms = 150;    // collector window, multiple of frame_ms
  double trigger_ratio = 0.9;

  void validate() const {
    if (aggressiveness < 0 || aggressiveness > 3)
      throw InvalidVadConfig("aggressiveness must be in 0..3");
    if (frame_ms != 10 && frame_ms != 20 && frame_ms != 30)
      throw InvalidVadConfig("frame_ms must be 10, 20 or 30");
    if (padding_ms <= 0 || padding_ms % frame_ms != 0)
      throw InvalidVadConfig("padding_ms must be a positive multiple of frame_ms");
    if (!(trigger_ratio > 0.0) || trigger_ratio > 1.0)
      throw InvalidVadConfig("trigger_ratio must be in (0, 1]");
  }

  int ring_frames() const { return padding_ms / frame_ms; }
};

struct VoicedSegment {
  double start_s = 0.0;
  double end_s = 0.0;
};

// Classification runs at the detector's native rate.
inline constexpr int kVadSampleRate = 16000;

namespace detail {

// Sub-bands of the speech spectrum used for the energy decision, in Hz.
inline constexpr std::array<std::array<double, 2>, 6> kVadBands = {{
    {80.0, 250.0},
    {250.0, 500.0},
    {500.0, 1000.0},
    {1000.0, 2000.0},
    {2000.0, 3000.0},
    {3000.0, 4000.0},
}};

// Band mean-square below which a band counts as silent (-70 dBFS).
inline constexpr double kVadAbsoluteFloor = 1e-7;

// Score thresholds per aggressiveness level. Both vectors increase with the
// level, which is what makes the voiced set shrink monotonically.
inline constexpr std::array<double, 4> kVadAbsThreshold = {2.0, 3.0, 4.0, 5.0};
inline constexpr std::array<double, 4> kVadRelThreshold = {1.0, 1.5, 2.0, 2.5};

// Mean-square signal energy per band for one frame, Parseval-normalized so a
// full-scale in-band sine lands near 0.5.
inline std::array<double, 6> frame_band_energy(std::span<const double> frame) {
  const std::size_t n_fft = next_power_of_two(frame.size());
  auto spectrum = rfft_onesided(frame, n_fft);
  const double norm = 2.0 / (static_cast<double>(n_fft) * static_cast<double>(frame.size()));
  std::array<double, 6> energy{};
  const double bin_hz = static_cast<double>(kVadSampleRate) / static_cast<double>(n_fft);
  for (std::size_t k = 1; k < spectrum.size(); ++k) {
    const double f = bin_hz * static_cast<double>(k);
    for (std::size_t b = 0; b < kVadBands.size(); ++b) {
      if (f >= kVadBands[b][0] && f < kVadBands[b][1]) {
        energy[b] += norm * std::norm(spectrum[k]);
        break;
      }
    }
  }
  return energy;
}

}  // namespace detail

// Frame decisions for a 16 kHz buffer: one boolean per complete frame.
//
// Each frame is scored on six sub-band energies, once against an absolute
// floor and once against a per-band noise floor tracked over the utterance
// (20th percentile, with the absolute floor as lower bound). A frame is
// voiced when either score beats its aggressiveness threshold.
inline std::vector<bool> classify_frames(const AudioBuffer& buf, const VadConfig& cfg) {
  cfg.validate();
  if (buf.sample_rate != kVadSampleRate)
    throw BadSampleRate("classification expects " + std::to_string(kVadSampleRate) + " Hz, got " +
                        std::to_string(buf.sample_rate));
  const std::size_t frame_len = static_cast<std::size_t>(kVadSampleRate) * cfg.frame_ms / 1000;
  if (buf.size() < frame_len) throw TooShort("buffer shorter than one VAD frame");

  const std::size_t n_frames = buf.size() / frame_len;
  std::vector<std::array<double, 6>> energies(n_frames);
  std::vector<double> frame(frame_len);
  for (std::size_t t = 0; t < n_frames; ++t) {
    for (std::size_t i = 0; i < frame_len; ++i)
      frame[i] = static_cast<double>(buf.samples[t * frame_len + i]);
    energies[t] = detail::frame_band_energy(frame);
  }

  // Noise floor per band: low percentile over the whole utterance.
  std::array<double, 6> floor{};
  std::vector<double> scratch(n_frames);
  for (std::size_t b = 0; b < 6; ++b) {
    for (std::size_t t = 0; t < n_frames; ++t) scratch[t] = energies[t][b];
    std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(n_frames / 5),
                     scratch.end());
    floor[b] = std::max(detail::kVadAbsoluteFloor, 4.0 * scratch[n_frames / 5]);
  }

  std::vector<bool> voiced(n_frames);
  const double abs_thr = detail::kVadAbsThreshold[static_cast<std::size_t>(cfg.aggressiveness)];
  const double rel_thr = detail::kVadRelThreshold[static_cast<std::size_t>(cfg.aggressiveness)];
  for (std::size_t t = 0; t < n_frames; ++t) {
    double abs_score = 0.0, rel_score = 0.0;
    for (std::size_t b = 0; b < 6; ++b) {
      const double e = energies[t][b];
      if (e > detail::kVadAbsoluteFloor)
        abs_score += std::log10(e / detail::kVadAbsoluteFloor);
      if (e > floor[b]) rel_score += std::log10(e / floor[b]);
    }
    voiced[t] = abs_score > abs_thr || rel_score > rel_thr;
  }
  return voiced;
}

// Ring-buffer collector over frame decisions. A segment opens once more than
// trigger_ratio of the window is voiced (the window becomes the leading
// collar) and closes once more than trigger_ratio is unvoiced (the window
// stays in as the trailing collar).
inline std::vector<VoicedSegment> collect_segments(const std::vector<bool>& decisions,
                                                   const VadConfig& cfg) {
  cfg.validate();
  std::vector<VoicedSegment> segments;
  if (decisions.empty()) return segments;

  const std::size_t window = static_cast<std::size_t>(cfg.ring_frames());
  const double frame_s = cfg.frame_ms / 1000.0;
  const double trigger = cfg.trigger_ratio * static_cast<double>(window);

  std::vector<std::size_t> ring;  // frame indices, oldest first
  ring.reserve(window);
  std::size_t ring_begin = 0;  // index into `ring` of the oldest live entry
  std::size_t voiced_in_ring = 0;
  bool triggered = false;
  std::size_t segment_start = 0;

  auto ring_size = [&] { return ring.size() - ring_begin; };
  auto push = [&](std::size_t idx) {
    if (ring_size() == window) {
      if (decisions[ring[ring_begin]]) --voiced_in_ring;
      ++ring_begin;
    }
    ring.push_back(idx);
    if (decisions[idx]) ++voiced_in_ring;
  };
  auto clear_ring = [&] {
    ring.clear();
    ring_begin = 0;
    voiced_in_ring = 0;
  };

  for (std::size_t i = 0; i < decisions.size(); ++i) {
    push(i);
    if (!triggered) {
      if (static_cast<double>(voiced_in_ring) > trigger) {
        triggered = true;
        segment_start = ring[ring_begin];
        clear_ring();
      }
    } else {
      const std::size_t unvoiced = ring_size() - voiced_in_ring;
      if (static_cast<double>(unvoiced) > trigger) {
        segments.push_back({static_cast<double>(segment_start) * frame_s,
                            static_cast<double>(i + 1) * frame_s});
        triggered = false;
        clear_ring();
      }
    }
  }
  if (triggered) {
    segments.push_back({static_cast<double>(segment_start) * frame_s,
                        static_cast<double>(decisions.size()) * frame_s});
  }
  return segments;
}

struct SilenceRemovalResult {
  AudioBuffer audio;
  std::vector<VoicedSegment> segments;  // on the source timeline
  bool no_speech = false;
};

// Removes silence at the start, end and middle of an utterance. The input may
// be at any rate; classification runs on a 16 kHz copy and the segment times
// are mapped back to the source timeline. When nothing is voiced the input
// comes back unchanged with the no_speech flag set.
inline SilenceRemovalResult remove_silence(const AudioBuffer& buf, const VadConfig& cfg) {
  cfg.validate();
  AudioBuffer scratch;
  const AudioBuffer* clf = &buf;
  if (buf.sample_rate != kVadSampleRate) {
    scratch = resample(buf, kVadSampleRate);
    clf = &scratch;
  }
  const auto decisions = classify_frames(*clf, cfg);
  const auto segments = collect_segments(decisions, cfg);

  SilenceRemovalResult result;
  result.segments = segments;
  if (segments.empty()) {
    result.audio = buf;
    result.no_speech = true;
    return result;
  }

  // The trailing partial frame never gets a decision; when speech runs to the
  // end of the classified region the unclassified tail belongs with it.
  const double classified_end_s =
      static_cast<double>(decisions.size()) * (static_cast<double>(cfg.frame_ms) / 1000.0);

  result.audio.sample_rate = buf.sample_rate;
  const auto n = static_cast<std::int64_t>(buf.size());
  for (const auto& seg : segments) {
    auto a = static_cast<std::int64_t>(std::llround(seg.start_s * buf.sample_rate));
    auto b = static_cast<std::int64_t>(std::llround(seg.end_s * buf.sample_rate));
    if (seg.end_s >= classified_end_s - 1e-9) b = n;
    a = std::clamp<std::int64_t>(a, 0, n);
    b = std::clamp<std::int64_t>(b, a, n);
    result.audio.samples.insert(result.audio.samples.end(), buf.samples.begin() + a,
                                buf.samples.begin() + b);
  }
  return result;
}

}  // namespace ttsprep
