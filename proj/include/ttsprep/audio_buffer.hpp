#pragma once

#include <cstddef>
#include <vector>

namespace ttsprep {

// Mono waveform with its sample rate. Samples stay in [-1, 1]; DSP internals
// work in double and hand results back as float.
struct AudioBuffer {
  std::vector<float> samples;
  int sample_rate = 0;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

}  // namespace ttsprep
