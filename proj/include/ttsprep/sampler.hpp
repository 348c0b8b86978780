#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ttsprep/errors.hpp"
#include "ttsprep/manifest.hpp"
#include "ttsprep/philox.hpp"

namespace ttsprep {

// Fixed-length window drawn from a longer utterance for vocoder training.
struct ClipSpec {
  std::int64_t clip_frames = 16000;

  friend bool operator==(const ClipSpec&, const ClipSpec&) = default;
};

struct ClipWindow {
  std::int64_t start_frame = 0;
  std::int64_t clip_frames = 0;
};

// Draws utterances so every (speaker, emotion) pair present in the corpus is
// equally likely, regardless of how many utterances it holds. Draws are
// independent and with replacement; the source of randomness is a counter
// generator, so a (seed, stream) pair fully determines the sequence.
// Holds pointers into the corpus: the manifest must outlive the sampler.
class BalancedSampler {
 public:
  static BalancedSampler build(const CorpusManifest& corpus, std::uint64_t seed,
                               std::uint64_t stream = 0) {
    if (corpus.empty()) throw EmptyCorpus("cannot build a sampler over an empty corpus");
    std::map<PairKey, std::vector<const Utterance*>> index;
    for (const Utterance& u : corpus.utterances()) index[{u.speaker, u.emotion}].push_back(&u);
    BalancedSampler s(seed, stream);
    s.pairs_.reserve(index.size());
    s.pools_.reserve(index.size());
    for (auto& [key, pool] : index) {
      s.pairs_.push_back(key);
      s.pools_.push_back(std::move(pool));
    }
    return s;
  }

  const std::vector<PairKey>& pairs() const { return pairs_; }
  std::size_t pair_count() const { return pairs_.size(); }
  const std::vector<const Utterance*>& pool(std::size_t pair_index) const {
    return pools_[pair_index];
  }

  const Utterance& next() {
    const auto pair = static_cast<std::size_t>(rng_.uniform_below(pairs_.size()));
    const auto& pool = pools_[pair];
    return *pool[static_cast<std::size_t>(rng_.uniform_below(pool.size()))];
  }

  std::vector<std::string> next_batch(std::size_t batch_size) {
    std::vector<std::string> ids;
    ids.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) ids.push_back(next().id);
    return ids;
  }

  // Excluded (nullopt) when the utterance is shorter than the clip; otherwise
  // a uniformly placed in-bounds window.
  std::optional<ClipWindow> select_clip(const Utterance& utt, const ClipSpec& clip) {
    if (utt.n_mel_frames < clip.clip_frames) return std::nullopt;
    const auto range = static_cast<std::uint64_t>(utt.n_mel_frames - clip.clip_frames) + 1;
    return ClipWindow{static_cast<std::int64_t>(rng_.uniform_below(range)), clip.clip_frames};
  }

 private:
  BalancedSampler(std::uint64_t seed, std::uint64_t stream) : rng_(seed, stream) {}

  Philox rng_;
  std::vector<PairKey> pairs_;
  std::vector<std::vector<const Utterance*>> pools_;
};

}  // namespace ttsprep
