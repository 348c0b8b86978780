#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ttsprep/errors.hpp"
#include "ttsprep/version.hpp"

namespace ttsprep {

enum class Emotion : int {
  neutral = 0,
  anger = 1,
  disgust = 2,
  fear = 3,
  happiness = 4,
  sadness = 5,
  surprise = 6,
};

inline constexpr int kEmotionCount = 7;

inline constexpr std::array<Emotion, kEmotionCount> kAllEmotions = {
    Emotion::neutral, Emotion::anger,   Emotion::disgust, Emotion::fear,
    Emotion::happiness, Emotion::sadness, Emotion::surprise,
};

inline std::string_view emotion_name(Emotion e) {
  static constexpr std::array<std::string_view, kEmotionCount> names = {
      "neutral", "anger", "disgust", "fear", "happiness", "sadness", "surprise"};
  return names[static_cast<std::size_t>(e)];
}

// Three-letter column labels for compact table rendering.
inline std::string_view emotion_short_name(Emotion e) {
  static constexpr std::array<std::string_view, kEmotionCount> names = {
      "neu", "ang", "dis", "fea", "hap", "sad", "sur"};
  return names[static_cast<std::size_t>(e)];
}

struct UnknownEmotion : Error {
  using Error::Error;
};

inline Emotion parse_emotion(std::string_view s) {
  for (Emotion e : kAllEmotions)
    if (s == emotion_name(e) || s == emotion_short_name(e)) return e;
  throw UnknownEmotion("unknown emotion \"" + std::string(s) + "\"");
}

struct ParseError : Error {
  std::size_t line = 0;
  ParseError(std::size_t line_number, const std::string& what)
      : Error("line " + std::to_string(line_number) + ": " + what), line(line_number) {}
};

struct DuplicateId : Error {
  using Error::Error;
};

struct MissingField : Error {
  using Error::Error;
};

// Flag set on utterances whose audio produced no voiced segments.
inline constexpr std::string_view kNoSpeechFlag = "no_speech";

// Ordering is lexicographic by (speaker, emotion code) so that indexes built
// from it are identical across platforms.
struct PairKey {
  std::string speaker;
  Emotion emotion = Emotion::neutral;
  friend bool operator==(const PairKey&, const PairKey&) = default;
  friend bool operator<(const PairKey& a, const PairKey& b) {
    if (a.speaker != b.speaker) return a.speaker < b.speaker;
    return static_cast<int>(a.emotion) < static_cast<int>(b.emotion);
  }
};

struct Utterance {
  std::string id;
  std::string audio;  // path, relative to the manifest's directory or absolute
  std::string text;
  std::string speaker;
  Emotion emotion = Emotion::neutral;
  double duration_s = 0.0;
  std::int64_t n_mel_frames = 0;
  std::vector<std::string> flags;

  bool has_flag(std::string_view f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
  }
};

class CorpusManifest {
 public:
  CorpusManifest() = default;

  // Appends while keeping ids unique and the speaker list in first-appearance
  // order.
  void add(Utterance utt) {
    if (!ids_.insert(utt.id).second) throw DuplicateId("duplicate utterance id \"" + utt.id + "\"");
    if (std::find(speakers_.begin(), speakers_.end(), utt.speaker) == speakers_.end())
      speakers_.push_back(utt.speaker);
    utterances_.push_back(std::move(utt));
  }

  const std::vector<Utterance>& utterances() const { return utterances_; }
  const std::vector<std::string>& speakers() const { return speakers_; }
  int sample_rate = kCanonicalSampleRate;

  bool empty() const { return utterances_.empty(); }
  std::size_t size() const { return utterances_.size(); }

 private:
  std::vector<Utterance> utterances_;
  std::vector<std::string> speakers_;
  std::set<std::string> ids_;
};

namespace detail {

inline Utterance utterance_from_json(const nlohmann::json& j, std::size_t line_number) {
  const auto require = [&](const char* key) -> const nlohmann::json& {
    const auto it = j.find(key);
    if (it == j.end()) throw MissingField("line " + std::to_string(line_number) +
                                          ": missing field \"" + key + "\"");
    return *it;
  };
  Utterance u;
  try {
    u.id = require("id").get<std::string>();
    u.audio = require("audio").get<std::string>();
    u.text = require("text").get<std::string>();
    u.speaker = require("speaker").get<std::string>();
    u.emotion = parse_emotion(require("emotion").get<std::string>());
    u.duration_s = require("duration_s").get<double>();
    u.n_mel_frames = require("n_mel_frames").get<std::int64_t>();
    if (const auto it = j.find("flags"); it != j.end())
      u.flags = it->get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line_number, e.what());
  }
  if (!(u.duration_s > 0.0)) throw ParseError(line_number, "duration_s must be positive");
  if (u.n_mel_frames < 0) throw ParseError(line_number, "n_mel_frames must be non-negative");
  return u;
}

inline nlohmann::json utterance_to_json(const Utterance& u) {
  nlohmann::json j;
  j["id"] = u.id;
  j["audio"] = u.audio;
  j["text"] = u.text;
  j["speaker"] = u.speaker;
  j["emotion"] = emotion_name(u.emotion);
  j["duration_s"] = u.duration_s;
  j["n_mel_frames"] = u.n_mel_frames;
  j["flags"] = u.flags;
  return j;
}

}  // namespace detail

// JSONL: one utterance object per line; blank lines are permitted and skipped.
inline CorpusManifest load_manifest_stream(std::istream& in) {
  CorpusManifest corpus;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line_number, e.what());
    }
    if (!j.is_object()) throw ParseError(line_number, "expected a JSON object");
    corpus.add(detail::utterance_from_json(j, line_number));
  }
  return corpus;
}

inline CorpusManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open manifest " + path.string());
  return load_manifest_stream(in);
}

inline void save_manifest_stream(const CorpusManifest& corpus, std::ostream& out) {
  for (const Utterance& u : corpus.utterances()) out << detail::utterance_to_json(u).dump() << '\n';
}

inline void save_manifest(const CorpusManifest& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot write manifest " + path.string());
  save_manifest_stream(corpus, out);
  if (!out) throw IoFailure("short write to " + path.string());
}

}  // namespace ttsprep
