#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ttsprep/errors.hpp"
#include "ttsprep/manifest.hpp"

namespace ttsprep {

// Per-(speaker, emotion) duration totals. Rows follow the corpus speaker
// order; absent pairs carry zero seconds and present=false so renderers can
// leave them blank.
struct StatsTable {
  std::vector<std::string> speakers;
  std::vector<std::array<double, kEmotionCount>> cell_seconds;
  std::vector<std::array<bool, kEmotionCount>> present;
  std::vector<double> row_seconds;
  std::array<double, kEmotionCount> col_seconds{};
  double total_seconds = 0.0;
};

inline StatsTable compute_stats(const CorpusManifest& corpus) {
  StatsTable t;
  t.speakers = corpus.speakers();
  t.cell_seconds.assign(t.speakers.size(), {});
  t.present.assign(t.speakers.size(), {});
  t.row_seconds.assign(t.speakers.size(), 0.0);
  for (const Utterance& u : corpus.utterances()) {
    std::size_t row = 0;
    while (t.speakers[row] != u.speaker) ++row;
    const auto col = static_cast<std::size_t>(u.emotion);
    t.cell_seconds[row][col] += u.duration_s;
    t.present[row][col] = true;
    t.row_seconds[row] += u.duration_s;
    t.col_seconds[col] += u.duration_s;
    t.total_seconds += u.duration_s;
  }
  return t;
}

// Two decimals, half-up, as printed in corpus summaries.
inline std::string format_hours(double seconds) {
  const long long cents = std::llround(seconds / 3600.0 * 100.0);
  std::ostringstream out;
  out << cents / 100 << '.' << std::setw(2) << std::setfill('0') << cents % 100;
  return out.str();
}

inline std::string render_stats_text(const StatsTable& t) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header = {"speaker", "all"};
  for (Emotion e : kAllEmotions) header.emplace_back(emotion_short_name(e));
  rows.push_back(std::move(header));
  for (std::size_t r = 0; r < t.speakers.size(); ++r) {
    std::vector<std::string> row = {t.speakers[r], format_hours(t.row_seconds[r])};
    for (std::size_t c = 0; c < kEmotionCount; ++c)
      row.push_back(t.present[r][c] ? format_hours(t.cell_seconds[r][c]) : "");
    rows.push_back(std::move(row));
  }
  std::vector<std::string> total = {"all", format_hours(t.total_seconds)};
  for (std::size_t c = 0; c < kEmotionCount; ++c) {
    bool any = false;
    for (const auto& p : t.present) any = any || p[c];
    total.push_back(any ? format_hours(t.col_seconds[c]) : "");
  }
  rows.push_back(std::move(total));

  std::vector<std::size_t> widths(rows[0].size(), 0);
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  std::ostringstream out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << "  ";
      // Label column left-aligned, numbers right-aligned.
      out << (c == 0 ? std::left : std::right) << std::setw(static_cast<int>(widths[c])) << row[c];
    }
    out << '\n';
  }
  return out.str();
}

inline nlohmann::json stats_to_json(const StatsTable& t) {
  nlohmann::json j;
  j["emotions"] = nlohmann::json::array();
  for (Emotion e : kAllEmotions) j["emotions"].push_back(emotion_name(e));
  j["speakers"] = nlohmann::json::array();
  for (std::size_t r = 0; r < t.speakers.size(); ++r) {
    nlohmann::json row;
    row["speaker"] = t.speakers[r];
    row["total_hours"] = format_hours(t.row_seconds[r]);
    row["total_seconds"] = t.row_seconds[r];
    row["cells"] = nlohmann::json::object();
    for (std::size_t c = 0; c < kEmotionCount; ++c)
      if (t.present[r][c]) {
        nlohmann::json cell;
        cell["hours"] = format_hours(t.cell_seconds[r][c]);
        cell["seconds"] = t.cell_seconds[r][c];
        row["cells"][std::string(emotion_name(kAllEmotions[c]))] = std::move(cell);
      }
    j["speakers"].push_back(std::move(row));
  }
  j["total_hours"] = format_hours(t.total_seconds);
  j["total_seconds"] = t.total_seconds;
  return j;
}

// ---------------------------------------------------------------------------
// Training-readiness validation
// ---------------------------------------------------------------------------

struct ValidationReport {
  std::vector<PairKey> missing_pairs;        // required but zero utterances
  std::vector<std::string> no_speech_ids;    // flagged at prep time
  std::vector<std::string> too_short_ids;    // below the vocoder clip length
  bool ok() const {
    return missing_pairs.empty() && no_speech_ids.empty() && too_short_ids.empty();
  }
};

inline ValidationReport validate_for_training(const CorpusManifest& corpus,
                                              const std::set<PairKey>& required_pairs,
                                              std::int64_t clip_frames) {
  ValidationReport report;
  std::set<PairKey> seen;
  for (const Utterance& u : corpus.utterances()) {
    seen.insert({u.speaker, u.emotion});
    if (u.has_flag(kNoSpeechFlag)) report.no_speech_ids.push_back(u.id);
    if (u.n_mel_frames < clip_frames) report.too_short_ids.push_back(u.id);
  }
  for (const PairKey& p : required_pairs)
    if (!seen.count(p)) report.missing_pairs.push_back(p);
  return report;
}

inline nlohmann::json validation_report_to_json(const ValidationReport& r) {
  nlohmann::json j;
  j["ok"] = r.ok();
  j["missing_pairs"] = nlohmann::json::array();
  for (const PairKey& p : r.missing_pairs)
    j["missing_pairs"].push_back({{"speaker", p.speaker}, {"emotion", emotion_name(p.emotion)}});
  j["no_speech"] = r.no_speech_ids;
  j["too_short_for_vocoder"] = r.too_short_ids;
  return j;
}

// ---------------------------------------------------------------------------
// Conditioning-vector contract for external trainers
// ---------------------------------------------------------------------------

inline constexpr int kSpeakerEmbeddingDim = 5;
inline constexpr int kEmotionEmbeddingDim = 3;

// Speakers in corpus order, each a trainable dim-5 slot; emotions in code
// order where neutral is pinned to the zero vector and everything else is a
// trainable dim-3 slot.
inline nlohmann::json export_conditioning_spec(const CorpusManifest& corpus) {
  if (corpus.speakers().empty()) throw EmptyCorpus("conditioning spec needs at least one speaker");
  nlohmann::json j;
  j["speaker_dim"] = kSpeakerEmbeddingDim;
  j["emotion_dim"] = kEmotionEmbeddingDim;
  j["speakers"] = nlohmann::json::array();
  for (const std::string& s : corpus.speakers())
    j["speakers"].push_back({{"label", s}, {"trainable", true}});
  j["emotions"] = nlohmann::json::array();
  for (Emotion e : kAllEmotions) {
    nlohmann::json entry;
    entry["label"] = emotion_name(e);
    if (e == Emotion::neutral) {
      entry["trainable"] = false;
      entry["vector"] = std::vector<double>(kEmotionEmbeddingDim, 0.0);
    } else {
      entry["trainable"] = true;
    }
    j["emotions"].push_back(std::move(entry));
  }
  return j;
}

}  // namespace ttsprep
