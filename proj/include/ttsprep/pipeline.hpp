#pragma once

#include <atomic>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ttsprep/curriculum.hpp"
#include "ttsprep/errors.hpp"
#include "ttsprep/hash.hpp"
#include "ttsprep/manifest.hpp"
#include "ttsprep/mel.hpp"
#include "ttsprep/mel_io.hpp"
#include "ttsprep/philox.hpp"
#include "ttsprep/resample.hpp"
#include "ttsprep/sampler.hpp"
#include "ttsprep/stats.hpp"
#include "ttsprep/stft.hpp"
#include "ttsprep/text_frontend.hpp"
#include "ttsprep/vad.hpp"
#include "ttsprep/version.hpp"
#include "ttsprep/wav.hpp"

namespace ttsprep {

struct InvalidConfig : Error {
  using Error::Error;
};

struct PipelineConfig {
  std::filesystem::path manifest_path;
  std::filesystem::path out_dir;
  VadConfig vad;
  SpectrogramConfig spectrogram;
  MelConfig mel;
  ClipSpec clip;
  std::uint64_t seed = 0;
  int workers = 1;

  void validate() const {
    vad.validate();
    spectrogram.validate();
    mel.validate(kCanonicalSampleRate);
    if (clip.clip_frames <= 0) throw InvalidConfig("clip_frames must be positive");
    if (workers < 1) throw InvalidConfig("workers must be at least 1");
  }
};

// Fingerprint of everything that shapes output *content*. Worker count and
// paths are deliberately excluded: runs that differ only in those must
// produce byte-identical artifacts, sidecars included.
inline std::string config_hash(const PipelineConfig& cfg) {
  nlohmann::json j;
  j["vad"] = {{"aggressiveness", cfg.vad.aggressiveness},
              {"frame_ms", cfg.vad.frame_ms},
              {"padding_ms", cfg.vad.padding_ms},
              {"trigger_ratio", cfg.vad.trigger_ratio}};
  j["spectrogram"] = {{"n_fft", cfg.spectrogram.n_fft},
                      {"hop", cfg.spectrogram.hop},
                      {"win_length", cfg.spectrogram.win_length}};
  j["mel"] = {{"n_mels", cfg.mel.n_mels},
              {"fmin", cfg.mel.fmin},
              {"fmax", cfg.mel.fmax},
              {"clip_floor", cfg.mel.clip_floor}};
  j["clip_frames"] = cfg.clip.clip_frames;
  j["seed"] = cfg.seed;
  return hash_bytes_hex(j.dump());
}

namespace detail {

inline nlohmann::json provenance_json(const PipelineConfig& cfg, const std::string& input_hash) {
  nlohmann::json j;
  j["tool"] = std::string(kToolName);
  j["version"] = std::string(kVersion);
  j["config_hash"] = config_hash(cfg);
  j["input_hash"] = input_hash;
  return j;
}

// Binary and JSONL artifacts get a `<name>.json` sidecar; plain-JSON
// artifacts embed the same object under a "provenance" key instead.
inline void write_sidecar(const std::filesystem::path& artifact, const nlohmann::json& prov) {
  std::ofstream out(artifact.string() + ".json", std::ios::binary);
  if (!out) throw IoFailure("cannot write sidecar for " + artifact.string());
  out << prov.dump(2) << '\n';
}

inline void write_json_artifact(const std::filesystem::path& path, nlohmann::json doc,
                                const nlohmann::json& prov) {
  doc["provenance"] = prov;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

inline void write_text_artifact(const std::filesystem::path& path, const std::string& text,
                                const nlohmann::json& prov) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << text;
  write_sidecar(path, prov);
}

inline std::filesystem::path resolve_audio(const std::filesystem::path& manifest_path,
                                           const std::string& audio) {
  const std::filesystem::path p(audio);
  return p.is_absolute() ? p : manifest_path.parent_path() / p;
}

// Utterance ids become file names; anything outside a safe set is mapped.
inline std::string file_stem_for(const std::string& id) {
  std::string out = id;
  for (char& c : out)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
  return out;
}

// Static work distribution would couple output to scheduling only if items
// wrote shared state; items here own their slots, so any distribution works.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
  };
  std::vector<std::thread> pool;
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  pool.reserve(count);
  for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
}

}  // namespace detail

struct ItemFailure {
  std::string id;
  std::string message;
};

struct RunResult {
  std::size_t attempted = 0;
  std::size_t succeeded = 0;
  std::vector<ItemFailure> failures;  // input order
  bool ok() const { return failures.empty(); }
};

namespace detail {

// Failure report lives next to the other outputs so batch runs are
// inspectable after the fact; written only when something failed.
inline void write_failures(const std::filesystem::path& out_dir, const RunResult& result,
                           const nlohmann::json& prov) {
  if (result.failures.empty()) return;
  nlohmann::json j;
  j["failures"] = nlohmann::json::array();
  for (const ItemFailure& f : result.failures)
    j["failures"].push_back({{"id", f.id}, {"message", f.message}});
  write_json_artifact(out_dir / "failures.json", std::move(j), prov);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// prep: read -> remove silence -> resample to 22,050 Hz -> write
// ---------------------------------------------------------------------------

inline RunResult run_prep(const PipelineConfig& cfg) {
  cfg.validate();
  const CorpusManifest corpus = load_manifest(cfg.manifest_path);
  const std::string in_hash = hash_file_hex(cfg.manifest_path);
  std::filesystem::create_directories(cfg.out_dir / "wav");

  const std::size_t n = corpus.size();
  std::vector<std::optional<Utterance>> slots(n);
  std::vector<std::optional<ItemFailure>> errors(n);

  detail::parallel_for(n, cfg.workers, [&](std::size_t i) {
    const Utterance& u = corpus.utterances()[i];
    try {
      if (u.has_flag(kNoSpeechFlag)) {
        // Already marked by an earlier run: pass through untouched.
        slots[i] = u;
        return;
      }
      const auto src = detail::resolve_audio(cfg.manifest_path, u.audio);
      const AudioBuffer raw = read_wav(src);
      const SilenceRemovalResult removed = remove_silence(raw, cfg.vad);
      const AudioBuffer out = resample(removed.audio, kCanonicalSampleRate);

      Utterance updated = u;
      updated.audio = "wav/" + detail::file_stem_for(u.id) + ".wav";
      updated.duration_s = out.duration_s();
      updated.n_mel_frames =
          static_cast<std::int64_t>(cfg.spectrogram.n_frames(out.size()));
      if (removed.no_speech && !updated.has_flag(kNoSpeechFlag))
        updated.flags.emplace_back(kNoSpeechFlag);

      const auto dst = cfg.out_dir / updated.audio;
      write_wav(out, dst);
      detail::write_sidecar(dst, detail::provenance_json(cfg, hash_file_hex(src)));
      slots[i] = std::move(updated);
    } catch (const std::exception& e) {
      errors[i] = ItemFailure{u.id, e.what()};
    }
  });

  RunResult result;
  result.attempted = n;
  CorpusManifest updated;
  updated.sample_rate = kCanonicalSampleRate;
  for (std::size_t i = 0; i < n; ++i) {
    if (slots[i]) {
      updated.add(std::move(*slots[i]));
      ++result.succeeded;
    } else {
      result.failures.push_back(std::move(*errors[i]));
    }
  }
  const auto prov = detail::provenance_json(cfg, in_hash);
  const auto manifest_out = cfg.out_dir / "manifest.jsonl";
  save_manifest(updated, manifest_out);
  detail::write_sidecar(manifest_out, prov);
  detail::write_failures(cfg.out_dir, result, prov);
  return result;
}

// ---------------------------------------------------------------------------
// mel: audio -> MEL1 file per utterance; refreshes n_mel_frames
// ---------------------------------------------------------------------------

inline RunResult run_mel(const PipelineConfig& cfg) {
  cfg.validate();
  const CorpusManifest corpus = load_manifest(cfg.manifest_path);
  const std::string in_hash = hash_file_hex(cfg.manifest_path);
  std::filesystem::create_directories(cfg.out_dir / "mel");

  // One filterbank shared read-only by every worker.
  const MelFilterbank fb = mel_filterbank(cfg.mel, cfg.spectrogram.n_fft, kCanonicalSampleRate);

  const std::size_t n = corpus.size();
  std::vector<std::optional<Utterance>> slots(n);
  std::vector<std::optional<ItemFailure>> errors(n);

  detail::parallel_for(n, cfg.workers, [&](std::size_t i) {
    const Utterance& u = corpus.utterances()[i];
    try {
      const auto src = detail::resolve_audio(cfg.manifest_path, u.audio);
      const AudioBuffer audio = read_wav(src);
      const MelSpectrogram mel = mel_spectrogram(audio, cfg.spectrogram, fb);

      Utterance updated = u;
      updated.n_mel_frames = mel.n_frames;
      const auto dst = cfg.out_dir / "mel" / (detail::file_stem_for(u.id) + ".mel");
      write_mel1(mel, dst);
      detail::write_sidecar(dst, detail::provenance_json(cfg, hash_file_hex(src)));
      slots[i] = std::move(updated);
    } catch (const std::exception& e) {
      errors[i] = ItemFailure{u.id, e.what()};
    }
  });

  RunResult result;
  result.attempted = n;
  CorpusManifest updated;
  updated.sample_rate = kCanonicalSampleRate;
  for (std::size_t i = 0; i < n; ++i) {
    if (slots[i]) {
      updated.add(std::move(*slots[i]));
      ++result.succeeded;
    } else {
      result.failures.push_back(std::move(*errors[i]));
    }
  }
  const auto prov = detail::provenance_json(cfg, in_hash);
  const auto manifest_out = cfg.out_dir / "manifest.jsonl";
  save_manifest(updated, manifest_out);
  detail::write_sidecar(manifest_out, prov);
  detail::write_failures(cfg.out_dir, result, prov);
  return result;
}

// ---------------------------------------------------------------------------
// text: grapheme ids per utterance + the symbol table contract
// ---------------------------------------------------------------------------

inline RunResult run_text(const PipelineConfig& cfg) {
  cfg.validate();
  const CorpusManifest corpus = load_manifest(cfg.manifest_path);
  const std::string in_hash = hash_file_hex(cfg.manifest_path);
  std::filesystem::create_directories(cfg.out_dir);
  const SymbolTable table = SymbolTable::standard();
  const auto prov = detail::provenance_json(cfg, in_hash);

  nlohmann::json symbols;
  symbols["symbols"] = table.symbols();
  nlohmann::json ids = nlohmann::json::object();
  for (std::size_t i = 0; i < table.size(); ++i) ids[table.symbol(static_cast<int>(i))] = i;
  symbols["ids"] = std::move(ids);
  detail::write_json_artifact(cfg.out_dir / "symbols.json", std::move(symbols), prov);

  const std::size_t n = corpus.size();
  std::vector<std::optional<std::vector<int>>> slots(n);
  std::vector<std::optional<ItemFailure>> errors(n);
  detail::parallel_for(n, cfg.workers, [&](std::size_t i) {
    const Utterance& u = corpus.utterances()[i];
    try {
      slots[i] = text_to_graphemes(u.text, table).ids;
    } catch (const std::exception& e) {
      errors[i] = ItemFailure{u.id, e.what()};
    }
  });

  RunResult result;
  result.attempted = n;
  const auto out_path = cfg.out_dir / "graphemes.jsonl";
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw IoFailure("cannot write " + out_path.string());
  for (std::size_t i = 0; i < n; ++i) {
    if (slots[i]) {
      nlohmann::json line;
      line["id"] = corpus.utterances()[i].id;
      line["symbol_ids"] = *slots[i];
      out << line.dump() << '\n';
      ++result.succeeded;
    } else {
      result.failures.push_back(std::move(*errors[i]));
    }
  }
  out.close();
  detail::write_sidecar(out_path, prov);
  detail::write_failures(cfg.out_dir, result, prov);
  return result;
}

// ---------------------------------------------------------------------------
// stats: duration table + conditioning contract
// ---------------------------------------------------------------------------

inline RunResult run_stats(const PipelineConfig& cfg) {
  cfg.validate();
  const CorpusManifest corpus = load_manifest(cfg.manifest_path);
  const std::string in_hash = hash_file_hex(cfg.manifest_path);
  std::filesystem::create_directories(cfg.out_dir);
  const auto prov = detail::provenance_json(cfg, in_hash);

  const StatsTable table = compute_stats(corpus);
  detail::write_text_artifact(cfg.out_dir / "stats.txt", render_stats_text(table), prov);
  detail::write_json_artifact(cfg.out_dir / "stats.json", stats_to_json(table), prov);
  // The conditioning contract needs at least one speaker; an empty corpus
  // still gets its (empty) stats.
  if (!corpus.speakers().empty())
    detail::write_json_artifact(cfg.out_dir / "conditioning.json",
                                export_conditioning_spec(corpus), prov);

  RunResult result;
  result.attempted = corpus.size();
  result.succeeded = corpus.size();
  return result;
}

// ---------------------------------------------------------------------------
// plan: training schedule + optional per-stage sub-manifests
// ---------------------------------------------------------------------------

inline RunResult run_plan(const PipelineConfig& cfg, bool have_manifest) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  TrainingPlan plan = default_plan();
  plan.vocoder_clip = cfg.clip;
  plan.validate();

  RunResult result;
  std::string in_hash;
  if (have_manifest) {
    const CorpusManifest corpus = load_manifest(cfg.manifest_path);
    in_hash = hash_file_hex(cfg.manifest_path);
    const std::vector<CorpusManifest> stages = materialize(plan, corpus);
    const auto prov = detail::provenance_json(cfg, in_hash);
    for (std::size_t s = 0; s < stages.size(); ++s) {
      const auto path = cfg.out_dir / ("stage" + std::to_string(s) + ".jsonl");
      save_manifest(stages[s], path);
      detail::write_sidecar(path, prov);
    }
    result.attempted = corpus.size();
    result.succeeded = corpus.size();
  }
  const auto prov = detail::provenance_json(cfg, in_hash);
  detail::write_json_artifact(cfg.out_dir / "plan.json", plan_to_json(plan), prov);

  std::string summary;
  const auto bounds = plan.boundaries();
  std::int64_t start = 0;
  for (std::size_t s = 0; s < plan.stages.size(); ++s) {
    summary += "stage " + std::to_string(s) + "  [" + std::to_string(start) + ", " +
               std::to_string(bounds[s]) + ")  " + plan.stages[s].name + "\n";
    start = bounds[s];
  }
  detail::write_text_artifact(cfg.out_dir / "plan.txt", summary, prov);
  return result;
}

// ---------------------------------------------------------------------------
// sample: balanced batches as JSONL (single-threaded by contract)
// ---------------------------------------------------------------------------

inline RunResult run_sample(const PipelineConfig& cfg, std::size_t batches,
                            std::size_t batch_size) {
  cfg.validate();
  if (batches == 0 || batch_size == 0) throw InvalidConfig("batches and batch-size must be >= 1");
  const CorpusManifest corpus = load_manifest(cfg.manifest_path);
  const std::string in_hash = hash_file_hex(cfg.manifest_path);
  std::filesystem::create_directories(cfg.out_dir);

  BalancedSampler sampler = BalancedSampler::build(corpus, cfg.seed);

  const auto out_path = cfg.out_dir / "batches.jsonl";
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw IoFailure("cannot write " + out_path.string());
  for (std::size_t b = 0; b < batches; ++b) {
    nlohmann::json line;
    line["batch"] = b;
    line["ids"] = nlohmann::json::array();
    line["clips"] = nlohmann::json::array();
    for (std::size_t k = 0; k < batch_size; ++k) {
      const Utterance& u = sampler.next();
      line["ids"].push_back(u.id);
      // Too short for the clip window is a normal outcome: trainers skip
      // null clips when assembling vocoder batches.
      if (const auto clip = sampler.select_clip(u, cfg.clip))
        line["clips"].push_back(
            {{"start_frame", clip->start_frame}, {"clip_frames", clip->clip_frames}});
      else
        line["clips"].push_back(nullptr);
    }
    out << line.dump() << '\n';
  }
  out.close();

  auto prov = detail::provenance_json(cfg, in_hash);
  prov["rng"] = {{"algorithm", std::string(kRngAlgorithm)}, {"seed", cfg.seed}, {"stream", 0}};
  detail::write_sidecar(out_path, prov);

  RunResult result;
  result.attempted = batches;
  result.succeeded = batches;
  return result;
}

// ---------------------------------------------------------------------------
// validate: training-readiness report
// ---------------------------------------------------------------------------

inline RunResult run_validate(const PipelineConfig& cfg) {
  cfg.validate();
  const CorpusManifest corpus = load_manifest(cfg.manifest_path);
  const std::string in_hash = hash_file_hex(cfg.manifest_path);
  std::filesystem::create_directories(cfg.out_dir);

  // Default requirement: every declared speaker in every emotion. Reported
  // gaps are findings, not failures.
  std::set<PairKey> required;
  for (const std::string& s : corpus.speakers())
    for (Emotion e : kAllEmotions) required.insert({s, e});
  const ValidationReport report = validate_for_training(corpus, required, cfg.clip.clip_frames);

  detail::write_json_artifact(cfg.out_dir / "validation.json", validation_report_to_json(report),
                              detail::provenance_json(cfg, in_hash));
  RunResult result;
  result.attempted = corpus.size();
  result.succeeded = corpus.size();
  return result;
}

}  // namespace ttsprep
