#include <catch_amalgamated.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "support/synth.hpp"
#include "ttsprep/pipeline.hpp"

using namespace ttsprep;
using test::TempDir;

namespace {

namespace fs = std::filesystem;

Utterance make_utt(const std::string& id, const std::string& audio, const std::string& text,
                   const std::string& speaker, Emotion emotion) {
  Utterance u;
  u.id = id;
  u.audio = audio;
  u.text = text;
  u.speaker = speaker;
  u.emotion = emotion;
  u.duration_s = 1.0;
  u.n_mel_frames = 1;
  return u;
}

// Writes three speech takes and a silent one next to a manifest.
fs::path write_demo_corpus(const TempDir& dir) {
  const AudioBuffer pad = test::make_silence(0.5, 16000);
  const AudioBuffer speech = test::make_multitone(1.0, 16000, 0.8);
  write_wav(test::concat({pad, speech, pad}), dir / "a.wav");
  write_wav(test::concat({speech, speech}), dir / "b.wav");
  write_wav(test::concat({pad, speech}), dir / "c.wav");
  write_wav(test::make_silence(1.5, 16000), dir / "quiet.wav");

  CorpusManifest corpus;
  corpus.add(make_utt("a", "a.wav", "안녕하세요.", "spk1", Emotion::neutral));
  corpus.add(make_utt("b", "b.wav", "반갑습니다.", "spk1", Emotion::happiness));
  corpus.add(make_utt("c", "c.wav", "감사합니다.", "spk2", Emotion::neutral));
  corpus.add(make_utt("quiet", "quiet.wav", "조용한 방.", "spk2", Emotion::sadness));
  const fs::path manifest = dir / "manifest.jsonl";
  save_manifest(corpus, manifest);
  return manifest;
}

// Relative path -> content hash for every regular file under root.
std::map<std::string, std::string> tree_hashes(const fs::path& root) {
  std::map<std::string, std::string> hashes;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file())
      hashes[fs::relative(entry.path(), root).generic_string()] = hash_file_hex(entry.path());
  return hashes;
}

PipelineConfig base_config(const fs::path& manifest, const fs::path& out) {
  PipelineConfig cfg;
  cfg.manifest_path = manifest;
  cfg.out_dir = out;
  return cfg;
}

}  // namespace

TEST_CASE("config hash tracks content parameters only", "[pipeline]") {
  PipelineConfig a = base_config("x.jsonl", "out");
  PipelineConfig b = a;
  b.workers = 8;
  b.manifest_path = "elsewhere.jsonl";
  b.out_dir = "other";
  CHECK(config_hash(a) == config_hash(b));

  b = a;
  b.seed = 1;
  CHECK(config_hash(a) != config_hash(b));
  b = a;
  b.vad.aggressiveness = 2;
  CHECK(config_hash(a) != config_hash(b));
  b = a;
  b.mel.fmax = 7600.0;
  CHECK(config_hash(a) != config_hash(b));
  b = a;
  b.clip.clip_frames = 12000;
  CHECK(config_hash(a) != config_hash(b));

  // 64-bit FNV-1a rendered as 16 hex chars.
  CHECK(config_hash(a).size() == 16u);
}

TEST_CASE("pipeline config validation", "[pipeline]") {
  PipelineConfig cfg = base_config("m.jsonl", "out");
  CHECK_NOTHROW(cfg.validate());
  cfg.workers = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
  cfg = base_config("m.jsonl", "out");
  cfg.clip.clip_frames = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
  cfg = base_config("m.jsonl", "out");
  cfg.vad.aggressiveness = 9;
  CHECK_THROWS_AS(cfg.validate(), InvalidVadConfig);
}

TEST_CASE("file stems keep ids filesystem-safe", "[pipeline]") {
  CHECK(detail::file_stem_for("plain-id_01.x") == "plain-id_01.x");
  CHECK(detail::file_stem_for("a/b c:d") == "a_b_c_d");
  CHECK(detail::file_stem_for("한글") != "한글");  // non-ASCII remapped
}

TEST_CASE("audio paths resolve against the manifest directory", "[pipeline]") {
  CHECK(detail::resolve_audio("/data/corpus/manifest.jsonl", "wav/a.wav") ==
        fs::path("/data/corpus/wav/a.wav"));
  CHECK(detail::resolve_audio("/data/corpus/manifest.jsonl", "/abs/a.wav") ==
        fs::path("/abs/a.wav"));
}

TEST_CASE("parallel_for touches every index exactly once", "[pipeline]") {
  for (int workers : {1, 2, 7, 64}) {
    const std::size_t n = 129;
    std::vector<std::atomic<int>> touched(n);
    detail::parallel_for(n, workers, [&](std::size_t i) { touched[i].fetch_add(1); });
    for (std::size_t i = 0; i < n; ++i) REQUIRE(touched[i].load() == 1);
  }
}

TEST_CASE("prep trims, resamples, and refreshes the manifest", "[pipeline]") {
  TempDir dir("prep");
  const fs::path manifest = write_demo_corpus(dir);
  const PipelineConfig cfg = base_config(manifest, dir / "out");

  const RunResult result = run_prep(cfg);
  CHECK(result.ok());
  CHECK(result.attempted == 4u);
  CHECK(result.succeeded == 4u);
  CHECK_FALSE(fs::exists(dir / "out" / "failures.json"));

  const CorpusManifest out = load_manifest(dir / "out" / "manifest.jsonl");
  REQUIRE(out.size() == 4u);
  CHECK(out.sample_rate == 22050);

  const Utterance& a = out.utterances()[0];
  CHECK(a.audio == "wav/a.wav");
  const AudioBuffer a_audio = read_wav(dir / "out" / a.audio);
  CHECK(a_audio.sample_rate == 22050);
  // Two half-second silence pads around one second of speech: most of the
  // padding goes away, the speech stays.
  CHECK(a.duration_s < 1.5);
  CHECK(a.duration_s > 0.9);
  CHECK(a.n_mel_frames == static_cast<std::int64_t>(cfg.spectrogram.n_frames(a_audio.size())));

  // Fully voiced input comes through with its duration intact.
  const Utterance& b = out.utterances()[1];
  CHECK(b.duration_s == Catch::Approx(2.0).margin(0.01));

  // The silent take is kept but flagged.
  const Utterance& quiet = out.utterances()[3];
  CHECK(quiet.has_flag(kNoSpeechFlag));

  // Binary outputs get sidecars with the provenance quartet.
  const std::ifstream sidecar_in(dir / "out" / "wav" / "a.wav.json");
  REQUIRE(sidecar_in.good());
  nlohmann::json sidecar;
  std::ifstream(dir / "out" / "wav" / "a.wav.json") >> sidecar;
  CHECK(sidecar.contains("tool"));
  CHECK(sidecar.contains("version"));
  CHECK(sidecar["config_hash"] == config_hash(cfg));
  CHECK(sidecar.contains("input_hash"));

  nlohmann::json manifest_sidecar;
  std::ifstream(dir / "out" / "manifest.jsonl.json") >> manifest_sidecar;
  CHECK(manifest_sidecar["input_hash"] == hash_file_hex(manifest));
}

TEST_CASE("prep passes already-flagged utterances through untouched", "[pipeline]") {
  TempDir dir("prep-flag");
  CorpusManifest corpus;
  Utterance u = make_utt("ghost", "missing.wav", "가", "spk", Emotion::neutral);
  u.flags = {std::string(kNoSpeechFlag)};
  u.duration_s = 2.5;
  u.n_mel_frames = 77;
  corpus.add(std::move(u));
  const fs::path manifest = dir / "manifest.jsonl";
  save_manifest(corpus, manifest);

  // The audio file does not exist; the flag short-circuits before any read.
  const RunResult result = run_prep(base_config(manifest, dir / "out"));
  CHECK(result.ok());
  const CorpusManifest out = load_manifest(dir / "out" / "manifest.jsonl");
  REQUIRE(out.size() == 1u);
  CHECK(out.utterances()[0].audio == "missing.wav");
  CHECK(out.utterances()[0].duration_s == 2.5);
  CHECK(out.utterances()[0].n_mel_frames == 77);
}

TEST_CASE("prep collects failures and keeps going", "[pipeline]") {
  TempDir dir("prep-fail");
  write_wav(test::make_multitone(1.0, 16000, 0.8), dir / "good.wav");
  CorpusManifest corpus;
  corpus.add(make_utt("bad1", "absent.wav", "가", "spk", Emotion::neutral));
  corpus.add(make_utt("ok", "good.wav", "가", "spk", Emotion::neutral));
  corpus.add(make_utt("bad2", "also-absent.wav", "가", "spk", Emotion::neutral));
  const fs::path manifest = dir / "manifest.jsonl";
  save_manifest(corpus, manifest);

  const RunResult result = run_prep(base_config(manifest, dir / "out"));
  CHECK_FALSE(result.ok());
  CHECK(result.attempted == 3u);
  CHECK(result.succeeded == 1u);
  REQUIRE(result.failures.size() == 2u);
  CHECK(result.failures[0].id == "bad1");  // input order
  CHECK(result.failures[1].id == "bad2");

  const CorpusManifest out = load_manifest(dir / "out" / "manifest.jsonl");
  REQUIRE(out.size() == 1u);
  CHECK(out.utterances()[0].id == "ok");

  nlohmann::json failures;
  std::ifstream(dir / "out" / "failures.json") >> failures;
  REQUIRE(failures["failures"].size() == 2u);
  CHECK(failures["failures"][0]["id"] == "bad1");
  CHECK(failures["failures"][0]["message"].get<std::string>().size() > 0u);
  CHECK(failures.contains("provenance"));
}

TEST_CASE("prep output is byte-identical across runs and worker counts", "[pipeline]") {
  TempDir dir("prep-det");
  const fs::path manifest = write_demo_corpus(dir);

  PipelineConfig cfg = base_config(manifest, dir / "out1");
  run_prep(cfg);
  cfg.out_dir = dir / "out2";
  run_prep(cfg);
  cfg.out_dir = dir / "out8";
  cfg.workers = 8;
  run_prep(cfg);

  const auto h1 = tree_hashes(dir / "out1");
  CHECK(h1.size() >= 10u);  // 4 wavs + 4 sidecars + manifest + its sidecar
  CHECK(h1 == tree_hashes(dir / "out2"));
  CHECK(h1 == tree_hashes(dir / "out8"));
}

TEST_CASE("mel writes one readable MEL1 per utterance", "[pipeline]") {
  TempDir dir("mel");
  const fs::path manifest = write_demo_corpus(dir);
  PipelineConfig cfg = base_config(manifest, dir / "prep");
  REQUIRE(run_prep(cfg).ok());

  cfg.manifest_path = dir / "prep" / "manifest.jsonl";
  cfg.out_dir = dir / "melout";
  const RunResult result = run_mel(cfg);
  CHECK(result.ok());

  const CorpusManifest out = load_manifest(dir / "melout" / "manifest.jsonl");
  REQUIRE(out.size() == 4u);
  for (const Utterance& u : out.utterances()) {
    const MelSpectrogram mel = read_mel1(dir / "melout" / "mel" / (u.id + ".mel"));
    CHECK(mel.n_mels == 80);
    CHECK(mel.n_frames == u.n_mel_frames);
    CHECK(fs::exists(dir / "melout" / "mel" / (u.id + ".mel.json")));
  }

  // Deterministic across a reran worker sweep.
  cfg.out_dir = dir / "melout8";
  cfg.workers = 8;
  run_mel(cfg);
  CHECK(tree_hashes(dir / "melout") == tree_hashes(dir / "melout8"));
}

TEST_CASE("text emits the symbol contract and per-utterance ids", "[pipeline]") {
  TempDir dir("text");
  CorpusManifest corpus;
  corpus.add(make_utt("a", "a.wav", "가", "spk", Emotion::neutral));
  corpus.add(make_utt("weird", "w.wav", "hello", "spk", Emotion::neutral));
  corpus.add(make_utt("b", "b.wav", "한글", "spk", Emotion::neutral));
  const fs::path manifest = dir / "manifest.jsonl";
  save_manifest(corpus, manifest);

  const RunResult result = run_text(base_config(manifest, dir / "out"));
  CHECK_FALSE(result.ok());
  REQUIRE(result.failures.size() == 1u);
  CHECK(result.failures[0].id == "weird");

  nlohmann::json symbols;
  std::ifstream(dir / "out" / "symbols.json") >> symbols;
  CHECK(symbols["symbols"].size() == 86u);
  CHECK(symbols["ids"]["<pad>"] == 0);
  CHECK(symbols["ids"]["<nocoda>"] == 41);
  CHECK(symbols.contains("provenance"));

  std::ifstream lines(dir / "out" / "graphemes.jsonl");
  std::vector<nlohmann::json> rows;
  for (std::string l; std::getline(lines, l);) rows.push_back(nlohmann::json::parse(l));
  REQUIRE(rows.size() == 2u);
  CHECK(rows[0]["id"] == "a");
  CHECK(rows[0]["symbol_ids"] == std::vector<int>({1, 20}));
  CHECK(rows[1]["id"] == "b");
  CHECK(rows[1]["symbol_ids"] == std::vector<int>({19, 20, 45, 1, 38, 49}));
}

TEST_CASE("stats writes the table and the conditioning contract", "[pipeline]") {
  TempDir dir("stats");
  const fs::path manifest = dir / "manifest.jsonl";
  save_manifest(test::reference_corpus(), manifest);

  REQUIRE(run_stats(base_config(manifest, dir / "out")).ok());

  std::ifstream text_in(dir / "out" / "stats.txt");
  std::string text((std::istreambuf_iterator<char>(text_in)), std::istreambuf_iterator<char>());
  CHECK(text.find("kss-f") != std::string::npos);
  CHECK(text.find("12.59") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "stats.txt.json"));

  nlohmann::json stats;
  std::ifstream(dir / "out" / "stats.json") >> stats;
  CHECK(stats["total_hours"] == "111.71");
  CHECK(stats.contains("provenance"));

  nlohmann::json conditioning;
  std::ifstream(dir / "out" / "conditioning.json") >> conditioning;
  CHECK(conditioning["speakers"].size() == 11u);
  CHECK(conditioning["emotions"][0]["trainable"] == false);
}

TEST_CASE("stats on an empty corpus still writes the table", "[pipeline]") {
  TempDir dir("stats-empty");
  const fs::path manifest = dir / "manifest.jsonl";
  std::ofstream(manifest) << "";

  REQUIRE(run_stats(base_config(manifest, dir / "out")).ok());
  CHECK(fs::exists(dir / "out" / "stats.txt"));
  CHECK(fs::exists(dir / "out" / "stats.json"));
  CHECK_FALSE(fs::exists(dir / "out" / "conditioning.json"));
}

TEST_CASE("plan writes the schedule and stage manifests", "[pipeline]") {
  TempDir dir("plan");
  const fs::path manifest = dir / "manifest.jsonl";
  save_manifest(test::reference_corpus(), manifest);

  run_plan(base_config(manifest, dir / "out"), true);

  nlohmann::json plan;
  std::ifstream(dir / "out" / "plan.json") >> plan;
  CHECK(plan["boundaries"] == std::vector<int>({20000, 50000, 115000}));
  CHECK(plan.contains("provenance"));

  std::ifstream txt_in(dir / "out" / "plan.txt");
  std::string txt((std::istreambuf_iterator<char>(txt_in)), std::istreambuf_iterator<char>());
  CHECK(txt.find("stage 0") != std::string::npos);
  CHECK(txt.find("[0, 20000)") != std::string::npos);
  CHECK(txt.find("[50000, 115000)") != std::string::npos);

  const CorpusManifest s0 = load_manifest(dir / "out" / "stage0.jsonl");
  const CorpusManifest s1 = load_manifest(dir / "out" / "stage1.jsonl");
  const CorpusManifest s2 = load_manifest(dir / "out" / "stage2.jsonl");
  CHECK(s0.size() == 1u);
  CHECK(s1.size() == 11u);
  CHECK(s2.size() == 67u);

  // Without a manifest only the schedule appears.
  TempDir bare("plan-bare");
  run_plan(base_config("", bare / "out"), false);
  CHECK(fs::exists(bare / "out" / "plan.json"));
  CHECK_FALSE(fs::exists(bare / "out" / "stage0.jsonl"));
}

TEST_CASE("sample emits deterministic batches with clip windows", "[pipeline]") {
  TempDir dir("sample");
  const fs::path manifest = dir / "manifest.jsonl";
  // Mixed lengths: one utterance per cell at 20000 frames, except one pair
  // that is too short to clip.
  CorpusManifest corpus = test::reference_corpus();
  Utterance small = make_utt("tiny", "t.wav", "가", "short-spk", Emotion::neutral);
  small.n_mel_frames = 100;
  corpus.add(std::move(small));
  save_manifest(corpus, manifest);

  PipelineConfig cfg = base_config(manifest, dir / "out1");
  cfg.seed = 7;
  REQUIRE(run_sample(cfg, 5, 16).ok());
  cfg.out_dir = dir / "out2";
  REQUIRE(run_sample(cfg, 5, 16).ok());

  CHECK(hash_file_hex(dir / "out1" / "batches.jsonl") ==
        hash_file_hex(dir / "out2" / "batches.jsonl"));

  std::ifstream lines(dir / "out1" / "batches.jsonl");
  std::vector<nlohmann::json> rows;
  for (std::string l; std::getline(lines, l);) rows.push_back(nlohmann::json::parse(l));
  REQUIRE(rows.size() == 5u);
  for (std::size_t b = 0; b < rows.size(); ++b) {
    CHECK(rows[b]["batch"] == b);
    REQUIRE(rows[b]["ids"].size() == 16u);
    REQUIRE(rows[b]["clips"].size() == 16u);
    for (std::size_t k = 0; k < 16u; ++k) {
      const auto& clip = rows[b]["clips"][k];
      // A null clip marks exactly the utterances below the window length.
      REQUIRE(clip.is_null() == (rows[b]["ids"][k] == "tiny"));
      if (!clip.is_null()) {
        CHECK(clip["clip_frames"] == 16000);
        CHECK(clip["start_frame"].get<std::int64_t>() >= 0);
        CHECK(clip["start_frame"].get<std::int64_t>() <= 4000);
      }
    }
  }

  nlohmann::json sidecar;
  std::ifstream(dir / "out1" / "batches.jsonl.json") >> sidecar;
  CHECK(sidecar["rng"]["algorithm"] == "philox4x32-10");
  CHECK(sidecar["rng"]["seed"] == 7);

  CHECK_THROWS_AS(run_sample(cfg, 0, 16), InvalidConfig);
  CHECK_THROWS_AS(run_sample(cfg, 1, 0), InvalidConfig);
}

TEST_CASE("a corpus of only short utterances yields all-null clips", "[pipeline]") {
  TempDir dir("sample-null");
  CorpusManifest corpus;
  Utterance u = make_utt("only", "o.wav", "가", "spk", Emotion::neutral);
  u.n_mel_frames = 100;
  corpus.add(std::move(u));
  const fs::path manifest = dir / "manifest.jsonl";
  save_manifest(corpus, manifest);

  REQUIRE(run_sample(base_config(manifest, dir / "out"), 1, 4).ok());
  std::ifstream lines(dir / "out" / "batches.jsonl");
  std::string l;
  REQUIRE(std::getline(lines, l));
  const nlohmann::json row = nlohmann::json::parse(l);
  for (const auto& clip : row["clips"]) CHECK(clip.is_null());
  for (const auto& id : row["ids"]) CHECK(id == "only");
}

TEST_CASE("validate reports gaps without failing the run", "[pipeline]") {
  TempDir dir("validate");
  const fs::path manifest = dir / "manifest.jsonl";
  save_manifest(test::reference_corpus(), manifest);

  PipelineConfig cfg = base_config(manifest, dir / "out");
  cfg.clip.clip_frames = 16000;
  REQUIRE(run_validate(cfg).ok());

  nlohmann::json report;
  std::ifstream(dir / "out" / "validation.json") >> report;
  // Speakers x emotions = 77 required pairs, 67 populated.
  CHECK(report["ok"] == false);
  CHECK(report["missing_pairs"].size() == 10u);
  CHECK(report["no_speech"].empty());
  CHECK(report["too_short_for_vocoder"].empty());
  CHECK(report.contains("provenance"));
}
