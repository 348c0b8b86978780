#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "support/synth.hpp"
#include "ttsprep/wav.hpp"
#include "ttsprep/hash.hpp"
#include "ttsprep/manifest.hpp"
#include "ttsprep/mel_io.hpp"

using namespace ttsprep;
using test::TempDir;

namespace {

namespace fs = std::filesystem;

// Path of the binary under test, injected by the build.
std::string cli_path() {
  const char* p = std::getenv("TTSPREP_CLI");
  REQUIRE(p != nullptr);
  return p;
}

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

CliResult run_cli(const std::string& args, const fs::path& scratch) {
  const fs::path log = scratch / "cli-log.txt";
  const std::string cmd = "'" + cli_path() + "' " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  r.output.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return r;
}

Utterance make_utt(const std::string& id, const std::string& audio, const std::string& text,
                   const std::string& speaker, Emotion emotion) {
  Utterance u;
  u.id = id;
  u.audio = audio;
  u.text = text;
  u.speaker = speaker;
  u.emotion = emotion;
  u.duration_s = 1.0;
  u.n_mel_frames = 20000;
  return u;
}

fs::path write_speech_corpus(const TempDir& dir) {
  const AudioBuffer pad = test::make_silence(0.4, 16000);
  const AudioBuffer speech = test::make_multitone(1.0, 16000, 0.8);
  write_wav(test::concat({pad, speech, pad}), dir / "a.wav");
  write_wav(test::concat({speech, speech}), dir / "b.wav");

  CorpusManifest corpus;
  corpus.add(make_utt("a", "a.wav", "안녕하세요.", "spk1", Emotion::neutral));
  corpus.add(make_utt("b", "b.wav", "좋은 아침!", "spk2", Emotion::happiness));
  const fs::path manifest = dir / "manifest.jsonl";
  save_manifest(corpus, manifest);
  return manifest;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("invocation errors exit 2", "[cli]") {
  TempDir dir("cli-usage");
  CHECK(run_cli("", dir.path()).exit_code == 2);
  CHECK(run_cli("frobnicate", dir.path()).exit_code == 2);
  CHECK(run_cli("prep", dir.path()).exit_code == 2);  // --manifest is required
  CHECK(run_cli("prep --manifest m.jsonl --workers 0 --out x", dir.path()).exit_code == 2);
  CHECK(run_cli("prep --manifest m.jsonl --aggressiveness 7 --out x", dir.path()).exit_code == 2);
}

TEST_CASE("help exits 0 and names every subcommand", "[cli]") {
  TempDir dir("cli-help");
  const CliResult r = run_cli("--help", dir.path());
  CHECK(r.exit_code == 0);
  for (const char* sub : {"prep", "mel", "text", "stats", "plan", "sample", "validate"})
    CHECK(r.output.find(sub) != std::string::npos);
}

TEST_CASE("a missing manifest file is a runtime failure", "[cli]") {
  TempDir dir("cli-missing");
  const CliResult r =
      run_cli("prep --manifest " + q(dir / "nope.jsonl") + " --out " + q(dir / "out"), dir.path());
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("error:") != std::string::npos);
}

TEST_CASE("an empty manifest is processed successfully", "[cli]") {
  TempDir dir("cli-empty");
  std::ofstream(dir / "empty.jsonl") << "";
  const CliResult r = run_cli(
      "prep --manifest " + q(dir / "empty.jsonl") + " --out " + q(dir / "out"), dir.path());
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(dir / "out" / "manifest.jsonl"));
}

TEST_CASE("item failures exit 1 and leave a report", "[cli]") {
  TempDir dir("cli-itemfail");
  CorpusManifest corpus;
  corpus.add(make_utt("ghost", "absent.wav", "가", "spk", Emotion::neutral));
  save_manifest(corpus, dir / "manifest.jsonl");

  const CliResult r = run_cli(
      "prep --manifest " + q(dir / "manifest.jsonl") + " --out " + q(dir / "out"), dir.path());
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("failed") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "failures.json"));
}

TEST_CASE("prep then mel produces decodable artifacts", "[cli]") {
  TempDir dir("cli-e2e");
  const fs::path manifest = write_speech_corpus(dir);

  const CliResult prep = run_cli(
      "prep --manifest " + q(manifest) + " --out " + q(dir / "prep"), dir.path());
  REQUIRE(prep.exit_code == 0);
  CHECK(prep.output.find("ok: 2 items") != std::string::npos);

  const CliResult mel = run_cli(
      "mel --manifest " + q(dir / "prep" / "manifest.jsonl") + " --out " + q(dir / "mel"),
      dir.path());
  REQUIRE(mel.exit_code == 0);

  const CorpusManifest out = load_manifest(dir / "mel" / "manifest.jsonl");
  REQUIRE(out.size() == 2u);
  for (const Utterance& u : out.utterances()) {
    const MelSpectrogram m = read_mel1(dir / "mel" / "mel" / (u.id + ".mel"));
    CHECK(m.n_mels == 80);
    CHECK(m.n_frames == u.n_mel_frames);
  }
}

TEST_CASE("text writes the symbol table and grapheme lines", "[cli]") {
  TempDir dir("cli-text");
  const fs::path manifest = write_speech_corpus(dir);
  const CliResult r = run_cli(
      "text --manifest " + q(manifest) + " --out " + q(dir / "out"), dir.path());
  REQUIRE(r.exit_code == 0);

  nlohmann::json symbols;
  std::ifstream(dir / "out" / "symbols.json") >> symbols;
  CHECK(symbols["symbols"].size() == 86u);

  std::ifstream lines(dir / "out" / "graphemes.jsonl");
  std::size_t count = 0;
  for (std::string l; std::getline(lines, l);) ++count;
  CHECK(count == 2u);
}

TEST_CASE("stats writes table, json, and conditioning with provenance", "[cli]") {
  TempDir dir("cli-stats");
  const fs::path manifest = dir / "manifest.jsonl";
  save_manifest(test::reference_corpus(), manifest);

  const CliResult r = run_cli(
      "stats --manifest " + q(manifest) + " --out " + q(dir / "out"), dir.path());
  REQUIRE(r.exit_code == 0);

  nlohmann::json stats;
  std::ifstream(dir / "out" / "stats.json") >> stats;
  CHECK(stats["total_hours"] == "111.71");
  REQUIRE(stats.contains("provenance"));
  for (const char* key : {"tool", "version", "config_hash", "input_hash"})
    CHECK(stats["provenance"].contains(key));

  nlohmann::json sidecar;
  std::ifstream(dir / "out" / "stats.txt.json") >> sidecar;
  CHECK(sidecar["input_hash"] == hash_file_hex(manifest));
  CHECK(fs::exists(dir / "out" / "conditioning.json"));
}

TEST_CASE("plan works with and without a manifest", "[cli]") {
  TempDir dir("cli-plan");
  const CliResult bare = run_cli("plan --out " + q(dir / "bare"), dir.path());
  REQUIRE(bare.exit_code == 0);
  CHECK(fs::exists(dir / "bare" / "plan.json"));
  CHECK(fs::exists(dir / "bare" / "plan.txt"));
  CHECK_FALSE(fs::exists(dir / "bare" / "stage0.jsonl"));

  const fs::path manifest = dir / "manifest.jsonl";
  save_manifest(test::reference_corpus(), manifest);
  const CliResult full = run_cli(
      "plan --manifest " + q(manifest) + " --out " + q(dir / "full"), dir.path());
  REQUIRE(full.exit_code == 0);
  CHECK(load_manifest(dir / "full" / "stage0.jsonl").size() == 1u);
  CHECK(load_manifest(dir / "full" / "stage1.jsonl").size() == 11u);
  CHECK(load_manifest(dir / "full" / "stage2.jsonl").size() == 67u);

  nlohmann::json plan;
  std::ifstream(dir / "full" / "plan.json") >> plan;
  CHECK(plan["total_iterations"] == 115000);
}

TEST_CASE("sampling is reproducible from the seed", "[cli]") {
  TempDir dir("cli-sample");
  const fs::path manifest = dir / "manifest.jsonl";
  save_manifest(test::reference_corpus(), manifest);

  const std::string common =
      "sample --manifest " + q(manifest) + " --batches 3 --batch-size 8 --seed 7 --out ";
  REQUIRE(run_cli(common + q(dir / "s1"), dir.path()).exit_code == 0);
  REQUIRE(run_cli(common + q(dir / "s2"), dir.path()).exit_code == 0);
  CHECK(hash_file_hex(dir / "s1" / "batches.jsonl") ==
        hash_file_hex(dir / "s2" / "batches.jsonl"));

  const std::string other =
      "sample --manifest " + q(manifest) + " --batches 3 --batch-size 8 --seed 8 --out ";
  REQUIRE(run_cli(other + q(dir / "s3"), dir.path()).exit_code == 0);
  CHECK(hash_file_hex(dir / "s1" / "batches.jsonl") !=
        hash_file_hex(dir / "s3" / "batches.jsonl"));
}

TEST_CASE("a config file is equivalent to the same flags", "[cli]") {
  TempDir dir("cli-config");
  const fs::path manifest = dir / "manifest.jsonl";
  save_manifest(test::reference_corpus(), manifest);

  std::ofstream(dir / "run.ini") << "seed=9\nbatches=2\nbatch-size=5\n";

  REQUIRE(run_cli("sample --manifest " + q(manifest) + " --config " + q(dir / "run.ini") +
                      " --out " + q(dir / "from-config"),
                  dir.path())
              .exit_code == 0);
  REQUIRE(run_cli("sample --manifest " + q(manifest) +
                      " --seed 9 --batches 2 --batch-size 5 --out " + q(dir / "from-flags"),
                  dir.path())
              .exit_code == 0);

  CHECK(hash_file_hex(dir / "from-config" / "batches.jsonl") ==
        hash_file_hex(dir / "from-flags" / "batches.jsonl"));

  // Command-line flags override file values.
  REQUIRE(run_cli("sample --manifest " + q(manifest) + " --config " + q(dir / "run.ini") +
                      " --seed 11 --out " + q(dir / "override"),
                  dir.path())
              .exit_code == 0);
  nlohmann::json sidecar;
  std::ifstream(dir / "override" / "batches.jsonl.json") >> sidecar;
  CHECK(sidecar["rng"]["seed"] == 11);
}

TEST_CASE("validate reports findings without failing", "[cli]") {
  TempDir dir("cli-validate");
  const fs::path manifest = dir / "manifest.jsonl";
  save_manifest(test::reference_corpus(), manifest);

  const CliResult r = run_cli(
      "validate --manifest " + q(manifest) + " --out " + q(dir / "out"), dir.path());
  CHECK(r.exit_code == 0);
  nlohmann::json report;
  std::ifstream(dir / "out" / "validation.json") >> report;
  CHECK(report["ok"] == false);
  CHECK(report["missing_pairs"].size() == 10u);
}
