// Command-line front end: prep | mel | text | stats | plan | sample | validate.
// Exit codes: 0 success, 1 partial or total failure, 2 invalid invocation.

#include <algorithm>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ttsprep/pipeline.hpp"
#include "ttsprep/version.hpp"

namespace {

struct CliOptions {
  ttsprep::PipelineConfig config;
  std::string config_file;
  std::string manifest;
  std::string out = ".";
  std::size_t batches = 1;
  std::size_t batch_size = 64;
  bool have_manifest = false;
};

// Options shared by every subcommand. --manifest is enforced after config
// expansion so a config file may supply it.
void add_common(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--config", opt.config_file, "Configuration file (INI key=value)");
  cmd->add_option("--manifest", opt.manifest, "Input manifest (JSONL)");
  cmd->add_option("--out", opt.out, "Output directory");
  cmd->add_option("--workers", opt.config.workers, "Parallel worker count")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", opt.config.seed, "Random seed");
}

// Config keys are the option names without the leading dashes; [section] keys
// join with '.' (so "[vad] frame-ms" reaches --vad.frame-ms). Options already
// given on the command line win. Unknown keys are ignored so one file can
// serve several subcommands. Returns the extra arguments to parse.
std::vector<std::string> config_as_args(const CLI::App& sub, const std::string& path) {
  std::vector<std::string> extra;
  for (const CLI::ConfigItem& item : CLI::ConfigINI{}.from_file(path)) {
    const CLI::Option* op = sub.get_option_no_throw("--" + item.fullname());
    if (op == nullptr || op->count() > 0) continue;
    extra.push_back("--" + item.fullname());
    extra.insert(extra.end(), item.inputs.begin(), item.inputs.end());
  }
  return extra;
}

void add_vad(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--aggressiveness", opt.config.vad.aggressiveness,
                  "Silence-removal aggressiveness (0-3)")
      ->check(CLI::Range(0, 3));
  cmd->add_option("--vad.frame-ms", opt.config.vad.frame_ms, "VAD frame length (10/20/30 ms)");
  cmd->add_option("--vad.padding-ms", opt.config.vad.padding_ms, "VAD padding collar (ms)");
  cmd->add_option("--vad.trigger-ratio", opt.config.vad.trigger_ratio,
                  "Voiced ratio that opens/closes a segment");
}

void add_features(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--spectrogram.n-fft", opt.config.spectrogram.n_fft, "FFT size");
  cmd->add_option("--spectrogram.hop", opt.config.spectrogram.hop, "Hop length (samples)");
  cmd->add_option("--spectrogram.win-length", opt.config.spectrogram.win_length, "Window length");
  cmd->add_option("--mel.n-mels", opt.config.mel.n_mels, "Mel channel count");
  cmd->add_option("--mel.fmin", opt.config.mel.fmin, "Lowest filter frequency (Hz)");
  cmd->add_option("--mel.fmax", opt.config.mel.fmax, "Highest filter frequency (Hz)");
  cmd->add_option("--mel.clip-floor", opt.config.mel.clip_floor, "Magnitude floor before log");
}

void add_clip(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--clip-frames", opt.config.clip.clip_frames,
                  "Vocoder clip length in mel frames")
      ->check(CLI::PositiveNumber);
}

int finish(const ttsprep::RunResult& result) {
  if (!result.ok()) {
    for (const auto& f : result.failures)
      std::fprintf(stderr, "failed: %s: %s\n", f.id.c_str(), f.message.c_str());
    std::fprintf(stderr, "%zu of %zu items failed\n", result.failures.size(), result.attempted);
    return 1;
  }
  std::fprintf(stderr, "ok: %zu items\n", result.succeeded);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(ttsprep::kToolName) + " " + std::string(ttsprep::kVersion) +
               " - speech corpus preparation and training schedules"};
  app.require_subcommand(1);
  CliOptions opt;

  auto* prep = app.add_subcommand("prep", "Remove silence and resample to 22,050 Hz");
  add_common(prep, opt);
  add_vad(prep, opt);
  add_features(prep, opt);  // hop feeds the predicted frame counts

  auto* mel = app.add_subcommand("mel", "Compute log-mel spectrograms (MEL1 files)");
  add_common(mel, opt);
  add_features(mel, opt);

  auto* text = app.add_subcommand("text", "Convert transcripts to grapheme ids");
  add_common(text, opt);

  auto* stats = app.add_subcommand("stats", "Corpus duration table and conditioning contract");
  add_common(stats, opt);

  auto* plan = app.add_subcommand("plan", "Write the staged training plan");
  add_common(plan, opt);
  add_clip(plan, opt);

  auto* sample = app.add_subcommand("sample", "Draw balanced training batches");
  add_common(sample, opt);
  add_clip(sample, opt);
  sample->add_option("--batches", opt.batches, "Number of batches to draw")
      ->check(CLI::PositiveNumber);
  sample->add_option("--batch-size", opt.batch_size, "Draws per batch")
      ->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "Report training-readiness problems");
  add_common(validate, opt);
  add_clip(validate, opt);

  try {
    app.parse(argc, argv);
    if (!opt.config_file.empty()) {
      std::vector<std::string> extra =
          config_as_args(*app.get_subcommands().front(), opt.config_file);
      if (!extra.empty()) {
        // Re-parse with the config values appended behind the original
        // arguments; parse() expects the vector reversed.
        std::vector<std::string> args(argv + 1, argv + argc);
        args.insert(args.end(), extra.begin(), extra.end());
        std::reverse(args.begin(), args.end());
        app.parse(args);
      }
    }
  } catch (const CLI::ParseError& e) {
    // Help output is a successful invocation; anything else is usage error.
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const bool needs_manifest = !plan->parsed();
  if (needs_manifest && opt.manifest.empty()) {
    std::fprintf(stderr, "error: --manifest is required\n");
    return 2;
  }

  opt.config.manifest_path = opt.manifest;
  opt.config.out_dir = opt.out;
  opt.have_manifest = !opt.manifest.empty();

  try {
    if (prep->parsed()) return finish(ttsprep::run_prep(opt.config));
    if (mel->parsed()) return finish(ttsprep::run_mel(opt.config));
    if (text->parsed()) return finish(ttsprep::run_text(opt.config));
    if (stats->parsed()) return finish(ttsprep::run_stats(opt.config));
    if (plan->parsed()) return finish(ttsprep::run_plan(opt.config, opt.have_manifest));
    if (sample->parsed())
      return finish(ttsprep::run_sample(opt.config, opt.batches, opt.batch_size));
    if (validate->parsed()) return finish(ttsprep::run_validate(opt.config));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
