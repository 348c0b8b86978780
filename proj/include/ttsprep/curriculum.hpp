#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttsprep/errors.hpp"
#include "ttsprep/manifest.hpp"
#include "ttsprep/sampler.hpp"

namespace ttsprep {

struct InvalidPlan : Error {
  using Error::Error;
};

struct PlanExhausted : Error {
  using Error::Error;
};

struct UnknownStageSpeaker : Error {
  using Error::Error;
};

struct EmptyStage : Error {
  using Error::Error;
};

// Closed set of stage dataset filters. single_speaker restricts to the named
// speaker's neutral speech, so the default stages nest: one speaker's neutral
// subset, everyone's neutral subset, the whole corpus.
struct StageFilter {
  enum class Kind { single_speaker, neutral_only, all };
  Kind kind = Kind::all;
  std::string speaker;  // meaningful only for single_speaker

  bool matches(const Utterance& u) const {
    switch (kind) {
      case Kind::single_speaker:
        return u.speaker == speaker && u.emotion == Emotion::neutral;
      case Kind::neutral_only:
        return u.emotion == Emotion::neutral;
      case Kind::all:
        return true;
    }
    return false;
  }

  friend bool operator==(const StageFilter&, const StageFilter&) = default;
};

struct Stage {
  std::string name;
  StageFilter filter;
  std::int64_t iterations = 0;

  friend bool operator==(const Stage&, const Stage&) = default;
};

struct OptimizerSpec {
  std::string algorithm = "adam";
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-6;
  double weight_decay = 1e-6;

  friend bool operator==(const OptimizerSpec&, const OptimizerSpec&) = default;
};

struct BatchSpec {
  int size = 0;
  int devices = 0;

  friend bool operator==(const BatchSpec&, const BatchSpec&) = default;
};

// Inert metadata for downstream trainers: this toolkit schedules data, it
// does not compute gradients.
struct TrainingPlan {
  std::vector<Stage> stages;

  OptimizerSpec acoustic_optimizer;
  double grad_clip_norm = 1.0;
  BatchSpec acoustic_batch{64, 4};

  OptimizerSpec vocoder_optimizer;
  BatchSpec vocoder_batch{24, 3};
  std::int64_t vocoder_iterations = 400000;
  ClipSpec vocoder_clip;

  double z_sigma_train = 1.0;
  double z_sigma_infer = 0.75;

  bool manual_advance = false;
  bool reset_optimizer_on_stage = false;

  friend bool operator==(const TrainingPlan&, const TrainingPlan&) = default;

  void validate() const {
    if (stages.empty()) throw InvalidPlan("plan has no stages");
    for (const Stage& s : stages)
      if (s.iterations <= 0) throw InvalidPlan("stage \"" + s.name + "\" has no iterations");
    if (grad_clip_norm <= 0 || acoustic_batch.size <= 0 || acoustic_batch.devices <= 0 ||
        vocoder_batch.size <= 0 || vocoder_batch.devices <= 0 || vocoder_iterations <= 0 ||
        vocoder_clip.clip_frames <= 0 || z_sigma_train <= 0 || z_sigma_infer <= 0 ||
        acoustic_optimizer.lr <= 0 || vocoder_optimizer.lr <= 0)
      throw InvalidPlan("plan metadata must be positive");
  }

  std::int64_t total_iterations() const {
    std::int64_t total = 0;
    for (const Stage& s : stages) total += s.iterations;
    return total;
  }

  // Cumulative stage ends: the default plan yields 20000, 50000, 115000.
  std::vector<std::int64_t> boundaries() const {
    std::vector<std::int64_t> b;
    std::int64_t acc = 0;
    for (const Stage& s : stages) b.push_back(acc += s.iterations);
    return b;
  }
};

inline TrainingPlan default_plan() {
  TrainingPlan plan;
  plan.stages = {
      {"single-speaker-neutral", {StageFilter::Kind::single_speaker, "kss-f"}, 20000},
      {"multi-speaker-neutral", {StageFilter::Kind::neutral_only, ""}, 30000},
      {"multi-speaker-emotional", {StageFilter::Kind::all, ""}, 65000},
  };
  plan.vocoder_optimizer.lr = 1e-4;
  return plan;
}

// Index of the stage whose half-open cumulative interval contains the
// iteration: [0, 20000) -> 0, [20000, 50000) -> 1, [50000, 115000) -> 2.
inline std::size_t stage_at(const TrainingPlan& plan, std::int64_t iteration) {
  if (iteration < 0) throw InvalidPlan("iteration must be non-negative");
  std::int64_t acc = 0;
  for (std::size_t i = 0; i < plan.stages.size(); ++i) {
    acc += plan.stages[i].iterations;
    if (iteration < acc) return i;
  }
  throw PlanExhausted("iteration " + std::to_string(iteration) + " is past the plan's " +
                      std::to_string(acc) + " total iterations");
}

// Per-stage sub-manifests. Every stage of the default plan is contained in
// the next; the final stage is the corpus itself.
inline std::vector<CorpusManifest> materialize(const TrainingPlan& plan,
                                               const CorpusManifest& corpus) {
  plan.validate();
  for (const Stage& s : plan.stages)
    if (s.filter.kind == StageFilter::Kind::single_speaker) {
      const auto& speakers = corpus.speakers();
      if (std::find(speakers.begin(), speakers.end(), s.filter.speaker) == speakers.end())
        throw UnknownStageSpeaker("stage \"" + s.name + "\" names speaker \"" + s.filter.speaker +
                                  "\" which the corpus does not contain");
    }
  std::vector<CorpusManifest> result;
  result.reserve(plan.stages.size());
  for (const Stage& s : plan.stages) {
    CorpusManifest sub;
    sub.sample_rate = corpus.sample_rate;
    for (const Utterance& u : corpus.utterances())
      if (s.filter.matches(u)) sub.add(u);
    if (sub.empty()) throw EmptyStage("stage \"" + s.name + "\" matches no utterances");
    result.push_back(std::move(sub));
  }
  return result;
}

// ---------------------------------------------------------------------------
// JSON serialization (single document; values roundtrip bit-exactly)
// ---------------------------------------------------------------------------

namespace detail {

inline std::string filter_kind_name(StageFilter::Kind k) {
  switch (k) {
    case StageFilter::Kind::single_speaker: return "single_speaker";
    case StageFilter::Kind::neutral_only: return "neutral_only";
    case StageFilter::Kind::all: return "all";
  }
  return "all";
}

inline StageFilter::Kind parse_filter_kind(const std::string& s) {
  if (s == "single_speaker") return StageFilter::Kind::single_speaker;
  if (s == "neutral_only") return StageFilter::Kind::neutral_only;
  if (s == "all") return StageFilter::Kind::all;
  throw InvalidPlan("unknown stage filter kind \"" + s + "\"");
}

inline nlohmann::json optimizer_to_json(const OptimizerSpec& o) {
  return {{"algorithm", o.algorithm}, {"lr", o.lr},           {"beta1", o.beta1},
          {"beta2", o.beta2},         {"epsilon", o.epsilon}, {"weight_decay", o.weight_decay}};
}

inline OptimizerSpec optimizer_from_json(const nlohmann::json& j) {
  OptimizerSpec o;
  o.algorithm = j.at("algorithm").get<std::string>();
  o.lr = j.at("lr").get<double>();
  o.beta1 = j.at("beta1").get<double>();
  o.beta2 = j.at("beta2").get<double>();
  o.epsilon = j.at("epsilon").get<double>();
  o.weight_decay = j.at("weight_decay").get<double>();
  return o;
}

}  // namespace detail

inline nlohmann::json plan_to_json(const TrainingPlan& plan) {
  nlohmann::json j;
  j["stages"] = nlohmann::json::array();
  for (const Stage& s : plan.stages) {
    nlohmann::json stage;
    stage["name"] = s.name;
    stage["filter"]["kind"] = detail::filter_kind_name(s.filter.kind);
    if (s.filter.kind == StageFilter::Kind::single_speaker)
      stage["filter"]["speaker"] = s.filter.speaker;
    stage["iterations"] = s.iterations;
    j["stages"].push_back(std::move(stage));
  }
  j["boundaries"] = plan.boundaries();
  j["total_iterations"] = plan.total_iterations();
  j["acoustic"] = {{"optimizer", detail::optimizer_to_json(plan.acoustic_optimizer)},
                   {"grad_clip_norm", plan.grad_clip_norm},
                   {"batch_size", plan.acoustic_batch.size},
                   {"devices", plan.acoustic_batch.devices}};
  j["vocoder"] = {{"optimizer", detail::optimizer_to_json(plan.vocoder_optimizer)},
                  {"batch_size", plan.vocoder_batch.size},
                  {"devices", plan.vocoder_batch.devices},
                  {"iterations", plan.vocoder_iterations},
                  {"clip_frames", plan.vocoder_clip.clip_frames}};
  j["z_sigma"] = {{"train", plan.z_sigma_train}, {"infer", plan.z_sigma_infer}};
  j["manual_advance"] = plan.manual_advance;
  j["reset_optimizer_on_stage"] = plan.reset_optimizer_on_stage;
  return j;
}

inline TrainingPlan plan_from_json(const nlohmann::json& j) {
  TrainingPlan plan;
  plan.stages.clear();
  for (const nlohmann::json& stage : j.at("stages")) {
    Stage s;
    s.name = stage.at("name").get<std::string>();
    s.filter.kind = detail::parse_filter_kind(stage.at("filter").at("kind").get<std::string>());
    if (s.filter.kind == StageFilter::Kind::single_speaker)
      s.filter.speaker = stage.at("filter").at("speaker").get<std::string>();
    s.iterations = stage.at("iterations").get<std::int64_t>();
    plan.stages.push_back(std::move(s));
  }
  const auto& acoustic = j.at("acoustic");
  plan.acoustic_optimizer = detail::optimizer_from_json(acoustic.at("optimizer"));
  plan.grad_clip_norm = acoustic.at("grad_clip_norm").get<double>();
  plan.acoustic_batch = {acoustic.at("batch_size").get<int>(), acoustic.at("devices").get<int>()};
  const auto& vocoder = j.at("vocoder");
  plan.vocoder_optimizer = detail::optimizer_from_json(vocoder.at("optimizer"));
  plan.vocoder_batch = {vocoder.at("batch_size").get<int>(), vocoder.at("devices").get<int>()};
  plan.vocoder_iterations = vocoder.at("iterations").get<std::int64_t>();
  plan.vocoder_clip.clip_frames = vocoder.at("clip_frames").get<std::int64_t>();
  plan.z_sigma_train = j.at("z_sigma").at("train").get<double>();
  plan.z_sigma_infer = j.at("z_sigma").at("infer").get<double>();
  plan.manual_advance = j.at("manual_advance").get<bool>();
  plan.reset_optimizer_on_stage = j.at("reset_optimizer_on_stage").get<bool>();
  plan.validate();
  return plan;
}

}  // namespace ttsprep
