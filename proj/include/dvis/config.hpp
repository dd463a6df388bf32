#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "dvis/discretize.hpp"
#include "dvis/losses.hpp"
#include "dvis/pipeline.hpp"
#include "dvis/sampling.hpp"
#include "dvis/synthgen.hpp"
#include "dvis/tinynet.hpp"
#include "dvis/trainer.hpp"
#include "dvis/verify.hpp"

namespace dvis {

using ojson = nlohmann::ordered_json;

// JSON bindings. Readers start from the defaults and override the keys that are
// present; an unknown key raises DomainError so typos do not pass silently.
ojson to_json(const LossConfig& c);
ojson to_json(const SamplerConfig& c);
ojson to_json(const NetConfig& c);
ojson to_json(const OptimizerConfig& c);
ojson to_json(const TrainConfig& c);
ojson to_json(const SceneConfig& c);
ojson to_json(const MeanShiftConfig& c);
ojson to_json(const VerifyConfig& c);
ojson to_json(const VerifierTrainConfig& c);
ojson to_json(const PipelineConfig& c);

void from_json(const nlohmann::json& j, LossConfig& c);
void from_json(const nlohmann::json& j, SamplerConfig& c);
void from_json(const nlohmann::json& j, NetConfig& c);
void from_json(const nlohmann::json& j, OptimizerConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void from_json(const nlohmann::json& j, SceneConfig& c);
void from_json(const nlohmann::json& j, MeanShiftConfig& c);
void from_json(const nlohmann::json& j, VerifyConfig& c);
void from_json(const nlohmann::json& j, VerifierTrainConfig& c);
void from_json(const nlohmann::json& j, PipelineConfig& c);

struct DatasetConfig {
  std::size_t train_count = 200;
  std::size_t test_count = 50;
  std::uint64_t test_first_index = 1000000;  // held-out scenes never overlap training indices
};

ojson to_json(const DatasetConfig& c);
void from_json(const nlohmann::json& j, DatasetConfig& c);

// Everything a CLI command may need; each command reads its own sections.
struct RunConfig {
  SceneConfig scene;
  DatasetConfig dataset;
  TrainConfig train;
  PipelineConfig pipeline;
  nlohmann::json paths = nlohmann::json::object();  // command-specific input paths
};

ojson to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);

// Applies "a.b.c=value" overrides; value is parsed as JSON when possible, else
// taken as a string. Throws DomainError on malformed input.
void apply_override(nlohmann::json& doc, const std::string& assignment);

}  // namespace dvis
