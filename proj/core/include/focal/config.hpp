#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "focal/finetune.hpp"
#include "focal/evaluation.hpp"
#include "focal/synthetic.hpp"
#include "focal/trainer.hpp"

namespace focal {

struct DataSection {
  SynthConfig synth;  // interval_len and seed are taken from pipeline / seeds
  std::array<double, 3> split{0.8, 0.1, 0.1};
  bool allow_empty_split = false;
  int batch_sequences = 64;
};

struct PipelineSection {
  IntervalConfig defaults;
  std::map<std::string, IntervalConfig> overrides;  // keyed by modality id

  IntervalConfig for_modality(const std::string& id) const;
};

struct OptimizerSection {
  AdamConfig pretrain{.weight_decay = 0.05};
  double finetune_lr = 1e-3;
  double finetune_weight_decay = 0.0;
  int finetune_batch_size = 64;
};

struct ScheduleSection {
  int epochs = 200;
  double max_lr = 1e-4;
  double min_lr = 1e-7;
  int finetune_epochs = 200;
  double finetune_decay = 0.2;
  int finetune_period = 50;
};

struct EvalSection {
  int knn_k = 5;
  int eval_every = 0;
  double label_ratio = 1.0;
  int finetune_runs = 5;
  KMeansOptions kmeans;
  FeatureSpace cluster_features = FeatureSpace::Concat;
};

struct SeedSection {
  std::uint64_t data = 1;
  std::uint64_t split = 2;
  std::uint64_t train = 3;
  std::uint64_t finetune = 4;
  std::uint64_t eval = 5;
};

/// Complete run description. Every field has a default; a config file only
/// needs the keys it changes. Unknown keys are rejected.
struct RunConfig {
  DataSection data;
  PipelineSection pipeline;
  AugmentationPolicy augmentation;
  EncoderConfig encoder;
  LossConfig loss;
  OptimizerSection optimizer;
  ScheduleSection schedule;
  EvalSection eval;
  SeedSection seeds;

  void validate() const;

  SynthConfig synth_config() const;
  PretrainConfig pretrain_config(const SignalSet& signals) const;
  FinetuneConfig finetune_config() const;
  std::vector<IntervalConfig> intervals(const SignalSet& signals) const;

  /// Sets every seed from one value (seeds.data = s, seeds.split = s + 1, ...).
  void reseed(std::uint64_t seed);
};

std::string_view to_string(FeatureSpace space);
FeatureSpace parse_feature_space(std::string_view name);

/// Throws ConfigError naming the offending key path.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& cfg);

RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& cfg, const std::filesystem::path& path);

}  // namespace focal
