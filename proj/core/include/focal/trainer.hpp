#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "focal/augmentation.hpp"
#include "focal/batching.hpp"
#include "focal/dataset.hpp"
#include "focal/nn.hpp"
#include "focal/objectives.hpp"
#include "focal/optim.hpp"

namespace focal {

struct PretrainConfig {
  std::vector<IntervalConfig> intervals;  // one per modality
  AugmentationPolicy augmentation;
  EncoderConfig encoder;
  LossConfig loss;
  AdamConfig optimizer{.weight_decay = 0.05};
  CosineSchedule schedule;
  int sequence_length = 4;
  int batch_sequences = 64;
  int eval_every = 0;  // epochs between probes, 0 disables

  void validate(std::size_t modalities) const;
};

struct TrainState {
  FocalModel model;
  OptimizerState optimizer;
  Rng rng;
  int epoch = 0;  // completed epochs
  long step = 0;
};

struct StepRecord {
  long step = 0;
  int epoch = 0;
  double lr = 0.0;
  LossBreakdown loss;
};

struct PretrainHooks {
  std::function<void(const StepRecord&)> on_step;
  // Called after every `eval_every` completed epochs with the model in its
  // current state; the returned accuracy is passed to on_probe.
  std::function<double(const FocalModel&)> probe;
  std::function<void(int epoch, double accuracy)> on_probe;
  std::function<void(const TrainState&)> on_epoch_end;
};

/// Encoder input geometry for every modality of `signals` under `intervals`.
std::vector<ModalityShape> modality_shapes(const SignalSet& signals, std::span<const IntervalConfig> intervals);

/// Fresh model, optimizer and rng. Two runs with the same seed are identical.
TrainState init_training(const SignalSet& signals, const PretrainConfig& cfg, std::uint64_t seed);

/// Forward pass of every modality and view for a batch, loss evaluation, and
/// gradient accumulation into the model. Returns the loss breakdown.
LossBreakdown batch_loss_and_gradients(FocalModel& model, const std::array<std::vector<std::vector<ModalitySample>>, 2>& views,
                                       std::span<const int> seq_of, const LossConfig& loss);

/// Runs epochs [state.epoch, until_epoch). Label-free: only the signals are
/// visible here. On a non-finite loss or gradient the state is rolled back to
/// the start of the failing epoch and TrainingError is thrown.
void pretrain(TrainState& state, const SignalSet& signals, const PretrainConfig& cfg, int until_epoch,
              const PretrainHooks& hooks = {});

/// Concatenated per-modality projected embeddings of clean (unaugmented)
/// samples, one column per sample. `include_private` appends each modality's
/// private embedding after its shared one.
Eigen::MatrixXd extract_features(const FocalModel& model, const SignalSet& signals,
                                 std::span<const IntervalConfig> intervals, bool include_private);

enum class FeatureSpace { Concat, Shared, Private };

/// Per-modality embeddings of clean samples, one matrix per modality.
std::vector<Eigen::MatrixXd> modality_features(const FocalModel& model, const SignalSet& signals,
                                               std::span<const IntervalConfig> intervals, FeatureSpace space);

}  // namespace focal
