#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "focal/nn.hpp"

namespace focal {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  // true: AdamW (decay applied to the weights); false: L2 term added to the gradient.
  bool decoupled = true;
};

struct OptimizerState {
  std::vector<Eigen::MatrixXd> m;
  std::vector<Eigen::MatrixXd> v;
  long step = 0;
};

OptimizerState make_optimizer_state(std::span<const Parameter* const> params);
OptimizerState make_optimizer_state(std::span<Parameter* const> params);

/// One Adam/AdamW update with bias correction. Throws TrainingError naming the
/// parameter if a gradient is not finite; parameters are untouched in that case.
void adam_step(std::span<Parameter* const> params, OptimizerState& state, const AdamConfig& cfg, double lr);

struct CosineSchedule {
  double max_lr = 1e-4;
  double min_lr = 1e-7;
  int total_epochs = 200;

  void validate() const;
};

/// min + (max - min) * (1 + cos(pi * epoch / total)) / 2.
double cosine_lr(double epoch, const CosineSchedule& cfg);

struct StepSchedule {
  double start_lr = 1e-3;
  double decay = 0.2;
  int period = 50;

  void validate() const;
};

/// start * decay^(floor(epoch / period)).
double step_lr(int epoch, const StepSchedule& cfg);

}  // namespace focal
