#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "focal/optim.hpp"

namespace focal {

struct FinetuneConfig {
  StepSchedule schedule;  // Adam, lr 1e-3 decayed by 0.2 every 50 epochs
  int epochs = 200;
  int batch_size = 64;
  double weight_decay = 0.0;

  void validate() const;
};

/// Softmax regression on standardized frozen features.
struct LinearClassifier {
  Eigen::MatrixXd weight;  // classes x dims
  Eigen::VectorXd bias;
  Eigen::VectorXd mean;
  Eigen::VectorXd inv_std;

  int num_classes() const { return static_cast<int>(weight.rows()); }
  Eigen::MatrixXd logits(const Eigen::MatrixXd& features) const;
  std::vector<int> predict(const Eigen::MatrixXd& features) const;
};

struct FinetuneResult {
  LinearClassifier classifier;
  double train_accuracy = 0.0;
  std::vector<std::size_t> used;          // indices of the labeled subset
  std::vector<int> dropped_classes;       // classes absent from the subset
};

/// Per-class random subset of round(ratio * n_c) samples (at least one when the
/// class has any and ratio * n_c >= 0.5). Sorted indices.
std::vector<std::size_t> stratified_subsample(std::span<const int> labels, int num_classes, double ratio,
                                              std::uint64_t seed);

/// Trains a linear layer with softmax cross-entropy on `features` (dims x N)
/// restricted to a stratified `label_ratio` subset. Classes missing from the
/// subset keep their output row but receive no positive examples.
FinetuneResult finetune_linear(const Eigen::MatrixXd& features, std::span<const int> labels, int num_classes,
                               double label_ratio, const FinetuneConfig& cfg, std::uint64_t seed);

}  // namespace focal
