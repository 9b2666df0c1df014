#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "focal/checkpoint.hpp"
#include "focal/config.hpp"
#include "focal/evaluation.hpp"
#include "focal/report.hpp"

namespace focal {

/// Generates the synthetic dataset described by `cfg.data` and splits it.
DatasetSplits make_synthetic_splits(const RunConfig& cfg);

/// Downstream features: per-modality shared embeddings, followed by the private
/// ones when the objective trains a private space.
Eigen::MatrixXd probe_features(const FocalModel& model, const RunConfig& cfg, const SignalSet& signals);

/// KNN accuracy of `eval` against `train` in probe feature space.
double knn_probe(const FocalModel& model, const RunConfig& cfg, const Dataset& train, const Dataset& eval);

struct PretrainRun {
  TrainState state;
  std::vector<std::pair<int, double>> probe_curve;  // (epoch, KNN accuracy on val)
};

struct PretrainOptions {
  int until_epoch = -1;  // -1 runs the whole schedule
  MetricsWriter* metrics = nullptr;
  // Invoked after each epoch, e.g. to write periodic checkpoints.
  std::function<void(const TrainState&)> on_epoch_end;
};

/// Pretrains on the unlabeled train signals. When eval.eval_every > 0 and `val`
/// is labeled, the KNN probe runs every eval_every epochs.
PretrainRun run_pretrain(const RunConfig& cfg, const Dataset& train, const Dataset* val,
                         const PretrainOptions& options = {});

/// Continues an existing state up to `until_epoch`.
void continue_pretrain(TrainState& state, PretrainRun* run, const RunConfig& cfg, const Dataset& train,
                       const Dataset* val, const PretrainOptions& options);

struct LinearProbeScores {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double correlated_accuracy = 0.0;
  std::vector<int> dropped_classes;
};

/// Linear probe trained on a stratified label_ratio subset of `train`, scored on `test`.
LinearProbeScores linear_probe(const Eigen::MatrixXd& train_features, std::span<const int> train_labels,
                               const Eigen::MatrixXd& test_features, std::span<const int> test_labels,
                               int num_classes, const RunConfig& cfg, double label_ratio, std::uint64_t seed);

struct EvaluationReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double correlated_accuracy = 0.0;
  double knn_accuracy = 0.0;
  double ari = 0.0;  // mean over modalities
  double nmi = 0.0;
  double ari_std = 0.0;
  double nmi_std = 0.0;
  std::vector<double> ari_per_modality;
  std::vector<double> nmi_per_modality;
  double label_ratio = 1.0;

  nlohmann::json to_json() const;
  ReportTable to_table() const;
};

/// Linear probe, KNN and per-modality K-means clustering on `test`.
EvaluationReport evaluate_model(const FocalModel& model, const RunConfig& cfg, const Dataset& train,
                                const Dataset& test, double label_ratio);

struct LabelRatioRow {
  double label_ratio = 0.0;
  std::vector<double> accuracies;
  std::vector<double> macro_f1s;
  MeanStd accuracy;
  MeanStd macro_f1;
};

/// Linear probing at each label ratio, repeated eval.finetune_runs times with
/// different label subsets and seeds.
std::vector<LabelRatioRow> label_ratio_sweep(const FocalModel& model, const RunConfig& cfg, const Dataset& train,
                                             const Dataset& test, const std::vector<double>& ratios);
nlohmann::json label_sweep_json(const std::vector<LabelRatioRow>& rows);
ReportTable label_sweep_table(const std::vector<LabelRatioRow>& rows);

struct SweepGrid {
  std::vector<double> lambda_p{0.5, 1.0, 2.0};
  std::vector<double> lambda_o{1.0, 3.0, 5.0};
  std::vector<double> lambda_t{0.5, 1.0, 2.0};
  std::vector<double> margin{0.5, 1.0, 2.0};

  std::size_t size() const { return lambda_p.size() * lambda_o.size() * lambda_t.size() * margin.size(); }
};

struct SweepPoint {
  double lambda_p = 0.0;
  double lambda_o = 0.0;
  double lambda_t = 0.0;
  double margin = 0.0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

struct SweepReport {
  std::vector<SweepPoint> points;
  double min_accuracy = 0.0;
  double max_accuracy = 0.0;
  double mean_accuracy = 0.0;
  double spread = 0.0;  // max - min

  nlohmann::json to_json() const;
  ReportTable to_table() const;
};

/// Pretrains and linear-probes once per grid point, all from the same seeds.
SweepReport loss_weight_sweep(const RunConfig& base, const DatasetSplits& data, const SweepGrid& grid,
                              const std::function<void(std::size_t, const SweepPoint&)>& progress = {});

}  // namespace focal
