#include "focal/experiment.hpp"

#include <algorithm>

#include "focal/errors.hpp"
#include "focal/finetune.hpp"

namespace focal {

using nlohmann::json;

namespace {

json loss_json(const LossBreakdown& l) {
  return {{"shared", l.shared}, {"private", l.priv}, {"orthogonal", l.orthogonal}, {"temporal", l.temporal},
          {"total", l.total}};
}

void require_labels(const Dataset& d, const char* which) {
  if (!d.labeled()) throw InputError(std::string(which) + " data has no labels");
  if (d.signals.size() == 0) throw InputError(std::string(which) + " data is empty");
}

}  // namespace

DatasetSplits make_synthetic_splits(const RunConfig& cfg) {
  cfg.validate();
  const Dataset all = generate(cfg.synth_config());
  return split(all, cfg.data.split, cfg.data.synth.sequence_length, cfg.seeds.split, cfg.data.allow_empty_split);
}

Eigen::MatrixXd probe_features(const FocalModel& model, const RunConfig& cfg, const SignalSet& signals) {
  return extract_features(model, signals, cfg.intervals(signals), cfg.loss.private_enabled());
}

double knn_probe(const FocalModel& model, const RunConfig& cfg, const Dataset& train, const Dataset& eval) {
  require_labels(train, "train");
  require_labels(eval, "evaluation");
  const Eigen::MatrixXd a = probe_features(model, cfg, train.signals);
  const Eigen::MatrixXd b = probe_features(model, cfg, eval.signals);
  const auto pred = knn_classify(a, train.labels, b, cfg.eval.knn_k);
  long hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == eval.labels[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

void continue_pretrain(TrainState& state, PretrainRun* run, const RunConfig& cfg, const Dataset& train,
                       const Dataset* val, const PretrainOptions& options) {
  const PretrainConfig pc = cfg.pretrain_config(train.signals);
  const int until = options.until_epoch < 0 ? cfg.schedule.epochs : options.until_epoch;
  PretrainHooks hooks;
  if (options.metrics) {
    hooks.on_step = [&](const StepRecord& r) {
      options.metrics->write({{"type", "step"}, {"epoch", r.epoch}, {"step", r.step}, {"lr", r.lr},
                              {"loss", loss_json(r.loss)}});
    };
  }
  // The probe peeks at labels of the training split, which pretraining itself never sees.
  if (val && val->labeled() && train.labeled()) {
    hooks.probe = [&](const FocalModel& m) { return knn_probe(m, cfg, train, *val); };
    hooks.on_probe = [&](int epoch, double acc) {
      if (run) run->probe_curve.emplace_back(epoch, acc);
      if (options.metrics) options.metrics->write({{"type", "probe"}, {"epoch", epoch}, {"knn_accuracy", acc}});
    };
  }
  hooks.on_epoch_end = options.on_epoch_end;
  pretrain(state, train.signals, pc, until, hooks);
}

PretrainRun run_pretrain(const RunConfig& cfg, const Dataset& train, const Dataset* val,
                         const PretrainOptions& options) {
  PretrainRun run{init_training(train.signals, cfg.pretrain_config(train.signals), cfg.seeds.train), {}};
  continue_pretrain(run.state, &run, cfg, train, val, options);
  return run;
}

LinearProbeScores linear_probe(const Eigen::MatrixXd& train_features, std::span<const int> train_labels,
                               const Eigen::MatrixXd& test_features, std::span<const int> test_labels,
                               int num_classes, const RunConfig& cfg, double label_ratio, std::uint64_t seed) {
  const FinetuneResult fit =
      finetune_linear(train_features, train_labels, num_classes, label_ratio, cfg.finetune_config(), seed);
  const auto pred = fit.classifier.predict(test_features);
  const auto scores = accuracy_macro_f1(ConfusionCounts::from_labels(test_labels, pred, num_classes));
  LinearProbeScores out;
  out.accuracy = scores.accuracy;
  out.macro_f1 = scores.macro_f1;
  out.correlated_accuracy = num_classes >= 2 ? correlated_accuracy(test_labels, pred, num_classes) : 1.0;
  out.dropped_classes = fit.dropped_classes;
  return out;
}

EvaluationReport evaluate_model(const FocalModel& model, const RunConfig& cfg, const Dataset& train,
                                const Dataset& test, double label_ratio) {
  require_labels(train, "train");
  require_labels(test, "test");
  const int classes = std::max({train.num_classes, test.num_classes,
                                1 + *std::max_element(train.labels.begin(), train.labels.end()),
                                1 + *std::max_element(test.labels.begin(), test.labels.end())});
  const Eigen::MatrixXd ftrain = probe_features(model, cfg, train.signals);
  const Eigen::MatrixXd ftest = probe_features(model, cfg, test.signals);

  EvaluationReport r;
  r.label_ratio = label_ratio;
  const auto lp = linear_probe(ftrain, train.labels, ftest, test.labels, classes, cfg, label_ratio, cfg.seeds.finetune);
  r.accuracy = lp.accuracy;
  r.macro_f1 = lp.macro_f1;
  r.correlated_accuracy = lp.correlated_accuracy;

  const auto knn = knn_classify(ftrain, train.labels, ftest, cfg.eval.knn_k);
  r.knn_accuracy = accuracy_macro_f1(ConfusionCounts::from_labels(test.labels, knn, classes)).accuracy;

  FeatureSpace space = cfg.eval.cluster_features;
  if (!cfg.loss.private_enabled() && space == FeatureSpace::Concat) space = FeatureSpace::Shared;
  const auto per_modality = modality_features(model, test.signals, cfg.intervals(test.signals), space);
  for (std::size_t j = 0; j < per_modality.size(); ++j) {
    const auto clusters = kmeans(per_modality[j], classes, cfg.seeds.eval + j, cfg.eval.kmeans);
    r.ari_per_modality.push_back(adjusted_rand_index(test.labels, clusters.labels));
    r.nmi_per_modality.push_back(normalized_mutual_information(test.labels, clusters.labels));
  }
  const auto ari = mean_std(r.ari_per_modality);
  const auto nmi = mean_std(r.nmi_per_modality);
  r.ari = ari.mean;
  r.ari_std = ari.std;
  r.nmi = nmi.mean;
  r.nmi_std = nmi.std;
  return r;
}

json EvaluationReport::to_json() const {
  return {{"accuracy", accuracy},
          {"macro_f1", macro_f1},
          {"knn_accuracy", knn_accuracy},
          {"ari", ari},
          {"nmi", nmi},
          {"correlated_accuracy", correlated_accuracy},
          {"ari_std", ari_std},
          {"nmi_std", nmi_std},
          {"ari_per_modality", ari_per_modality},
          {"nmi_per_modality", nmi_per_modality},
          {"label_ratio", label_ratio}};
}

ReportTable EvaluationReport::to_table() const {
  ReportTable t{{"metric", "value"}, {}};
  t.add_row({"accuracy", format_metric(accuracy)});
  t.add_row({"macro_f1", format_metric(macro_f1)});
  t.add_row({"knn_accuracy", format_metric(knn_accuracy)});
  t.add_row({"ari", format_mean_std(ari, ari_std)});
  t.add_row({"nmi", format_mean_std(nmi, nmi_std)});
  t.add_row({"correlated_accuracy", format_metric(correlated_accuracy)});
  t.add_row({"label_ratio", format_metric(label_ratio)});
  return t;
}

std::vector<LabelRatioRow> label_ratio_sweep(const FocalModel& model, const RunConfig& cfg, const Dataset& train,
                                             const Dataset& test, const std::vector<double>& ratios) {
  require_labels(train, "train");
  require_labels(test, "test");
  const int classes = std::max(train.num_classes, test.num_classes);
  const Eigen::MatrixXd ftrain = probe_features(model, cfg, train.signals);
  const Eigen::MatrixXd ftest = probe_features(model, cfg, test.signals);
  std::vector<LabelRatioRow> rows;
  for (double ratio : ratios) {
    LabelRatioRow row;
    row.label_ratio = ratio;
    for (int run = 0; run < cfg.eval.finetune_runs; ++run) {
      const auto s = linear_probe(ftrain, train.labels, ftest, test.labels, classes, cfg, ratio,
                                  cfg.seeds.finetune + static_cast<std::uint64_t>(run));
      row.accuracies.push_back(s.accuracy);
      row.macro_f1s.push_back(s.macro_f1);
    }
    row.accuracy = mean_std(row.accuracies);
    row.macro_f1 = mean_std(row.macro_f1s);
    rows.push_back(std::move(row));
  }
  return rows;
}

json label_sweep_json(const std::vector<LabelRatioRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"label_ratio", r.label_ratio},
                   {"accuracy_mean", r.accuracy.mean},
                   {"accuracy_std", r.accuracy.std},
                   {"macro_f1_mean", r.macro_f1.mean},
                   {"macro_f1_std", r.macro_f1.std},
                   {"accuracies", r.accuracies},
                   {"macro_f1s", r.macro_f1s}});
  }
  return out;
}

ReportTable label_sweep_table(const std::vector<LabelRatioRow>& rows) {
  ReportTable t{{"label_ratio", "runs", "accuracy", "macro_f1"}, {}};
  for (const auto& r : rows) {
    t.add_row({format_metric(r.label_ratio), std::to_string(r.accuracies.size()),
               format_mean_std(r.accuracy.mean, r.accuracy.std), format_mean_std(r.macro_f1.mean, r.macro_f1.std)});
  }
  return t;
}

SweepReport loss_weight_sweep(const RunConfig& base, const DatasetSplits& data, const SweepGrid& grid,
                              const std::function<void(std::size_t, const SweepPoint&)>& progress) {
  if (grid.size() == 0) throw ConfigError("sweep grid is empty");
  SweepReport report;
  for (double lp : grid.lambda_p) {
    for (double lo : grid.lambda_o) {
      for (double lt : grid.lambda_t) {
        for (double m : grid.margin) {
          RunConfig cfg = base;
          cfg.loss.lambda_p = lp;
          cfg.loss.lambda_o = lo;
          cfg.loss.lambda_t = lt;
          cfg.loss.margin = m;
          cfg.eval.eval_every = 0;
          cfg.validate();
          const PretrainRun run = run_pretrain(cfg, data.train, nullptr);
          const Eigen::MatrixXd ftrain = probe_features(run.state.model, cfg, data.train.signals);
          const Eigen::MatrixXd ftest = probe_features(run.state.model, cfg, data.test.signals);
          const auto s = linear_probe(ftrain, data.train.labels, ftest, data.test.labels, data.train.num_classes, cfg,
                                      cfg.eval.label_ratio, cfg.seeds.finetune);
          SweepPoint point{lp, lo, lt, m, s.accuracy, s.macro_f1};
          report.points.push_back(point);
          if (progress) progress(report.points.size() - 1, point);
        }
      }
    }
  }
  const auto [lo, hi] = std::minmax_element(report.points.begin(), report.points.end(),
                                            [](const auto& a, const auto& b) { return a.accuracy < b.accuracy; });
  report.min_accuracy = lo->accuracy;
  report.max_accuracy = hi->accuracy;
  report.spread = hi->accuracy - lo->accuracy;
  double sum = 0.0;
  for (const auto& p : report.points) sum += p.accuracy;
  report.mean_accuracy = sum / static_cast<double>(report.points.size());
  return report;
}

json SweepReport::to_json() const {
  json pts = json::array();
  for (const auto& p : points) {
    pts.push_back({{"lambda_p", p.lambda_p},
                   {"lambda_o", p.lambda_o},
                   {"lambda_t", p.lambda_t},
                   {"margin", p.margin},
                   {"accuracy", p.accuracy},
                   {"macro_f1", p.macro_f1}});
  }
  return {{"points", pts},
          {"grid_size", points.size()},
          {"min_accuracy", min_accuracy},
          {"max_accuracy", max_accuracy},
          {"mean_accuracy", mean_accuracy},
          {"accuracy_spread", spread}};
}

ReportTable SweepReport::to_table() const {
  ReportTable t{{"lambda_p", "lambda_o", "lambda_t", "margin", "accuracy", "macro_f1"}, {}};
  for (const auto& p : points) {
    t.add_row({format_metric(p.lambda_p), format_metric(p.lambda_o), format_metric(p.lambda_t), format_metric(p.margin),
               format_metric(p.accuracy), format_metric(p.macro_f1)});
  }
  t.add_row({"spread", "", "", "", format_metric(spread), ""});
  return t;
}

}  // namespace focal
