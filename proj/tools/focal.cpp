// focal: command-line front end for data generation, pretraining, evaluation,
// gradient checking and the loss-weight sweep.
//
// Exit codes: 0 success, 1 a check failed (or training diverged), 2 usage,
// configuration, input or persistence error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "focal/checkpoint.hpp"
#include "focal/config.hpp"
#include "focal/dataset_dir.hpp"
#include "focal/errors.hpp"
#include "focal/experiment.hpp"
#include "focal/loss_check.hpp"
#include "focal/report.hpp"

namespace fs = std::filesystem;
using namespace focal;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string data;
  std::string ckpt;
};

RunConfig resolve_config(const CommonOptions& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.seed) cfg.reseed(*o.seed);
  cfg.validate();
  return cfg;
}

// --data points at a gendata directory; without it the dataset is generated
// in memory from the config.
DatasetSplits resolve_data(const CommonOptions& o, const RunConfig& cfg) {
  if (!o.data.empty()) return read_dataset_dir(o.data);
  return make_synthetic_splits(cfg);
}

fs::path require_out(const CommonOptions& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) throw PersistenceError("cannot create " + o.out + ": " + ec.message());
  return o.out;
}

int cmd_gendata(const CommonOptions& o) {
  const RunConfig cfg = resolve_config(o);
  const fs::path out = require_out(o);
  const DatasetSplits splits = make_synthetic_splits(cfg);
  write_dataset_dir(out, splits, cfg);
  std::printf("wrote %zu/%zu/%zu samples (train/val/test) to %s\n", splits.train.signals.size(),
              splits.val.signals.size(), splits.test.signals.size(), out.c_str());
  return kExitOk;
}

int cmd_pretrain(const CommonOptions& o, int epochs, int checkpoint_every) {
  const fs::path out = require_out(o);
  std::optional<LoadedCheckpoint> resumed;
  RunConfig cfg;
  if (!o.ckpt.empty()) {
    resumed = load_checkpoint(o.ckpt);
    cfg = resumed->config;
    if (!o.config.empty() || o.seed) throw UsageError("--config and --seed cannot be combined with --ckpt");
  } else {
    cfg = resolve_config(o);
  }
  const DatasetSplits data = resolve_data(o, cfg);
  const int until = epochs < 0 ? cfg.schedule.epochs : std::min(epochs, cfg.schedule.epochs);

  MetricsWriter metrics(out / "metrics.jsonl", resumed.has_value());
  PretrainOptions opts;
  opts.until_epoch = until;
  opts.metrics = &metrics;
  const fs::path ckpt_dir = out / "checkpoint";
  if (checkpoint_every > 0) {
    opts.on_epoch_end = [&](const TrainState& s) {
      if (s.epoch % checkpoint_every == 0) save_checkpoint(ckpt_dir, s, cfg);
    };
  }
  PretrainRun run;
  if (resumed) {
    run.state = std::move(resumed->state);
    continue_pretrain(run.state, &run, cfg, data.train, &data.val, opts);
  } else {
    run = run_pretrain(cfg, data.train, &data.val, opts);
  }
  save_checkpoint(ckpt_dir, run.state, cfg);
  save_config(cfg, out / "config.json");
  std::printf("pretrained to epoch %d (%ld steps); checkpoint in %s\n", run.state.epoch, run.state.step,
              ckpt_dir.c_str());
  for (const auto& [epoch, acc] : run.probe_curve) std::printf("  epoch %4d  knn_accuracy %.4f\n", epoch, acc);
  return kExitOk;
}

LoadedCheckpoint require_checkpoint(const CommonOptions& o) {
  if (o.ckpt.empty()) throw UsageError("--ckpt is required");
  return load_checkpoint(o.ckpt);
}

RunConfig eval_config(const CommonOptions& o, const LoadedCheckpoint& ck) {
  RunConfig cfg = ck.config;
  if (!o.config.empty()) {
    // Evaluation settings come from --config; the model-defining sections stay
    // as trained.
    const RunConfig user = load_config(o.config);
    cfg.eval = user.eval;
    cfg.optimizer.finetune_lr = user.optimizer.finetune_lr;
    cfg.optimizer.finetune_weight_decay = user.optimizer.finetune_weight_decay;
    cfg.optimizer.finetune_batch_size = user.optimizer.finetune_batch_size;
    cfg.schedule.finetune_epochs = user.schedule.finetune_epochs;
    cfg.schedule.finetune_decay = user.schedule.finetune_decay;
    cfg.schedule.finetune_period = user.schedule.finetune_period;
  }
  if (o.seed) {
    cfg.seeds.finetune = *o.seed + 3;
    cfg.seeds.eval = *o.seed + 4;
  }
  cfg.validate();
  return cfg;
}

int cmd_finetune(const CommonOptions& o, const std::vector<double>& ratios) {
  const LoadedCheckpoint ck = require_checkpoint(o);
  const RunConfig cfg = eval_config(o, ck);
  const fs::path out = require_out(o);
  const DatasetSplits data = resolve_data(o, cfg);
  const auto rows = label_ratio_sweep(ck.state.model, cfg, data.train, data.test,
                                      ratios.empty() ? std::vector<double>{1.0, 0.1, 0.01} : ratios);
  const ReportTable table = label_sweep_table(rows);
  write_report(out / "finetune", {{"label_ratios", label_sweep_json(rows)}, {"runs", cfg.eval.finetune_runs}}, table);
  std::cout << table.render();
  return kExitOk;
}

int cmd_evaluate(const CommonOptions& o, std::optional<double> ratio) {
  const LoadedCheckpoint ck = require_checkpoint(o);
  const RunConfig cfg = eval_config(o, ck);
  const fs::path out = require_out(o);
  const DatasetSplits data = resolve_data(o, cfg);
  const EvaluationReport report =
      evaluate_model(ck.state.model, cfg, data.train, data.test, ratio.value_or(cfg.eval.label_ratio));
  const ReportTable table = report.to_table();
  write_report(out / "report", report.to_json(), table);
  std::cout << table.render();
  return kExitOk;
}

int cmd_gradcheck(LossCheckOptions opts) {
  if (opts.modalities < 1) throw UsageError("model has no modalities, nothing to check");
  if (opts.modalities < 2) throw UsageError("the losses need at least two modalities");
  const auto rows = check_loss_gradients(opts);
  ReportTable table{{"loss", "instances", "coordinates", "max_rel_error", "status"}, {}};
  bool ok = true;
  for (const auto& r : rows) {
    char err[32];
    std::snprintf(err, sizeof err, "%.3e", r.max_rel_error);
    table.add_row({std::string(to_string(r.loss)), std::to_string(r.instances), std::to_string(r.coordinates), err,
                   r.passed ? "PASS" : "FAIL"});
    ok = ok && r.passed;
  }
  std::cout << table.render();
  std::printf("tolerance %.1e, h = %.1e: %s\n", opts.tolerance, opts.eps, ok ? "all passed" : "FAILED");
  return ok ? kExitOk : kExitCheckFailed;
}

int cmd_sweep(const CommonOptions& o, int epochs) {
  RunConfig cfg = resolve_config(o);
  if (epochs > 0) cfg.schedule.epochs = epochs;
  cfg.validate();
  const fs::path out = require_out(o);
  const DatasetSplits data = resolve_data(o, cfg);
  const SweepGrid grid;
  const SweepReport report = loss_weight_sweep(cfg, data, grid, [&](std::size_t i, const SweepPoint& p) {
    std::printf("[%2zu/%zu] lambda_p=%.1f lambda_o=%.1f lambda_t=%.1f margin=%.1f  accuracy %.4f\n", i + 1,
                grid.size(), p.lambda_p, p.lambda_o, p.lambda_t, p.margin, p.accuracy);
    std::fflush(stdout);
  });
  write_report(out / "sweep", report.to_json(), report.to_table());
  std::printf("accuracy min %.4f  max %.4f  mean %.4f  spread %.4f\n", report.min_accuracy, report.max_accuracy,
              report.mean_accuracy, report.spread);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FOCAL factorized contrastive pretraining for multimodal time series"};
  app.require_subcommand(1);
  CommonOptions o;
  auto add_common = [&](CLI::App* sub, bool config, bool seed, bool out, bool data, bool ckpt) {
    if (config) sub->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    if (seed) sub->add_option("--seed", o.seed, "Derive every seed from this value");
    if (out) sub->add_option("--out", o.out, "Output directory")->required();
    if (data) sub->add_option("--data", o.data, "Dataset directory written by gendata (default: generate in memory)");
    if (ckpt) sub->add_option("--ckpt", o.ckpt, "Checkpoint directory");
  };

  auto* gendata = app.add_subcommand("gendata", "Generate a synthetic dataset and write train/val/test CSVs");
  add_common(gendata, true, true, true, false, false);

  int epochs = -1;
  int checkpoint_every = 0;
  auto* pretrain = app.add_subcommand("pretrain", "Self-supervised pretraining (resume with --ckpt)");
  add_common(pretrain, true, true, true, true, true);
  pretrain->add_option("--epochs", epochs, "Stop after this many completed epochs (default: full schedule)");
  pretrain->add_option("--checkpoint-every", checkpoint_every, "Also checkpoint every N epochs");

  std::vector<double> ratios;
  auto* finetune = app.add_subcommand("finetune", "Linear probing over label ratios, repeated runs, mean and std");
  add_common(finetune, true, true, true, true, true);
  finetune->add_option("--label-ratio", ratios, "Label ratios (default: 1 0.1 0.01)")
      ->check(CLI::Range(0.0, 1.0));

  std::optional<double> ratio;
  auto* evaluate = app.add_subcommand("evaluate", "Linear probe, KNN and clustering report");
  add_common(evaluate, true, true, true, true, true);
  evaluate->add_option("--label-ratio", ratio, "Label ratio for the linear probe")->check(CLI::Range(0.0, 1.0));

  LossCheckOptions check;
  std::uint64_t check_seed = 1;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every loss gradient");
  gradcheck->add_option("--seed", check_seed, "Seed of the random instances");
  gradcheck->add_option("--instances", check.instances, "Random instances per loss")->check(CLI::PositiveNumber);
  gradcheck->add_option("--modalities", check.modalities, "Modalities in the checked model");
  gradcheck->add_flag("--inject-error", check.inject_error, "Corrupt one analytic gradient coordinate");

  int sweep_epochs = 0;
  auto* sweep = app.add_subcommand("sweep", "Loss-weight sensitivity grid (81 pretraining runs)");
  add_common(sweep, true, true, true, true, false);
  sweep->add_option("--epochs", sweep_epochs, "Override schedule.epochs for every grid point");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gendata) return cmd_gendata(o);
    if (*pretrain) return cmd_pretrain(o, epochs, checkpoint_every);
    if (*finetune) return cmd_finetune(o, ratios);
    if (*evaluate) return cmd_evaluate(o, ratio);
    if (*gradcheck) {
      check.seed = check_seed;
      return cmd_gradcheck(check);
    }
    if (*sweep) return cmd_sweep(o, sweep_epochs);
  } catch (const TrainingError& e) {
    std::cerr << "focal: training failed: " << e.what() << "\n";
    return kExitCheckFailed;
  } catch (const IngestError& e) {
    std::cerr << "focal: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "focal: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
