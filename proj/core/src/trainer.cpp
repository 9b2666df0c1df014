#include "focal/trainer.hpp"

#include <cmath>
#include <string>

#include "focal/errors.hpp"

namespace focal {

void PretrainConfig::validate(std::size_t modalities) const {
  if (intervals.size() != modalities) {
    throw ConfigError("expected " + std::to_string(modalities) + " interval configs, got " +
                      std::to_string(intervals.size()));
  }
  for (const auto& iv : intervals) iv.hop();
  augmentation.validate();
  encoder.validate();
  loss.validate();
  schedule.validate();
  if (sequence_length < 2) throw ConfigError("sequence_length must be at least 2");
  if (batch_sequences < 2) throw ConfigError("batch_sequences must be at least 2");
  if (eval_every < 0) throw ConfigError("eval_every must be non-negative");
  if (modalities < 2) throw ConfigError("pretraining needs at least two modalities");
}

std::vector<ModalityShape> modality_shapes(const SignalSet& signals, std::span<const IntervalConfig> intervals) {
  if (intervals.size() != signals.num_modalities()) {
    throw ConfigError("one interval config per modality is required");
  }
  std::vector<ModalityShape> shapes;
  for (std::size_t j = 0; j < signals.num_modalities(); ++j) {
    if (signals.windows[j].empty()) throw InputError("dataset has no samples");
    const auto& w = signals.windows[j].front();
    ModalityShape s;
    s.id = signals.modalities[j].id;
    s.channels = static_cast<int>(w.channels());
    s.intervals = intervals[j].intervals(static_cast<int>(w.length()));
    s.bins = intervals[j].bins();
    s.interval_len = intervals[j].interval_len;
    shapes.push_back(std::move(s));
  }
  return shapes;
}

TrainState init_training(const SignalSet& signals, const PretrainConfig& cfg, std::uint64_t seed) {
  cfg.validate(signals.num_modalities());
  TrainState state;
  state.rng.seed(seed);
  state.model = FocalModel(modality_shapes(signals, cfg.intervals), cfg.encoder, state.rng);
  state.optimizer = make_optimizer_state(std::span<Parameter* const>(state.model.parameters()));
  return state;
}

LossBreakdown batch_loss_and_gradients(FocalModel& model,
                                       const std::array<std::vector<std::vector<ModalitySample>>, 2>& views,
                                       std::span<const int> seq_of, const LossConfig& loss) {
  const std::size_t P = model.num_modalities();
  std::array<std::vector<ModalityOutput>, 2> outputs;
  BatchEmbeddings emb;
  emb.seq_of.assign(seq_of.begin(), seq_of.end());
  for (int v = 0; v < 2; ++v) {
    for (std::size_t j = 0; j < P; ++j) {
      std::vector<const ModalitySample*> ptrs;
      ptrs.reserve(views[v][j].size());
      for (const auto& s : views[v][j]) ptrs.push_back(&s);
      outputs[v].push_back(model.encoder(j).forward(ptrs));
      emb.shared[v].push_back(outputs[v].back().shared);
      emb.priv[v].push_back(outputs[v].back().priv);
    }
  }
  BatchGradients grads;
  const LossBreakdown breakdown = total_loss(emb, loss, &grads);
  model.zero_grad();
  const Eigen::MatrixXd none;
  for (int v = 0; v < 2; ++v) {
    for (std::size_t j = 0; j < P; ++j) {
      const bool shared_used = grads.shared[v][j].cwiseAbs().maxCoeff() > 0.0;
      const bool private_used = loss.private_enabled();
      if (!shared_used && !private_used) continue;
      model.encoder(j).backward(outputs[v][j], shared_used ? grads.shared[v][j] : none,
                                private_used ? grads.priv[v][j] : none);
    }
  }
  return breakdown;
}

void pretrain(TrainState& state, const SignalSet& signals, const PretrainConfig& cfg, int until_epoch,
              const PretrainHooks& hooks) {
  cfg.validate(signals.num_modalities());
  const SequenceIndex index = build_sequences(signals.run_lengths, cfg.sequence_length);
  const std::size_t P = signals.num_modalities();
  auto params = state.model.parameters();

  for (; state.epoch < until_epoch;) {
    const TrainState snapshot = state;
    const double lr = cosine_lr(state.epoch, cfg.schedule);
    try {
      const auto batches = epoch_batches(index, cfg.batch_sequences, state.rng);
      for (const auto& batch : batches) {
        std::array<std::vector<std::vector<ModalitySample>>, 2> views;
        for (auto& v : views) v.resize(P);
        std::vector<RawWindow> sample(P);
        for (std::size_t ref : batch.sample_refs) {
          for (std::size_t j = 0; j < P; ++j) sample[j] = signals.windows[j][ref];
          TwoViews tv = make_two_views(sample, cfg.augmentation, cfg.intervals, state.rng);
          for (int v = 0; v < 2; ++v) {
            for (std::size_t j = 0; j < P; ++j) views[v][j].push_back(std::move(tv.views[v][j]));
          }
        }
        const LossBreakdown loss = batch_loss_and_gradients(state.model, views, batch.seq_of, cfg.loss);
        if (!std::isfinite(loss.total)) {
          throw TrainingError("loss diverged (non-finite) at step " + std::to_string(state.step + 1));
        }
        adam_step(params, state.optimizer, cfg.optimizer, lr);
        ++state.step;
        if (hooks.on_step) hooks.on_step({state.step, state.epoch, lr, loss});
      }
    } catch (const TrainingError&) {
      state = snapshot;
      throw;
    }
    ++state.epoch;
    if (cfg.eval_every > 0 && hooks.probe && state.epoch % cfg.eval_every == 0) {
      const double acc = hooks.probe(state.model);
      if (hooks.on_probe) hooks.on_probe(state.epoch, acc);
    }
    if (hooks.on_epoch_end) hooks.on_epoch_end(state);
  }
}

std::vector<Eigen::MatrixXd> modality_features(const FocalModel& model, const SignalSet& signals,
                                               std::span<const IntervalConfig> intervals, FeatureSpace space) {
  constexpr std::size_t kChunk = 256;
  const std::size_t N = signals.size();
  std::vector<Eigen::MatrixXd> out;
  for (std::size_t j = 0; j < model.num_modalities(); ++j) {
    const auto& enc = model.encoder(j);
    Eigen::MatrixXd feats;
    for (std::size_t start = 0; start < N; start += kChunk) {
      const std::size_t stop = std::min(N, start + kChunk);
      std::vector<ModalitySample> specs;
      specs.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) specs.push_back(stft(signals.windows[j][i], intervals[j]));
      std::vector<const ModalitySample*> ptrs;
      for (const auto& s : specs) ptrs.push_back(&s);
      const ModalityOutput o = enc.forward(ptrs);
      Eigen::MatrixXd block;
      switch (space) {
        case FeatureSpace::Shared:
          block = o.shared;
          break;
        case FeatureSpace::Private:
          block = o.priv;
          break;
        case FeatureSpace::Concat:
          block.resize(o.shared.rows() + o.priv.rows(), o.shared.cols());
          block << o.shared, o.priv;
          break;
      }
      if (feats.size() == 0) feats.resize(block.rows(), static_cast<Eigen::Index>(N));
      feats.middleCols(static_cast<Eigen::Index>(start), block.cols()) = block;
    }
    out.push_back(std::move(feats));
  }
  return out;
}

Eigen::MatrixXd extract_features(const FocalModel& model, const SignalSet& signals,
                                 std::span<const IntervalConfig> intervals, bool include_private) {
  const auto per = modality_features(model, signals, intervals, include_private ? FeatureSpace::Concat : FeatureSpace::Shared);
  Eigen::Index rows = 0;
  for (const auto& m : per) rows += m.rows();
  Eigen::MatrixXd out(rows, static_cast<Eigen::Index>(signals.size()));
  Eigen::Index r = 0;
  for (const auto& m : per) {
    out.middleRows(r, m.rows()) = m;
    r += m.rows();
  }
  return out;
}

}  // namespace focal
