#include "focal/loss_check.hpp"

#include <random>

#include "focal/errors.hpp"
#include "focal/gradcheck.hpp"
#include "focal/random.hpp"

namespace focal {

std::string_view to_string(CheckedLoss loss) {
  switch (loss) {
    case CheckedLoss::Shared:
      return "shared_loss";
    case CheckedLoss::Private:
      return "private_loss";
    case CheckedLoss::Orthogonality:
      return "orthogonality_loss";
    case CheckedLoss::Temporal:
      return "temporal_loss";
    case CheckedLoss::TemporalContrastive:
      return "temporal_contrastive_loss";
    case CheckedLoss::Total:
      return "total_loss";
  }
  return "total_loss";
}

double checked_loss_value(CheckedLoss which, FocalModel& model,
                          const std::array<std::vector<std::vector<ModalitySample>>, 2>& views,
                          std::span<const int> seq_of, const LossConfig& cfg, bool backprop) {
  const std::size_t P = model.num_modalities();
  std::array<std::vector<ModalityOutput>, 2> out;
  BatchEmbeddings emb;
  emb.seq_of.assign(seq_of.begin(), seq_of.end());
  for (int v = 0; v < 2; ++v) {
    for (std::size_t j = 0; j < P; ++j) {
      std::vector<const ModalitySample*> ptrs;
      for (const auto& s : views[v][j]) ptrs.push_back(&s);
      out[v].push_back(model.encoder(j).forward(ptrs));
      emb.shared[v].push_back(out[v].back().shared);
      emb.priv[v].push_back(out[v].back().priv);
    }
  }
  const Eigen::Index D = emb.shared[0].front().rows();
  const Eigen::Index B = emb.batch_size();
  BatchGradients g;
  for (int v = 0; v < 2; ++v) {
    g.shared[v].assign(P, Eigen::MatrixXd::Zero(D, B));
    g.priv[v].assign(P, Eigen::MatrixXd::Zero(D, B));
  }
  double value = 0.0;
  switch (which) {
    case CheckedLoss::Shared:
      value = shared_loss(emb.shared[0], seq_of, cfg.tau, backprop ? &g.shared[0] : nullptr);
      break;
    case CheckedLoss::Private:
      value = private_loss(emb.priv[0], emb.priv[1], cfg.tau, backprop ? &g.priv[0] : nullptr,
                           backprop ? &g.priv[1] : nullptr);
      break;
    case CheckedLoss::Orthogonality:
      value = orthogonality_loss(emb.shared[0], emb.priv[0], backprop ? &g.shared[0] : nullptr,
                                 backprop ? &g.priv[0] : nullptr);
      break;
    case CheckedLoss::Temporal:
    case CheckedLoss::TemporalContrastive:
      for (std::size_t j = 0; j < P; ++j) {
        Eigen::MatrixXd holistic(2 * D, B);
        holistic << emb.shared[0][j], emb.priv[0][j];
        Eigen::MatrixXd d;
        value += which == CheckedLoss::Temporal
                     ? temporal_loss(holistic, seq_of, cfg.margin, backprop ? &d : nullptr)
                     : temporal_contrastive_loss(holistic, seq_of, cfg.tau, backprop ? &d : nullptr);
        if (backprop) {
          g.shared[0][j] = d.topRows(D);
          g.priv[0][j] = d.bottomRows(D);
        }
      }
      break;
    case CheckedLoss::Total:
      value = total_loss(emb, cfg, backprop ? &g : nullptr).total;
      break;
  }
  if (backprop) {
    model.zero_grad();
    for (int v = 0; v < 2; ++v) {
      for (std::size_t j = 0; j < P; ++j) model.encoder(j).backward(out[v][j], g.shared[v][j], g.priv[v][j]);
    }
  }
  return value;
}

std::vector<LossCheckRow> check_loss_gradients(const LossCheckOptions& options) {
  if (options.instances < 1 || options.modalities < 2 || options.sequence_length < 2 ||
      options.max_batch_sequences < 2) {
    throw ConfigError("gradient check needs >= 1 instance, >= 2 modalities, L >= 2 and B_seq >= 2");
  }
  EncoderConfig enc;
  enc.interval_hidden = 6;
  enc.embed_dim = 5;
  enc.proj_hidden = 8;
  enc.proj_dim = 4;
  enc.input_scale = 0.5;
  LossConfig cfg;
  cfg.tau = 0.5;  // keeps softmax weights away from saturation on random inputs

  std::vector<LossCheckRow> rows;
  for (CheckedLoss which : kCheckedLosses) rows.push_back({which, 0.0, {}, 0, 0, true});

  Rng rng(options.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int inst = 0; inst < options.instances; ++inst) {
    std::uniform_int_distribution<int> pick_b(2, options.max_batch_sequences);
    const int B_seq = pick_b(rng);
    const int L = options.sequence_length;
    std::vector<ModalityShape> shapes;
    for (int j = 0; j < options.modalities; ++j) shapes.push_back({"m" + std::to_string(j), 1, 3, 3, 4});
    FocalModel model(shapes, enc, rng);
    // Random biases move the check away from the all-zero-bias initial point,
    // where a head whose ReLUs are all inactive emits an exactly zero vector.
    for (Parameter* p : model.parameters()) {
      if (p->name.ends_with(".bias")) {
        for (Eigen::Index k = 0; k < p->value.size(); ++k) p->value(k) = 0.5 * gauss(rng);
      }
    }
    std::vector<int> seq_of;
    for (int s = 0; s < B_seq; ++s) {
      for (int t = 0; t < L; ++t) seq_of.push_back(s);
    }
    std::array<std::vector<std::vector<ModalitySample>>, 2> views;
    for (auto& v : views) {
      v.resize(shapes.size());
      for (std::size_t j = 0; j < shapes.size(); ++j) {
        for (int i = 0; i < B_seq * L; ++i) {
          ModalitySample s;
          s.modality_id = shapes[j].id;
          s.channels = 1;
          s.intervals = 3;
          s.bins = 3;
          s.interval_len = 4;
          s.spectrum.resize(9);
          for (auto& c : s.spectrum) c = {gauss(rng), gauss(rng)};
          v[j].push_back(std::move(s));
        }
      }
    }
    auto params = model.parameters();
    for (auto& row : rows) {
      checked_loss_value(row.loss, model, views, seq_of, cfg, true);
      if (options.inject_error) {
        Parameter& p = *params.front();
        p.grad(0, 0) += 1e-3 * std::max(1.0, std::abs(p.grad(0, 0)));
      }
      const GradCheckResult r = grad_check(
          [&] { return checked_loss_value(row.loss, model, views, seq_of, cfg, false); }, params, options.eps);
      ++row.instances;
      row.coordinates += r.coordinates;
      if (r.max_rel_error >= row.max_rel_error) {
        row.max_rel_error = r.max_rel_error;
        row.worst_parameter = r.worst_parameter;
      }
    }
  }
  for (auto& row : rows) row.passed = row.max_rel_error < options.tolerance;
  return rows;
}

}  // namespace focal
