#include "focal/finetune.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>

#include "focal/errors.hpp"
#include "focal/random.hpp"

namespace focal {

void FinetuneConfig::validate() const {
  schedule.validate();
  if (epochs < 0) throw ConfigError("finetune epochs must be non-negative");
  if (batch_size < 1) throw ConfigError("finetune batch_size must be positive");
  if (weight_decay < 0) throw ConfigError("finetune weight_decay must be non-negative");
}

Eigen::MatrixXd LinearClassifier::logits(const Eigen::MatrixXd& features) const {
  Eigen::MatrixXd z = (features.colwise() - mean).array().colwise() * inv_std.array();
  Eigen::MatrixXd out = weight * z;
  out.colwise() += bias;
  return out;
}

std::vector<int> LinearClassifier::predict(const Eigen::MatrixXd& features) const {
  const Eigen::MatrixXd scores = logits(features);
  std::vector<int> out(static_cast<std::size_t>(scores.cols()));
  for (Eigen::Index n = 0; n < scores.cols(); ++n) {
    Eigen::Index best = 0;
    scores.col(n).maxCoeff(&best);
    out[static_cast<std::size_t>(n)] = static_cast<int>(best);
  }
  return out;
}

std::vector<std::size_t> stratified_subsample(std::span<const int> labels, int num_classes, double ratio,
                                              std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("label_ratio must lie in (0, 1]");
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) throw InputError("label out of range");
    by_class[labels[i]].push_back(i);
  }
  Rng rng(seed);
  std::vector<std::size_t> out;
  for (auto& members : by_class) {
    const auto take = static_cast<std::size_t>(std::lround(ratio * static_cast<double>(members.size())));
    if (take < members.size()) std::shuffle(members.begin(), members.end(), rng);
    out.insert(out.end(), members.begin(), members.begin() + static_cast<long>(std::min(take, members.size())));
  }
  std::sort(out.begin(), out.end());
  return out;
}

FinetuneResult finetune_linear(const Eigen::MatrixXd& features, std::span<const int> labels, int num_classes,
                               double label_ratio, const FinetuneConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (num_classes < 1) throw ConfigError("finetuning needs at least one class");
  if (static_cast<Eigen::Index>(labels.size()) != features.cols()) {
    throw UsageError("feature and label counts differ");
  }
  FinetuneResult result;
  result.used = stratified_subsample(labels, num_classes, label_ratio, seed);
  if (result.used.empty()) throw ConfigError("label subsample is empty; raise label_ratio");

  std::vector<int> present(num_classes, 0);
  for (auto i : result.used) present[labels[i]] = 1;
  for (int c = 0; c < num_classes; ++c) {
    if (!present[c]) {
      result.dropped_classes.push_back(c);
      std::cerr << "warning: class " << c << " has no labeled samples at ratio " << label_ratio
                << "; it is excluded from training\n";
    }
  }

  const Eigen::Index D = features.rows();
  const auto n = static_cast<Eigen::Index>(result.used.size());
  Eigen::MatrixXd x(D, n);
  std::vector<int> y(result.used.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    x.col(k) = features.col(static_cast<Eigen::Index>(result.used[k]));
    y[k] = labels[result.used[k]];
  }

  auto& clf = result.classifier;
  clf.mean = x.rowwise().mean();
  Eigen::VectorXd var = (x.colwise() - clf.mean).array().square().rowwise().mean();
  clf.inv_std = (var.array() > 1e-12).select(var.array().sqrt().inverse(), 1.0);
  const Eigen::MatrixXd z = (x.colwise() - clf.mean).array().colwise() * clf.inv_std.array();

  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const double a = std::sqrt(6.0 / static_cast<double>(D + num_classes));
  std::uniform_real_distribution<double> init(-a, a);
  Parameter w("classifier.weight", Eigen::MatrixXd::NullaryExpr(num_classes, D, [&] { return init(rng); }));
  Parameter b("classifier.bias", Eigen::MatrixXd::Zero(num_classes, 1));
  Parameter* params[] = {&w, &b};
  OptimizerState opt = make_optimizer_state(std::span<Parameter* const>(params));
  const AdamConfig adam{.weight_decay = cfg.weight_decay, .decoupled = false};

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = step_lr(epoch, cfg.schedule);
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index stop = std::min<Eigen::Index>(n, start + cfg.batch_size);
      const Eigen::Index m = stop - start;
      Eigen::MatrixXd xb(D, m);
      for (Eigen::Index k = 0; k < m; ++k) xb.col(k) = z.col(order[start + k]);
      Eigen::MatrixXd s = w.value * xb;
      s.colwise() += b.value.col(0);
      // softmax cross-entropy gradient: p - onehot, averaged over the minibatch
      for (Eigen::Index k = 0; k < m; ++k) {
        const double mx = s.col(k).maxCoeff();
        s.col(k) = (s.col(k).array() - mx).exp();
        s.col(k) /= s.col(k).sum();
        s(y[order[start + k]], k) -= 1.0;
      }
      s /= static_cast<double>(m);
      w.grad = s * xb.transpose();
      b.grad = s.rowwise().sum();
      adam_step(params, opt, adam, lr);
    }
  }
  clf.weight = w.value;
  clf.bias = b.value.col(0);

  const auto pred = clf.predict(x);
  long correct = 0;
  for (std::size_t k = 0; k < pred.size(); ++k) correct += pred[k] == y[k];
  result.train_accuracy = static_cast<double>(correct) / static_cast<double>(pred.size());
  return result;
}

}  // namespace focal
