#include "focal/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "focal/errors.hpp"

namespace focal {

namespace {

template <typename Ptr>
OptimizerState make_state(std::span<Ptr const> params) {
  OptimizerState state;
  for (const auto* p : params) {
    state.m.push_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
    state.v.push_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
  }
  return state;
}

}  // namespace

OptimizerState make_optimizer_state(std::span<const Parameter* const> params) { return make_state(params); }
OptimizerState make_optimizer_state(std::span<Parameter* const> params) { return make_state(params); }

void adam_step(std::span<Parameter* const> params, OptimizerState& state, const AdamConfig& cfg, double lr) {
  if (state.m.size() != params.size()) {
    throw UsageError("optimizer state does not match the parameter list");
  }
  for (const auto* p : params) {
    if (!p->grad.allFinite()) {
      throw TrainingError("non-finite gradient in parameter '" + p->name + "' at step " +
                          std::to_string(state.step + 1));
    }
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    Eigen::MatrixXd g = p.grad;
    if (cfg.weight_decay != 0.0) {
      if (cfg.decoupled) {
        p.value *= 1.0 - lr * cfg.weight_decay;
      } else {
        g += cfg.weight_decay * p.value;
      }
    }
    state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * g;
    state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * g.cwiseAbs2();
    p.value.array() -= lr * (state.m[k].array() / bc1) / ((state.v[k].array() / bc2).sqrt() + cfg.eps);
  }
}

void CosineSchedule::validate() const {
  if (!(max_lr > min_lr && min_lr >= 0.0)) throw ConfigError("schedule requires max_lr > min_lr >= 0");
  if (total_epochs < 0) throw ConfigError("schedule epochs must be non-negative");
}

double cosine_lr(double epoch, const CosineSchedule& cfg) {
  if (cfg.total_epochs == 0) return cfg.max_lr;
  const double frac = std::clamp(epoch / cfg.total_epochs, 0.0, 1.0);
  return cfg.min_lr + 0.5 * (cfg.max_lr - cfg.min_lr) * (1.0 + std::cos(std::numbers::pi * frac));
}

void StepSchedule::validate() const {
  if (!(start_lr > 0.0)) throw ConfigError("finetune learning rate must be positive");
  if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("finetune decay must lie in (0, 1]");
  if (period <= 0) throw ConfigError("finetune period must be positive");
}

double step_lr(int epoch, const StepSchedule& cfg) {
  return cfg.start_lr * std::pow(cfg.decay, static_cast<double>(epoch / cfg.period));
}

}  // namespace focal
