#include "focal/nn.hpp"

#include <cmath>
#include <numbers>

#include "focal/errors.hpp"

namespace focal {

void EncoderConfig::validate() const {
  if (interval_hidden <= 0 || embed_dim <= 0 || proj_hidden <= 0 || proj_dim <= 0) {
    throw ConfigError("encoder dimensions must be positive");
  }
  if (input_scale < 0.0) {
    throw ConfigError("encoder input_scale must be non-negative");
  }
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_derivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

Eigen::MatrixXd normalize_columns(const Eigen::MatrixXd& z, Eigen::VectorXd* norms) {
  Eigen::VectorXd n = z.colwise().norm().transpose();
  Eigen::MatrixXd out = z;
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    out.col(c) /= n(c) + kNormEpsilon;
  }
  if (norms) *norms = std::move(n);
  return out;
}

Eigen::MatrixXd normalize_columns_backward(const Eigen::MatrixXd& z, const Eigen::VectorXd& norms,
                                           const Eigen::MatrixXd& d_unit) {
  Eigen::MatrixXd dz(z.rows(), z.cols());
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    const double r = norms(c);
    const double denom = r + kNormEpsilon;
    dz.col(c) = d_unit.col(c) / denom;
    if (r > 0.0) {
      dz.col(c) -= z.col(c) * (z.col(c).dot(d_unit.col(c)) / (r * denom * denom));
    }
  }
  return dz;
}

Linear::Linear(const std::string& name, int in, int out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> init(-a, a);
  Eigen::MatrixXd w(out, in);
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      w(r, c) = init(rng);
    }
  }
  weight = Parameter(name + ".weight", std::move(w));
  bias = Parameter(name + ".bias", Eigen::MatrixXd::Zero(out, 1));
}

Eigen::MatrixXd Linear::forward(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd y = weight.value * x;
  y.colwise() += bias.value.col(0);
  return y;
}

Eigen::MatrixXd Linear::backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& dy) {
  weight.grad.noalias() += dy * x.transpose();
  bias.grad.col(0) += dy.rowwise().sum();
  return weight.value.transpose() * dy;
}

ModalityEncoder::ModalityEncoder(ModalityShape shape, const EncoderConfig& cfg, Rng& rng)
    : shape_(std::move(shape)), aggregate_(cfg.aggregate) {
  cfg.validate();
  if (shape_.channels <= 0 || shape_.intervals <= 0 || shape_.bins <= 0 || shape_.interval_len <= 0) {
    throw ConfigError("modality '" + shape_.id + "' has an empty input shape");
  }
  input_scale_ = cfg.input_scale > 0.0 ? cfg.input_scale : 1.0 / std::sqrt(static_cast<double>(shape_.interval_len));
  const std::string p = shape_.id;
  interval_ = Linear(p + ".interval", shape_.features_per_interval(), cfg.interval_hidden, rng);
  embed_ = Linear(p + ".embed", cfg.interval_hidden, cfg.embed_dim, rng);
  shared_hidden_ = Linear(p + ".shared.hidden", cfg.embed_dim, cfg.proj_hidden, rng);
  shared_out_ = Linear(p + ".shared.out", cfg.proj_hidden, cfg.proj_dim, rng);
  private_hidden_ = Linear(p + ".private.hidden", cfg.embed_dim, cfg.proj_hidden, rng);
  private_out_ = Linear(p + ".private.out", cfg.proj_hidden, cfg.proj_dim, rng);
}

void ModalityEncoder::validate_input(const ModalitySample& s) const {
  if (s.channels != shape_.channels || s.intervals != shape_.intervals || s.bins != shape_.bins) {
    throw UsageError("sample shape [" + std::to_string(s.channels) + "," + std::to_string(s.intervals) + "," +
                     std::to_string(s.bins) + "] does not match encoder '" + shape_.id + "'");
  }
}

Eigen::MatrixXd ModalityEncoder::flatten(std::span<const ModalitySample* const> samples) const {
  const int C = shape_.channels, I = shape_.intervals, S = shape_.bins;
  Eigen::MatrixXd x(shape_.features_per_interval(), static_cast<Eigen::Index>(samples.size()) * I);
  for (std::size_t n = 0; n < samples.size(); ++n) {
    const auto& s = *samples[n];
    validate_input(s);
    for (int i = 0; i < I; ++i) {
      const Eigen::Index col = static_cast<Eigen::Index>(n) * I + i;
      for (int c = 0; c < C; ++c) {
        for (int k = 0; k < S; ++k) {
          const auto z = s.at(c, i, k);
          x(c * S + k, col) = z.real() * input_scale_;
          x(C * S + c * S + k, col) = z.imag() * input_scale_;
        }
      }
    }
  }
  return x;
}

Eigen::MatrixXd ModalityEncoder::run_head(const Linear& hidden, const Linear& out, const Eigen::MatrixXd& h,
                                          ProjectorTape& tape) const {
  tape.pre = hidden.forward(h);
  tape.act = tape.pre.cwiseMax(0.0);
  tape.raw = out.forward(tape.act);
  return normalize_columns(tape.raw, &tape.norms);
}

ModalityOutput ModalityEncoder::forward(std::span<const ModalitySample* const> samples) const {
  return forward_features(flatten(samples), static_cast<int>(samples.size()));
}

ModalityOutput ModalityEncoder::forward_features(Eigen::MatrixXd features, int samples) const {
  const int I = shape_.intervals;
  if (features.rows() != shape_.features_per_interval() || features.cols() != static_cast<Eigen::Index>(samples) * I) {
    throw UsageError("feature matrix does not match encoder '" + shape_.id + "'");
  }
  ModalityOutput out;
  out.samples = samples;
  out.features = std::move(features);
  out.pre = interval_.forward(out.features);
  out.act = out.pre.unaryExpr(&gelu);
  out.pooled.resize(out.act.rows(), samples);
  for (int n = 0; n < samples; ++n) {
    const auto block = out.act.middleCols(static_cast<Eigen::Index>(n) * I, I);
    if (aggregate_ == Aggregate::Mean) {
      out.pooled.col(n) = block.rowwise().mean();
    } else {
      out.pooled.col(n) = block.col(I - 1);
    }
  }
  out.h = embed_.forward(out.pooled);
  out.shared = run_head(shared_hidden_, shared_out_, out.h, out.shared_tape);
  out.priv = run_head(private_hidden_, private_out_, out.h, out.private_tape);
  return out;
}

Eigen::MatrixXd ModalityEncoder::head_backward(Linear& hidden, Linear& out, const Eigen::MatrixXd& h,
                                               const ProjectorTape& tape, const Eigen::MatrixXd& d_unit) {
  const Eigen::MatrixXd d_raw = normalize_columns_backward(tape.raw, tape.norms, d_unit);
  Eigen::MatrixXd d_act = out.backward(tape.act, d_raw);
  const Eigen::MatrixXd d_pre = (tape.pre.array() > 0.0).select(d_act, 0.0);
  return hidden.backward(h, d_pre);
}

void ModalityEncoder::backward(const ModalityOutput& out, const Eigen::MatrixXd& d_shared,
                               const Eigen::MatrixXd& d_private, const Eigen::MatrixXd& d_h) {
  Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(out.h.rows(), out.h.cols());
  if (d_h.size() > 0) dh += d_h;
  if (d_shared.size() > 0) dh += head_backward(shared_hidden_, shared_out_, out.h, out.shared_tape, d_shared);
  if (d_private.size() > 0) dh += head_backward(private_hidden_, private_out_, out.h, out.private_tape, d_private);

  const Eigen::MatrixXd d_pooled = embed_.backward(out.pooled, dh);
  const int I = shape_.intervals;
  Eigen::MatrixXd d_act = Eigen::MatrixXd::Zero(out.act.rows(), out.act.cols());
  for (int n = 0; n < out.samples; ++n) {
    if (aggregate_ == Aggregate::Mean) {
      d_act.middleCols(static_cast<Eigen::Index>(n) * I, I).colwise() = d_pooled.col(n) / I;
    } else {
      d_act.col(static_cast<Eigen::Index>(n) * I + I - 1) = d_pooled.col(n);
    }
  }
  const Eigen::MatrixXd d_pre = d_act.cwiseProduct(out.pre.unaryExpr(&gelu_derivative));
  // Input gradients are not needed; only accumulate the interval layer's parameters.
  interval_.weight.grad.noalias() += d_pre * out.features.transpose();
  interval_.bias.grad.col(0) += d_pre.rowwise().sum();
}

Eigen::VectorXd ModalityEncoder::encode(const ModalitySample& sample) const {
  const ModalitySample* ptr = &sample;
  return forward(std::span(&ptr, 1)).h.col(0);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> ModalityEncoder::project(const Eigen::VectorXd& h) const {
  if (!h.allFinite()) {
    throw InputError("embedding passed to project() is not finite");
  }
  ProjectorTape a, b;
  Eigen::MatrixXd hm = h;
  return {run_head(shared_hidden_, shared_out_, hm, a).col(0), run_head(private_hidden_, private_out_, hm, b).col(0)};
}

std::vector<Parameter*> ModalityEncoder::parameters() {
  return {&interval_.weight,     &interval_.bias,      &embed_.weight,         &embed_.bias,
          &shared_hidden_.weight, &shared_hidden_.bias, &shared_out_.weight,    &shared_out_.bias,
          &private_hidden_.weight, &private_hidden_.bias, &private_out_.weight, &private_out_.bias};
}

std::vector<const Parameter*> ModalityEncoder::parameters() const {
  auto params = const_cast<ModalityEncoder*>(this)->parameters();
  return {params.begin(), params.end()};
}

FocalModel::FocalModel(const std::vector<ModalityShape>& shapes, const EncoderConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg.validate();
  for (const auto& s : shapes) {
    for (const auto& e : encoders_) {
      if (e.shape().id == s.id) {
        throw ConfigError("duplicate modality id '" + s.id + "'");
      }
    }
    encoders_.emplace_back(s, cfg, rng);
  }
}

std::vector<Parameter*> FocalModel::parameters() {
  std::vector<Parameter*> out;
  for (auto& e : encoders_) {
    auto p = e.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<const Parameter*> FocalModel::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& e : encoders_) {
    auto p = e.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::size_t FocalModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += static_cast<std::size_t>(p->value.size());
  return n;
}

void FocalModel::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

}  // namespace focal
