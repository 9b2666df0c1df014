#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "focal/augmentation.hpp"
#include "focal/signal.hpp"

namespace focal {

/// A trainable tensor and its accumulated gradient.
struct Parameter {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;

  Parameter() = default;
  Parameter(std::string n, Eigen::MatrixXd v)
      : name(std::move(n)), value(std::move(v)), grad(Eigen::MatrixXd::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

enum class Aggregate { Mean, Last };

struct EncoderConfig {
  int interval_hidden = 64;
  Aggregate aggregate = Aggregate::Mean;
  int embed_dim = 128;  // K
  int proj_hidden = 128;
  int proj_dim = 64;  // shared and private heads both emit this many dims
  // Multiplies the flattened spectrum. 0 selects 1/sqrt(interval_len).
  double input_scale = 0.0;

  void validate() const;
};

/// Input geometry of one modality after the STFT.
struct ModalityShape {
  std::string id;
  int channels = 1;
  int intervals = 1;
  int bins = 1;
  int interval_len = 1;

  int features_per_interval() const { return 2 * channels * bins; }
};

/// Dense layer y = W x + b acting on column batches.
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, int in, int out, Rng& rng);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  /// Accumulates dW, db and returns dL/dx.
  Eigen::MatrixXd backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& dy);

  Parameter weight;
  Parameter bias;
};

/// Cached activations of one forward pass through a projection head.
struct ProjectorTape {
  Eigen::MatrixXd pre;
  Eigen::MatrixXd act;
  Eigen::MatrixXd raw;
  Eigen::VectorXd norms;
};

struct ModalityOutput {
  Eigen::MatrixXd h;        // embed_dim x N backbone output
  Eigen::MatrixXd shared;   // proj_dim x N, unit columns
  Eigen::MatrixXd priv;     // proj_dim x N, unit columns

  // tape
  Eigen::MatrixXd features;
  Eigen::MatrixXd pre;
  Eigen::MatrixXd act;
  Eigen::MatrixXd pooled;
  ProjectorTape shared_tape;
  ProjectorTape private_tape;
  int samples = 0;
};

/// Reference encoder E_j for one modality plus its shared and private heads.
/// Each interval's spectrum (real and imaginary parts of every channel) passes
/// through a shared affine map and GELU; intervals are pooled and mapped to K
/// dims. Each head is Linear -> ReLU -> Linear -> L2 normalize.
class ModalityEncoder {
 public:
  ModalityEncoder(ModalityShape shape, const EncoderConfig& cfg, Rng& rng);

  const ModalityShape& shape() const { return shape_; }

  /// Stacks samples into a (2*C*S) x (N*I) matrix, column n*I + i for interval i of sample n.
  Eigen::MatrixXd flatten(std::span<const ModalitySample* const> samples) const;

  ModalityOutput forward(std::span<const ModalitySample* const> samples) const;
  ModalityOutput forward_features(Eigen::MatrixXd features, int samples) const;

  /// Reverse pass. Empty gradient matrices skip the corresponding head.
  /// `d_h` optionally adds a gradient arriving directly at the backbone output.
  void backward(const ModalityOutput& out, const Eigen::MatrixXd& d_shared, const Eigen::MatrixXd& d_private,
                const Eigen::MatrixXd& d_h = {});

  Eigen::VectorXd encode(const ModalitySample& sample) const;
  std::pair<Eigen::VectorXd, Eigen::VectorXd> project(const Eigen::VectorXd& h) const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

 private:
  Eigen::MatrixXd run_head(const Linear& hidden, const Linear& out, const Eigen::MatrixXd& h,
                           ProjectorTape& tape) const;
  Eigen::MatrixXd head_backward(Linear& hidden, Linear& out, const Eigen::MatrixXd& h,
                                const ProjectorTape& tape, const Eigen::MatrixXd& d_unit);
  void validate_input(const ModalitySample& s) const;

  ModalityShape shape_;
  Aggregate aggregate_;
  double input_scale_;
  Linear interval_;
  Linear embed_;
  Linear shared_hidden_;
  Linear shared_out_;
  Linear private_hidden_;
  Linear private_out_;
};

/// One encoder per modality.
class FocalModel {
 public:
  FocalModel() = default;
  FocalModel(const std::vector<ModalityShape>& shapes, const EncoderConfig& cfg, Rng& rng);

  std::size_t num_modalities() const { return encoders_.size(); }
  ModalityEncoder& encoder(std::size_t j) { return encoders_[j]; }
  const ModalityEncoder& encoder(std::size_t j) const { return encoders_[j]; }
  const EncoderConfig& config() const { return cfg_; }

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t parameter_count() const;
  void zero_grad();

 private:
  EncoderConfig cfg_;
  std::vector<ModalityEncoder> encoders_;
};

double gelu(double x);
double gelu_derivative(double x);

/// Divides each column by (norm + 1e-12).
Eigen::MatrixXd normalize_columns(const Eigen::MatrixXd& z, Eigen::VectorXd* norms = nullptr);
/// Chain rule through normalize_columns given the upstream gradient.
Eigen::MatrixXd normalize_columns_backward(const Eigen::MatrixXd& z, const Eigen::VectorXd& norms,
                                           const Eigen::MatrixXd& d_unit);

inline constexpr double kNormEpsilon = 1e-12;

}  // namespace focal
