#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "focal/dataset.hpp"

namespace focal {

/// Where class information lives in the generated signals.
enum class InfoMode { SharedOnly, PrivateOnly, Mixed };

std::string_view to_string(InfoMode mode);
InfoMode parse_info_mode(std::string_view name);

/// Generative model, per sequence of `sequence_length` windows with class y:
///
///   x_j(t) = A_t * ( a_s * sin(2 pi f_y u + phi) + a_p * sin(2 pi g_{y,j} u + psi_j) ) + noise
///
/// f_y (shared bank) appears in every modality when info_mode is SharedOnly or
/// Mixed. The private term appears when info_mode is PrivateOnly or Mixed: the
/// class index is written in base r (smallest r with r^P >= classes) and
/// modality j carries digit j through its own frequency bank, so no class
/// information is common to two modalities. A_t = 1 + drift * w_t where w is a
/// per-sequence Gaussian random walk, giving neighbouring windows similar
/// amplitude. All frequencies sit on DFT bins of `interval_len`.
struct SynthConfig {
  int n_sequences = 128;
  int sequence_length = 4;
  int modalities = 2;
  int channels = 1;
  int window_length = 200;
  double sample_rate_hz = 100.0;
  int classes = 4;
  InfoMode info_mode = InfoMode::Mixed;
  double drift_strength = 0.3;
  double drift_step = 0.25;
  double noise_std = 0.5;
  double shared_amplitude = 1.0;
  double private_amplitude = 1.0;
  int interval_len = 20;
  // Empty selects consecutive bins starting at 1: shared bank first, then one
  // private bank per modality.
  std::vector<int> shared_bins;
  std::vector<std::vector<int>> private_bins;
  std::uint64_t seed = 1;

  void validate() const;
  /// Digit base used to split class information across modalities.
  int private_radix() const;
  std::vector<int> resolved_shared_bins() const;
  std::vector<std::vector<int>> resolved_private_bins() const;
};

/// Builds the dataset; each generated sequence is its own recording run.
Dataset generate(const SynthConfig& cfg);

struct DatasetSplits {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Sequence-level random split. Sizes are round(ratio * n) for val and test,
/// train takes the rest. Each sequence becomes its own run in the output.
/// Throws ConfigError if ratios do not sum to 1 or a split would be empty
/// (unless `allow_empty`).
DatasetSplits split(const Dataset& data, std::array<double, 3> ratios, int sequence_length, std::uint64_t seed,
                    bool allow_empty = false);

}  // namespace focal
