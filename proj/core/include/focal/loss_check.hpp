#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "focal/nn.hpp"
#include "focal/objectives.hpp"

namespace focal {

enum class CheckedLoss { Shared, Private, Orthogonality, Temporal, TemporalContrastive, Total };

inline constexpr CheckedLoss kCheckedLosses[] = {CheckedLoss::Shared,   CheckedLoss::Private,
                                                 CheckedLoss::Orthogonality, CheckedLoss::Temporal,
                                                 CheckedLoss::TemporalContrastive, CheckedLoss::Total};

std::string_view to_string(CheckedLoss loss);

struct LossCheckOptions {
  int instances = 20;
  std::uint64_t seed = 1;
  double tolerance = 1e-6;
  double eps = 1e-5;
  int max_batch_sequences = 4;  // each instance draws B_seq uniformly from [2, max]
  int sequence_length = 4;
  int modalities = 2;
  // Perturbs one analytic gradient coordinate so the check must fail.
  bool inject_error = false;
};

struct LossCheckRow {
  CheckedLoss loss = CheckedLoss::Total;
  double max_rel_error = 0.0;
  std::string worst_parameter;
  int instances = 0;
  std::size_t coordinates = 0;
  bool passed = false;
};

/// Finite-difference verification of every loss composed with a small encoder
/// and its projection heads, on random spectra. Each instance builds a fresh
/// model and batch from the seed stream.
std::vector<LossCheckRow> check_loss_gradients(const LossCheckOptions& options);

/// Loss value for one of the checked objectives on the given model and batch
/// (two views per modality). With `backprop`, gradients are accumulated into the
/// model parameters after zeroing them.
double checked_loss_value(CheckedLoss which, FocalModel& model,
                          const std::array<std::vector<std::vector<ModalitySample>>, 2>& views,
                          std::span<const int> seq_of, const LossConfig& cfg, bool backprop);

}  // namespace focal
