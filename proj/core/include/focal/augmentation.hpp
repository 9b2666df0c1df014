#pragma once

#include <array>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "focal/random.hpp"
#include "focal/signal.hpp"

namespace focal {

enum class AugmentationKind {
  Scaling,
  Permutation,
  Negation,
  TimeWarp,
  MagnitudeWarp,
  HorizontalFlip,
  Jitter,
  ChannelShuffle,
  TimeMasking,
  PhaseShift,
  FrequencyMasking,
};

enum class AugmentationDomain { Time, Frequency };

inline constexpr std::array<AugmentationKind, 11> kAllAugmentations = {
    AugmentationKind::Scaling,        AugmentationKind::Permutation,   AugmentationKind::Negation,
    AugmentationKind::TimeWarp,       AugmentationKind::MagnitudeWarp, AugmentationKind::HorizontalFlip,
    AugmentationKind::Jitter,         AugmentationKind::ChannelShuffle, AugmentationKind::TimeMasking,
    AugmentationKind::PhaseShift,     AugmentationKind::FrequencyMasking,
};

// Time-domain kinds act on the raw window; the last two act on the spectrum.
constexpr AugmentationDomain domain_of(AugmentationKind kind) {
  return kind == AugmentationKind::PhaseShift || kind == AugmentationKind::FrequencyMasking
             ? AugmentationDomain::Frequency
             : AugmentationDomain::Time;
}

std::string_view to_string(AugmentationKind kind);
/// Accepts the lowercase names used in config files ("timewarp", "phaseshift", ...).
AugmentationKind parse_augmentation(std::string_view name);

struct AugmentationParams {
  double scale_sigma = 0.1;
  double jitter_ratio = 0.05;  // noise std as a fraction of the channel std
  double magwarp_sigma = 0.2;
  int magwarp_knots = 4;
  double timewarp_sigma = 0.2;
  int timewarp_knots = 4;
  double time_mask_ratio = 0.125;
  double freq_mask_ratio = 0.1;
};

struct AugmentationPolicy {
  double apply_prob = 0.5;
  // One coin flip per view shared by every modality instead of one per modality.
  bool force_same_view = false;
  std::vector<AugmentationKind> catalog{kAllAugmentations.begin(), kAllAugmentations.end()};
  AugmentationParams params;

  void validate() const;
};

/// Uniform draw from `catalog`. Throws ConfigError if the catalog is empty.
AugmentationKind pick_augmentation(std::span<const AugmentationKind> catalog, Rng& rng);

/// Applies a time-domain augmentation. `intervals` fixes the unit used by
/// Permutation and TimeMasking (blocks of one hop). Throws UsageError for
/// frequency-domain kinds.
RawWindow augment(AugmentationKind kind, const RawWindow& input, const AugmentationParams& params,
                  const IntervalConfig& intervals, Rng& rng);

/// Applies a frequency-domain augmentation. Throws UsageError for time-domain kinds.
ModalitySample augment(AugmentationKind kind, const ModalitySample& input,
                       const AugmentationParams& params, Rng& rng);

/// Number of contiguous units a masking augmentation zeroes: ceil(ratio * n),
/// clamped to [0, n].
int masked_units(double ratio, int n);

struct TwoViews {
  std::array<std::vector<ModalitySample>, 2> views;  // [view][modality]
  std::array<AugmentationKind, 2> kinds{};
  std::array<std::vector<bool>, 2> applied;  // [view][modality]
};

/// Picks one augmentation per view and applies it to each modality with
/// probability `policy.apply_prob`, then transforms to spectrograms.
/// `intervals[j]` is the segmentation for modality j.
TwoViews make_two_views(std::span<const RawWindow> sample, const AugmentationPolicy& policy,
                        std::span<const IntervalConfig> intervals, Rng& rng);

}  // namespace focal
