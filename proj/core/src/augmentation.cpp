#include "focal/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "focal/errors.hpp"

namespace focal {

namespace {

constexpr std::array<std::string_view, 11> kNames = {
    "scaling", "permutation", "negation", "timewarp", "magnitudewarp", "horizontalflip",
    "jitter",  "channelshuffle", "timemasking", "phaseshift", "frequencymasking",
};

// Smooth random curve through `knots + 2` equally spaced values ~ N(1, sigma^2)
// spanning [0, length - 1], sampled at every integer time step.
std::vector<double> random_spline_curve(int length, int knots, double sigma, Rng& rng) {
  if (knots < 1) {
    throw ConfigError("spline augmentations need at least one interior knot");
  }
  std::normal_distribution<double> draw(1.0, sigma);
  std::vector<double> values(static_cast<std::size_t>(knots) + 2);
  for (auto& v : values) v = draw(rng);
  std::vector<double> curve(length, values.front());
  if (length < 2) {
    return curve;
  }
  const double step = static_cast<double>(length - 1) / static_cast<double>(values.size() - 1);
  // Zero end slopes let the spline work with as few as three points.
  boost::math::interpolators::cardinal_cubic_b_spline<double> spline(values.data(), values.size(), 0.0, step,
                                                                     0.0, 0.0);
  for (int t = 0; t < length; ++t) {
    curve[t] = spline(std::min(static_cast<double>(t), step * static_cast<double>(values.size() - 1)));
  }
  return curve;
}

RawWindow time_warp(const RawWindow& input, const AugmentationParams& p, Rng& rng) {
  const int len = static_cast<int>(input.length());
  RawWindow out = input;
  if (len < 2) {
    return out;
  }
  auto speed = random_spline_curve(len, p.timewarp_knots, p.timewarp_sigma, rng);
  // Cumulative positive speed gives a monotone time map; rescale onto [0, len-1].
  std::vector<double> warped(len, 0.0);
  for (int t = 1; t < len; ++t) {
    warped[t] = warped[t - 1] + std::max(speed[t], 1e-3);
  }
  const double scale = (len - 1) / warped.back();
  for (auto& w : warped) w *= scale;
  warped.back() = len - 1;
  for (Eigen::Index c = 0; c < input.channels(); ++c) {
    for (int t = 0; t < len; ++t) {
      const double pos = warped[t];
      const int lo = std::min(static_cast<int>(std::floor(pos)), len - 2);
      const double frac = pos - lo;
      out.samples(t, c) = (1.0 - frac) * input.samples(lo, c) + frac * input.samples(lo + 1, c);
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(AugmentationKind kind) { return kNames[static_cast<std::size_t>(kind)]; }

AugmentationKind parse_augmentation(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) {
      return static_cast<AugmentationKind>(i);
    }
  }
  throw ConfigError("unknown augmentation '" + std::string(name) + "'");
}

void AugmentationPolicy::validate() const {
  if (!(apply_prob >= 0.0 && apply_prob <= 1.0)) {
    throw ConfigError("augmentation apply_prob must lie in [0, 1]");
  }
  if (catalog.empty()) {
    throw ConfigError("augmentation catalog is empty");
  }
  if (params.time_mask_ratio < 0 || params.time_mask_ratio > 1 || params.freq_mask_ratio < 0 ||
      params.freq_mask_ratio > 1) {
    throw ConfigError("masking ratios must lie in [0, 1]");
  }
  if (params.scale_sigma < 0 || params.jitter_ratio < 0 || params.magwarp_sigma < 0 ||
      params.timewarp_sigma < 0) {
    throw ConfigError("augmentation standard deviations must be non-negative");
  }
  if (params.magwarp_knots < 1 || params.timewarp_knots < 1) {
    throw ConfigError("spline augmentations need at least one interior knot");
  }
}

AugmentationKind pick_augmentation(std::span<const AugmentationKind> catalog, Rng& rng) {
  if (catalog.empty()) {
    throw ConfigError("augmentation catalog is empty");
  }
  std::uniform_int_distribution<std::size_t> pick(0, catalog.size() - 1);
  return catalog[pick(rng)];
}

int masked_units(double ratio, int n) {
  const int m = static_cast<int>(std::ceil(ratio * n - 1e-12));
  return std::clamp(m, 0, n);
}

RawWindow augment(AugmentationKind kind, const RawWindow& input, const AugmentationParams& p,
                  const IntervalConfig& intervals, Rng& rng) {
  if (domain_of(kind) != AugmentationDomain::Time) {
    throw UsageError(std::string(to_string(kind)) + " is a frequency-domain augmentation");
  }
  RawWindow out = input;
  const Eigen::Index len = input.length();
  switch (kind) {
    case AugmentationKind::Scaling: {
      std::normal_distribution<double> draw(1.0, p.scale_sigma);
      out.samples *= draw(rng);
      break;
    }
    case AugmentationKind::Permutation: {
      const int hop = intervals.hop();
      const int units = static_cast<int>(len / hop);
      std::vector<int> order(units);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (int u = 0; u < units; ++u) {
        out.samples.middleRows(static_cast<Eigen::Index>(u) * hop, hop) =
            input.samples.middleRows(static_cast<Eigen::Index>(order[u]) * hop, hop);
      }
      break;
    }
    case AugmentationKind::Negation:
      out.samples = -input.samples;
      break;
    case AugmentationKind::TimeWarp:
      out = time_warp(input, p, rng);
      break;
    case AugmentationKind::MagnitudeWarp: {
      for (Eigen::Index c = 0; c < input.channels(); ++c) {
        auto curve = random_spline_curve(static_cast<int>(len), p.magwarp_knots, p.magwarp_sigma, rng);
        for (Eigen::Index t = 0; t < len; ++t) {
          out.samples(t, c) = input.samples(t, c) * curve[t];
        }
      }
      break;
    }
    case AugmentationKind::HorizontalFlip:
      out.samples = input.samples.colwise().reverse();
      break;
    case AugmentationKind::Jitter: {
      for (Eigen::Index c = 0; c < input.channels(); ++c) {
        const auto col = input.samples.col(c);
        const double mean = col.mean();
        const double var = len > 1 ? (col.array() - mean).square().sum() / static_cast<double>(len - 1) : 0.0;
        std::normal_distribution<double> noise(0.0, p.jitter_ratio * std::sqrt(var));
        for (Eigen::Index t = 0; t < len; ++t) {
          out.samples(t, c) += noise(rng);
        }
      }
      break;
    }
    case AugmentationKind::ChannelShuffle: {
      std::vector<Eigen::Index> order(input.channels());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (Eigen::Index c = 0; c < input.channels(); ++c) {
        out.samples.col(c) = input.samples.col(order[c]);
      }
      break;
    }
    case AugmentationKind::TimeMasking: {
      const int hop = intervals.hop();
      const int units = static_cast<int>(len / hop);
      const int masked = masked_units(p.time_mask_ratio, units);
      if (masked > 0) {
        std::uniform_int_distribution<int> start(0, units - masked);
        const int s = start(rng);
        out.samples.middleRows(static_cast<Eigen::Index>(s) * hop, static_cast<Eigen::Index>(masked) * hop)
            .setZero();
      }
      break;
    }
    case AugmentationKind::PhaseShift:
    case AugmentationKind::FrequencyMasking:
      break;  // unreachable, rejected above
  }
  return out;
}

ModalitySample augment(AugmentationKind kind, const ModalitySample& input, const AugmentationParams& p,
                       Rng& rng) {
  if (domain_of(kind) != AugmentationDomain::Frequency) {
    throw UsageError(std::string(to_string(kind)) + " is a time-domain augmentation");
  }
  ModalitySample out = input;
  if (kind == AugmentationKind::PhaseShift) {
    std::uniform_real_distribution<double> draw(-std::numbers::pi, std::numbers::pi);
    const std::complex<double> rotation = std::polar(1.0, draw(rng));
    for (auto& z : out.spectrum) z *= rotation;
  } else {
    const int masked = masked_units(p.freq_mask_ratio, input.bins);
    if (masked > 0) {
      std::uniform_int_distribution<int> start(0, input.bins - masked);
      const int s = start(rng);
      for (int c = 0; c < input.channels; ++c) {
        for (int i = 0; i < input.intervals; ++i) {
          for (int k = s; k < s + masked; ++k) {
            out.at(c, i, k) = {};
          }
        }
      }
    }
  }
  return out;
}

TwoViews make_two_views(std::span<const RawWindow> sample, const AugmentationPolicy& policy,
                        std::span<const IntervalConfig> intervals, Rng& rng) {
  if (intervals.size() != sample.size()) {
    throw UsageError("one interval config per modality is required");
  }
  TwoViews out;
  std::bernoulli_distribution coin(policy.apply_prob);
  for (int v = 0; v < 2; ++v) {
    const AugmentationKind kind = pick_augmentation(policy.catalog, rng);
    out.kinds[v] = kind;
    const bool shared_coin = policy.force_same_view ? coin(rng) : false;
    for (std::size_t j = 0; j < sample.size(); ++j) {
      const bool apply = policy.force_same_view ? shared_coin : coin(rng);
      out.applied[v].push_back(apply);
      if (!apply) {
        out.views[v].push_back(stft(sample[j], intervals[j]));
      } else if (domain_of(kind) == AugmentationDomain::Time) {
        out.views[v].push_back(stft(augment(kind, sample[j], policy.params, intervals[j], rng), intervals[j]));
      } else {
        out.views[v].push_back(augment(kind, stft(sample[j], intervals[j]), policy.params, rng));
      }
    }
  }
  return out;
}

}  // namespace focal
