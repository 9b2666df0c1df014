#include "focal/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <string>

#include "focal/batching.hpp"
#include "focal/errors.hpp"
#include "focal/random.hpp"

namespace focal {

std::string_view to_string(InfoMode mode) {
  switch (mode) {
    case InfoMode::SharedOnly:
      return "shared_only";
    case InfoMode::PrivateOnly:
      return "private_only";
    case InfoMode::Mixed:
      return "mixed";
  }
  return "mixed";
}

InfoMode parse_info_mode(std::string_view name) {
  if (name == "shared_only") return InfoMode::SharedOnly;
  if (name == "private_only") return InfoMode::PrivateOnly;
  if (name == "mixed") return InfoMode::Mixed;
  throw ConfigError("unknown info_mode '" + std::string(name) + "'");
}

int SynthConfig::private_radix() const {
  int r = 1;
  while (std::pow(static_cast<double>(r), modalities) < classes) ++r;
  return std::max(r, 2);
}

std::vector<int> SynthConfig::resolved_shared_bins() const {
  if (!shared_bins.empty()) return shared_bins;
  std::vector<int> bins(classes);
  std::iota(bins.begin(), bins.end(), 1);
  return bins;
}

std::vector<std::vector<int>> SynthConfig::resolved_private_bins() const {
  if (!private_bins.empty()) return private_bins;
  const bool has_shared = info_mode != InfoMode::PrivateOnly;
  int next = 1 + (has_shared ? static_cast<int>(resolved_shared_bins().size()) : 0);
  if (!shared_bins.empty() && has_shared) next = *std::max_element(shared_bins.begin(), shared_bins.end()) + 1;
  std::vector<std::vector<int>> banks(modalities);
  for (auto& bank : banks) {
    for (int d = 0; d < private_radix(); ++d) bank.push_back(next++);
  }
  return banks;
}

void SynthConfig::validate() const {
  if (n_sequences < 1 || sequence_length < 1 || modalities < 1 || channels < 1 || window_length < 1 ||
      classes < 1 || interval_len < 2) {
    throw ConfigError("synthetic data counts must be positive");
  }
  if (!(sample_rate_hz > 0)) throw ConfigError("sample_rate_hz must be positive");
  if (drift_strength < 0 || drift_step < 0 || noise_std < 0) {
    throw ConfigError("drift and noise scales must be non-negative");
  }
  const int nyquist = interval_len / 2;
  std::set<int> used;
  auto claim = [&](int bin, const std::string& bank) {
    if (bin <= 0 || bin >= nyquist) {
      throw ConfigError(bank + " bin " + std::to_string(bin) + " outside (0, " + std::to_string(nyquist) + ")");
    }
    if (!used.insert(bin).second) {
      throw ConfigError("frequency collision: bin " + std::to_string(bin) + " is used twice (" + bank + ")");
    }
  };
  if (info_mode != InfoMode::PrivateOnly) {
    const auto bins = resolved_shared_bins();
    if (static_cast<int>(bins.size()) < classes) throw ConfigError("shared bank needs one bin per class");
    for (int b : bins) claim(b, "shared");
  }
  if (info_mode != InfoMode::SharedOnly) {
    const auto banks = resolved_private_bins();
    if (static_cast<int>(banks.size()) != modalities) throw ConfigError("need one private bank per modality");
    for (std::size_t j = 0; j < banks.size(); ++j) {
      if (static_cast<int>(banks[j].size()) < private_radix()) {
        throw ConfigError("private bank " + std::to_string(j) + " needs " + std::to_string(private_radix()) + " bins");
      }
      for (int b : banks[j]) claim(b, "private[" + std::to_string(j) + "]");
    }
  }
}

Dataset generate(const SynthConfig& cfg) {
  cfg.validate();
  const auto shared_bins = cfg.resolved_shared_bins();
  const auto private_bins = cfg.resolved_private_bins();
  const bool use_shared = cfg.info_mode != InfoMode::PrivateOnly;
  const bool use_private = cfg.info_mode != InfoMode::SharedOnly;
  const int radix = cfg.private_radix();

  Rng rng(cfg.seed);
  std::uniform_int_distribution<int> pick_class(0, cfg.classes - 1);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Dataset data;
  data.num_classes = cfg.classes;
  auto& sig = data.signals;
  sig.windows.resize(cfg.modalities);
  for (int j = 0; j < cfg.modalities; ++j) {
    sig.modalities.push_back({"m" + std::to_string(j), cfg.channels, cfg.sample_rate_hz});
  }
  const double two_pi_over_n = 2.0 * std::numbers::pi / cfg.interval_len;

  for (int s = 0; s < cfg.n_sequences; ++s) {
    const int y = pick_class(rng);
    const double phi = phase(rng);
    std::vector<double> psi(cfg.modalities);
    for (auto& p : psi) p = phase(rng);
    double w = gauss(rng);
    for (int t = 0; t < cfg.sequence_length; ++t) {
      if (t > 0) w += cfg.drift_step * gauss(rng);
      const double amp = std::max(0.1, 1.0 + cfg.drift_strength * w);
      for (int j = 0; j < cfg.modalities; ++j) {
        int digit = y;
        for (int d = 0; d < j; ++d) digit /= radix;
        digit %= radix;
        RawWindow win;
        win.modality_id = sig.modalities[j].id;
        win.sample_rate_hz = cfg.sample_rate_hz;
        win.samples.resize(cfg.window_length, cfg.channels);
        for (int c = 0; c < cfg.channels; ++c) {
          for (int k = 0; k < cfg.window_length; ++k) {
            const double u = static_cast<double>(t) * cfg.window_length + k;
            double v = 0.0;
            if (use_shared) v += cfg.shared_amplitude * std::sin(two_pi_over_n * shared_bins[y] * u + phi);
            if (use_private) v += cfg.private_amplitude * std::sin(two_pi_over_n * private_bins[j][digit] * u + psi[j]);
            win.samples(k, c) = amp * v;
          }
        }
        if (cfg.noise_std > 0.0) {
          for (Eigen::Index k = 0; k < win.samples.size(); ++k) win.samples.data()[k] += cfg.noise_std * gauss(rng);
        }
        sig.windows[j].push_back(std::move(win));
      }
      data.labels.push_back(y);
    }
    sig.run_lengths.push_back(static_cast<std::size_t>(cfg.sequence_length));
  }
  return data;
}

DatasetSplits split(const Dataset& data, std::array<double, 3> ratios, int sequence_length, std::uint64_t seed,
                    bool allow_empty) {
  for (double r : ratios) {
    if (r < 0.0) throw ConfigError("split ratios must be non-negative");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");

  // Re-express the dataset with one run per sequence.
  const SequenceIndex index = build_sequences(data.signals.run_lengths, sequence_length);
  Dataset flat;
  flat.num_classes = data.num_classes;
  flat.signals.modalities = data.signals.modalities;
  flat.signals.windows.resize(data.signals.num_modalities());
  for (const auto& seq : index.sequences) {
    for (std::size_t i : seq) {
      for (std::size_t j = 0; j < data.signals.num_modalities(); ++j) {
        flat.signals.windows[j].push_back(data.signals.windows[j][i]);
      }
      if (data.labeled()) flat.labels.push_back(data.labels[i]);
    }
    flat.signals.run_lengths.push_back(seq.size());
  }

  const auto n = static_cast<long>(index.size());
  const long n_val = std::lround(ratios[1] * static_cast<double>(n));
  const long n_test = std::lround(ratios[2] * static_cast<double>(n));
  const long n_train = n - n_val - n_test;
  if (n_train < 0) throw ConfigError("split ratios leave no room for the training split");
  if (!allow_empty && (n_train == 0 || n_val == 0 || n_test == 0)) {
    throw ConfigError("split (" + std::to_string(n_train) + "/" + std::to_string(n_val) + "/" +
                      std::to_string(n_test) + " sequences) leaves a split empty");
  }
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  auto take = [&](long from, long count) {
    std::vector<std::size_t> ids(order.begin() + from, order.begin() + from + count);
    std::sort(ids.begin(), ids.end());
    return flat.select_runs(ids);
  };
  return {take(0, n_train), take(n_train, n_val), take(n_train + n_val, n_test)};
}

}  // namespace focal
