#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace focal {

/// One fixed-length multichannel window of a single modality, before the STFT.
/// Rows are time steps, columns are channels.
struct RawWindow {
  Eigen::MatrixXd samples;
  double sample_rate_hz = 1.0;
  std::string modality_id;

  Eigen::Index length() const { return samples.rows(); }
  Eigen::Index channels() const { return samples.cols(); }
};

/// Interval segmentation applied before the per-interval DFT.
struct IntervalConfig {
  int interval_len = 20;
  double overlap = 0.0;

  /// Hop between interval starts. Throws ConfigError unless it is a positive
  /// integer.
  int hop() const;
  /// Number of intervals covering a window of `window_len` samples.
  int intervals(int window_len) const;
  int bins() const { return interval_len / 2 + 1; }
};

/// Complex one-sided spectrogram of one modality, laid out [channel][interval][bin].
struct ModalitySample {
  std::string modality_id;
  int channels = 0;
  int intervals = 0;
  int bins = 0;
  int interval_len = 0;
  double overlap = 0.0;
  std::vector<std::complex<double>> spectrum;

  std::size_t offset(int c, int i, int k) const {
    return (static_cast<std::size_t>(c) * intervals + i) * bins + k;
  }
  std::complex<double>& at(int c, int i, int k) { return spectrum[offset(c, i, k)]; }
  const std::complex<double>& at(int c, int i, int k) const {
    return spectrum[offset(c, i, k)];
  }
};

/// Splits a window into intervals of `cfg.interval_len` samples spaced `cfg.hop()`
/// apart. Each returned matrix is channels x interval_len.
std::vector<Eigen::MatrixXd> segment_window(const RawWindow& raw, const IntervalConfig& cfg);

/// Rectangular-window STFT: bin k of interval i of channel c is
/// sum_t x[start_i + t] * exp(-2*pi*j*k*t/n) for k in [0, n/2].
ModalitySample stft(const RawWindow& raw, const IntervalConfig& cfg);

/// Throws InputError if any sample is NaN or infinite.
void require_finite(const RawWindow& raw);

}  // namespace focal
