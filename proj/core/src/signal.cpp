#include "focal/signal.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "focal/errors.hpp"

namespace focal {

int IntervalConfig::hop() const {
  if (interval_len <= 0) {
    throw ConfigError("interval_len must be positive");
  }
  if (!(overlap >= 0.0 && overlap < 1.0)) {
    throw ConfigError("overlap ratio must lie in [0, 1)");
  }
  const double exact = interval_len * (1.0 - overlap);
  const double rounded = std::round(exact);
  if (std::abs(exact - rounded) > 1e-9 || rounded < 1.0) {
    std::ostringstream os;
    os << "hop = interval_len * (1 - overlap) = " << exact << " is not a positive integer";
    throw ConfigError(os.str());
  }
  return static_cast<int>(rounded);
}

int IntervalConfig::intervals(int window_len) const {
  const int h = hop();
  if (interval_len > window_len) {
    std::ostringstream os;
    os << "interval_len " << interval_len << " exceeds window length " << window_len;
    throw InputError(os.str());
  }
  return 1 + (window_len - interval_len) / h;
}

void require_finite(const RawWindow& raw) {
  if (!raw.samples.allFinite()) {
    throw InputError("window for modality '" + raw.modality_id + "' contains NaN or Inf");
  }
}

std::vector<Eigen::MatrixXd> segment_window(const RawWindow& raw, const IntervalConfig& cfg) {
  const int n = cfg.interval_len;
  const int count = cfg.intervals(static_cast<int>(raw.length()));
  const int h = cfg.hop();
  std::vector<Eigen::MatrixXd> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    out.emplace_back(raw.samples.middleRows(static_cast<Eigen::Index>(i) * h, n).transpose());
  }
  return out;
}

ModalitySample stft(const RawWindow& raw, const IntervalConfig& cfg) {
  require_finite(raw);
  const int n = cfg.interval_len;
  const int h = cfg.hop();
  ModalitySample out;
  out.modality_id = raw.modality_id;
  out.channels = static_cast<int>(raw.channels());
  out.intervals = cfg.intervals(static_cast<int>(raw.length()));
  out.bins = cfg.bins();
  out.interval_len = n;
  out.overlap = cfg.overlap;
  out.spectrum.assign(static_cast<std::size_t>(out.channels) * out.intervals * out.bins, {});

  // twiddle[m] = exp(-2*pi*j*m/n); index k*t reduced mod n keeps the table exact.
  std::vector<std::complex<double>> twiddle(n);
  for (int m = 0; m < n; ++m) {
    const double angle = -2.0 * std::numbers::pi * m / n;
    twiddle[m] = {std::cos(angle), std::sin(angle)};
  }

  for (int c = 0; c < out.channels; ++c) {
    for (int i = 0; i < out.intervals; ++i) {
      const Eigen::Index start = static_cast<Eigen::Index>(i) * h;
      for (int k = 0; k < out.bins; ++k) {
        std::complex<double> acc{};
        for (int t = 0; t < n; ++t) {
          acc += raw.samples(start + t, c) * twiddle[(static_cast<long>(k) * t) % n];
        }
        out.at(c, i, k) = acc;
      }
    }
  }
  return out;
}

}  // namespace focal
