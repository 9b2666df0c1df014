#include <catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "focal/errors.hpp"
#include "focal/signal.hpp"
#include "focal/synthetic.hpp"

using namespace focal;

namespace {

SynthConfig clean(InfoMode mode) {
  SynthConfig c;
  c.n_sequences = 24;
  c.noise_std = 0.0;
  c.info_mode = mode;
  return c;
}

// Interval-averaged magnitude per bin.
std::vector<double> magnitudes(const RawWindow& w, int interval_len) {
  const ModalitySample s = stft(w, IntervalConfig{interval_len, 0.0});
  std::vector<double> out(static_cast<std::size_t>(s.bins), 0.0);
  for (int i = 0; i < s.intervals; ++i) {
    for (int k = 0; k < s.bins; ++k) out[k] += std::abs(s.at(0, i, k)) / s.intervals;
  }
  return out;
}

Eigen::VectorXd flat_spectrum(const RawWindow& w, int interval_len) {
  const ModalitySample s = stft(w, IntervalConfig{interval_len, 0.0});
  Eigen::VectorXd v(2 * s.spectrum.size());
  for (std::size_t k = 0; k < s.spectrum.size(); ++k) {
    v(2 * k) = s.spectrum[k].real();
    v(2 * k + 1) = s.spectrum[k].imag();
  }
  return v;
}

}  // namespace

TEST_CASE("shared-only spectra peak at the class bin in every modality") {
  const SynthConfig cfg = clean(InfoMode::SharedOnly);
  const Dataset d = generate(cfg);
  const auto bins = cfg.resolved_shared_bins();
  REQUIRE(d.signals.size() == 96);
  for (std::size_t i = 0; i < d.signals.size(); ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      const auto m = magnitudes(d.signals.windows[j][i], cfg.interval_len);
      const auto peak = std::max_element(m.begin(), m.end()) - m.begin();
      CHECK(peak == bins[d.labels[i]]);
    }
  }
}

TEST_CASE("private-only class frequencies stay in their own modality") {
  const SynthConfig cfg = clean(InfoMode::PrivateOnly);
  const Dataset d = generate(cfg);
  const auto banks = cfg.resolved_private_bins();
  const int r = cfg.private_radix();
  CHECK(r == 2);
  for (std::size_t i = 0; i < d.signals.size(); ++i) {
    for (int j = 0; j < 2; ++j) {
      const auto m = magnitudes(d.signals.windows[j][i], cfg.interval_len);
      const int digit = (d.labels[i] / (j == 0 ? 1 : r)) % r;
      CHECK(std::max_element(m.begin(), m.end()) - m.begin() == banks[j][digit]);
      for (int other = 0; other < 2; ++other) {
        if (other == j) continue;
        for (int b : banks[other]) CHECK(m[b] < 1e-9);
      }
      for (int b : cfg.resolved_shared_bins()) {
        if (std::find(banks[j].begin(), banks[j].end(), b) == banks[j].end()) CHECK(m[b] < 1e-9);
      }
    }
  }
}

TEST_CASE("digit decomposition covers every class") {
  SynthConfig cfg;
  cfg.classes = 9;
  cfg.modalities = 3;
  cfg.interval_len = 40;
  CHECK(cfg.private_radix() == 3);
  cfg.classes = 6;
  cfg.modalities = 2;
  CHECK(cfg.private_radix() == 3);
  cfg.modalities = 1;
  CHECK(cfg.private_radix() == 6);
}

TEST_CASE("same seed gives a bit-identical dataset") {
  SynthConfig cfg;
  cfg.n_sequences = 8;
  const Dataset a = generate(cfg);
  const Dataset b = generate(cfg);
  CHECK(a.labels == b.labels);
  CHECK(a.signals.run_lengths == b.signals.run_lengths);
  for (std::size_t j = 0; j < 2; ++j) {
    for (std::size_t i = 0; i < a.signals.size(); ++i) {
      CHECK(a.signals.windows[j][i].samples == b.signals.windows[j][i].samples);
    }
  }
  cfg.seed = 2;
  CHECK(generate(cfg).signals.windows[0][0].samples != a.signals.windows[0][0].samples);
}

TEST_CASE("labels are constant within a sequence and runs match sequences") {
  SynthConfig cfg;
  cfg.n_sequences = 10;
  cfg.sequence_length = 3;
  const Dataset d = generate(cfg);
  CHECK(d.signals.run_lengths == std::vector<std::size_t>(10, 3));
  for (std::size_t s = 0; s < 10; ++s) {
    CHECK(d.labels[3 * s] == d.labels[3 * s + 1]);
    CHECK(d.labels[3 * s] == d.labels[3 * s + 2]);
  }
  CHECK(d.signals.windows[1][0].modality_id == "m1");
  CHECK(d.signals.windows[0][0].length() == 200);
}

TEST_CASE("intra-sequence spectra are closer than inter-sequence spectra") {
  SynthConfig cfg = clean(InfoMode::Mixed);
  cfg.n_sequences = 20;
  const Dataset d = generate(cfg);
  const std::size_t n = d.signals.size();
  for (std::size_t j = 0; j < 2; ++j) {
    std::vector<Eigen::VectorXd> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(flat_spectrum(d.signals.windows[j][i], cfg.interval_len));
    double intra = 0.0, inter = 0.0;
    long n_intra = 0, n_inter = 0;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        const double dist = (v[a] - v[b]).norm();
        if (a / 4 == b / 4) {
          intra += dist;
          ++n_intra;
        } else {
          inter += dist;
          ++n_inter;
        }
      }
    }
    CHECK(intra / n_intra < inter / n_inter);
  }
}

TEST_CASE("synthetic config validation") {
  SynthConfig cfg;
  cfg.interval_len = 8;  // bins must stay below 4, too few for 4 + 2 * 2
  CHECK_THROWS_AS(generate(cfg), ConfigError);
  cfg = {};
  cfg.shared_bins = {1, 2, 3, 5};
  cfg.private_bins = {{5, 6}, {7, 8}};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.classes = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(parse_info_mode("private_only") == InfoMode::PrivateOnly);
  CHECK(to_string(InfoMode::Mixed) == "mixed");
  CHECK_THROWS_AS(parse_info_mode("both"), ConfigError);
}

TEST_CASE("split sizes, disjointness and coverage") {
  SynthConfig cfg;
  cfg.n_sequences = 20;
  const Dataset d = generate(cfg);
  const DatasetSplits s = split(d, {0.8, 0.1, 0.1}, 4, 3);
  CHECK(s.train.signals.run_lengths.size() == 16);
  CHECK(s.val.signals.run_lengths.size() == 2);
  CHECK(s.test.signals.run_lengths.size() == 2);
  CHECK(s.train.signals.size() + s.val.signals.size() + s.test.signals.size() == d.signals.size());

  // Identify sequences by their first sample so overlap would show up.
  auto keys = [](const Dataset& part) {
    std::set<double> k;
    for (std::size_t i = 0; i < part.signals.size(); i += 4) k.insert(part.signals.windows[0][i].samples(0, 0));
    return k;
  };
  std::set<double> all;
  for (const Dataset* p : {&s.train, &s.val, &s.test}) {
    const auto k = keys(*p);
    all.insert(k.begin(), k.end());
  }
  CHECK(all.size() == 20);
  CHECK(all == keys(d));
  CHECK(s.train.num_classes == d.num_classes);

  const DatasetSplits t = split(d, {0.8, 0.1, 0.1}, 4, 3);
  CHECK(keys(t.val) == keys(s.val));
}

TEST_CASE("empty splits need explicit permission") {
  SynthConfig cfg;
  cfg.n_sequences = 6;
  const Dataset d = generate(cfg);
  CHECK_THROWS_AS(split(d, {1.0, 0.0, 0.0}, 4, 1), ConfigError);
  const DatasetSplits s = split(d, {1.0, 0.0, 0.0}, 4, 1, true);
  CHECK(s.train.signals.size() == 24);
  CHECK(s.val.signals.size() == 0);
  CHECK(s.test.signals.size() == 0);
  CHECK_THROWS_AS(split(d, {0.5, 0.1, 0.1}, 4, 1), ConfigError);
}
