#include "focal/batching.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "focal/errors.hpp"

namespace focal {

namespace {

SequenceBatch assemble(const SequenceIndex& index, std::span<const std::size_t> chosen) {
  SequenceBatch batch;
  batch.sequences = static_cast<int>(chosen.size());
  batch.length = index.length;
  batch.sample_refs.reserve(chosen.size() * static_cast<std::size_t>(index.length));
  for (std::size_t s = 0; s < chosen.size(); ++s) {
    for (std::size_t ref : index.sequences[chosen[s]]) {
      batch.sample_refs.push_back(ref);
      batch.seq_of.push_back(static_cast<int>(s));
    }
  }
  return batch;
}

}  // namespace

SequenceIndex build_sequences(std::size_t n_samples, int length) {
  const std::size_t runs[] = {n_samples};
  return build_sequences(runs, length);
}

SequenceIndex build_sequences(std::span<const std::size_t> run_lengths, int length) {
  if (length < 1) {
    throw ConfigError("sequence_length must be positive");
  }
  SequenceIndex index;
  index.length = length;
  const auto L = static_cast<std::size_t>(length);
  std::size_t offset = 0;
  for (std::size_t run : run_lengths) {
    for (std::size_t start = 0; start + L <= run; start += L) {
      auto& seq = index.sequences.emplace_back(L);
      std::iota(seq.begin(), seq.end(), offset + start);
    }
    offset += run;
  }
  if (index.sequences.empty()) {
    throw ConfigError("not enough samples (" + std::to_string(offset) + ") for one sequence of length " +
                      std::to_string(length));
  }
  return index;
}

SequenceBatch sample_batch(const SequenceIndex& index, int batch_sequences, Rng& rng) {
  if (batch_sequences < 1 || static_cast<std::size_t>(batch_sequences) > index.size()) {
    throw ConfigError("batch_sequences " + std::to_string(batch_sequences) + " exceeds the " +
                      std::to_string(index.size()) + " available sequences");
  }
  std::vector<std::size_t> order(index.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(static_cast<std::size_t>(batch_sequences));
  return assemble(index, order);
}

std::vector<SequenceBatch> epoch_batches(const SequenceIndex& index, int batch_sequences, Rng& rng) {
  if (batch_sequences < 2) {
    throw ConfigError("batch_sequences must be at least 2");
  }
  if (index.size() < 2) {
    throw ConfigError("training needs at least two sequences");
  }
  std::vector<std::size_t> order(index.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  const auto per = static_cast<std::size_t>(batch_sequences);
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  for (std::size_t start = 0; start < order.size(); start += per) {
    spans.emplace_back(start, std::min(order.size(), start + per));
  }
  if (spans.size() > 1 && spans.back().second - spans.back().first < 2) {
    spans[spans.size() - 2].second = spans.back().second;
    spans.pop_back();
  }
  std::vector<SequenceBatch> batches;
  for (auto [lo, hi] : spans) {
    batches.push_back(assemble(index, std::span(order).subspan(lo, hi - lo)));
  }
  return batches;
}

}  // namespace focal
