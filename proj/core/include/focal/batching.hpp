#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "focal/augmentation.hpp"

namespace focal {

/// Fixed partition of the sample timeline into contiguous runs of `length`
/// samples. Built once before training and never changed.
struct SequenceIndex {
  int length = 4;
  std::vector<std::vector<std::size_t>> sequences;

  std::size_t size() const { return sequences.size(); }
};

/// A batch of `sequences` whole sequences. Slot s*length + t holds sample
/// `sample_refs[s*length + t]`, which belongs to batch-local sequence `seq_of[...] == s`.
struct SequenceBatch {
  int sequences = 0;
  int length = 0;
  std::vector<std::size_t> sample_refs;
  std::vector<int> seq_of;

  std::size_t size() const { return sample_refs.size(); }
};

/// Consecutive non-overlapping runs of L samples over [0, n); remainder dropped.
SequenceIndex build_sequences(std::size_t n_samples, int length);

/// As above, applied independently to each recording so that no sequence
/// straddles a run boundary.
SequenceIndex build_sequences(std::span<const std::size_t> run_lengths, int length);

/// Draws `batch_sequences` distinct sequences uniformly without replacement.
SequenceBatch sample_batch(const SequenceIndex& index, int batch_sequences, Rng& rng);

/// One epoch: shuffles the sequence order and cuts it into batches of
/// `batch_sequences`. Every sequence appears exactly once. A trailing batch
/// with a single sequence is merged into the previous one, since cross-sequence
/// negatives need at least two.
std::vector<SequenceBatch> epoch_batches(const SequenceIndex& index, int batch_sequences, Rng& rng);

}  // namespace focal
