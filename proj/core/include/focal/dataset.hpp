#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "focal/signal.hpp"

namespace focal {

struct ModalityInfo {
  std::string id;
  int channels = 1;
  double sample_rate_hz = 1.0;
};

/// Label-free multimodal windows. `windows[j][i]` is modality j of sample i.
/// Samples are stored in source order; `run_lengths` marks contiguous recordings
/// that temporal sequences must not cross.
struct SignalSet {
  std::vector<ModalityInfo> modalities;
  std::vector<std::vector<RawWindow>> windows;
  std::vector<std::size_t> run_lengths;

  std::size_t size() const { return windows.empty() ? 0 : windows.front().size(); }
  std::size_t num_modalities() const { return modalities.size(); }
  int window_length() const;

  /// Gathers whole runs (by index) into a new set, preserving their order.
  SignalSet select_runs(std::span<const std::size_t> runs) const;
  std::vector<std::size_t> run_offsets() const;
};

/// Signals plus per-sample class labels (empty when unlabeled).
struct Dataset {
  SignalSet signals;
  std::vector<int> labels;
  int num_classes = 0;

  bool labeled() const { return !labels.empty(); }
  Dataset select_runs(std::span<const std::size_t> runs) const;
};

/// Column layout of an ingestible CSV file: one timestamp column, one column per
/// (modality, channel), and an optional integer label column.
struct CsvSchema {
  struct Modality {
    std::string id;
    std::vector<std::string> columns;
    double sample_rate_hz = 1.0;
  };

  std::string timestamp_column = "timestamp";
  std::vector<Modality> modalities;
  std::optional<std::string> label_column;
  int window_length = 200;

  /// Default layout for a dataset: columns named `<modality>_c<channel>`.
  static CsvSchema for_signals(const SignalSet& signals, bool with_labels);
};

/// Reads one contiguous recording. Rows are cut into consecutive non-overlapping
/// windows of `schema.window_length`; a partial trailing window is dropped. Each
/// window takes the label of its first row. Throws IngestError naming the row and
/// column on malformed input.
Dataset ingest_csv(const std::filesystem::path& path, const CsvSchema& schema);

/// Writes a dataset in the layout ingest_csv reads. Values are written in
/// shortest round-trip form, so ingestion reproduces them exactly.
void export_csv(const Dataset& data, const CsvSchema& schema, const std::filesystem::path& path);

}  // namespace focal
