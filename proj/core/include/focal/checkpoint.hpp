#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "focal/config.hpp"
#include "focal/trainer.hpp"

namespace focal {

inline constexpr int kCheckpointFormatVersion = 1;

/// A checkpoint directory holds `manifest.json` (tensor table, config snapshot,
/// encoder input shapes, rng state, counters) and `tensors.bin` (raw
/// little-endian float64 arrays at the manifest offsets). Tensors are every
/// model parameter plus the Adam first and second moments ("adam.m/<name>",
/// "adam.v/<name>"). Both files are written atomically.
void save_checkpoint(const std::filesystem::path& dir, const TrainState& state, const RunConfig& config);

struct LoadedCheckpoint {
  RunConfig config;
  TrainState state;
};

/// Throws PersistenceError if files are missing, the manifest is malformed,
/// offsets overlap or run past the payload, the payload size disagrees with the
/// manifest, or a model parameter is missing or duplicated.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);

/// Appends one JSON object per line and flushes after each record.
class MetricsWriter {
 public:
  MetricsWriter() = default;
  MetricsWriter(const std::filesystem::path& path, bool append);

  void write(const nlohmann::json& record);
  bool is_open() const { return out_.is_open(); }

 private:
  std::ofstream out_;
};

}  // namespace focal
