#pragma once

#include <filesystem>

#include "focal/config.hpp"
#include "focal/synthetic.hpp"

namespace focal {

/// Writes train.csv, val.csv, test.csv and a manifest.json describing the CSV
/// schema, class count, run lengths of every split and the generating config.
void write_dataset_dir(const std::filesystem::path& dir, const DatasetSplits& splits, const RunConfig& config);

/// Reads a directory written by write_dataset_dir. Throws PersistenceError for
/// a missing or malformed manifest and IngestError for bad CSV content.
DatasetSplits read_dataset_dir(const std::filesystem::path& dir);

}  // namespace focal
