#include "focal/dataset_dir.hpp"

#include <numeric>

#include <nlohmann/json.hpp>

#include "focal/errors.hpp"
#include "fs_util.hpp"

namespace focal {

using nlohmann::json;

namespace {

constexpr int kDatasetFormatVersion = 1;
constexpr const char* kSplitNames[] = {"train", "val", "test"};

json schema_json(const CsvSchema& s) {
  json mods = json::array();
  for (const auto& m : s.modalities) {
    mods.push_back({{"id", m.id}, {"columns", m.columns}, {"sample_rate_hz", m.sample_rate_hz}});
  }
  json out = {{"timestamp_column", s.timestamp_column}, {"modalities", mods}, {"window_length", s.window_length}};
  out["label_column"] = s.label_column ? json(*s.label_column) : json(nullptr);
  return out;
}

CsvSchema schema_from_json(const json& j) {
  CsvSchema s;
  s.timestamp_column = j.at("timestamp_column").get<std::string>();
  s.window_length = j.at("window_length").get<int>();
  for (const auto& m : j.at("modalities")) {
    s.modalities.push_back({m.at("id").get<std::string>(), m.at("columns").get<std::vector<std::string>>(),
                            m.at("sample_rate_hz").get<double>()});
  }
  if (!j.at("label_column").is_null()) s.label_column = j.at("label_column").get<std::string>();
  return s;
}

}  // namespace

void write_dataset_dir(const std::filesystem::path& dir, const DatasetSplits& splits, const RunConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw PersistenceError("cannot create " + dir.string() + ": " + ec.message());
  const Dataset* parts[] = {&splits.train, &splits.val, &splits.test};
  const CsvSchema schema = CsvSchema::for_signals(splits.train.signals, splits.train.labeled());
  json manifest = {{"format_version", kDatasetFormatVersion},
                   {"schema", schema_json(schema)},
                   {"num_classes", splits.train.num_classes},
                   {"config", config_to_json(config)},
                   {"splits", json::object()}};
  for (int k = 0; k < 3; ++k) {
    const std::string file = std::string(kSplitNames[k]) + ".csv";
    if (parts[k]->signals.size() > 0) export_csv(*parts[k], schema, dir / file);
    manifest["splits"][kSplitNames[k]] = {{"file", file},
                                          {"samples", parts[k]->signals.size()},
                                          {"run_lengths", parts[k]->signals.run_lengths}};
  }
  detail::write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

DatasetSplits read_dataset_dir(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw PersistenceError("dataset manifest not found: " + manifest_path.string());
  }
  DatasetSplits out;
  Dataset* parts[] = {&out.train, &out.val, &out.test};
  try {
    const json manifest = json::parse(detail::read_file(manifest_path));
    if (manifest.at("format_version").get<int>() != kDatasetFormatVersion) {
      throw PersistenceError(manifest_path.string() + ": unsupported format_version");
    }
    const CsvSchema schema = schema_from_json(manifest.at("schema"));
    const int classes = manifest.at("num_classes").get<int>();
    for (int k = 0; k < 3; ++k) {
      const json& entry = manifest.at("splits").at(kSplitNames[k]);
      const auto runs = entry.at("run_lengths").get<std::vector<std::size_t>>();
      const auto expected = entry.at("samples").get<std::size_t>();
      if (expected == 0) {
        parts[k]->signals.modalities.clear();
        for (const auto& m : schema.modalities) {
          parts[k]->signals.modalities.push_back({m.id, static_cast<int>(m.columns.size()), m.sample_rate_hz});
        }
        parts[k]->signals.windows.assign(schema.modalities.size(), {});
        parts[k]->num_classes = classes;
        continue;
      }
      Dataset d = ingest_csv(dir / entry.at("file").get<std::string>(), schema);
      if (d.signals.size() != expected || std::accumulate(runs.begin(), runs.end(), std::size_t{0}) != expected) {
        throw PersistenceError(dir.string() + ": split '" + kSplitNames[k] + "' has " +
                               std::to_string(d.signals.size()) + " windows, manifest declares " +
                               std::to_string(expected));
      }
      d.signals.run_lengths = runs;
      d.num_classes = classes;
      *parts[k] = std::move(d);
    }
  } catch (const nlohmann::json::exception& e) {
    throw PersistenceError(manifest_path.string() + ": malformed manifest: " + e.what());
  }
  return out;
}

}  // namespace focal
