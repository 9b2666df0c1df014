#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unordered_map>

#include "focal/dataset.hpp"
#include "focal/errors.hpp"
#include "fs_util.hpp"

namespace focal {

namespace detail {

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw PersistenceError("cannot open " + tmp.string() + " for writing");
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
      throw PersistenceError("short write to " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw PersistenceError("cannot open " + path.string());
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

}  // namespace detail

int SignalSet::window_length() const {
  if (windows.empty() || windows.front().empty()) {
    return 0;
  }
  return static_cast<int>(windows.front().front().length());
}

std::vector<std::size_t> SignalSet::run_offsets() const {
  std::vector<std::size_t> offsets(run_lengths.size() + 1, 0);
  for (std::size_t r = 0; r < run_lengths.size(); ++r) {
    offsets[r + 1] = offsets[r] + run_lengths[r];
  }
  return offsets;
}

SignalSet SignalSet::select_runs(std::span<const std::size_t> runs) const {
  const auto offsets = run_offsets();
  SignalSet out;
  out.modalities = modalities;
  out.windows.resize(modalities.size());
  for (std::size_t r : runs) {
    for (std::size_t j = 0; j < modalities.size(); ++j) {
      for (std::size_t i = offsets[r]; i < offsets[r + 1]; ++i) {
        out.windows[j].push_back(windows[j][i]);
      }
    }
    out.run_lengths.push_back(run_lengths[r]);
  }
  return out;
}

Dataset Dataset::select_runs(std::span<const std::size_t> runs) const {
  Dataset out;
  out.signals = signals.select_runs(runs);
  out.num_classes = num_classes;
  if (labeled()) {
    const auto offsets = signals.run_offsets();
    for (std::size_t r : runs) {
      out.labels.insert(out.labels.end(), labels.begin() + static_cast<long>(offsets[r]),
                        labels.begin() + static_cast<long>(offsets[r + 1]));
    }
  }
  return out;
}

CsvSchema CsvSchema::for_signals(const SignalSet& signals, bool with_labels) {
  CsvSchema schema;
  schema.window_length = signals.window_length();
  for (const auto& m : signals.modalities) {
    Modality mod{m.id, {}, m.sample_rate_hz};
    for (int c = 0; c < m.channels; ++c) {
      mod.columns.push_back(m.id + "_c" + std::to_string(c));
    }
    schema.modalities.push_back(std::move(mod));
  }
  if (with_labels) {
    schema.label_column = "label";
  }
  return schema;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  for (auto& f : fields) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
  }
  return fields;
}

template <typename T>
T parse_cell(std::string_view cell, long row, const std::string& column) {
  T value{};
  auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size() || cell.empty()) {
    std::ostringstream os;
    os << "row " << row << ", column '" << column << "': non-numeric cell '" << cell << "'";
    throw IngestError(os.str(), row, column);
  }
  return value;
}

}  // namespace

Dataset ingest_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  if (schema.window_length <= 0) {
    throw ConfigError("CSV schema window_length must be positive");
  }
  std::ifstream in(path);
  if (!in) {
    throw IngestError("cannot open " + path.string(), 0, "");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw IngestError(path.string() + ": missing header row", 1, "");
  }
  const auto header = split_fields(line);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i) {
    index.emplace(std::string(header[i]), i);
  }
  auto column_index = [&](const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) {
      throw IngestError(path.string() + ": missing column '" + name + "'", 1, name);
    }
    return it->second;
  };

  const std::size_t ts_col = column_index(schema.timestamp_column);
  std::vector<std::vector<std::size_t>> channel_cols;
  for (const auto& m : schema.modalities) {
    if (m.columns.empty()) {
      throw ConfigError("modality '" + m.id + "' declares no channel columns");
    }
    auto& cols = channel_cols.emplace_back();
    for (const auto& c : m.columns) {
      cols.push_back(column_index(c));
    }
  }
  std::optional<std::size_t> label_col;
  if (schema.label_column) {
    label_col = column_index(*schema.label_column);
  }

  // Column-per-channel buffers; cut into windows once the row count is known.
  std::vector<std::vector<std::vector<double>>> columns(schema.modalities.size());
  for (std::size_t j = 0; j < schema.modalities.size(); ++j) {
    columns[j].resize(schema.modalities[j].columns.size());
  }
  std::vector<int> row_labels;
  double last_ts = 0.0;
  long row = 1;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") {
      continue;
    }
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      std::ostringstream os;
      os << "row " << row << ": expected " << header.size() << " fields, found " << fields.size();
      throw IngestError(os.str(), row, "");
    }
    const double ts = parse_cell<double>(fields[ts_col], row, schema.timestamp_column);
    if (rows > 0 && !(ts > last_ts)) {
      std::ostringstream os;
      os << "row " << row << ", column '" << schema.timestamp_column
         << "': timestamps are not strictly increasing";
      throw IngestError(os.str(), row, schema.timestamp_column);
    }
    last_ts = ts;
    for (std::size_t j = 0; j < channel_cols.size(); ++j) {
      for (std::size_t c = 0; c < channel_cols[j].size(); ++c) {
        const auto& name = schema.modalities[j].columns[c];
        const double v = parse_cell<double>(fields[channel_cols[j][c]], row, name);
        if (!std::isfinite(v)) {
          throw IngestError("row " + std::to_string(row) + ", column '" + name + "': non-finite value",
                            row, name);
        }
        columns[j][c].push_back(v);
      }
    }
    if (label_col) {
      row_labels.push_back(parse_cell<int>(fields[*label_col], row, *schema.label_column));
    }
    ++rows;
  }

  const std::size_t win = static_cast<std::size_t>(schema.window_length);
  const std::size_t n_windows = rows / win;
  Dataset out;
  auto& sig = out.signals;
  sig.windows.resize(schema.modalities.size());
  for (std::size_t j = 0; j < schema.modalities.size(); ++j) {
    const auto& m = schema.modalities[j];
    sig.modalities.push_back({m.id, static_cast<int>(m.columns.size()), m.sample_rate_hz});
    for (std::size_t w = 0; w < n_windows; ++w) {
      RawWindow rw;
      rw.modality_id = m.id;
      rw.sample_rate_hz = m.sample_rate_hz;
      rw.samples.resize(static_cast<Eigen::Index>(win), static_cast<Eigen::Index>(m.columns.size()));
      for (std::size_t c = 0; c < m.columns.size(); ++c) {
        for (std::size_t t = 0; t < win; ++t) {
          rw.samples(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = columns[j][c][w * win + t];
        }
      }
      sig.windows[j].push_back(std::move(rw));
    }
  }
  if (n_windows > 0) {
    sig.run_lengths.push_back(n_windows);
  }
  if (label_col) {
    int max_label = -1;
    for (std::size_t w = 0; w < n_windows; ++w) {
      const int y = row_labels[w * win];
      if (y < 0) {
        const long r = static_cast<long>(w * win) + 2;
        throw IngestError("row " + std::to_string(r) + ": negative label", r, *schema.label_column);
      }
      out.labels.push_back(y);
      max_label = std::max(max_label, y);
    }
    out.num_classes = max_label + 1;
  }
  return out;
}

void export_csv(const Dataset& data, const CsvSchema& schema, const std::filesystem::path& path) {
  const auto& sig = data.signals;
  if (schema.modalities.size() != sig.num_modalities()) {
    throw UsageError("CSV schema modality count does not match the dataset");
  }
  std::ostringstream os;
  os << schema.timestamp_column;
  for (const auto& m : schema.modalities) {
    for (const auto& c : m.columns) {
      os << ',' << c;
    }
  }
  if (schema.label_column) {
    os << ',' << *schema.label_column;
  }
  os << '\n';
  const double rate = schema.modalities.empty() ? 1.0 : schema.modalities.front().sample_rate_hz;
  long row = 0;
  for (std::size_t i = 0; i < sig.size(); ++i) {
    const auto len = sig.windows.front()[i].length();
    for (Eigen::Index t = 0; t < len; ++t, ++row) {
      os << detail::format_double(static_cast<double>(row) / rate);
      for (std::size_t j = 0; j < sig.num_modalities(); ++j) {
        const auto& w = sig.windows[j][i];
        for (Eigen::Index c = 0; c < w.channels(); ++c) {
          os << ',' << detail::format_double(w.samples(t, c));
        }
      }
      if (schema.label_column) {
        os << ',' << (data.labeled() ? data.labels[i] : 0);
      }
      os << '\n';
    }
  }
  detail::write_file_atomic(path, os.str());
}

}  // namespace focal
