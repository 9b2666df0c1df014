#include "focal/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "focal/errors.hpp"
#include "fs_util.hpp"

namespace focal {

namespace {

bool numeric_cell(const std::string& s) {
  if (s.empty()) return false;
  const char c = s.front();
  return (c >= '0' && c <= '9') || c == '-' || c == '+' || c == '.';
}

// Display width in code points, so "±" counts as one column.
std::size_t display_width(const std::string& s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0U) != 0x80U;
  }));
}

}  // namespace

void ReportTable::add_row(std::vector<std::string> row) {
  if (row.size() != columns.size()) throw UsageError("report row has the wrong number of cells");
  rows.push_back(std::move(row));
}

std::string ReportTable::render() const {
  std::vector<std::size_t> width(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) width[c] = display_width(columns[c]);
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], display_width(r[c]));
  }
  auto line = [&](const std::vector<std::string>& cells, bool header) {
    std::string out;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string pad(width[c] - display_width(cells[c]), ' ');
      if (c > 0) out += "  ";
      if (!header && numeric_cell(cells[c])) {
        out += pad + cells[c];
      } else {
        out += cells[c] + (c + 1 < cells.size() ? pad : "");
      }
    }
    return out + "\n";
  };
  std::string out = line(columns, true);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out += std::string(total + 2 * (width.empty() ? 0 : width.size() - 1), '-') + "\n";
  for (const auto& r : rows) out += line(r, false);
  return out;
}

std::string format_metric(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

std::string format_mean_std(double mean, double std) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.4f ± %.4f", mean, std);
  return buf;
}

MeanStd mean_std(const std::vector<double>& values) {
  if (values.empty()) return {};
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

void write_report(const std::filesystem::path& stem, const nlohmann::json& report, const ReportTable& table) {
  auto json_path = stem;
  json_path += ".json";
  auto text_path = stem;
  text_path += ".txt";
  detail::write_file_atomic(json_path, report.dump(2) + "\n");
  detail::write_file_atomic(text_path, table.render());
}

}  // namespace focal
