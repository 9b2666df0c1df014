#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace focal {

/// Plain-text table with left-aligned text columns and right-aligned numbers.
struct ReportTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
  std::string render() const;
};

/// Fixed six-decimal rendering used by every text report.
std::string format_metric(double value);

/// "mean ± std" with four decimals.
std::string format_mean_std(double mean, double std);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};
MeanStd mean_std(const std::vector<double>& values);

/// Writes `<stem>.json` and `<stem>.txt` atomically.
void write_report(const std::filesystem::path& stem, const nlohmann::json& report, const ReportTable& table);

}  // namespace focal
