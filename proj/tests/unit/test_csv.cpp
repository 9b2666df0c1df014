#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include "focal/dataset.hpp"
#include "focal/errors.hpp"
#include "focal/synthetic.hpp"

using namespace focal;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("focal_csv_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

CsvSchema two_modality_schema(int window, bool labels) {
  CsvSchema s;
  s.modalities = {{"acc", {"ax", "ay"}, 100.0}, {"mic", {"m"}, 100.0}};
  if (labels) s.label_column = "y";
  s.window_length = window;
  return s;
}

// rows: timestamp = r, ax = r, ay = -r, m = 2r, y = r / 150
void write_rows(const fs::path& p, int rows, bool labels) {
  std::ofstream out(p);
  out << "timestamp,ax,ay,m" << (labels ? ",y" : "") << "\n";
  for (int r = 0; r < rows; ++r) {
    out << r << "," << r << "," << -r << "," << 2 * r;
    if (labels) out << "," << r / 150;
    out << "\n";
  }
}

}  // namespace

TEST_CASE("rows are cut into aligned windows and the remainder is dropped") {
  TempDir dir;
  const auto file = dir.path / "a.csv";
  write_rows(file, 1000, false);

  const Dataset five = ingest_csv(file, two_modality_schema(200, false));
  CHECK(five.signals.size() == 5);
  CHECK(five.signals.num_modalities() == 2);
  CHECK(five.signals.windows[0][4].samples(199, 1) == -999.0);
  CHECK(five.signals.windows[1][2].samples(0, 0) == 800.0);
  CHECK_FALSE(five.labeled());

  const Dataset three = ingest_csv(file, two_modality_schema(300, false));
  CHECK(three.signals.size() == 3);
  CHECK(three.signals.windows[0][2].samples(299, 0) == 899.0);
}

TEST_CASE("each window takes the label of its first row") {
  TempDir dir;
  const auto file = dir.path / "a.csv";
  write_rows(file, 1000, true);
  const Dataset d = ingest_csv(file, two_modality_schema(200, true));
  // first rows 0, 200, 400, 600, 800 -> labels 0, 1, 2, 4, 5
  CHECK(d.labels == std::vector<int>{0, 1, 2, 4, 5});
}

TEST_CASE("ingestion errors name row and column") {
  TempDir dir;
  const auto file = dir.path / "bad.csv";

  SECTION("missing column") {
    std::ofstream(file) << "timestamp,ax,m\n0,1,2\n";
    try {
      ingest_csv(file, two_modality_schema(1, false));
      FAIL("expected IngestError");
    } catch (const IngestError& e) {
      CHECK(e.column() == "ay");
    }
  }
  SECTION("non-monotone timestamps") {
    std::ofstream(file) << "timestamp,ax,ay,m\n0,1,1,1\n1,1,1,1\n1,1,1,1\n";
    try {
      ingest_csv(file, two_modality_schema(1, false));
      FAIL("expected IngestError");
    } catch (const IngestError& e) {
      CHECK(e.row() == 4);
      CHECK(e.column() == "timestamp");
    }
  }
  SECTION("non-numeric cell") {
    std::ofstream(file) << "timestamp,ax,ay,m\n0,1,1,1\n1,1,abc,1\n";
    try {
      ingest_csv(file, two_modality_schema(1, false));
      FAIL("expected IngestError");
    } catch (const IngestError& e) {
      CHECK(e.row() == 3);
      CHECK(e.column() == "ay");
    }
  }
  SECTION("non-finite cell") {
    std::ofstream(file) << "timestamp,ax,ay,m\n0,1,1,nan\n";
    CHECK_THROWS_AS(ingest_csv(file, two_modality_schema(1, false)), IngestError);
  }
}

TEST_CASE("export then ingest reproduces windows exactly") {
  TempDir dir;
  SynthConfig cfg;
  cfg.n_sequences = 6;
  cfg.channels = 2;
  cfg.noise_std = 0.7;
  const Dataset d = generate(cfg);
  const CsvSchema schema = CsvSchema::for_signals(d.signals, true);
  const auto file = dir.path / "round.csv";
  export_csv(d, schema, file);
  const Dataset back = ingest_csv(file, schema);
  REQUIRE(back.signals.size() == d.signals.size());
  REQUIRE(back.signals.num_modalities() == d.signals.num_modalities());
  CHECK(back.labels == d.labels);
  for (std::size_t j = 0; j < d.signals.num_modalities(); ++j) {
    CHECK(back.signals.modalities[j].id == d.signals.modalities[j].id);
    for (std::size_t i = 0; i < d.signals.size(); ++i) {
      const auto& a = d.signals.windows[j][i];
      const auto& b = back.signals.windows[j][i];
      CHECK(a.modality_id == b.modality_id);
      CHECK(a.sample_rate_hz == b.sample_rate_hz);
      CHECK(a.samples == b.samples);  // bit-exact
    }
  }
}
