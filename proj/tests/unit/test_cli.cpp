#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sys/wait.h>

#include "fixtures.hpp"
#include "focal/config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "focal_test_cli";

int run(const std::string& args) {
  const std::string cmd = std::string(FOCAL_CLI_PATH) + " " + args + " > " + (kRoot / "last.log").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string log_text() { return slurp(kRoot / "last.log"); }

fs::path tiny_config_file() {
  fs::create_directories(kRoot);
  focal::RunConfig c = fixture::tiny_config();
  c.schedule.epochs = 3;
  c.eval.finetune_runs = 2;
  c.eval.kmeans.restarts = 2;
  const fs::path p = kRoot / "tiny.json";
  focal::save_config(c, p);
  return p;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("usage errors exit with 2") {
  fs::create_directories(kRoot);
  CHECK(run("") == 2);
  CHECK(run("nonsense") == 2);
  CHECK(run("gendata") == 2);  // --out missing
  CHECK(run("evaluate --out " + q(kRoot / "x") + " --ckpt " + q(kRoot / "no_such_ckpt")) == 2);
  CHECK(log_text().find("checkpoint") != std::string::npos);
  CHECK(run("finetune --out " + q(kRoot / "x")) == 2);
  CHECK(run("--help") == 0);
}

TEST_CASE("gendata writes byte-identical datasets for a fixed seed") {
  const fs::path cfg = tiny_config_file();
  const fs::path a = kRoot / "data_a", b = kRoot / "data_b", c = kRoot / "data_c";
  for (const auto& d : {a, b, c}) fs::remove_all(d);
  REQUIRE(run("gendata --config " + q(cfg) + " --seed 5 --out " + q(a)) == 0);
  REQUIRE(run("gendata --config " + q(cfg) + " --seed 5 --out " + q(b)) == 0);
  REQUIRE(run("gendata --config " + q(cfg) + " --seed 6 --out " + q(c)) == 0);
  for (const char* f : {"train.csv", "val.csv", "test.csv", "manifest.json"}) {
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(slurp(a / "train.csv") != slurp(c / "train.csv"));
}

TEST_CASE("bad split ratio exits with 2 and a message") {
  fs::create_directories(kRoot);
  const fs::path cfg = kRoot / "bad_split.json";
  std::ofstream(cfg) << R"({"data": {"split": [0.5, 0.1, 0.1]}})";
  CHECK(run("gendata --config " + q(cfg) + " --out " + q(kRoot / "bad")) == 2);
  CHECK(log_text().find("split") != std::string::npos);

  std::ofstream(cfg) << R"({"loss": {"bogus": 1}})";
  CHECK(run("gendata --config " + q(cfg) + " --out " + q(kRoot / "bad")) == 2);
  CHECK(log_text().find("loss.bogus") != std::string::npos);
}

TEST_CASE("pretrain, resume, finetune and evaluate") {
  const fs::path cfg = tiny_config_file();
  const fs::path data = kRoot / "data", full = kRoot / "full", part = kRoot / "part", resumed = kRoot / "resumed";
  for (const auto& d : {data, full, part, resumed}) fs::remove_all(d);
  REQUIRE(run("gendata --config " + q(cfg) + " --out " + q(data)) == 0);
  REQUIRE(run("pretrain --config " + q(cfg) + " --data " + q(data) + " --out " + q(full)) == 0);
  REQUIRE(run("pretrain --config " + q(cfg) + " --data " + q(data) + " --out " + q(part) + " --epochs 1") == 0);
  REQUIRE(run("pretrain --data " + q(data) + " --ckpt " + q(part / "checkpoint") + " --out " + q(resumed)) == 0);
  CHECK(slurp(full / "checkpoint" / "tensors.bin") == slurp(resumed / "checkpoint" / "tensors.bin"));
  CHECK(json::parse(slurp(resumed / "checkpoint" / "manifest.json"))["epoch"] == 3);

  std::ifstream metrics(full / "metrics.jsonl");
  std::string line;
  int steps = 0;
  while (std::getline(metrics, line)) {
    const json r = json::parse(line);
    if (r["type"] == "step") {
      ++steps;
      for (const char* k : {"shared", "private", "orthogonal", "temporal", "total"}) CHECK(r["loss"].contains(k));
    }
  }
  CHECK(steps > 0);

  CHECK(run("pretrain --config " + q(cfg) + " --ckpt " + q(part / "checkpoint") + " --out " + q(resumed)) == 2);

  const fs::path eval = kRoot / "eval";
  fs::remove_all(eval);
  REQUIRE(run("evaluate --data " + q(data) + " --ckpt " + q(full / "checkpoint") + " --out " + q(eval)) == 0);
  const json report = json::parse(slurp(eval / "report.json"));
  for (const char* k : {"accuracy", "macro_f1", "knn_accuracy", "ari", "nmi", "correlated_accuracy"}) {
    CHECK(report.contains(k));
  }
  CHECK(fs::exists(eval / "report.txt"));

  REQUIRE(run("finetune --data " + q(data) + " --ckpt " + q(full / "checkpoint") + " --out " + q(eval) +
              " --label-ratio 1 0.5") == 0);
  const json ft = json::parse(slurp(eval / "finetune.json"));
  REQUIRE(ft["label_ratios"].size() == 2);
  CHECK(ft["runs"] == 2);
  CHECK(log_text().find("±") != std::string::npos);
}

TEST_CASE("ablation flags reach the objective") {
  fs::create_directories(kRoot);
  focal::RunConfig c = fixture::tiny_config();
  c.schedule.epochs = 1;
  c.loss.no_private = true;
  focal::save_config(c, kRoot / "np.json");
  const fs::path out = kRoot / "np";
  fs::remove_all(out);
  REQUIRE(run("pretrain --config " + q(kRoot / "np.json") + " --out " + q(out)) == 0);
  std::ifstream metrics(out / "metrics.jsonl");
  std::string line;
  while (std::getline(metrics, line)) {
    const json r = json::parse(line);
    if (r["type"] == "step") {
      CHECK(r["loss"]["private"] == 0.0);
      CHECK(r["loss"]["orthogonal"] == 0.0);
    }
  }
}

TEST_CASE("gradcheck exit codes") {
  fs::create_directories(kRoot);
  CHECK(run("gradcheck --instances 3") == 0);
  CHECK(log_text().find("FAIL") == std::string::npos);
  CHECK(run("gradcheck --instances 3 --inject-error") == 1);
  CHECK(log_text().find("FAIL") != std::string::npos);
  CHECK(run("gradcheck --modalities 0") == 2);
}
