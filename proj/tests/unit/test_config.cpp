#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "focal/config.hpp"
#include "focal/errors.hpp"
#include "focal/report.hpp"

using namespace focal;
using nlohmann::json;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("focal_test_config_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string error_of(const json& j) {
  try {
    config_from_json(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("shipped defaults") {
  const RunConfig c;
  CHECK(c.loss.tau == 0.07);
  CHECK(c.loss.lambda_p == 1.0);
  CHECK(c.loss.lambda_o == 3.0);
  CHECK(c.loss.lambda_t == 1.0);
  CHECK(c.loss.margin == 1.0);
  CHECK(c.optimizer.pretrain.weight_decay == 0.05);
  CHECK(c.schedule.max_lr == 1e-4);
  CHECK(c.schedule.min_lr == 1e-7);
  CHECK(c.optimizer.finetune_lr == 1e-3);
  CHECK(c.schedule.finetune_decay == 0.2);
  CHECK(c.schedule.finetune_period == 50);
  CHECK(c.data.synth.modalities == 2);
  CHECK(c.data.synth.n_sequences == 128);
  CHECK(c.pipeline.defaults.interval_len == 20);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("empty document gives the defaults") {
  CHECK(config_to_json(config_from_json(json::object())) == config_to_json(RunConfig{}));
}

TEST_CASE("parse, serialize, parse is the identity") {
  RunConfig c;
  c.data.synth.info_mode = InfoMode::PrivateOnly;
  c.data.synth.noise_std = 1.25;
  c.data.synth.shared_bins = {1, 2, 3, 4};
  c.data.synth.private_bins = {{5, 6}, {7, 8}};
  c.data.split = {0.7, 0.2, 0.1};
  c.pipeline.overrides["m1"] = IntervalConfig{10, 0.5};
  c.encoder.aggregate = Aggregate::Last;
  c.loss.no_private = true;
  c.loss.tau = 0.1 + 1e-17;
  c.optimizer.pretrain.decoupled = false;
  c.schedule.epochs = 17;
  c.eval.cluster_features = FeatureSpace::Private;
  c.eval.kmeans.restarts = 3;
  c.reseed(40);
  const json j = config_to_json(c);
  const RunConfig back = config_from_json(j);
  CHECK(config_to_json(back) == j);
  CHECK(back.seeds.data == 40);
  CHECK(back.seeds.eval == 44);
  CHECK(back.pipeline.for_modality("m1").interval_len == 10);
  CHECK(back.pipeline.for_modality("m0").interval_len == 20);
  CHECK(back.loss.tau == c.loss.tau);
  CHECK(config_from_json(json::parse(j.dump())).loss.tau == c.loss.tau);

  const auto dir = temp_dir("roundtrip");
  save_config(c, dir / "c.json");
  CHECK(config_to_json(load_config(dir / "c.json")) == j);
}

TEST_CASE("unknown keys and bad types are named") {
  CHECK(error_of({{"loss", {{"lambda_x", 1.0}}}}).find("loss.lambda_x") != std::string::npos);
  CHECK(error_of({{"extra", 1}}).find("extra") != std::string::npos);
  CHECK(error_of({{"loss", {{"tau", "hot"}}}}).find("loss.tau") != std::string::npos);
  CHECK(error_of({{"loss", {{"tau", -1.0}}}}) != "");
  CHECK(error_of({{"data", {{"info_mode", "both"}}}}) != "");
  CHECK(error_of({{"data", {{"split", {0.5, 0.5}}}}}) != "");
  CHECK(error_of({{"pipeline", {{"overlap", 0.33}}}}) != "");
  CHECK(error_of({{"augmentation", {{"catalog", {"not_an_augmentation"}}}}}) != "");
}

TEST_CASE("malformed config files") {
  const auto dir = temp_dir("malformed");
  std::ofstream(dir / "bad.json") << "{ not json";
  CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);
  CHECK_THROWS(load_config(dir / "absent.json"));
}

TEST_CASE("derived configs follow the sections") {
  RunConfig c;
  c.pipeline.defaults.interval_len = 40;
  c.seeds.data = 9;
  const SynthConfig s = c.synth_config();
  CHECK(s.interval_len == 40);
  CHECK(s.seed == 9);
  const FinetuneConfig f = c.finetune_config();
  CHECK(f.schedule.start_lr == 1e-3);
  CHECK(f.epochs == 200);
}

TEST_CASE("report formatting") {
  CHECK(format_metric(0.5) == "0.500000");
  CHECK(format_mean_std(0.91234, 0.01) == "0.9123 ± 0.0100");
  const MeanStd ms = mean_std({1.0, 3.0});
  CHECK(ms.mean == 2.0);
  CHECK(ms.std == 1.0);

  ReportTable t;
  t.columns = {"metric", "value"};
  t.add_row({"accuracy", "0.5"});
  t.add_row({"a", "10.25"});
  const std::string text = t.render();
  CHECK(text.find("accuracy    0.5") != std::string::npos);
  CHECK(text.find("a" + std::string(9, ' ') + "10.25") != std::string::npos);
  CHECK_THROWS(t.add_row({"only one"}));

  const auto dir = temp_dir("report");
  write_report(dir / "r", json{{"x", 1}}, t);
  CHECK(std::filesystem::exists(dir / "r.json"));
  CHECK(std::filesystem::exists(dir / "r.txt"));
  std::ifstream in(dir / "r.json");
  CHECK(json::parse(in)["x"] == 1);
}
