#include <catch_amalgamated.hpp>

#include <cmath>

#include "fixtures.hpp"
#include "focal/errors.hpp"
#include "focal/synthetic.hpp"
#include "focal/trainer.hpp"

using namespace focal;

namespace {

struct Setup {
  RunConfig cfg;
  Dataset data;
  PretrainConfig pretrain;
};

Setup make_setup(std::uint64_t data_seed = 1) {
  Setup s;
  s.cfg = fixture::tiny_config();
  s.cfg.seeds.data = data_seed;
  s.data = generate(s.cfg.synth_config());
  s.pretrain = s.cfg.pretrain_config(s.data.signals);
  return s;
}

}  // namespace

TEST_CASE("zero epochs leave the initialization untouched") {
  Setup s = make_setup();
  TrainState a = init_training(s.data.signals, s.pretrain, 7);
  const TrainState b = init_training(s.data.signals, s.pretrain, 7);
  pretrain(a, s.data.signals, s.pretrain, 0);
  CHECK(fixture::same_parameters(a.model, b.model));
  CHECK(a.step == 0);
  CHECK(a.epoch == 0);
}

TEST_CASE("identical seeds train to bit-identical parameters") {
  Setup s = make_setup();
  TrainState a = init_training(s.data.signals, s.pretrain, 11);
  TrainState b = init_training(s.data.signals, s.pretrain, 11);
  pretrain(a, s.data.signals, s.pretrain, 2);
  pretrain(b, s.data.signals, s.pretrain, 2);
  CHECK(fixture::same_parameters(a.model, b.model));
  CHECK(a.optimizer.step == b.optimizer.step);
  CHECK(a.step == 8);

  TrainState c = init_training(s.data.signals, s.pretrain, 12);
  pretrain(c, s.data.signals, s.pretrain, 2);
  CHECK_FALSE(fixture::same_parameters(a.model, c.model));
}

TEST_CASE("training in two calls equals one uninterrupted call") {
  Setup s = make_setup();
  TrainState a = init_training(s.data.signals, s.pretrain, 5);
  TrainState b = init_training(s.data.signals, s.pretrain, 5);
  pretrain(a, s.data.signals, s.pretrain, 3);
  pretrain(b, s.data.signals, s.pretrain, 1);
  pretrain(b, s.data.signals, s.pretrain, 3);
  CHECK(fixture::same_parameters(a.model, b.model));
}

TEST_CASE("hooks report steps, epochs and probes") {
  Setup s = make_setup();
  s.pretrain.eval_every = 2;
  TrainState st = init_training(s.data.signals, s.pretrain, 3);
  std::vector<StepRecord> steps;
  std::vector<int> probes, ends;
  PretrainHooks hooks;
  hooks.on_step = [&](const StepRecord& r) { steps.push_back(r); };
  hooks.probe = [](const FocalModel&) { return 0.5; };
  hooks.on_probe = [&](int epoch, double acc) {
    CHECK(acc == 0.5);
    probes.push_back(epoch);
  };
  hooks.on_epoch_end = [&](const TrainState& t) { ends.push_back(t.epoch); };
  pretrain(st, s.data.signals, s.pretrain, 4, hooks);
  REQUIRE(steps.size() == 16);
  CHECK(steps.front().step == 1);
  CHECK(steps.front().lr == s.pretrain.schedule.max_lr);
  CHECK(steps.back().epoch == 3);
  CHECK(probes == std::vector<int>{2, 4});
  CHECK(ends == std::vector<int>{1, 2, 3, 4});
  for (const auto& r : steps) {
    CHECK(std::isfinite(r.loss.total));
    CHECK(std::abs(r.loss.total - (r.loss.shared + r.loss.priv + 3.0 * r.loss.orthogonal + r.loss.temporal)) < 1e-12);
  }
}

TEST_CASE("divergence rolls back to the start of the failing epoch") {
  Setup s = make_setup();
  TrainState st = init_training(s.data.signals, s.pretrain, 4);
  pretrain(st, s.data.signals, s.pretrain, 1);
  const TrainState before = st;
  PretrainConfig wild = s.pretrain;
  wild.schedule.max_lr = 1e300;
  wild.optimizer.weight_decay = 0.0;
  CHECK_THROWS_AS(pretrain(st, s.data.signals, wild, 3), TrainingError);
  CHECK(st.epoch == before.epoch);
  CHECK(st.step == before.step);
  CHECK(st.optimizer.step == before.optimizer.step);
  CHECK(fixture::same_parameters(st.model, before.model));
  CHECK(st.rng == before.rng);
}

TEST_CASE("loss decreases on the synthetic dataset") {
  int improved = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Setup s = make_setup(seed);
    s.pretrain.schedule.total_epochs = 50;
    TrainState st = init_training(s.data.signals, s.pretrain, 100 + seed);
    double first = 0.0, last = 0.0;
    int n_first = 0, n_last = 0;
    PretrainHooks hooks;
    hooks.on_step = [&](const StepRecord& r) {
      if (r.epoch == 0) {
        first += r.loss.total;
        ++n_first;
      } else if (r.epoch == 49) {
        last += r.loss.total;
        ++n_last;
      }
    };
    pretrain(st, s.data.signals, s.pretrain, 50, hooks);
    if (last / n_last < first / n_first) ++improved;
  }
  CHECK(improved >= 9);
}

TEST_CASE("features are unit blocks with the requested layout") {
  Setup s = make_setup();
  const TrainState st = init_training(s.data.signals, s.pretrain, 2);
  const auto& iv = s.pretrain.intervals;
  const Eigen::MatrixXd shared = extract_features(st.model, s.data.signals, iv, false);
  const Eigen::MatrixXd both = extract_features(st.model, s.data.signals, iv, true);
  const auto n = static_cast<Eigen::Index>(s.data.signals.size());
  CHECK(shared.rows() == 16);
  CHECK(both.rows() == 32);
  CHECK(shared.cols() == n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index b = 0; b < 4; ++b) CHECK(std::abs(both.col(i).segment(8 * b, 8).norm() - 1.0) < 1e-9);
  }
  const auto per = modality_features(st.model, s.data.signals, iv, FeatureSpace::Private);
  REQUIRE(per.size() == 2);
  CHECK(per[1] == both.block(24, 0, 8, n));
}

TEST_CASE("pretrain config validation") {
  Setup s = make_setup();
  PretrainConfig bad = s.pretrain;
  bad.sequence_length = 1;
  TrainState st = init_training(s.data.signals, s.pretrain, 1);
  CHECK_THROWS_AS(pretrain(st, s.data.signals, bad, 1), ConfigError);
  bad = s.pretrain;
  bad.intervals.pop_back();
  CHECK_THROWS_AS(pretrain(st, s.data.signals, bad, 1), ConfigError);
}
