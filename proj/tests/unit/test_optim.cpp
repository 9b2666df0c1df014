#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "focal/errors.hpp"
#include "focal/optim.hpp"

using namespace focal;

namespace {

Parameter scalar(double w) { return Parameter("w", Eigen::MatrixXd::Constant(1, 1, w)); }

}  // namespace

TEST_CASE("zero gradient without decay leaves parameters unchanged") {
  Parameter p("w", Eigen::MatrixXd::Random(3, 2));
  const Eigen::MatrixXd before = p.value;
  Parameter* ptr = &p;
  OptimizerState st = make_optimizer_state(std::span<Parameter* const>(&ptr, 1));
  for (int i = 0; i < 5; ++i) adam_step(std::span(&ptr, 1), st, AdamConfig{}, 0.1);
  CHECK(p.value == before);
  CHECK(st.step == 5);
}

TEST_CASE("one step on w^2 matches a scalar AdamW reference") {
  for (bool decoupled : {true, false}) {
    for (double wd : {0.0, 0.05}) {
      Parameter p = scalar(1.0);
      Parameter* ptr = &p;
      OptimizerState st = make_optimizer_state(std::span<Parameter* const>(&ptr, 1));
      AdamConfig cfg;
      cfg.weight_decay = wd;
      cfg.decoupled = decoupled;
      const double lr = 0.1;
      double w = 1.0, m = 0.0, v = 0.0;
      for (int t = 1; t <= 3; ++t) {
        p.grad(0, 0) = 2.0 * p.value(0, 0);
        adam_step(std::span(&ptr, 1), st, cfg, lr);

        double g = 2.0 * w;
        if (decoupled) {
          w *= 1.0 - lr * wd;
        } else {
          g += wd * w;
        }
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        const double mh = m / (1.0 - std::pow(0.9, t));
        const double vh = v / (1.0 - std::pow(0.999, t));
        w -= lr * mh / (std::sqrt(vh) + 1e-8);
        CHECK(std::abs(p.value(0, 0) - w) < 1e-12);
      }
      CHECK(p.value(0, 0) < 1.0);
    }
  }
}

TEST_CASE("decoupled decay shrinks weights by 1 - lr * wd") {
  Parameter p = scalar(2.0);
  Parameter* ptr = &p;
  OptimizerState st = make_optimizer_state(std::span<Parameter* const>(&ptr, 1));
  AdamConfig cfg;
  cfg.weight_decay = 0.05;
  adam_step(std::span(&ptr, 1), st, cfg, 0.01);
  CHECK(std::abs(p.value(0, 0) - 2.0 * (1.0 - 0.01 * 0.05)) < 1e-15);
}

TEST_CASE("non-finite gradient is rejected without touching parameters") {
  Parameter a = scalar(1.0), b = scalar(1.0);
  a.grad(0, 0) = 1.0;
  b.grad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  b.name = "layer.bias";
  Parameter* ptrs[] = {&a, &b};
  OptimizerState st = make_optimizer_state(std::span<Parameter* const>(ptrs));
  try {
    adam_step(std::span(ptrs), st, AdamConfig{}, 0.1);
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(std::string(e.what()).find("layer.bias") != std::string::npos);
  }
  CHECK(a.value(0, 0) == 1.0);
  CHECK(st.step == 0);
}

TEST_CASE("cosine schedule endpoints and midpoint") {
  const CosineSchedule s{1e-3, 1e-6, 100};
  CHECK(cosine_lr(0, s) == 1e-3);
  CHECK(std::abs(cosine_lr(100, s) - 1e-6) < 1e-18);
  CHECK(std::abs(cosine_lr(50, s) - 0.5 * (1e-3 + 1e-6)) < 1e-15);
  double last = cosine_lr(0, s);
  for (int e = 1; e <= 100; ++e) {
    CHECK(cosine_lr(e, s) <= last);
    last = cosine_lr(e, s);
  }
  CHECK_THROWS_AS((CosineSchedule{1e-6, 1e-3, 10}.validate()), ConfigError);
}

TEST_CASE("step schedule decays by a constant factor per period") {
  const StepSchedule s{1e-3, 0.2, 50};
  CHECK(step_lr(0, s) == 1e-3);
  CHECK(step_lr(49, s) == 1e-3);
  CHECK(std::abs(step_lr(50, s) - 2e-4) < 1e-18);
  CHECK(std::abs(step_lr(199, s) - 1e-3 * 0.008) < 1e-18);
  CHECK_THROWS_AS((StepSchedule{0.0, 0.2, 50}.validate()), ConfigError);
}
