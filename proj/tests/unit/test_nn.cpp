#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>

#include "focal/errors.hpp"
#include "focal/gradcheck.hpp"
#include "focal/nn.hpp"

using namespace focal;

namespace {

ModalitySample random_sample(const ModalityShape& s, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  ModalitySample out;
  out.modality_id = s.id;
  out.channels = s.channels;
  out.intervals = s.intervals;
  out.bins = s.bins;
  out.interval_len = s.interval_len;
  out.spectrum.resize(static_cast<std::size_t>(s.channels * s.intervals * s.bins));
  for (auto& z : out.spectrum) z = {g(rng), g(rng)};
  return out;
}

EncoderConfig small_config() {
  EncoderConfig c;
  c.interval_hidden = 7;
  c.embed_dim = 6;
  c.proj_hidden = 9;
  c.proj_dim = 5;
  return c;
}

void randomize_biases(ModalityEncoder& enc, Rng& rng) {
  std::normal_distribution<double> g(0.0, 0.5);
  for (Parameter* p : enc.parameters()) {
    if (p->name.ends_with(".bias")) {
      for (Eigen::Index k = 0; k < p->value.size(); ++k) p->value(k) = g(rng);
    }
  }
}

}  // namespace

TEST_CASE("linear backward matches the closed form for ||Wx||^2") {
  Rng rng(1);
  Linear lin("l", 4, 3, rng);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 1);
  const Eigen::MatrixXd y = lin.forward(x);
  lin.weight.zero_grad();
  lin.bias.zero_grad();
  lin.backward(x, 2.0 * y);
  const Eigen::MatrixXd expected = 2.0 * (lin.weight.value * x) * x.transpose();
  CHECK((lin.weight.grad - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("initialization is Xavier-uniform with zero biases") {
  Rng rng(2);
  const ModalityShape shape{"m", 2, 5, 11, 20};
  ModalityEncoder enc(shape, EncoderConfig{}, rng);
  std::set<std::string> names;
  for (const Parameter* p : enc.parameters()) {
    CHECK(names.insert(p->name).second);
    CHECK(p->grad.rows() == p->value.rows());
    CHECK(p->grad.cols() == p->value.cols());
    if (p->name.ends_with(".bias")) {
      CHECK(p->value.isZero(0.0));
    } else {
      const double a = std::sqrt(6.0 / static_cast<double>(p->value.rows() + p->value.cols()));
      CHECK(p->value.cwiseAbs().maxCoeff() <= a);
    }
  }
}

TEST_CASE("zero input with zero biases gives a zero embedding") {
  Rng rng(3);
  const ModalityShape shape{"m", 1, 4, 6, 10};
  ModalityEncoder enc(shape, small_config(), rng);
  ModalitySample s = random_sample(shape, rng);
  for (auto& z : s.spectrum) z = {};
  CHECK(enc.encode(s).isZero(0.0));
}

TEST_CASE("encoding is deterministic and shape-stable") {
  Rng rng(4);
  const ModalityShape shape{"m", 2, 4, 6, 10};
  ModalityEncoder enc(shape, small_config(), rng);
  const ModalitySample s = random_sample(shape, rng);
  const Eigen::VectorXd a = enc.encode(s);
  const Eigen::VectorXd b = enc.encode(s);
  CHECK(a.size() == 6);
  CHECK(a == b);
  const ModalitySample* batch[] = {&s, &s, &s};
  const ModalityOutput out = enc.forward(batch);
  CHECK(out.h.cols() == 3);
  CHECK(out.h.col(2) == a);
}

TEST_CASE("one interval makes mean and last aggregation agree") {
  const ModalityShape shape{"m", 1, 1, 6, 10};
  EncoderConfig mean_cfg = small_config();
  EncoderConfig last_cfg = small_config();
  last_cfg.aggregate = Aggregate::Last;
  Rng r1(5), r2(5);
  ModalityEncoder a(shape, mean_cfg, r1);
  ModalityEncoder b(shape, last_cfg, r2);
  Rng rng(6);
  const ModalitySample s = random_sample(shape, rng);
  CHECK(a.encode(s) == b.encode(s));
}

TEST_CASE("projections are unit vectors") {
  Rng rng(7);
  const ModalityShape shape{"m", 2, 4, 6, 10};
  ModalityEncoder enc(shape, small_config(), rng);
  for (int rep = 0; rep < 50; ++rep) {
    const auto [s, p] = enc.project(enc.encode(random_sample(shape, rng)));
    CHECK(std::abs(s.norm() - 1.0) < 1e-9);
    CHECK(std::abs(p.norm() - 1.0) < 1e-9);
    CHECK((s - p).norm() > 1e-6);
  }
}

TEST_CASE("bias-free heads are invariant to scaling h by 2") {
  Rng rng(8);
  const ModalityShape shape{"m", 1, 3, 6, 10};
  ModalityEncoder enc(shape, small_config(), rng);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd h(6);
  for (auto& v : h) v = g(rng);
  const auto [s1, p1] = enc.project(h);
  const auto [s2, p2] = enc.project(2.0 * h);
  // the normalization epsilon is the only term that does not scale
  CHECK((s1 - s2).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((p1 - p2).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("zero pre-normalization vector stays finite") {
  const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(4, 2);
  Eigen::VectorXd norms;
  const Eigen::MatrixXd u = normalize_columns(z, &norms);
  CHECK(u.allFinite());
  CHECK(u.isZero(0.0));
}

TEST_CASE("shape mismatch is a usage error") {
  Rng rng(9);
  ModalityEncoder enc({"m", 1, 3, 6, 10}, small_config(), rng);
  const ModalitySample wrong = random_sample({"m", 2, 3, 6, 10}, rng);
  CHECK_THROWS_AS(enc.encode(wrong), UsageError);
}

TEST_CASE("duplicate modality ids are rejected") {
  Rng rng(10);
  CHECK_THROWS_AS(FocalModel({{"a", 1, 3, 6, 10}, {"a", 1, 3, 6, 10}}, small_config(), rng), ConfigError);
}

TEST_CASE("gelu derivative and normalization backward match finite differences") {
  for (double x : {-3.0, -1.0, -0.1, 0.0, 0.2, 1.5, 4.0}) {
    const double num = (gelu(x + 1e-6) - gelu(x - 1e-6)) / 2e-6;
    CHECK(std::abs(gelu_derivative(x) - num) < 1e-8);
  }
  Rng rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd z(5, 3), w(5, 3);
  for (auto* m : {&z, &w}) {
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = g(rng);
  }
  Eigen::VectorXd norms;
  normalize_columns(z, &norms);
  const Eigen::MatrixXd analytic = normalize_columns_backward(z, norms, w);
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    Eigen::MatrixXd zp = z, zm = z;
    zp.data()[i] += 1e-6;
    zm.data()[i] -= 1e-6;
    const double num = (normalize_columns(zp).cwiseProduct(w).sum() - normalize_columns(zm).cwiseProduct(w).sum()) / 2e-6;
    CHECK(std::abs(analytic.data()[i] - num) < 1e-8);
  }
}

TEST_CASE("encoder gradients pass the finite-difference check") {
  for (Aggregate agg : {Aggregate::Mean, Aggregate::Last}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Rng rng(100 + seed);
      const ModalityShape shape{"m", 2, 3, 4, 6};
      EncoderConfig cfg = small_config();
      cfg.aggregate = agg;
      ModalityEncoder enc(shape, cfg, rng);
      randomize_biases(enc, rng);
      std::vector<ModalitySample> samples;
      for (int i = 0; i < 4; ++i) samples.push_back(random_sample(shape, rng));
      std::vector<const ModalitySample*> ptrs;
      for (const auto& s : samples) ptrs.push_back(&s);
      std::normal_distribution<double> g(0.0, 1.0);
      Eigen::MatrixXd ws(5, 4), wp(5, 4), wh(6, 4);
      for (auto* m : {&ws, &wp, &wh}) {
        for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = g(rng);
      }
      auto loss = [&] {
        const ModalityOutput o = enc.forward(ptrs);
        return o.shared.cwiseProduct(ws).sum() + 0.5 * o.priv.cwiseProduct(wp).sum() + o.h.cwiseProduct(wh).sum();
      };
      auto params = enc.parameters();
      for (Parameter* p : params) p->zero_grad();
      enc.backward(enc.forward(ptrs), ws, 0.5 * wp, wh);
      const GradCheckResult r = grad_check(loss, params);
      INFO("worst " << r.worst_parameter << " analytic " << r.analytic << " numeric " << r.numeric);
      CHECK(r.max_rel_error < 1e-6);
    }
  }
}

TEST_CASE("constant loss yields zero gradients") {
  Rng rng(12);
  const ModalityShape shape{"m", 1, 3, 4, 6};
  ModalityEncoder enc(shape, small_config(), rng);
  const ModalitySample s = random_sample(shape, rng);
  const ModalitySample* ptr = &s;
  for (Parameter* p : enc.parameters()) p->zero_grad();
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(5, 1);
  enc.backward(enc.forward(std::span(&ptr, 1)), zero, zero);
  for (const Parameter* p : enc.parameters()) CHECK(p->grad.isZero(0.0));
}

TEST_CASE("grad_check flags a wrong gradient and restores parameters") {
  Rng rng(13);
  Linear lin("l", 3, 2, rng);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 2);
  auto f = [&] { return lin.forward(x).squaredNorm(); };
  lin.weight.zero_grad();
  lin.bias.zero_grad();
  lin.backward(x, 2.0 * lin.forward(x));
  Parameter* params[] = {&lin.weight, &lin.bias};
  const Eigen::MatrixXd before = lin.weight.value;
  CHECK(grad_check(f, params).max_rel_error < 1e-8);
  CHECK(lin.weight.value == before);
  lin.weight.grad(1, 1) += 0.01;
  const GradCheckResult bad = grad_check(f, params);
  CHECK(bad.max_rel_error > 1e-3);
  CHECK(bad.worst_parameter == "l.weight");
}
