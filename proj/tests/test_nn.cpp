#include <doctest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "powertrain/error.hpp"
#include "powertrain/log.hpp"
#include "powertrain/nn.hpp"

using namespace powertrain;
using namespace powertrain::nn;

namespace {

NetworkShape small_shape() {
  return {4, {16, 8, 1}, {Activation::relu, Activation::relu, Activation::linear}, 0.2, {0, 1}};
}

Network chain(int depth, double weight) {
  Network net;
  for (int i = 0; i < depth; ++i) {
    DenseLayer layer;
    layer.weights = Matrix::Constant(1, 1, weight);
    layer.bias = Vector::Zero(1);
    net.layers.push_back(layer);
    net.activations.push_back(i + 1 < depth ? Activation::relu : Activation::linear);
  }
  return net;
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

}  // namespace

TEST_CASE("standardizer by hand") {
  Matrix rows(1, 2);
  rows << 0, 2;
  const auto s = Standardizer::fit(rows);
  CHECK(s.means[0] == 1.0);
  CHECK(s.stds[0] == 1.0);
  const Matrix t = s.apply(rows);
  CHECK(t(0, 0) == -1.0);
  CHECK(t(0, 1) == 1.0);
}

TEST_CASE("constant feature gets scale 1 with a warning") {
  std::vector<std::string> seen;
  set_warning_sink([&](const std::string& m) { seen.push_back(m); });
  Matrix rows(2, 3);
  rows << 5, 5, 5, 1, 2, 3;
  const auto s = Standardizer::fit(rows);
  set_warning_sink([](const std::string&) {});
  CHECK(s.stds[0] == 1.0);
  CHECK(s.apply(rows).row(0).isZero());
  CHECK(seen.size() == 1);
}

TEST_CASE("standardizer round trip and zero-mean unit variance") {
  std::mt19937_64 rng(3);
  Matrix rows = random_matrix(4, 100, rng) * 300.0;
  rows.array() += 1000.0;
  for (auto kind : {ScalingKind::zscore, ScalingKind::minmax}) {
    const auto s = Standardizer::fit(rows, kind);
    const Matrix back = s.invert(s.apply(rows));
    CHECK((back - rows).cwiseAbs().maxCoeff() < 1e-12 * rows.cwiseAbs().maxCoeff());
  }
  const Matrix z = Standardizer::fit(rows).apply(rows);
  for (Eigen::Index f = 0; f < 4; ++f) {
    CHECK(std::abs(z.row(f).mean()) < 1e-12);
    CHECK(std::abs(z.row(f).array().square().mean() - 1.0) < 1e-12);
  }
  const Matrix mm = Standardizer::fit(rows, ScalingKind::minmax).apply(rows);
  CHECK(mm.minCoeff() == doctest::Approx(0.0));
  CHECK(mm.maxCoeff() == doctest::Approx(1.0));
  CHECK_THROWS_AS(Standardizer::fit(Matrix(4, 0)), DataError);
  CHECK_THROWS_AS(Standardizer::fit(rows).apply(Matrix(3, 2)), DimensionError);
}

TEST_CASE("forward basics") {
  Network zero = make_network(small_shape(), 1);
  for (auto& l : zero.layers) {
    l.weights.setZero();
    l.bias.setZero();
  }
  const std::vector<double> x{1.0, -2.0, 3.0, 4.0};
  CHECK(forward(zero, x) == 0.0);

  const Network id = chain(4, 1.0);
  const std::vector<double> v{2.5};
  CHECK(forward(id, v) == 2.5);

  std::mt19937_64 rng(4);
  Network net = make_network(small_shape(), 2);
  net.dropout_p = 0.0;
  const Matrix batch = random_matrix(4, 7, rng);
  ForwardCache cache;
  Rng drop(1);
  const Matrix train_out = forward(net, batch, true, &drop, cache);
  CHECK(train_out == forward<double>(net, batch));

  CHECK_THROWS_AS(forward<double>(net, Matrix(3, 2)), DimensionError);
}

TEST_CASE("dropout expectation matches inference") {
  NetworkShape shape = small_shape();
  shape.dropout_p = 0.5;
  Network net = make_network(shape, 11);
  net.layers.back().bias(0) = 3.0;
  std::mt19937_64 rng(6);
  const Matrix probe = random_matrix(4, 1, rng);
  const double expected = forward<double>(net, probe)(0, 0);
  const Matrix many = probe.replicate(1, 10000);
  ForwardCache cache;
  Rng drop(9);
  const double mean = forward(net, many, true, &drop, cache).mean();
  CHECK(std::abs(mean - expected) <= 0.03 * std::abs(expected));
}

TEST_CASE("losses") {
  CHECK(loss(3, 1, LossKind::mse) == 4.0);
  CHECK(loss(110, 100, LossKind::mape) == doctest::Approx(0.10).epsilon(1e-12));
  CHECK(loss_gradient(3, 1, LossKind::mse) == 4.0);
  CHECK(loss_gradient(110, 100, LossKind::mape) == doctest::Approx(0.01));
  CHECK(loss(5, 5, LossKind::mse) == 0.0);
  CHECK(loss(5, 5, LossKind::mape) == 0.0);
  CHECK(loss(4, 5, LossKind::mape) > 0.0);
  CHECK_THROWS_AS(loss(1, 0, LossKind::mape), DataError);
  CHECK_THROWS_AS(loss_gradient(1, 0, LossKind::mape), DataError);
  CHECK(parse_loss_kind("mape") == LossKind::mape);
  CHECK_THROWS_AS(parse_loss_kind("l1"), DataError);
}

TEST_CASE("backward on a single linear unit") {
  Network net = chain(1, 2.0);
  Matrix x(1, 1);
  x << 3.0;
  ForwardCache cache;
  const Matrix& out = forward(net, x, false, nullptr, cache);
  CHECK(out(0, 0) == 6.0);
  Matrix d(1, 1);
  d << loss_gradient(out(0, 0), 5.0, LossKind::mse);
  const auto g = backward(net, cache, d);
  CHECK(g.weights[0](0, 0) == 6.0);
  CHECK(g.bias[0](0) == 2.0);
}

TEST_CASE("zero loss gradient gives zero gradients") {
  Network net = make_network(small_shape(), 5);
  std::mt19937_64 rng(1);
  ForwardCache cache;
  forward(net, random_matrix(4, 6, rng), false, nullptr, cache);
  const auto g = backward(net, cache, Matrix::Zero(1, 6));
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    CHECK(g.weights[l].isZero());
    CHECK(g.bias[l].isZero());
  }
}

TEST_CASE("gradients match central differences on a 4-16-8-1 net") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Network net = make_network(small_shape(), seed);
    for (auto& l : net.layers) {
      std::mt19937_64 brng(seed + 100);
      std::uniform_real_distribution<double> u(-0.5, 0.5);
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = u(brng);
    }
    std::mt19937_64 rng(seed);
    const Matrix x = testing::smooth_inputs(net, 20, rng);
    const Matrix t = random_matrix(1, 20, rng);
    const auto r = testing::gradient_check(net, x, t, 0, seed);
    CHECK(r.checked == 4 * 16 + 16 + 16 * 8 + 8 + 8 + 1);
    CHECK(r.max_rel_error <= 1e-4);
  }
}

TEST_CASE("backward rejects a stale cache") {
  Network a = make_network(small_shape(), 1);
  NetworkShape other = small_shape();
  other.widths = {32, 8, 1};
  Network b = make_network(other, 1);
  std::mt19937_64 rng(1);
  ForwardCache cache;
  forward(a, random_matrix(4, 3, rng), false, nullptr, cache);
  CHECK_THROWS_AS(backward(b, cache, Matrix::Zero(1, 3)), DimensionError);
  CHECK_THROWS_AS(backward(a, cache, Matrix::Zero(1, 4)), DimensionError);
}

TEST_CASE("adam closed-form first step") {
  double theta = 0.0, g = 1.0, m = 0.0, v = 0.0;
  adam_update(&theta, &g, &m, &v, 1, 1, AdamConfig{});
  CHECK(theta == doctest::Approx(-0.001 / (1.0 + 1e-8)).epsilon(1e-15));

  double t2 = 1.5, g2 = 0.0, m2 = 0.0, v2 = 0.0;
  for (long s = 1; s <= 10; ++s) adam_update(&t2, &g2, &m2, &v2, 1, s, AdamConfig{});
  CHECK(t2 == 1.5);
}

TEST_CASE("adam converges on a quadratic") {
  double theta = 0.0, m = 0.0, v = 0.0;
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  for (long s = 1; s <= 2000; ++s) {
    const double g = 2.0 * (theta - 3.0);
    adam_update(&theta, &g, &m, &v, 1, s, cfg);
  }
  CHECK(std::abs(theta - 3.0) < 0.01);
}

TEST_CASE("adam_step updates only trainable layers") {
  Network net = make_network(small_shape(), 3);
  const Network before = net;
  std::mt19937_64 rng(2);
  ForwardCache cache;
  forward(net, random_matrix(4, 5, rng), false, nullptr, cache);
  const auto g = backward(net, cache, Matrix::Ones(1, 5));
  auto state = AdamState::for_network(net);
  adam_step(net, state, g, AdamConfig{}, 2);
  CHECK(net.layers[0].weights == before.layers[0].weights);
  CHECK(net.layers[1].bias == before.layers[1].bias);
  CHECK(net.layers[2].weights != before.layers[2].weights);
}

TEST_CASE("glorot init stays within its limit") {
  const Network net = make_network(NetworkShape{}, 7);
  CHECK(net.widths() == std::vector<int>{256, 128, 64, 1});
  for (const auto& l : net.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.in() + l.out()));
    CHECK(l.weights.cwiseAbs().maxCoeff() <= limit);
    CHECK(l.weights.cwiseAbs().maxCoeff() > 0.5 * limit);
    CHECK(l.bias.isZero());
  }
}

TEST_CASE("training on constant targets lowers validation loss") {
  std::mt19937_64 rng(8);
  const Matrix x = random_matrix(4, 200, rng);
  const Vector y = Vector::Zero(200);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.seed = 4;
  const auto r = train(x, y, cfg);
  REQUIRE(r.log.size() == 11);
  CHECK(r.log.front().epoch == 0);
  CHECK(r.log.back().validation_loss < r.log.front().validation_loss);
  CHECK(r.log.back().train_loss < r.log.front().train_loss);
}

TEST_CASE("training is deterministic and checkpoints the best epoch") {
  std::mt19937_64 rng(12);
  const Matrix x = random_matrix(4, 300, rng);
  Vector y(300);
  for (Eigen::Index i = 0; i < 300; ++i) y(i) = std::sin(x(0, i)) + 0.5 * x(1, i) * x(2, i);
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.seed = 21;
  const auto a = train(x, y, cfg);
  const auto b = train(x, y, cfg);
  CHECK(nlohmann::json(a.network).dump() == nlohmann::json(b.network).dump());
  double best = a.log.front().validation_loss;
  int best_epoch = 0;
  for (const auto& e : a.log) {
    if (e.validation_loss < best) {
      best = e.validation_loss;
      best_epoch = e.epoch;
    }
  }
  CHECK(a.checkpoint.validation_loss == best);
  CHECK(a.checkpoint.epoch == best_epoch);
  CHECK(std::isfinite(a.checkpoint.validation_loss));
  cfg.seed = 22;
  CHECK(nlohmann::json(train(x, y, cfg).network).dump() != nlohmann::json(a.network).dump());
}

TEST_CASE("MAPE training runs in natural units") {
  std::mt19937_64 rng(13);
  const Matrix x = random_matrix(4, 200, rng);
  Vector raw(200);
  for (Eigen::Index i = 0; i < 200; ++i) raw(i) = 100.0 + 20.0 * x(0, i);
  const auto s = Standardizer::fit(std::span<const double>(raw.data(), 200));
  Vector y(200);
  for (Eigen::Index i = 0; i < 200; ++i) y(i) = s.apply(raw(i));
  TrainConfig cfg;
  cfg.loss = LossKind::mape;
  cfg.epochs = 20;
  const TargetScale scale{s.means[0], s.stds[0]};
  const auto r = train(x, y, cfg, scale);
  CHECK(r.log.back().validation_loss < r.log.front().validation_loss);
  CHECK(evaluate_loss(r.network, x, y, LossKind::mape, scale) < 0.05);
}

TEST_CASE("divergence names the epoch") {
  std::mt19937_64 rng(14);
  const Matrix x = random_matrix(4, 64, rng) * 1e3;
  const Vector y = Vector::Constant(64, 1e3);
  TrainConfig cfg;
  cfg.learning_rate = 1e30;
  cfg.epochs = 5;
  try {
    train(x, y, cfg);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.epoch() >= 1);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("frozen layers come back bit-identical") {
  std::mt19937_64 rng(15);
  const Matrix x = random_matrix(4, 100, rng);
  const Vector y = random_matrix(100, 1, rng);
  Network start = make_network(small_shape(), 3);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.first_trainable_layer = 2;
  const auto r = fit(start, x, y, cfg);
  CHECK(r.network.layers[0].weights == start.layers[0].weights);
  CHECK(r.network.layers[1].bias == start.layers[1].bias);
  cfg.epochs = 0;
  const auto same = fit(start, x, y, cfg);
  CHECK(nlohmann::json(same.network).dump() == nlohmann::json(start).dump());
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.learning_rate = 0;
  CHECK_THROWS_AS(cfg.validate(), DataError);
  cfg = {};
  cfg.validation_fraction = 1.0;
  CHECK_THROWS_AS(cfg.validate(), DataError);
  cfg = {};
  cfg.dropout_p = 1.0;
  CHECK_THROWS_AS(cfg.validate(), DataError);
  cfg = {};
  cfg.minibatch_rows = 0;
  CHECK_THROWS_AS(cfg.validate(), DataError);
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(train(random_matrix(4, 1, rng), Vector::Zero(1), TrainConfig{}), DataError);
}

TEST_CASE("network json round trip is bit exact") {
  const Network net = make_network(NetworkShape{}, 99);
  const Network back = nlohmann::json::parse(nlohmann::json(net).dump()).get<Network>();
  std::mt19937_64 rng(3);
  const Matrix probes = random_matrix(4, 100, rng);
  CHECK(forward<double>(net, probes) == forward<double>(back, probes));
  CHECK(back.dropout_p == net.dropout_p);
  CHECK(back.dropout_after == net.dropout_after);

  nlohmann::json bad = net;
  bad["layers"][1]["in"] = 3;
  CHECK_THROWS(bad.get<Network>());
}
