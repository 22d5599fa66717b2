#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "ecg/error.hpp"
#include "ecg/nn.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ecg;

namespace {

std::vector<int> random_labels(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> y(n);
  for (auto& v : y) v = static_cast<int>(rng() % kNumClasses);
  return y;
}

// Two well-separated clusters in 17-D.
std::pair<Eigen::MatrixXd, std::vector<int>> two_blobs(int per_class, std::uint64_t seed) {
  Eigen::MatrixXd x = 0.3 * oracle::random_matrix(2 * per_class, 17, seed);
  std::vector<int> y(static_cast<std::size_t>(2 * per_class));
  for (int i = 0; i < 2 * per_class; ++i) {
    const int c = i % 2;
    y[static_cast<std::size_t>(i)] = c == 0 ? 0 : 3;
    x.row(i).array() += c == 0 ? -1.0 : 1.0;
  }
  return {x, y};
}

std::pair<Eigen::MatrixXd, std::vector<int>> five_blobs(int per_class, std::uint64_t seed) {
  const Eigen::MatrixXd centers = 2.0 * oracle::random_matrix(5, 17, seed + 1000);
  Eigen::MatrixXd x = 0.8 * oracle::random_matrix(5 * per_class, 17, seed);
  std::vector<int> y;
  for (int i = 0; i < 5 * per_class; ++i) {
    x.row(i) += centers.row(i % 5);
    y.push_back(i % 5);
  }
  return {x, y};
}

}  // namespace

TEST_CASE("glorot initialization") {
  const auto a = init_model(17, 7);
  const auto b = init_model(17, 7);
  CHECK(a.w1 == b.w1);
  CHECK(a.w2 == b.w2);
  CHECK(a.w1.rows() == 5);
  CHECK(a.w1.cols() == 17);
  CHECK(a.w2.rows() == 5);
  CHECK(a.w2.cols() == 5);
  CHECK(init_model(17, 8).w1 != a.w1);

  const double lim1 = std::sqrt(6.0 / 22.0), lim2 = std::sqrt(6.0 / 10.0);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    const auto m = init_model(17, s);
    CHECK(m.w1.cwiseAbs().maxCoeff() <= lim1);
    CHECK(m.w2.cwiseAbs().maxCoeff() <= lim2);
    sum += m.w1.sum();
    count += static_cast<std::size_t>(m.w1.size());
  }
  const double sd_of_mean = lim1 / std::sqrt(3.0) / std::sqrt(static_cast<double>(count));
  CHECK(std::abs(sum / static_cast<double>(count)) <= 4 * sd_of_mean);
  CHECK(a.b1.isZero());
  CHECK(a.b2.isZero());
}

TEST_CASE("zero weights give a uniform softmax") {
  auto m = init_model(17, 1);
  m.w1.setZero();
  m.w2.setZero();
  const Eigen::MatrixXd x = oracle::random_matrix(6, 17, 2);
  const auto cache = forward(m, x, Mode::Train);
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index c = 0; c < 5; ++c) CHECK(cache.probs(i, c) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(loss(cache.probs, random_labels(6, 3), m, 0.0) == doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one") {
  auto m = init_model(17, 4);
  const Eigen::MatrixXd x = 50.0 * oracle::random_matrix(40, 17, 5);
  const auto p = forward(m, x, Mode::Train).probs;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    CHECK(p.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.row(i).minCoeff() >= 0.0);
  }
  CHECK(forward_infer(m, x).row(0).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("hand-computed two-feature forward pass") {
  MlpModel m = init_model(2, 0);
  m.bn_running_mean << 1.0, -1.0;
  m.bn_running_var << 4.0, 0.25;
  m.bn_gamma << 2.0, 0.5;
  m.bn_beta << 0.1, -0.2;
  m.w1.setZero();
  m.w1(0, 0) = 1.0;
  m.w1(1, 1) = -1.0;
  m.w1(2, 0) = 0.5;
  m.w1(2, 1) = 0.5;
  m.b1 << 0.0, 0.0, -3.0, 0.0, 0.0;
  m.w2.setZero();
  m.w2(0, 0) = 1.0;
  m.w2(1, 1) = 2.0;
  m.w2(2, 2) = 1.0;
  m.b2.setZero();
  const double eps = m.bn_epsilon;

  const double x0 = 3.0, x1 = 0.0;
  const double n0 = (x0 - 1.0) / std::sqrt(4.0 + eps), n1 = (x1 + 1.0) / std::sqrt(0.25 + eps);
  const double b0 = 2.0 * n0 + 0.1, b1 = 0.5 * n1 - 0.2;
  const auto leaky = [](double v) { return v >= 0 ? v : 0.01 * v; };
  const double h0 = leaky(b0), h1 = leaky(-b1), h2 = leaky(0.5 * b0 + 0.5 * b1 - 3.0);
  const double z[5] = {h0, 2.0 * h1, h2, 0.0, 0.0};
  double denom = 0;
  for (const double v : z) denom += std::exp(v);

  Eigen::MatrixXd x(1, 2);
  x << x0, x1;
  const auto p = forward_infer(m, x);
  for (int c = 0; c < 5; ++c) CHECK(p(0, c) == doctest::Approx(std::exp(z[c]) / denom).epsilon(1e-14));
}

TEST_CASE("inference batch norm is an affine map") {
  auto m = init_model(17, 3);
  const Eigen::MatrixXd warm = oracle::random_matrix(36, 17, 9) * 3.0;
  forward(m, warm, Mode::Train);
  m.bn_gamma = Eigen::VectorXd::LinSpaced(17, 0.5, 2.0);
  m.bn_beta = Eigen::VectorXd::LinSpaced(17, -1.0, 1.0);
  const Eigen::MatrixXd x = oracle::random_matrix(10, 17, 10);
  const auto cache = forward(m, x, Mode::Infer);
  for (int j = 0; j < 17; ++j) {
    const double a = m.bn_gamma(j) / std::sqrt(m.bn_running_var(j) + m.bn_epsilon);
    const double b = m.bn_beta(j) - a * m.bn_running_mean(j);
    for (int i = 0; i < 10; ++i) CHECK(cache.bn_out(i, j) == doctest::Approx(a * x(i, j) + b).epsilon(1e-12));
  }
}

TEST_CASE("running statistics follow the momentum rule") {
  auto m = init_model(3, 1);
  Eigen::MatrixXd x(4, 3);
  x << 1, 2, 3, 3, 2, 1, 5, 2, 0, 7, 2, 4;
  forward(m, x, Mode::Train, 0.9);
  CHECK(m.bn_running_mean(0) == doctest::Approx(0.1 * 4.0).epsilon(1e-14));
  CHECK(m.bn_running_var(0) == doctest::Approx(0.9 + 0.1 * 5.0).epsilon(1e-14));
  CHECK(m.bn_running_var(1) == doctest::Approx(0.9).epsilon(1e-14));
  CHECK(code_of([&] { forward(m, x.topRows(1), Mode::Train); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { forward(m, Eigen::MatrixXd::Zero(2, 4), Mode::Train); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("loss") {
  auto m = init_model(17, 2);
  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(3, 5);
  onehot(0, 1) = onehot(1, 4) = onehot(2, 0) = 1.0;
  const std::vector<int> y{1, 4, 0};
  const double l1 = 1e-3;
  CHECK(loss(onehot, y, m, l1) == doctest::Approx(l1 * (m.w1.cwiseAbs().sum() + m.w2.cwiseAbs().sum())).epsilon(1e-14));

  const auto p = forward(m, oracle::random_matrix(3, 17, 4), Mode::Train).probs;
  const double ce = -(std::log(p(0, 1)) + std::log(p(1, 4)) + std::log(p(2, 0))) / 3.0;
  CHECK(loss(p, y, m, 0.0) == doctest::Approx(ce).epsilon(1e-14));
  CHECK(code_of([&] { loss(p, std::vector<int>{1, 2}, m, 0.0); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("backward matches central differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto m = init_model(17, seed);
    const Eigen::MatrixXd x = oracle::random_matrix(8, 17, 50 + seed);
    const auto y = random_labels(8, 90 + seed);
    auto copy = m;
    const auto cache = forward(copy, x, Mode::Train);
    const auto g = backward(m, cache, y, 1e-5);
    const auto n = oracle::numeric_gradients(m, x, y, 1e-5);
    CHECK(oracle::max_gradient_error(g, n) <= 1e-5);
  }
}

TEST_CASE("one-hot predictions leave only the L1 subgradient") {
  const auto m = init_model(17, 3);
  auto copy = m;
  auto cache = forward(copy, oracle::random_matrix(4, 17, 1), Mode::Train);
  cache.probs.setZero();
  const std::vector<int> y{0, 1, 2, 3};
  for (int i = 0; i < 4; ++i) cache.probs(i, y[static_cast<std::size_t>(i)]) = 1.0;
  const double l1 = 0.01;
  const auto g = backward(m, cache, y, l1);
  CHECK((g.w1 - l1 * m.w1.cwiseSign()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g.w2 - l1 * m.w2.cwiseSign()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.b1.isZero());
  CHECK(g.b2.isZero());
  CHECK(g.bn_gamma.isZero());
  CHECK(g.bn_beta.isZero());
}

TEST_CASE("duplicating a batch leaves mean gradients unchanged") {
  const auto m = init_model(17, 11);
  const Eigen::MatrixXd x = oracle::random_matrix(6, 17, 12);
  const auto y = random_labels(6, 13);
  Eigen::MatrixXd xx(12, 17);
  xx << x, x;
  std::vector<int> yy = y;
  yy.insert(yy.end(), y.begin(), y.end());
  auto c1 = m, c2 = m;
  const auto g1 = backward(m, forward(c1, x, Mode::Train), y, 1e-5);
  const auto g2 = backward(m, forward(c2, xx, Mode::Train), yy, 1e-5);
  const auto close = [](const auto& a, const auto& b) {
    return (a - b).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff());
  };
  CHECK(close(g1.w1, g2.w1));
  CHECK(close(g1.w2, g2.w2));
  CHECK(close(g1.b1, g2.b1));
  CHECK(close(g1.b2, g2.b2));
  CHECK(close(g1.bn_gamma, g2.bn_gamma));
  CHECK(close(g1.bn_beta, g2.bn_beta));
}

TEST_CASE("adam first step moves each parameter by the learning rate") {
  auto m = init_model(17, 5);
  const auto before = m;
  auto state = AdamState::for_model(m);
  TrainConfig cfg;
  auto copy = m;
  const auto g = backward(m, forward(copy, oracle::random_matrix(8, 17, 6), Mode::Train), random_labels(8, 7), 0.0);
  adam_step(m, state, g, cfg);
  CHECK(state.step == 1);
  for (Eigen::Index i = 0; i < m.w1.size(); ++i) {
    const double gi = g.w1.data()[i];
    if (std::abs(gi) < 1e-6) continue;
    const double step = m.w1.data()[i] - before.w1.data()[i];
    CHECK(step == doctest::Approx(-cfg.learning_rate * (gi > 0 ? 1 : -1)).epsilon(1e-4));
  }
}

TEST_CASE("adam with zero gradients does not move") {
  auto m = init_model(17, 5);
  const auto before = m;
  auto state = AdamState::for_model(m);
  const auto zero = Gradients::zeros_like(m);
  for (int i = 0; i < 10; ++i) adam_step(m, state, zero, TrainConfig{});
  CHECK(m.w1 == before.w1);
  CHECK(m.w2 == before.w2);
  CHECK(m.bn_gamma == before.bn_gamma);
}

TEST_CASE("adam minimizes a one-dimensional quadratic") {
  auto m = init_model(2, 0);
  auto state = AdamState::for_model(m);
  TrainConfig cfg;
  m.b2(0) = 0.0;
  const double target = 0.25;
  for (int i = 0; i < 100; ++i) {
    auto g = Gradients::zeros_like(m);
    g.b2(0) = 2.0 * (m.b2(0) - target);
    adam_step(m, state, g, cfg);
  }
  CHECK(std::abs(m.b2(0) - target) <= 1e-3);
}

TEST_CASE("L1 pull alone never grows a weight") {
  auto m = init_model(17, 8);
  auto state = AdamState::for_model(m);
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  for (int step = 0; step < 20; ++step) {
    const auto prev = m;
    auto g = Gradients::zeros_like(m);
    g.w1 = 1e-5 * m.w1.cwiseSign();
    g.w2 = 1e-5 * m.w2.cwiseSign();
    adam_step(m, state, g, cfg);
    for (Eigen::Index i = 0; i < m.w1.size(); ++i)
      if (std::abs(prev.w1.data()[i]) > 0.01) CHECK(std::abs(m.w1.data()[i]) <= std::abs(prev.w1.data()[i]));
  }
}

TEST_CASE("training separates two clusters") {
  const auto [x, y] = two_blobs(20, 3);
  TrainConfig cfg;
  const auto r = train(x, y, cfg);
  REQUIRE(r.history.size() == 100);
  CHECK(r.history.back().loss < r.history.front().loss);
  const auto probs = forward_infer(r.model, x);
  int correct = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::RowVectorXd p = probs.row(i);
    correct += argmax(std::span<const double>(p.data(), 5)) == y[static_cast<std::size_t>(i)];
  }
  CHECK(correct == 40);
}

TEST_CASE("training a five-class problem") {
  const auto [x, y] = five_blobs(30, 1);
  TrainConfig cfg;
  const auto r = train(x, y, cfg);
  CHECK(r.history[99].loss < r.history[0].loss);
  CHECK(r.history[99].accuracy > 0.9);

  const auto again = train(x, y, cfg);
  CHECK(again.model.w1 == r.model.w1);
  CHECK(again.model.bn_running_var == r.model.bn_running_var);
  CHECK(again.history.back().loss == r.history.back().loss);
  cfg.seed = 1;
  CHECK(train(x, y, cfg).model.w1 != r.model.w1);
}

TEST_CASE("a final batch of one row is merged") {
  const auto [x, y] = five_blobs(8, 2);
  Eigen::MatrixXd x37(37, 17);
  x37 << x.topRows(37);
  std::vector<int> y37(y.begin(), y.begin() + 37);
  TrainConfig cfg;
  cfg.epochs = 2;
  CHECK_NOTHROW(train(x37, y37, cfg));
}

TEST_CASE("training input validation") {
  const Eigen::MatrixXd x = oracle::random_matrix(10, 17, 1);
  CHECK(code_of([&] { train(x, std::vector<int>(10, 2), TrainConfig{}); }) == ErrorCode::DegenerateDataset);
  TrainConfig bad;
  bad.epochs = 0;
  CHECK(code_of([&] { train(x, random_labels(10, 1), bad); }) == ErrorCode::InvalidArgument);
  bad = {};
  bad.batch_size = 1;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("argmax and predict") {
  CHECK(argmax(std::vector<double>{0.1, 0.7, 0.1, 0.05, 0.05}) == 1);
  CHECK(argmax(std::vector<double>{0.3, 0.3, 0.2, 0.1, 0.1}) == 0);
  CHECK(argmax(std::vector<double>{0.1, 0.2, 0.2, 0.2, 0.3}) == 4);

  auto m = init_model(17, 6);
  const auto f = oracle::random_vector(17, 3);
  const auto p = predict(m, f);
  CHECK(std::accumulate(p.probs.begin(), p.probs.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  m.b2.array() += 3.0;
  CHECK(predict(m, f).label == p.label);
  for (std::size_t c = 0; c < 5; ++c) CHECK(predict(m, f).probs[c] == doctest::Approx(p.probs[c]).epsilon(1e-12));

  auto nan = f;
  nan[2] = std::nan("");
  CHECK(code_of([&] { predict(m, nan); }) == ErrorCode::NonFiniteInput);
  CHECK(code_of([&] { predict(m, std::vector<double>(16, 0.0)); }) == ErrorCode::LengthMismatch);
}
