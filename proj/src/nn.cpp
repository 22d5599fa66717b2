#include "ecg/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "ecg/error.hpp"

namespace ecg {

namespace {

constexpr double kProbFloor = 1e-12;

Eigen::MatrixXd leaky_relu(const Eigen::MatrixXd& z, double slope) {
  return z.unaryExpr([slope](double v) { return v >= 0.0 ? v : slope * v; });
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double top = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - top).exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

Eigen::MatrixXd dense_head(const MlpModel& model, const Eigen::MatrixXd& bn_out, Eigen::MatrixXd* hidden_pre,
                           Eigen::MatrixXd* hidden) {
  Eigen::MatrixXd pre = (bn_out * model.w1.transpose()).rowwise() + model.b1.transpose();
  Eigen::MatrixXd act = leaky_relu(pre, model.leaky_slope);
  Eigen::MatrixXd logits = (act * model.w2.transpose()).rowwise() + model.b2.transpose();
  if (hidden_pre) *hidden_pre = std::move(pre);
  if (hidden) *hidden = std::move(act);
  return softmax_rows(logits);
}

void check_batch(const MlpModel& model, const Eigen::MatrixXd& batch) {
  if (batch.cols() != model.input_dim)
    throw Error(ErrorCode::LengthMismatch, "batch has " + std::to_string(batch.cols()) +
                                               " columns, model expects " + std::to_string(model.input_dim));
  if (!batch.allFinite()) throw Error(ErrorCode::NonFiniteInput, "batch contains non-finite values");
}

void finish_forward(const MlpModel& model, ForwardCache& cache) {
  cache.bn_out = (cache.normalized.array().rowwise() * model.bn_gamma.transpose().array()).matrix().rowwise() +
                 model.bn_beta.transpose();
  cache.probs = dense_head(model, cache.bn_out, &cache.hidden_pre, &cache.hidden);
}

ForwardCache infer_cache(const MlpModel& model, const Eigen::MatrixXd& batch) {
  if (batch.rows() < 1) throw Error(ErrorCode::EmptyInput, "empty batch");
  ForwardCache cache;
  const Eigen::RowVectorXd inv_std = (model.bn_running_var.array() + model.bn_epsilon).rsqrt().transpose();
  cache.normalized = (batch.rowwise() - model.bn_running_mean.transpose()).array().rowwise() * inv_std.array();
  finish_forward(model, cache);
  return cache;
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

template <typename Param, typename Grad>
void adam_update(Param& theta, Param& m, Param& v, const Grad& g, const TrainConfig& c, double bias1, double bias2) {
  m = c.adam_beta1 * m + (1.0 - c.adam_beta1) * g;
  v = c.adam_beta2 * v + (1.0 - c.adam_beta2) * g.cwiseProduct(g);
  const auto m_hat = m.array() / bias1;
  const auto v_hat = v.array() / bias2;
  theta.array() -= c.learning_rate * m_hat / (v_hat.sqrt() + c.adam_epsilon);
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw Error(ErrorCode::InvalidArgument, "test_fraction must lie in (0, 1)");
  if (batch_size < 2) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 2 for batch normalization");
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  if (l1_lambda < 0.0) throw Error(ErrorCode::InvalidArgument, "l1 lambda must be >= 0");
  if (!(bn_momentum >= 0.0 && bn_momentum < 1.0))
    throw Error(ErrorCode::InvalidArgument, "bn_momentum must lie in [0, 1)");
}

Gradients Gradients::zeros_like(const MlpModel& model) {
  Gradients g;
  g.bn_gamma = Eigen::VectorXd::Zero(model.input_dim);
  g.bn_beta = Eigen::VectorXd::Zero(model.input_dim);
  g.w1 = Eigen::MatrixXd::Zero(kHiddenUnits, model.input_dim);
  g.b1 = Eigen::VectorXd::Zero(kHiddenUnits);
  g.w2 = Eigen::MatrixXd::Zero(kOutputUnits, kHiddenUnits);
  g.b2 = Eigen::VectorXd::Zero(kOutputUnits);
  return g;
}

AdamState AdamState::for_model(const MlpModel& model) {
  return {Gradients::zeros_like(model), Gradients::zeros_like(model), 0};
}

MlpModel init_model(int input_dim, std::uint64_t seed) {
  if (input_dim < 1) throw Error(ErrorCode::InvalidArgument, "input_dim must be >= 1");
  MlpModel m;
  m.input_dim = input_dim;
  m.bn_gamma = Eigen::VectorXd::Ones(input_dim);
  m.bn_beta = Eigen::VectorXd::Zero(input_dim);
  m.bn_running_mean = Eigen::VectorXd::Zero(input_dim);
  m.bn_running_var = Eigen::VectorXd::Ones(input_dim);
  m.b1 = Eigen::VectorXd::Zero(kHiddenUnits);
  m.b2 = Eigen::VectorXd::Zero(kOutputUnits);

  std::mt19937_64 rng(seed);
  const auto glorot = [&rng](int rows, int cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
    return w;
  };
  m.w1 = glorot(kHiddenUnits, input_dim);
  m.w2 = glorot(kOutputUnits, kHiddenUnits);
  return m;
}

ForwardCache forward(MlpModel& model, const Eigen::MatrixXd& batch, Mode mode, double bn_momentum) {
  check_batch(model, batch);
  if (mode == Mode::Infer) return infer_cache(model, batch);
  if (batch.rows() < 2) throw Error(ErrorCode::InvalidArgument, "train-mode forward needs at least 2 rows");

  ForwardCache cache;
  cache.batch_mean = batch.colwise().mean();
  const Eigen::MatrixXd centered = batch.rowwise() - cache.batch_mean;
  cache.batch_var = centered.array().square().colwise().mean();
  const Eigen::RowVectorXd inv_std = (cache.batch_var.array() + model.bn_epsilon).rsqrt();
  cache.normalized = centered.array().rowwise() * inv_std.array();
  model.bn_running_mean = bn_momentum * model.bn_running_mean + (1.0 - bn_momentum) * cache.batch_mean.transpose();
  model.bn_running_var = bn_momentum * model.bn_running_var + (1.0 - bn_momentum) * cache.batch_var.transpose();
  finish_forward(model, cache);
  return cache;
}

Eigen::MatrixXd forward_infer(const MlpModel& model, const Eigen::MatrixXd& batch) {
  check_batch(model, batch);
  return infer_cache(model, batch).probs;
}

double loss(const Eigen::MatrixXd& probs, std::span<const int> labels, const MlpModel& model, double l1_lambda) {
  if (static_cast<Eigen::Index>(labels.size()) != probs.rows())
    throw Error(ErrorCode::LengthMismatch, "label count does not match batch size");
  double ce = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= kOutputUnits) throw Error(ErrorCode::InvalidArgument, "label out of range");
    ce -= std::log(std::max(probs(i, y), kProbFloor));
  }
  ce /= static_cast<double>(probs.rows());
  return ce + l1_lambda * (model.w1.cwiseAbs().sum() + model.w2.cwiseAbs().sum());
}

Gradients backward(const MlpModel& model, const ForwardCache& cache, std::span<const int> labels, double l1_lambda) {
  const Eigen::Index batch = cache.probs.rows();
  if (static_cast<Eigen::Index>(labels.size()) != batch)
    throw Error(ErrorCode::LengthMismatch, "label count does not match batch size");

  Eigen::MatrixXd d_logits = cache.probs;
  for (Eigen::Index i = 0; i < batch; ++i) d_logits(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
  d_logits /= static_cast<double>(batch);

  Gradients g;
  g.w2 = d_logits.transpose() * cache.hidden + l1_lambda * model.w2.unaryExpr(&sign);
  g.b2 = d_logits.colwise().sum().transpose();

  const double slope = model.leaky_slope;
  const Eigen::MatrixXd d_hidden = d_logits * model.w2;
  const Eigen::MatrixXd d_pre =
      d_hidden.cwiseProduct(cache.hidden_pre.unaryExpr([slope](double v) { return v >= 0.0 ? 1.0 : slope; }));
  g.w1 = d_pre.transpose() * cache.bn_out + l1_lambda * model.w1.unaryExpr(&sign);
  g.b1 = d_pre.colwise().sum().transpose();

  // The normalized input is not a trainable quantity, so the chain stops at
  // gamma/beta; the batch-statistics terms only enter dL/dx.
  const Eigen::MatrixXd d_bn_out = d_pre * model.w1;
  g.bn_gamma = d_bn_out.cwiseProduct(cache.normalized).colwise().sum().transpose();
  g.bn_beta = d_bn_out.colwise().sum().transpose();
  return g;
}

void adam_step(MlpModel& model, AdamState& state, const Gradients& grads, const TrainConfig& config) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(config.adam_beta1, t);
  const double bias2 = 1.0 - std::pow(config.adam_beta2, t);
  auto& m = state.first_moment;
  auto& v = state.second_moment;
  adam_update(model.bn_gamma, m.bn_gamma, v.bn_gamma, grads.bn_gamma, config, bias1, bias2);
  adam_update(model.bn_beta, m.bn_beta, v.bn_beta, grads.bn_beta, config, bias1, bias2);
  adam_update(model.w1, m.w1, v.w1, grads.w1, config, bias1, bias2);
  adam_update(model.b1, m.b1, v.b1, grads.b1, config, bias1, bias2);
  adam_update(model.w2, m.w2, v.w2, grads.w2, config, bias1, bias2);
  adam_update(model.b2, m.b2, v.b2, grads.b2, config, bias1, bias2);
}

TrainResult train(const Eigen::MatrixXd& features, std::span<const int> labels, const TrainConfig& config) {
  config.validate();
  const auto n = static_cast<std::size_t>(features.rows());
  if (labels.size() != n) throw Error(ErrorCode::LengthMismatch, "feature rows and labels differ in count");
  if (n < 2) throw Error(ErrorCode::DegenerateDataset, "training needs at least 2 rows");
  if (!features.allFinite()) throw Error(ErrorCode::NonFiniteInput, "training features contain non-finite values");
  std::array<std::size_t, kNumClasses> counts{};
  for (const int y : labels) {
    if (y < 0 || y >= kOutputUnits) throw Error(ErrorCode::InvalidArgument, "label out of range");
    ++counts[static_cast<std::size_t>(y)];
  }
  if (std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) < 2)
    throw Error(ErrorCode::DegenerateDataset, "training needs at least 2 classes");

  TrainResult result;
  result.model = init_model(static_cast<int>(features.cols()), config.seed);
  MlpModel& model = result.model;
  AdamState adam = AdamState::for_model(model);
  std::mt19937_64 rng(config.seed ^ 0x9E3779B97F4A7C15ULL);

  // Batch boundaries are fixed; only membership is reshuffled per epoch.
  const auto bs = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> bounds;
  for (std::size_t start = 0; start < n; start += bs) bounds.push_back(start);
  bounds.push_back(n);
  if (bounds.size() > 2 && n - bounds[bounds.size() - 2] < 2) bounds.erase(bounds.end() - 2);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Eigen::MatrixXd batch;
  std::vector<int> batch_labels;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
      const std::size_t lo = bounds[b];
      const std::size_t rows = bounds[b + 1] - lo;
      batch.resize(static_cast<Eigen::Index>(rows), features.cols());
      batch_labels.resize(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        batch.row(static_cast<Eigen::Index>(r)) = features.row(static_cast<Eigen::Index>(order[lo + r]));
        batch_labels[r] = labels[order[lo + r]];
      }
      const auto cache = forward(model, batch, Mode::Train, config.bn_momentum);
      loss_sum += loss(cache.probs, batch_labels, model, config.l1_lambda) * static_cast<double>(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        const Eigen::RowVectorXd p = cache.probs.row(static_cast<Eigen::Index>(r));
        if (argmax(std::span<const double>(p.data(), static_cast<std::size_t>(p.size()))) == batch_labels[r])
          ++correct;
      }
      adam_step(model, adam, backward(model, cache, batch_labels, config.l1_lambda), config);
    }
    result.history.push_back({loss_sum / static_cast<double>(n), static_cast<double>(correct) / static_cast<double>(n)});
  }
  return result;
}

int argmax(std::span<const double> probs) {
  if (probs.empty()) throw Error(ErrorCode::EmptyInput, "argmax of an empty vector");
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

Prediction predict(const MlpModel& model, std::span<const double> features) {
  if (static_cast<int>(features.size()) != model.input_dim)
    throw Error(ErrorCode::LengthMismatch, "feature vector has " + std::to_string(features.size()) +
                                               " values, model expects " + std::to_string(model.input_dim));
  Eigen::MatrixXd row(1, model.input_dim);
  for (int j = 0; j < model.input_dim; ++j) row(0, j) = features[static_cast<std::size_t>(j)];
  const Eigen::MatrixXd probs = forward_infer(model, row);
  Prediction p;
  for (std::size_t c = 0; c < kNumClasses; ++c) p.probs[c] = probs(0, static_cast<Eigen::Index>(c));
  p.label = class_from_index(argmax(p.probs));
  return p;
}

}  // namespace ecg
