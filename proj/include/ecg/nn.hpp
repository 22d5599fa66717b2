#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ecg/ingest.hpp"

namespace ecg {

inline constexpr int kHiddenUnits = 5;
inline constexpr int kOutputUnits = static_cast<int>(kNumClasses);

// input -> batch norm -> dense(5) + leaky ReLU -> dense(5) + softmax.
struct MlpModel {
  int input_dim = 17;
  Eigen::VectorXd bn_gamma;
  Eigen::VectorXd bn_beta;
  Eigen::VectorXd bn_running_mean;
  Eigen::VectorXd bn_running_var;
  Eigen::MatrixXd w1;  // kHiddenUnits x input_dim
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // kOutputUnits x kHiddenUnits
  Eigen::VectorXd b2;
  double leaky_slope = 0.01;
  double bn_epsilon = 1e-5;
};

struct TrainConfig {
  int epochs = 100;
  double learning_rate = 0.03;
  double l1_lambda = 1e-5;
  int batch_size = 36;
  double test_fraction = 0.30;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double bn_momentum = 0.9;

  // Throws InvalidArgument when a field is outside its valid range.
  void validate() const;
};

// Same shapes as the trainable members of MlpModel.
struct Gradients {
  Eigen::VectorXd bn_gamma;
  Eigen::VectorXd bn_beta;
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;

  static Gradients zeros_like(const MlpModel& model);
};

struct AdamState {
  Gradients first_moment;
  Gradients second_moment;
  std::int64_t step = 0;

  static AdamState for_model(const MlpModel& model);
};

enum class Mode { Train, Infer };

// Rows are samples. Holds everything backward() needs.
struct ForwardCache {
  Eigen::MatrixXd normalized;  // x-hat
  Eigen::MatrixXd bn_out;
  Eigen::MatrixXd hidden_pre;
  Eigen::MatrixXd hidden;
  Eigen::MatrixXd probs;
  Eigen::RowVectorXd batch_mean;
  Eigen::RowVectorXd batch_var;
};

struct EpochStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainResult {
  MlpModel model;
  std::vector<EpochStats> history;
};

struct Prediction {
  ArrhythmiaClass label = ArrhythmiaClass::NSR;
  std::array<double, kNumClasses> probs{};
};

MlpModel init_model(int input_dim, std::uint64_t seed);

// Train mode uses batch statistics and folds them into the running
// statistics with `bn_momentum`; infer mode uses the running statistics.
ForwardCache forward(MlpModel& model, const Eigen::MatrixXd& batch, Mode mode, double bn_momentum = 0.9);
Eigen::MatrixXd forward_infer(const MlpModel& model, const Eigen::MatrixXd& batch);

// Mean cross-entropy (natural log, probabilities clamped at 1e-12) plus
// l1_lambda * sum|w| over both dense weight matrices.
double loss(const Eigen::MatrixXd& probs, std::span<const int> labels, const MlpModel& model, double l1_lambda);

Gradients backward(const MlpModel& model, const ForwardCache& cache, std::span<const int> labels, double l1_lambda);

void adam_step(MlpModel& model, AdamState& state, const Gradients& grads, const TrainConfig& config);

TrainResult train(const Eigen::MatrixXd& features, std::span<const int> labels, const TrainConfig& config);

Prediction predict(const MlpModel& model, std::span<const double> features);
// Lowest index wins ties.
int argmax(std::span<const double> probs);

}  // namespace ecg
