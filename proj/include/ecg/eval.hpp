#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ecg/features.hpp"
#include "ecg/ingest.hpp"
#include "ecg/nn.hpp"
#include "ecg/parallel.hpp"
#include "ecg/pca.hpp"

namespace ecg {

// Rows are true classes, columns predicted classes. Entries are real so an
// averaged matrix can hold fractional counts.
struct ConfusionMatrix {
  std::array<std::array<double, kNumClasses>, kNumClasses> counts{};

  double total() const;
  double trace() const;
  double row_sum(std::size_t c) const;
  double col_sum(std::size_t c) const;
};

// nullopt marks a metric whose denominator is zero.
struct PerClassMetrics {
  std::optional<double> precision;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> f1;
};

struct ClassMetrics {
  std::array<PerClassMetrics, kNumClasses> per_class{};
  double accuracy = 0.0;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Test count is floor(test_fraction * n); the rest trains. Stratified mode
// applies the same rule inside each class.
Split split(std::size_t n, double test_fraction, std::uint64_t seed);
Split split(const Dataset& dataset, double test_fraction, std::uint64_t seed, bool stratified = false);

ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> predicted);
ClassMetrics class_metrics(const ConfusionMatrix& cm);

struct PipelineConfig {
  TrainConfig train;
  FeatureConfig features;
  int input_dim = static_cast<int>(kNumFeatures);
  bool stratified = false;
  Execution execution = Execution::Serial;
};

// Truncates or zero-pads the kNumFeatures columns to `input_dim` columns.
Eigen::MatrixXd adapt_feature_width(const Eigen::MatrixXd& features, int input_dim);

// split -> PCA on the training signals -> features -> train -> test.
struct FittedPipeline {
  Split partition;
  PcaModel pca;
  MlpModel mlp;
  std::vector<EpochStats> history;
  ConfusionMatrix train_cm;
  ConfusionMatrix test_cm;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

// `seed` drives the split, the initialization, and the epoch shuffles.
FittedPipeline fit_pipeline(const Dataset& dataset, const PipelineConfig& config, std::uint64_t seed);

struct IterationResult {
  std::uint64_t seed = 0;
  ConfusionMatrix cm;
  ClassMetrics metrics;
};

struct MetricSummary {
  std::optional<double> mean;
  std::optional<double> stddev;
  std::size_t defined = 0;
  std::size_t excluded = 0;
};

struct PerClassSummary {
  MetricSummary precision;
  MetricSummary sensitivity;
  MetricSummary specificity;
  MetricSummary f1;
};

struct RepeatedEvalResult {
  ConfusionMatrix averaged_cm;
  ClassMetrics averaged_metrics;  // computed from averaged_cm
  std::array<PerClassSummary, kNumClasses> per_iteration{};
  MetricSummary accuracy;  // over per-iteration accuracies
  std::vector<IterationResult> iterations;
};

IterationResult run_iteration(const Dataset& dataset, const PipelineConfig& config, std::uint64_t seed);

// Iteration i uses seed base_seed + i. Parallel execution distributes
// iterations over threads; the result is identical to the serial run.
RepeatedEvalResult repeated_eval_serial(const Dataset& dataset, const PipelineConfig& config, int iterations,
                                        std::uint64_t base_seed);
RepeatedEvalResult repeated_eval_parallel(const Dataset& dataset, const PipelineConfig& config, int iterations,
                                          std::uint64_t base_seed, int threads = 0);
RepeatedEvalResult repeated_eval(const Dataset& dataset, const PipelineConfig& config, int iterations,
                                 std::uint64_t base_seed);

// Entrywise mean plus summaries; order of `runs` does not matter.
RepeatedEvalResult aggregate(std::vector<IterationResult> runs);

}  // namespace ecg
