#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ecg/eval.hpp"

namespace ecg::cli {

// Flags shared by train/eval/featurize.
struct PipelineFlags {
  std::uint64_t seed = 0;
  int epochs = 100;
  double learning_rate = 0.03;
  double l1_lambda = 1e-5;
  int batch_size = 36;
  double test_fraction = 0.30;
  std::size_t entropy_bins = 32;
  int input_dim = 17;
  bool stratified = false;
  bool parallel = false;
  bool resample_prefilter = false;

  PipelineConfig pipeline() const;
  PreprocessConfig preprocess() const;
};

struct GenerateArgs {
  std::filesystem::path output;
  std::size_t per_class = 100;
  std::uint64_t seed = 0;
  double noise_std = 0.02;
  double rate_hz = 257.0;
  double duration_s = 5.0;
};

struct FeaturizeArgs {
  std::filesystem::path input;
  std::filesystem::path output;
  std::optional<std::filesystem::path> model;
  bool fit_pca = false;
  PipelineFlags flags;
};

struct TrainArgs {
  std::filesystem::path input;
  std::filesystem::path model_out;
  std::optional<std::filesystem::path> history_out;
  PipelineFlags flags;
};

struct EvalArgs {
  std::filesystem::path input;
  int iterations = 100;
  std::optional<std::filesystem::path> results_out;
  std::optional<std::filesystem::path> report_out;
  PipelineFlags flags;
};

struct PredictArgs {
  std::filesystem::path model;
  std::filesystem::path input;
  std::optional<std::filesystem::path> output;
  bool parallel = false;
};

// Each returns the process exit status; data goes to `out`, diagnostics to
// `err`.
int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err);
int cmd_featurize(const FeaturizeArgs& args, std::ostream& out, std::ostream& err);
int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err);
int cmd_predict(const PredictArgs& args, std::ostream& out, std::ostream& err);

// Table with columns Class, Precision, Sensitivity, Specificity, F1 Score,
// Accuracy, followed by the averaged confusion matrix and per-iteration
// mean +/- std.
std::string format_report(const RepeatedEvalResult& result);
std::string results_json(const RepeatedEvalResult& result, const EvalArgs& args);

// Subcommand dispatcher used by the ecgnn binary.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ecg::cli
