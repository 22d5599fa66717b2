#include "ecg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <string>

#include <omp.h>

#include "ecg/error.hpp"

namespace ecg {

namespace {

constexpr std::size_t kMinDatasetSize = 10;

std::size_t test_count(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

std::optional<double> ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

class SummaryBuilder {
 public:
  void add(const std::optional<double>& v) {
    if (v) values_.push_back(*v);
    else ++excluded_;
  }
  MetricSummary finish() const {
    MetricSummary s;
    s.defined = values_.size();
    s.excluded = excluded_;
    if (values_.empty()) return s;
    double sum = 0.0;
    for (const double v : values_) sum += v;
    const double mu = sum / static_cast<double>(values_.size());
    double ss = 0.0;
    for (const double v : values_) ss += (v - mu) * (v - mu);
    s.mean = mu;
    s.stddev = std::sqrt(ss / static_cast<double>(values_.size()));
    return s;
  }

 private:
  std::vector<double> values_;
  std::size_t excluded_ = 0;
};

std::vector<int> labels_of(const Dataset& ds, std::span<const std::size_t> idx) {
  std::vector<int> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = class_index(*ds.segments[idx[i]].label);
  return out;
}

std::vector<EcgSegment> gather(const Dataset& ds, std::span<const std::size_t> idx) {
  std::vector<EcgSegment> out;
  out.reserve(idx.size());
  for (const auto i : idx) out.push_back(ds.segments[i]);
  return out;
}

std::vector<int> predict_rows(const MlpModel& model, const Eigen::MatrixXd& features) {
  const Eigen::MatrixXd probs = forward_infer(model, features);
  std::vector<int> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const Eigen::RowVectorXd p = probs.row(i);
    out[static_cast<std::size_t>(i)] = argmax(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
  }
  return out;
}

}  // namespace

double ConfusionMatrix::total() const {
  double s = 0.0;
  for (const auto& row : counts)
    for (const double v : row) s += v;
  return s;
}

double ConfusionMatrix::trace() const {
  double s = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) s += counts[c][c];
  return s;
}

double ConfusionMatrix::row_sum(std::size_t c) const {
  double s = 0.0;
  for (const double v : counts[c]) s += v;
  return s;
}

double ConfusionMatrix::col_sum(std::size_t c) const {
  double s = 0.0;
  for (const auto& row : counts) s += row[c];
  return s;
}

Split split(std::size_t n, double test_fraction, std::uint64_t seed) {
  if (n < kMinDatasetSize)
    throw Error(ErrorCode::DatasetTooSmall, "need at least 10 segments to split, got " + std::to_string(n));
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw Error(ErrorCode::InvalidArgument, "test_fraction must lie in (0, 1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_train = n - test_count(n, test_fraction);
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return s;
}

Split split(const Dataset& dataset, double test_fraction, std::uint64_t seed, bool stratified) {
  if (!stratified) return split(dataset.size(), test_fraction, seed);
  if (dataset.size() < kMinDatasetSize)
    throw Error(ErrorCode::DatasetTooSmall, "need at least 10 segments to split, got " + std::to_string(dataset.size()));
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& label = dataset.segments[i].label;
    if (!label) throw Error(ErrorCode::DegenerateDataset, "stratified split requires labels");
    by_class[static_cast<std::size_t>(class_index(*label))].push_back(i);
  }
  std::mt19937_64 rng(seed);
  Split s;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const std::size_t n_train = members.size() - test_count(members.size(), test_fraction);
    s.train.insert(s.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.insert(s.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  }
  std::shuffle(s.train.begin(), s.train.end(), rng);
  std::shuffle(s.test.begin(), s.test.end(), rng);
  return s;
}

ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size())
    throw Error(ErrorCode::LengthMismatch, "truth and prediction lists differ in length");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    const int p = predicted[i];
    if (t < 0 || t >= kOutputUnits || p < 0 || p >= kOutputUnits)
      throw Error(ErrorCode::InvalidArgument, "class index out of range at pair " + std::to_string(i));
    cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] += 1.0;
  }
  return cm;
}

ClassMetrics class_metrics(const ConfusionMatrix& cm) {
  const double total = cm.total();
  if (!(total > 0.0)) throw Error(ErrorCode::EmptyMatrix, "confusion matrix has no counts");
  ClassMetrics m;
  m.accuracy = cm.trace() / total;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const double tp = cm.counts[c][c];
    const double fn = cm.row_sum(c) - tp;
    const double fp = cm.col_sum(c) - tp;
    const double tn = total - tp - fn - fp;
    auto& pc = m.per_class[c];
    pc.precision = ratio(tp, tp + fp);
    pc.sensitivity = ratio(tp, tp + fn);
    pc.specificity = ratio(tn, tn + fp);
    if (pc.precision && pc.sensitivity) pc.f1 = ratio(2.0 * *pc.precision * *pc.sensitivity, *pc.precision + *pc.sensitivity);
  }
  return m;
}

Eigen::MatrixXd adapt_feature_width(const Eigen::MatrixXd& features, int input_dim) {
  if (input_dim < 1) throw Error(ErrorCode::InvalidArgument, "input_dim must be >= 1");
  if (input_dim == features.cols()) return features;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(features.rows(), input_dim);
  const Eigen::Index keep = std::min<Eigen::Index>(input_dim, features.cols());
  out.leftCols(keep) = features.leftCols(keep);
  return out;
}

FittedPipeline fit_pipeline(const Dataset& dataset, const PipelineConfig& config, std::uint64_t seed) {
  config.train.validate();
  for (const auto& s : dataset.segments)
    if (!s.label) throw Error(ErrorCode::DegenerateDataset, "segment " + s.source_id + " has no label");
  if (dataset.classes_present() < 2) throw Error(ErrorCode::DegenerateDataset, "need at least 2 classes");

  FittedPipeline fp;
  fp.partition = split(dataset, config.train.test_fraction, seed, config.stratified);
  const auto train_segments = gather(dataset, fp.partition.train);
  const auto test_segments = gather(dataset, fp.partition.test);
  const auto train_labels = labels_of(dataset, fp.partition.train);
  const auto test_labels = labels_of(dataset, fp.partition.test);

  fp.pca = pca_fit(stack_signals(train_segments));
  const Eigen::MatrixXd train_x = adapt_feature_width(
      featurize(train_segments, fp.pca, config.features, config.execution), config.input_dim);
  const Eigen::MatrixXd test_x = adapt_feature_width(
      featurize(test_segments, fp.pca, config.features, config.execution), config.input_dim);

  TrainConfig tc = config.train;
  tc.seed = seed;
  auto trained = train(train_x, train_labels, tc);
  fp.mlp = std::move(trained.model);
  fp.history = std::move(trained.history);

  fp.train_cm = confusion_matrix(train_labels, predict_rows(fp.mlp, train_x));
  fp.train_accuracy = fp.train_cm.trace() / fp.train_cm.total();
  fp.test_cm = confusion_matrix(test_labels, predict_rows(fp.mlp, test_x));
  fp.test_accuracy = fp.test_cm.trace() / fp.test_cm.total();
  return fp;
}

IterationResult run_iteration(const Dataset& dataset, const PipelineConfig& config, std::uint64_t seed) {
  PipelineConfig inner = config;
  // Parallelism lives at the iteration level when iterations are spread
  // across threads; inside one iteration the work stays serial.
  inner.execution = Execution::Serial;
  auto fp = fit_pipeline(dataset, inner, seed);
  IterationResult r;
  r.seed = seed;
  r.cm = fp.test_cm;
  r.metrics = class_metrics(fp.test_cm);
  return r;
}

RepeatedEvalResult aggregate(std::vector<IterationResult> runs) {
  if (runs.empty()) throw Error(ErrorCode::InvalidArgument, "no iterations to aggregate");
  std::stable_sort(runs.begin(), runs.end(),
                   [](const IterationResult& a, const IterationResult& b) { return a.seed < b.seed; });
  RepeatedEvalResult out;
  const double n = static_cast<double>(runs.size());
  for (const auto& r : runs)
    for (std::size_t t = 0; t < kNumClasses; ++t)
      for (std::size_t p = 0; p < kNumClasses; ++p) out.averaged_cm.counts[t][p] += r.cm.counts[t][p];
  for (auto& row : out.averaged_cm.counts)
    for (double& v : row) v /= n;
  out.averaged_metrics = class_metrics(out.averaged_cm);

  SummaryBuilder acc;
  std::array<std::array<SummaryBuilder, 4>, kNumClasses> per;
  for (const auto& r : runs) {
    acc.add(r.metrics.accuracy);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const auto& pc = r.metrics.per_class[c];
      per[c][0].add(pc.precision);
      per[c][1].add(pc.sensitivity);
      per[c][2].add(pc.specificity);
      per[c][3].add(pc.f1);
    }
  }
  out.accuracy = acc.finish();
  for (std::size_t c = 0; c < kNumClasses; ++c)
    out.per_iteration[c] = {per[c][0].finish(), per[c][1].finish(), per[c][2].finish(), per[c][3].finish()};
  out.iterations = std::move(runs);
  return out;
}

RepeatedEvalResult repeated_eval_serial(const Dataset& dataset, const PipelineConfig& config, int iterations,
                                        std::uint64_t base_seed) {
  if (iterations < 1) throw Error(ErrorCode::InvalidArgument, "iterations must be >= 1");
  std::vector<IterationResult> runs;
  runs.reserve(static_cast<std::size_t>(iterations));
  for (int i = 0; i < iterations; ++i) {
    try {
      runs.push_back(run_iteration(dataset, config, base_seed + static_cast<std::uint64_t>(i)));
    } catch (const Error& e) {
      throw Error(e.code(), "iteration " + std::to_string(i) + " failed after " + std::to_string(runs.size()) +
                                " completed iterations: " + e.what());
    }
  }
  return aggregate(std::move(runs));
}

RepeatedEvalResult repeated_eval_parallel(const Dataset& dataset, const PipelineConfig& config, int iterations,
                                          std::uint64_t base_seed, int threads) {
  if (iterations < 1) throw Error(ErrorCode::InvalidArgument, "iterations must be >= 1");
  std::vector<IterationResult> runs(static_cast<std::size_t>(iterations));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(iterations));
  const int team = threads > 0 ? threads : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic, 1) num_threads(team)
  for (int i = 0; i < iterations; ++i) {
    try {
      runs[static_cast<std::size_t>(i)] = run_iteration(dataset, config, base_seed + static_cast<std::uint64_t>(i));
    } catch (...) {
      failures[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  std::size_t completed = 0;
  for (const auto& f : failures) completed += f ? 0 : 1;
  for (std::size_t i = 0; i < failures.size(); ++i) {
    if (!failures[i]) continue;
    try {
      std::rethrow_exception(failures[i]);
    } catch (const Error& e) {
      throw Error(e.code(), "iteration " + std::to_string(i) + " failed (" + std::to_string(completed) +
                                " iterations completed): " + e.what());
    }
  }
  return aggregate(std::move(runs));
}

RepeatedEvalResult repeated_eval(const Dataset& dataset, const PipelineConfig& config, int iterations,
                                 std::uint64_t base_seed) {
  return config.execution == Execution::Parallel ? repeated_eval_parallel(dataset, config, iterations, base_seed)
                                                 : repeated_eval_serial(dataset, config, iterations, base_seed);
}

}  // namespace ecg
