#include "ecg/parallel.hpp"

#include <exception>
#include <string>

#include <omp.h>

#include "ecg/error.hpp"

namespace ecg {

namespace {

void write_row(Eigen::MatrixXd& out, Eigen::Index row, const FeatureVector& f) {
  for (std::size_t j = 0; j < kNumFeatures; ++j) out(row, static_cast<Eigen::Index>(j)) = f.values[j];
}

}  // namespace

Eigen::MatrixXd featurize_serial(std::span<const EcgSegment> segments, const PcaModel& pca,
                                 const FeatureConfig& config) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(segments.size()), static_cast<Eigen::Index>(kNumFeatures));
  for (std::size_t i = 0; i < segments.size(); ++i)
    write_row(out, static_cast<Eigen::Index>(i), extract_features(segments[i], pca, config));
  return out;
}

Eigen::MatrixXd featurize_parallel(std::span<const EcgSegment> segments, const PcaModel& pca,
                                   const FeatureConfig& config, int threads) {
  const auto n = static_cast<std::ptrdiff_t>(segments.size());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kNumFeatures));
  std::exception_ptr failure;
  const int team = threads > 0 ? threads : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic, 8) num_threads(team)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      write_row(out, static_cast<Eigen::Index>(i), extract_features(segments[static_cast<std::size_t>(i)], pca, config));
    } catch (...) {
#pragma omp critical(ecg_featurize_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

Eigen::MatrixXd featurize(std::span<const EcgSegment> segments, const PcaModel& pca, const FeatureConfig& config,
                          Execution execution) {
  return execution == Execution::Parallel ? featurize_parallel(segments, pca, config)
                                          : featurize_serial(segments, pca, config);
}

Eigen::MatrixXd stack_signals(std::span<const EcgSegment> segments) {
  if (segments.empty()) throw Error(ErrorCode::EmptyInput, "no segments to stack");
  const std::size_t dim = segments.front().signal.size();
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(segments.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i].signal.samples;
    if (s.size() != dim)
      throw Error(ErrorCode::LengthMismatch, "segment " + segments[i].source_id + " has length " +
                                                 std::to_string(s.size()) + ", expected " + std::to_string(dim));
    rows.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(s.data(), static_cast<Eigen::Index>(dim));
  }
  return rows;
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace ecg
