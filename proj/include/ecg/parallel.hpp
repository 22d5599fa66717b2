#pragma once

#include <span>

#include <Eigen/Dense>

#include "ecg/features.hpp"
#include "ecg/ingest.hpp"
#include "ecg/pca.hpp"

namespace ecg {

enum class Execution { Serial, Parallel };

// One row of kNumFeatures per segment, in input order. The parallel kernel
// distributes segments over OpenMP threads (threads <= 0: runtime default);
// each row is computed exactly as in the serial loop, so both agree bitwise.
Eigen::MatrixXd featurize_serial(std::span<const EcgSegment> segments, const PcaModel& pca,
                                 const FeatureConfig& config);
Eigen::MatrixXd featurize_parallel(std::span<const EcgSegment> segments, const PcaModel& pca,
                                   const FeatureConfig& config, int threads = 0);
Eigen::MatrixXd featurize(std::span<const EcgSegment> segments, const PcaModel& pca, const FeatureConfig& config,
                          Execution execution);

// Training-split signals stacked as rows, ready for pca_fit.
Eigen::MatrixXd stack_signals(std::span<const EcgSegment> segments);

int max_threads();

}  // namespace ecg
