#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "ecg/ingest.hpp"
#include "ecg/pca.hpp"
#include "ecg/signal_core.hpp"

namespace ecg {

inline constexpr std::size_t kNumFeatures = 17;

// Column order of FeatureVector::values. Model files record a checksum of
// this list, so reordering it invalidates every saved model.
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "heart_rate_bpm",  "mean",         "euclidean_norm", "peak_amplitude_variability",
    "mean_peak_distance_s", "skewness", "kurtosis",      "shannon_entropy_bits",
    "hilbert_mean",    "hilbert_min",  "hilbert_max",    "fft_kurtosis",
    "fft_variance",    "points_below_mean_count", "pca_1", "pca_2",
    "pca_3"};

struct FeatureVector {
  std::array<double, kNumFeatures> values{};
};

struct FeatureConfig {
  std::size_t entropy_bins = 32;
  // Peak threshold: min(mean + k*std, (mean + max) / 2).
  double peak_threshold_sigma = 1.5;
  double refractory_s = 0.2;
};

struct PeakList {
  std::vector<std::size_t> indices;
  double rate_hz = 0.0;
};

struct HilbertFeatures {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct SpectralFeatures {
  double kurtosis = 0.0;
  double variance = 0.0;
};

// Population moments (divisor n).
double mean(std::span<const double> x);
double variance(std::span<const double> x);
double skewness(std::span<const double> x);
double kurtosis(std::span<const double> x);
double euclidean_norm(std::span<const double> x);

PeakList detect_peaks(const Signal& x, const FeatureConfig& config = {});
double heart_rate(const PeakList& peaks, double duration_s);
double peak_amplitude_variability(std::span<const double> x, const PeakList& peaks);
double mean_peak_distance(const PeakList& peaks);

double shannon_entropy(std::span<const double> x, std::size_t bins = 32);
HilbertFeatures hilbert_features(const Signal& x);
SpectralFeatures fft_features(const Signal& x);
// Moments of an already-computed magnitude sequence.
SpectralFeatures magnitude_features(std::span<const double> magnitudes);
std::size_t points_below_mean(std::span<const double> x);

FeatureVector extract_features(const EcgSegment& segment, const PcaModel& pca,
                               const FeatureConfig& config = {});

}  // namespace ecg
