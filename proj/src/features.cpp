#include "ecg/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ecg/error.hpp"

namespace ecg {

namespace {

struct CentralMoments {
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
};

CentralMoments central_moments(std::span<const double> x) {
  const double mu = mean(x);
  CentralMoments m;
  for (const double v : x) {
    const double d = v - mu;
    const double d2 = d * d;
    m.m2 += d2;
    m.m3 += d2 * d;
    m.m4 += d2 * d2;
  }
  const double n = static_cast<double>(x.size());
  m.m2 /= n;
  m.m3 /= n;
  m.m4 /= n;
  return m;
}

void require_non_empty(std::span<const double> x, const char* what) {
  if (x.empty()) throw Error(ErrorCode::EmptyInput, std::string(what) + " of an empty sequence");
}

}  // namespace

double mean(std::span<const double> x) {
  require_non_empty(x, "mean");
  // Offsets from the first element: exact for constant input.
  const double ref = x.front();
  double acc = 0.0;
  for (const double v : x) acc += v - ref;
  return ref + acc / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  require_non_empty(x, "variance");
  return central_moments(x).m2;
}

double skewness(std::span<const double> x) {
  require_non_empty(x, "skewness");
  const auto m = central_moments(x);
  if (!(m.m2 > 0.0)) throw Error(ErrorCode::ZeroVariance, "skewness undefined for zero variance");
  return m.m3 / std::pow(m.m2, 1.5);
}

double kurtosis(std::span<const double> x) {
  require_non_empty(x, "kurtosis");
  const auto m = central_moments(x);
  if (!(m.m2 > 0.0)) throw Error(ErrorCode::ZeroVariance, "kurtosis undefined for zero variance");
  return m.m4 / (m.m2 * m.m2);
}

double euclidean_norm(std::span<const double> x) {
  require_non_empty(x, "norm");
  double acc = 0.0;
  for (const double v : x) acc += v * v;
  return std::sqrt(acc);
}

PeakList detect_peaks(const Signal& x, const FeatureConfig& config) {
  PeakList out{{}, x.rate_hz};
  const auto& s = x.samples;
  if (s.size() < 3) return out;

  const double mu = mean(s);
  const double sigma = std::sqrt(variance(s));
  const double top = *std::max_element(s.begin(), s.end());
  // mean + k*std alone sits above the crest of a pure sinusoid (whose max is
  // mean + sqrt(2)*std), so the midpoint to the maximum caps it.
  const double threshold = std::min(mu + config.peak_threshold_sigma * sigma, 0.5 * (mu + top));
  const auto gap = static_cast<std::size_t>(std::ceil(config.refractory_s * x.rate_hz - 1e-9));

  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    // Left-strict maximum: the first sample of a flat top counts once.
    if (!(s[i] > s[i - 1] && s[i] >= s[i + 1] && s[i] > threshold)) continue;
    if (!out.indices.empty() && i - out.indices.back() < gap) {
      if (s[i] > s[out.indices.back()]) out.indices.back() = i;
      continue;
    }
    out.indices.push_back(i);
  }
  return out;
}

double heart_rate(const PeakList& peaks, double duration_s) {
  if (!(duration_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "duration must be positive");
  const auto& p = peaks.indices;
  if (p.empty()) return 0.0;
  if (p.size() == 1) return 60.0 / duration_s;
  const double span_s = static_cast<double>(p.back() - p.front()) / peaks.rate_hz;
  return 60.0 * static_cast<double>(p.size() - 1) / span_s;
}

double peak_amplitude_variability(std::span<const double> x, const PeakList& peaks) {
  const auto& p = peaks.indices;
  if (p.size() < 3) return 0.0;
  std::vector<double> diffs(p.size() - 1);
  for (std::size_t j = 0; j + 1 < p.size(); ++j) diffs[j] = x[p[j + 1]] - x[p[j]];
  return std::sqrt(variance(diffs));
}

double mean_peak_distance(const PeakList& peaks) {
  const auto& p = peaks.indices;
  if (p.size() < 2) return 0.0;
  // Mean of successive gaps telescopes to the first-to-last span.
  return static_cast<double>(p.back() - p.front()) / static_cast<double>(p.size() - 1) / peaks.rate_hz;
}

double shannon_entropy(std::span<const double> x, std::size_t bins) {
  require_non_empty(x, "entropy");
  if (bins == 0) throw Error(ErrorCode::InvalidArgument, "entropy needs at least one bin");
  std::vector<std::size_t> counts(bins, 0);
  const double scale = static_cast<double>(bins);
  for (const double v : x) {
    const double pos = std::floor(v * scale);
    const std::size_t idx =
        pos <= 0.0 ? 0 : std::min(static_cast<std::size_t>(pos), bins - 1);
    ++counts[idx];
  }
  const double n = static_cast<double>(x.size());
  double h = 0.0;
  for (const auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

HilbertFeatures hilbert_features(const Signal& x) {
  const auto env = hilbert_envelope(x);
  const auto [lo, hi] = std::minmax_element(env.samples.begin(), env.samples.end());
  return {mean(env.samples), *lo, *hi};
}

SpectralFeatures magnitude_features(std::span<const double> magnitudes) {
  return {kurtosis(magnitudes), variance(magnitudes)};
}

SpectralFeatures fft_features(const Signal& x) {
  const auto spectrum = fft(x);
  const std::size_t half = x.size() / 2;
  if (half == 0) throw Error(ErrorCode::TooShort, "spectral features need at least 2 samples");
  std::vector<double> mags(half);
  for (std::size_t k = 1; k <= half; ++k) mags[k - 1] = std::abs(spectrum.bins[k]);
  return magnitude_features(mags);
}

std::size_t points_below_mean(std::span<const double> x) {
  const double mu = mean(x);
  return static_cast<std::size_t>(std::count_if(x.begin(), x.end(), [mu](double v) { return v < mu; }));
}

FeatureVector extract_features(const EcgSegment& segment, const PcaModel& pca, const FeatureConfig& config) {
  const Signal& sig = segment.signal;
  const std::span<const double> x(sig.samples);
  const auto peaks = detect_peaks(sig, config);
  const auto hil = hilbert_features(sig);
  const auto spec = fft_features(sig);
  const auto scores = pca_project(pca, x);

  FeatureVector f;
  f.values = {heart_rate(peaks, sig.duration_s()),
              mean(x),
              euclidean_norm(x),
              peak_amplitude_variability(x, peaks),
              mean_peak_distance(peaks),
              skewness(x),
              kurtosis(x),
              shannon_entropy(x, config.entropy_bins),
              hil.mean,
              hil.min,
              hil.max,
              spec.kurtosis,
              spec.variance,
              static_cast<double>(points_below_mean(x)),
              scores[0],
              scores[1],
              scores[2]};
  return f;
}

}  // namespace ecg
