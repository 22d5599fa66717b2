#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ecg/error.hpp"
#include "ecg/features.hpp"
#include "ecg/ingest.hpp"
#include "ecg/pca.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ecg;

namespace {

constexpr double kPi = std::numbers::pi;

PeakList peaks_at(std::vector<std::size_t> idx, double rate) { return {std::move(idx), rate}; }

// Centered moments by two passes over a compensated mean.
double brute_moment(const std::vector<double>& x, int k) {
  const double mu = oracle::compensated_sum(x) / x.size();
  std::vector<double> t;
  for (const double v : x) t.push_back(std::pow(v - mu, k));
  return oracle::compensated_sum(t) / x.size();
}

EcgSegment regular_beats(double bpm, double phase_s) {
  std::vector<double> centers;
  for (double t = phase_s; t < 5.2; t += 60.0 / bpm) centers.push_back(t);
  RawSegment raw{oracle::pulse_train(centers, 257, 1285, 0.015), ArrhythmiaClass::NSR, "beats"};
  return preprocess(raw);
}

PcaModel beats_pca() {
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 8; ++i) rows.push_back(regular_beats(55 + 5 * i, 0.1 + 0.05 * i).signal.samples);
  return pca_fit(rows);
}

}  // namespace

TEST_CASE("mean") {
  const std::vector<double> a{0, 1};
  CHECK(mean(a) == 0.5);
  const std::vector<double> c(1000, 0.1);
  CHECK(mean(c) == 0.1);
  const auto r = oracle::random_vector(5000, 2, -3, 9);
  CHECK(mean(r) == doctest::Approx(oracle::compensated_sum(r) / 5000).epsilon(1e-12));
  CHECK(code_of([] { mean(std::vector<double>{}); }) == ErrorCode::EmptyInput);
}

TEST_CASE("skewness and kurtosis") {
  CHECK(std::abs(skewness(std::vector<double>{1, 2, 3})) < 1e-15);
  CHECK(skewness(std::vector<double>{0, 0, 1}) == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(kurtosis(std::vector<double>{-1, 1, -1, 1}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(code_of([] { skewness(std::vector<double>(5, 2.0)); }) == ErrorCode::ZeroVariance);
  CHECK(code_of([] { kurtosis(std::vector<double>(5, 2.0)); }) == ErrorCode::ZeroVariance);

  std::mt19937_64 rng(42);
  std::normal_distribution<double> g(0, 1);
  std::vector<double> s(200000);
  for (auto& v : s) v = g(rng);
  CHECK(std::abs(kurtosis(s) - 3.0) <= 0.2);
  CHECK(std::abs(skewness(s)) <= 0.05);

  const auto r = oracle::random_vector(3001, 8, 0, 1);
  const double m2 = brute_moment(r, 2);
  CHECK(variance(r) == doctest::Approx(m2).epsilon(1e-12));
  CHECK(skewness(r) == doctest::Approx(brute_moment(r, 3) / std::pow(m2, 1.5)).epsilon(1e-9));
  CHECK(kurtosis(r) == doctest::Approx(brute_moment(r, 4) / (m2 * m2)).epsilon(1e-12));
}

TEST_CASE("euclidean norm") {
  CHECK(euclidean_norm(std::vector<double>{3, 4}) == 5.0);
  CHECK(euclidean_norm(std::vector<double>(10, 0.0)) == 0.0);
  const auto r = oracle::random_vector(777, 5);
  std::vector<double> sq;
  for (const double v : r) sq.push_back(v * v);
  CHECK(euclidean_norm(r) == doctest::Approx(std::sqrt(oracle::compensated_sum(sq))).epsilon(1e-13));
}

TEST_CASE("peak detection") {
  CHECK(detect_peaks(Signal{std::vector<double>(1274, 0.0), 257}).indices.empty());

  const auto train = oracle::pulse_train({0.5, 1.5, 2.5, 3.5, 4.5}, 257, 1274);
  const auto p = detect_peaks(train);
  REQUIRE(p.indices.size() == 5);
  for (std::size_t j = 0; j < 5; ++j)
    CHECK(std::abs(static_cast<double>(p.indices[j]) - (0.5 + j) * 257) <= 2.0);

  Signal sine{std::vector<double>(1285), 257};
  for (std::size_t i = 0; i < sine.size(); ++i) sine.samples[i] = 1.0 + std::sin(2 * kPi * 2.0 * i / 257.0);
  CHECK(detect_peaks(sine).indices.size() == 10);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Signal r{oracle::random_vector(1274, seed, 0, 1), 257};
    const auto q = detect_peaks(r);
    for (std::size_t j = 1; j < q.indices.size(); ++j) CHECK(q.indices[j] - q.indices[j - 1] >= 52);
  }
}

TEST_CASE("heart rate") {
  CHECK(heart_rate(peaks_at({}, 257), 5.0) == 0.0);
  CHECK(heart_rate(peaks_at({100}, 257), 5.0) == 12.0);
  CHECK(heart_rate(peaks_at({0, 257, 514, 771, 1028}, 257), 5.0) == doctest::Approx(60.0).epsilon(1e-12));
  const auto irregular = peaks_at({400, 1100, 2300, 3000, 4600}, 1000);
  CHECK(heart_rate(irregular, 5.0) == doctest::Approx(60.0 * 4 / 4.2).epsilon(1e-12));
  CHECK(heart_rate(irregular, 5.0) == doctest::Approx(57.14).epsilon(1e-4));
}

TEST_CASE("peak amplitude variability and distance") {
  std::vector<double> x(20, 0.0);
  x[2] = x[8] = x[14] = 0.9;
  CHECK(peak_amplitude_variability(x, peaks_at({2, 8, 14}, 10)) == 0.0);
  x[2] = 0.5;
  x[8] = 0.7;
  x[14] = 0.5;
  CHECK(peak_amplitude_variability(x, peaks_at({2, 8, 14}, 10)) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(peak_amplitude_variability(x, peaks_at({2, 8}, 10)) == 0.0);

  CHECK(mean_peak_distance(peaks_at({}, 257)) == 0.0);
  CHECK(mean_peak_distance(peaks_at({5}, 257)) == 0.0);
  CHECK(mean_peak_distance(peaks_at({0, 257, 514, 771, 1028}, 257)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mean_peak_distance(peaks_at({400, 1100, 2300, 3000, 4600}, 1000)) == doctest::Approx(1.05).epsilon(1e-12));
}

TEST_CASE("shannon entropy") {
  CHECK(shannon_entropy(std::vector<double>(1274, 0.3)) == 0.0);
  std::vector<double> u;
  for (int b = 0; b < 32; ++b)
    for (int k = 0; k < 4; ++k) u.push_back((b + 0.5) / 32.0);
  CHECK(shannon_entropy(u) == doctest::Approx(5.0).epsilon(1e-12));

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto r = oracle::random_vector(1274, seed, 0, 1);
    r[0] = 0.0;
    r[1] = 1.0;
    const double h = shannon_entropy(r);
    CHECK(h == doctest::Approx(oracle::entropy_bruteforce(r, 32)).epsilon(1e-12));
    CHECK(h >= 0.0);
    CHECK(h <= 5.0);
    CHECK(shannon_entropy(r, 8) == doctest::Approx(oracle::entropy_bruteforce(r, 8)).epsilon(1e-12));
  }
}

TEST_CASE("hilbert features") {
  Signal c{std::vector<double>(1274), 257};
  for (std::size_t i = 0; i < c.size(); ++i) c.samples[i] = std::cos(2 * kPi * 49.0 * i / 1274.0);
  const auto h = hilbert_features(c);
  CHECK(h.mean == doctest::Approx(1.0).epsilon(0.02));
  CHECK(h.min >= 0.0);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = hilbert_features(Signal{oracle::random_vector(500, seed), 257});
    CHECK(r.min <= r.mean);
    CHECK(r.mean <= r.max);
    CHECK(r.min >= 0.0);
  }
}

TEST_CASE("spectral features of a single tone") {
  const std::size_t n = 1274;
  const double m = n / 2;
  Signal tone{std::vector<double>(n), 257};
  for (std::size_t i = 0; i < n; ++i) tone.samples[i] = std::cos(2 * kPi * 3.0 * i / n);
  const auto f = fft_features(tone);
  // One spike of height s = n/2 among m magnitudes, the rest zero.
  const double s = n / 2.0;
  CHECK(f.variance == doctest::Approx(s * s * (1 / m - 1 / (m * m))).epsilon(1e-9));
  CHECK(f.kurtosis == doctest::Approx((m * m - 3 * m + 3) / (m - 1)).epsilon(1e-6));

  Signal two = tone;
  for (std::size_t i = 0; i < n; ++i) two.samples[i] += std::cos(2 * kPi * 40.0 * i / n);
  CHECK(fft_features(two).kurtosis < f.kurtosis);

  CHECK(code_of([] { magnitude_features(std::vector<double>(10, 1.0)); }) == ErrorCode::ZeroVariance);
}

TEST_CASE("points below mean") {
  CHECK(points_below_mean(std::vector<double>{1, 1, 1, 5}) == 3);
  CHECK(points_below_mean(std::vector<double>(50, 0.25)) == 0);
  const auto r = oracle::random_vector(999, 12);
  const double mu = oracle::compensated_sum(r) / r.size();
  std::size_t below = 0;
  for (const double v : r) below += v < mu;
  CHECK(points_below_mean(r) == below);
}

TEST_CASE("feature vector of a regular pulse train") {
  const auto pca = beats_pca();
  const auto seg = regular_beats(60, 0.4);
  const auto f = extract_features(seg, pca);
  CHECK(f.values.size() == 17);
  CHECK(std::abs(f.values[0] - 60.0) <= 2.0);
  CHECK(std::abs(f.values[4] - 1.0) <= 0.05);
  for (const double v : f.values) CHECK(std::isfinite(v));
  CHECK(f.values[7] >= 0.0);
  CHECK(f.values[7] <= 5.0);

  const auto g = extract_features(regular_beats(60, 0.4), pca);
  CHECK(f.values == g.values);
  CHECK(kFeatureNames[0] == "heart_rate_bpm");
  CHECK(kFeatureNames[16] == "pca_3");
}
