#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace ecg {

using Complex = std::complex<double>;

// A single-lead, uniformly sampled trace.
struct Signal {
  std::vector<double> samples;
  double rate_hz = 0.0;

  std::size_t size() const noexcept { return samples.size(); }
  double duration_s() const noexcept { return static_cast<double>(samples.size()) / rate_hz; }
};

struct Spectrum {
  std::vector<Complex> bins;
  double rate_hz = 0.0;
};

struct ScaleParams {
  double min = 0.0;
  double max = 0.0;
};

struct ResampleOptions {
  // Smooth with a centered moving average of roughly rate/target samples
  // before interpolating. Off by default.
  bool prefilter = false;
};

// Throws NonFiniteInput/EmptyInput/InvalidArgument if the signal breaks the
// Signal invariants.
void validate(const Signal& x);

// Sliding mean over `window` consecutive samples; output has
// size() - window + 1 samples at the same rate.
Signal moving_average(const Signal& x, std::size_t window);

std::pair<Signal, ScaleParams> min_max_normalize(const Signal& x);

// Linear interpolation onto a uniform grid at target_hz (downsampling only).
Signal resample(const Signal& x, double target_hz, ResampleOptions options = {});

// Direct O(N^2) evaluation of X_k = sum_n x_n exp(-2 pi i k n / N).
Spectrum dft_naive(const Signal& x);
std::vector<Complex> dft_naive(std::span<const Complex> x);

// Exact N-point DFT for any N: radix-2 for powers of two, Bluestein chirp-z
// otherwise.
Spectrum fft(const Signal& x);
std::vector<Complex> fft(std::span<const Complex> x);
std::vector<Complex> ifft(std::span<const Complex> x);

// |analytic signal| built in the frequency domain.
Signal hilbert_envelope(const Signal& x);

}  // namespace ecg
