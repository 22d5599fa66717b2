#include "ecg/signal_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ecg/error.hpp"

namespace ecg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
  std::size_t m = 1;
  while (m < n) m <<= 1;
  return m;
}

// In-place iterative radix-2 transform. sign = -1 forward, +1 inverse
// (unscaled).
void radix2_inplace(std::vector<Complex>& a, int sign) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  // Twiddles evaluated directly rather than by repeated multiplication so the
  // error does not grow with the stage length.
  std::vector<Complex> twiddle(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double angle = sign * kTwoPi * static_cast<double>(k) / static_cast<double>(n);
    twiddle[k] = Complex(std::cos(angle), std::sin(angle));
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex t = twiddle[k * stride] * a[start + k + half];
        const Complex u = a[start + k];
        a[start + k] = u + t;
        a[start + k + half] = u - t;
      }
    }
  }
}

std::vector<Complex> bluestein(std::span<const Complex> x, int sign) {
  const std::size_t n = x.size();
  const std::size_t m = next_power_of_two(2 * n - 1);

  // chirp[k] = exp(sign * i*pi*k^2/n); k^2 is reduced mod 2n to keep the
  // angle small and exact.
  std::vector<Complex> chirp(n);
  const std::size_t period = 2 * n;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t k2 = static_cast<std::size_t>((static_cast<unsigned long long>(k) * k) % period);
    const double angle = sign * std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
    chirp[k] = Complex(std::cos(angle), std::sin(angle));
  }

  std::vector<Complex> a(m, Complex(0.0, 0.0));
  for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * chirp[k];

  std::vector<Complex> b(m, Complex(0.0, 0.0));
  b[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) {
    b[k] = std::conj(chirp[k]);
    b[m - k] = b[k];
  }

  radix2_inplace(a, -1);
  radix2_inplace(b, -1);
  for (std::size_t k = 0; k < m; ++k) a[k] *= b[k];
  radix2_inplace(a, +1);

  std::vector<Complex> out(n);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * scale * chirp[k];
  return out;
}

std::vector<Complex> transform(std::span<const Complex> x, int sign) {
  if (x.empty()) throw Error(ErrorCode::EmptyInput, "transform of an empty sequence");
  if (is_power_of_two(x.size())) {
    std::vector<Complex> a(x.begin(), x.end());
    radix2_inplace(a, sign);
    return a;
  }
  return bluestein(x, sign);
}

std::vector<Complex> to_complex(const std::vector<double>& v) {
  std::vector<Complex> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = Complex(v[i], 0.0);
  return out;
}

}  // namespace

void validate(const Signal& x) {
  if (x.samples.empty()) throw Error(ErrorCode::EmptyInput, "signal has no samples");
  if (!(x.rate_hz > 0.0) || !std::isfinite(x.rate_hz))
    throw Error(ErrorCode::InvalidArgument, "sampling rate must be positive");
  for (std::size_t i = 0; i < x.samples.size(); ++i) {
    if (!std::isfinite(x.samples[i]))
      throw Error(ErrorCode::NonFiniteInput, "non-finite sample at index " + std::to_string(i));
  }
}

Signal moving_average(const Signal& x, std::size_t window) {
  if (window == 0) throw Error(ErrorCode::InvalidWindow, "moving-average window must be >= 1");
  if (window > x.size())
    throw Error(ErrorCode::WindowTooLarge, "window " + std::to_string(window) +
                                               " exceeds signal length " + std::to_string(x.size()));
  const std::size_t n_out = x.size() - window + 1;
  Signal out{std::vector<double>(n_out), x.rate_hz};
  const double inv = 1.0 / static_cast<double>(window);
  // Accumulate offsets from the window's first sample: a constant window
  // then averages to that constant exactly.
  for (std::size_t i = 0; i < n_out; ++i) {
    const double ref = x.samples[i];
    double acc = 0.0;
    for (std::size_t j = 1; j < window; ++j) acc += x.samples[i + j] - ref;
    out.samples[i] = ref + acc * inv;
  }
  return out;
}

std::pair<Signal, ScaleParams> min_max_normalize(const Signal& x) {
  if (x.size() < 2) throw Error(ErrorCode::TooShort, "min-max scaling needs at least 2 samples");
  const auto [lo_it, hi_it] = std::minmax_element(x.samples.begin(), x.samples.end());
  const ScaleParams params{*lo_it, *hi_it};
  if (!(params.max > params.min))
    throw Error(ErrorCode::ConstantSignal, "signal has zero range; cannot min-max scale");
  Signal out{std::vector<double>(x.size()), x.rate_hz};
  const double range = params.max - params.min;
  for (std::size_t i = 0; i < x.size(); ++i) out.samples[i] = (x.samples[i] - params.min) / range;
  return {std::move(out), params};
}

Signal resample(const Signal& x, double target_hz, ResampleOptions options) {
  if (!(target_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "target rate must be positive");
  if (x.samples.empty()) throw Error(ErrorCode::EmptyInput, "cannot resample an empty signal");
  if (target_hz > x.rate_hz)
    throw Error(ErrorCode::Upsample, "target rate " + std::to_string(target_hz) +
                                         " Hz exceeds source rate " + std::to_string(x.rate_hz) + " Hz");
  if (target_hz == x.rate_hz) return x;

  const double ratio = x.rate_hz / target_hz;
  std::vector<double> source = x.samples;
  if (options.prefilter) {
    const auto half = static_cast<std::ptrdiff_t>(std::lround(ratio) / 2);
    if (half > 0) {
      const auto n = static_cast<std::ptrdiff_t>(source.size());
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + half);
        double acc = 0.0;
        for (std::ptrdiff_t j = lo; j <= hi; ++j) acc += x.samples[j];
        source[i] = acc / static_cast<double>(hi - lo + 1);
      }
    }
  }

  const double exact = static_cast<double>(x.size()) * target_hz / x.rate_hz;
  const auto n_out = static_cast<std::size_t>(std::floor(exact + 1e-9));
  Signal out{std::vector<double>(n_out), target_hz};
  const std::size_t last = source.size() - 1;
  for (std::size_t j = 0; j < n_out; ++j) {
    const double pos = static_cast<double>(j) * ratio;
    const auto i0 = std::min(static_cast<std::size_t>(pos), last);
    const std::size_t i1 = std::min(i0 + 1, last);
    const double frac = pos - static_cast<double>(i0);
    out.samples[j] = source[i0] + frac * (source[i1] - source[i0]);
  }
  return out;
}

std::vector<Complex> dft_naive(std::span<const Complex> x) {
  if (x.empty()) throw Error(ErrorCode::EmptyInput, "DFT of an empty sequence");
  const std::size_t n = x.size();
  // One twiddle per residue of k*t mod n; the sum itself stays direct.
  std::vector<Complex> twiddle(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double angle = -kTwoPi * static_cast<double>(r) / static_cast<double>(n);
    twiddle[r] = Complex(std::cos(angle), std::sin(angle));
  }
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc(0.0, 0.0);
    std::size_t phase = 0;
    for (std::size_t t = 0; t < n; ++t) {
      acc += x[t] * twiddle[phase];
      phase += k;
      if (phase >= n) phase -= n;
    }
    out[k] = acc;
  }
  return out;
}

Spectrum dft_naive(const Signal& x) {
  const auto c = to_complex(x.samples);
  return {dft_naive(std::span<const Complex>(c)), x.rate_hz};
}

std::vector<Complex> fft(std::span<const Complex> x) { return transform(x, -1); }

std::vector<Complex> ifft(std::span<const Complex> x) {
  auto out = transform(x, +1);
  const double scale = 1.0 / static_cast<double>(x.size());
  for (auto& v : out) v *= scale;
  return out;
}

Spectrum fft(const Signal& x) {
  const auto c = to_complex(x.samples);
  return {fft(std::span<const Complex>(c)), x.rate_hz};
}

Signal hilbert_envelope(const Signal& x) {
  const std::size_t n = x.size();
  if (n < 4) throw Error(ErrorCode::TooShort, "Hilbert envelope needs at least 4 samples");
  auto spectrum = fft(x).bins;
  // Keep DC (and Nyquist for even n), double positive frequencies, drop
  // negative ones.
  const std::size_t positive_end = (n % 2 == 0) ? n / 2 : (n + 1) / 2;
  for (std::size_t k = 1; k < positive_end; ++k) spectrum[k] *= 2.0;
  for (std::size_t k = (n % 2 == 0) ? n / 2 + 1 : positive_end; k < n; ++k) spectrum[k] = 0.0;
  const auto analytic = ifft(spectrum);
  Signal out{std::vector<double>(n), x.rate_hz};
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = std::abs(analytic[i]);
  return out;
}

}  // namespace ecg
