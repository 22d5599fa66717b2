#include "ecg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "ecg/error.hpp"

namespace ecg::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Bump {
  double offset_s;
  double amplitude;
  double width_s;
};

struct BeatShape {
  double p_amp;
  double r_amp;
  double t_amp;
};

void add_gaussian(std::vector<double>& out, double rate, double center_s, double amp, double width_s) {
  if (amp == 0.0) return;
  const double lo = std::max(0.0, (center_s - 5.0 * width_s) * rate);
  const double hi = std::min(static_cast<double>(out.size()) - 1.0, (center_s + 5.0 * width_s) * rate);
  for (auto i = static_cast<std::ptrdiff_t>(std::ceil(lo)); i <= static_cast<std::ptrdiff_t>(std::floor(hi)); ++i) {
    const double d = (static_cast<double>(i) / rate - center_s) / width_s;
    out[static_cast<std::size_t>(i)] += amp * std::exp(-0.5 * d * d);
  }
}

// PQRST as five Gaussian bumps around the R time; P and T offsets scale with
// sqrt(RR) so fast rhythms keep their waves inside the cycle.
void add_beat(std::vector<double>& out, double rate, double r_time, double rr, const BeatShape& shape) {
  const double s = std::sqrt(rr);
  const Bump bumps[] = {
      {-0.16 * s, shape.p_amp, 0.022},
      {-0.028, -0.12 * shape.r_amp, 0.008},
      {0.0, shape.r_amp, 0.014},
      {0.028, -0.22 * shape.r_amp, 0.009},
      {0.28 * s, shape.t_amp, 0.045},
  };
  for (const auto& b : bumps) add_gaussian(out, rate, r_time + b.offset_s, b.amplitude, b.width_s);
}

std::uint64_t class_tag(ArrhythmiaClass c) { return static_cast<std::uint64_t>(class_index(c)) + 1; }

}  // namespace

RawSegment generate_one(const SynthParams& params, std::size_t index) {
  if (!(params.rate_hz > 0.0) || !(params.duration_s > 0.0))
    throw Error(ErrorCode::InvalidArgument, "rate and duration must be positive");
  if (params.noise_std < 0.0) throw Error(ErrorCode::InvalidArgument, "noise_std must be >= 0");

  std::seed_seq seq{static_cast<std::uint32_t>(params.seed), static_cast<std::uint32_t>(params.seed >> 32),
                    static_cast<std::uint32_t>(class_tag(params.cls)), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(index) >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double rate = params.rate_hz;
  const auto n = static_cast<std::size_t>(std::llround(params.duration_s * rate));
  std::vector<double> x(n, 0.0);

  const BeatShape shape{uniform(0.08, 0.14), uniform(0.85, 1.15), uniform(0.12, 0.22)};

  const auto regular = [&](double min_bpm, double max_bpm) {
    const double rr = 60.0 / uniform(min_bpm, max_bpm);
    double t = -uniform(0.0, rr);
    while (t < params.duration_s + rr) {
      add_beat(x, rate, t, rr, shape);
      t += rr * (1.0 + 0.01 * gauss(rng));
    }
  };

  switch (params.cls) {
    case ArrhythmiaClass::NSR: regular(kNsrMinBpm, kNsrMaxBpm); break;
    case ArrhythmiaClass::SB: regular(kSbMinBpm, kSbMaxBpm); break;
    case ArrhythmiaClass::ST: regular(kStMinBpm, kStMaxBpm); break;
    case ArrhythmiaClass::AF: {
      // Gamma-distributed RR with coefficient of variation cv: shape 1/cv^2.
      const double mean_rr = 60.0 / uniform(80.0, 140.0);
      const double cv = uniform(0.28, 0.38);
      const double k = 1.0 / (cv * cv);
      std::gamma_distribution<double> rr_dist(k, mean_rr / k);
      const BeatShape af{0.0, shape.r_amp, shape.t_amp};
      double t = -uniform(0.0, mean_rr);
      while (t < params.duration_s + mean_rr) {
        const double rr = std::max(0.3, rr_dist(rng));
        add_beat(x, rate, t, rr, af);
        t += rr;
      }
      const double f_amp = uniform(0.04, 0.08);
      const double f_hz = uniform(6.0, 8.0);
      const double phase = uniform(0.0, kTwoPi);
      for (std::size_t i = 0; i < n; ++i) {
        const double t_s = static_cast<double>(i) / rate;
        x[i] += f_amp * (std::sin(kTwoPi * f_hz * t_s + phase) + 0.4 * std::sin(kTwoPi * 1.7 * f_hz * t_s + 2.0 * phase));
      }
      break;
    }
    case ArrhythmiaClass::VF: {
      // Quasi-sinusoid with a slowly drifting instantaneous frequency.
      const double base_hz = uniform(4.0, 6.0);
      const double drift_hz = uniform(0.1, 0.5);
      const double drift_depth = uniform(0.04, 0.1);
      const double drift_phase = uniform(0.0, kTwoPi);
      const double amp = uniform(0.7, 1.1);
      double phase = uniform(0.0, kTwoPi);
      for (std::size_t i = 0; i < n; ++i) {
        const double t_s = static_cast<double>(i) / rate;
        const double f = base_hz * (1.0 + drift_depth * std::sin(kTwoPi * drift_hz * t_s + drift_phase));
        x[i] += amp * (1.0 + 0.1 * std::sin(kTwoPi * 0.3 * t_s)) * std::sin(phase);
        phase += kTwoPi * f / rate;
      }
      break;
    }
  }

  const double wander_amp = uniform(0.0, 0.05);
  const double wander_hz = uniform(0.15, 0.4);
  const double wander_phase = uniform(0.0, kTwoPi);
  for (std::size_t i = 0; i < n; ++i) {
    const double t_s = static_cast<double>(i) / rate;
    x[i] += wander_amp * std::sin(kTwoPi * wander_hz * t_s + wander_phase) + params.noise_std * gauss(rng);
  }

  RawSegment seg;
  seg.signal = Signal{std::move(x), rate};
  seg.label = params.cls;
  seg.source_id = "synth:" + std::string(to_string(params.cls)) + ":" + std::to_string(params.seed) + ":" +
                  std::to_string(index);
  return seg;
}

std::vector<RawSegment> generate(const SynthParams& params, std::size_t count) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "count must be >= 1");
  std::vector<RawSegment> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate_one(params, i));
  return out;
}

std::vector<RawSegment> generate_balanced(std::size_t per_class, std::uint64_t seed, double noise_std, double rate_hz,
                                          double duration_s) {
  if (per_class < 1) throw Error(ErrorCode::InvalidArgument, "per_class must be >= 1");
  std::vector<RawSegment> out;
  out.reserve(per_class * kNumClasses);
  for (std::size_t i = 0; i < per_class; ++i) {
    for (const auto c : kAllClasses) {
      out.push_back(generate_one({c, seed, rate_hz, duration_s, noise_std}, i));
    }
  }
  return out;
}

}  // namespace ecg::synth
