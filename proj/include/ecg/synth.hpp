#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ecg/ingest.hpp"

namespace ecg::synth {

struct SynthParams {
  ArrhythmiaClass cls = ArrhythmiaClass::NSR;
  std::uint64_t seed = 0;
  double rate_hz = 257.0;
  double duration_s = 5.0;
  // Standard deviation of additive white noise, relative to the R amplitude.
  double noise_std = 0.02;
};

// Heart-rate bands of the regular rhythms, in bpm.
inline constexpr double kNsrMinBpm = 60.0, kNsrMaxBpm = 100.0;
inline constexpr double kSbMinBpm = 40.0, kSbMaxBpm = 59.0;
inline constexpr double kStMinBpm = 101.0, kStMaxBpm = 150.0;

// Segment `index` depends only on (seed, class, index, rate, duration,
// noise), so any subset can be regenerated independently.
RawSegment generate_one(const SynthParams& params, std::size_t index);
std::vector<RawSegment> generate(const SynthParams& params, std::size_t count);

// `per_class` segments of every class, interleaved NSR, SB, ST, VF, AF, ...
std::vector<RawSegment> generate_balanced(std::size_t per_class, std::uint64_t seed, double noise_std = 0.02,
                                          double rate_hz = 257.0, double duration_s = 5.0);

}  // namespace ecg::synth
