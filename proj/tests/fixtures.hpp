#pragma once

#include <cstdint>

#include "ecg/ingest.hpp"
#include "ecg/synth.hpp"

inline ecg::Dataset synthetic_dataset(std::size_t per_class, std::uint64_t seed) {
  return ecg::build_dataset(ecg::synth::generate_balanced(per_class, seed)).dataset;
}
