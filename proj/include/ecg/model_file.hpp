#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ecg/features.hpp"
#include "ecg/ingest.hpp"
#include "ecg/nn.hpp"
#include "ecg/pca.hpp"

namespace ecg {

inline constexpr int kModelFormatVersion = 1;
inline constexpr std::string_view kModelMagic = "ECGNN-MODEL";

// Everything predict needs to reproduce the training-time pipeline.
struct ModelFile {
  PreprocessConfig preprocess;
  FeatureConfig features;
  TrainConfig train;
  PcaModel pca;
  MlpModel mlp;
};

// CRC-32 of the comma-joined kFeatureNames.
std::uint32_t feature_order_checksum();

// Layout (all multi-byte values little-endian):
//   ASCII header, one "key=value" per line, starting with "ECGNN-MODEL" and
//   "format_version=1", ending with "END_HEADER";
//   binary payload of length-prefixed float64 arrays (u32 count, then
//   IEEE-754 bit patterns);
//   u32 CRC-32 of every preceding byte.
// See docs/file_formats.md for the full field list.
std::vector<std::uint8_t> serialize_model(const ModelFile& model);
ModelFile deserialize_model(const std::vector<std::uint8_t>& bytes);

void save_model(const std::filesystem::path& path, const ModelFile& model);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace ecg
