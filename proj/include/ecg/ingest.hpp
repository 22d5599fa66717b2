#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ecg/signal_core.hpp"

namespace ecg {

// Integer values are a stable encoding used in model and result files.
enum class ArrhythmiaClass : int { NSR = 0, SB = 1, ST = 2, VF = 3, AF = 4 };

inline constexpr std::size_t kNumClasses = 5;
inline constexpr std::array<ArrhythmiaClass, kNumClasses> kAllClasses = {
    ArrhythmiaClass::NSR, ArrhythmiaClass::SB, ArrhythmiaClass::ST, ArrhythmiaClass::VF,
    ArrhythmiaClass::AF};

std::string_view to_string(ArrhythmiaClass c);
std::optional<ArrhythmiaClass> parse_class(std::string_view token);
inline int class_index(ArrhythmiaClass c) { return static_cast<int>(c); }
ArrhythmiaClass class_from_index(int index);

struct RawSegment {
  Signal signal;
  std::optional<ArrhythmiaClass> label;
  std::string source_id;
};

struct EcgSegment {
  Signal signal;
  std::optional<ArrhythmiaClass> label;
  std::string source_id;
};

struct PreprocessConfig {
  double target_hz = 257.0;
  std::size_t ma_window = 12;
  double window_s = 5.0;
  bool resample_prefilter = false;

  std::size_t window_samples() const;
  // Length of a fully preprocessed segment (1274 with the defaults).
  std::size_t output_length() const { return window_samples() - ma_window + 1; }
};

struct Dataset {
  std::vector<EcgSegment> segments;
  std::array<std::size_t, kNumClasses> class_counts{};

  std::size_t size() const noexcept { return segments.size(); }
  std::size_t classes_present() const;
};

struct SkippedSegment {
  std::size_t index = 0;
  std::string source_id;
  std::string reason;
};

struct BuildResult {
  Dataset dataset;
  std::vector<SkippedSegment> skipped;
};

// Segment CSV: first line "# rate_hz=<float>", then one row per segment,
// "LABEL, v1, ..., vN". LABEL is one of NSR/SB/ST/VF/AF, or "?" when
// unlabeled. source_id is "<file stem>:<row>".
std::vector<RawSegment> load_segments_csv(const std::filesystem::path& path);
std::vector<RawSegment> parse_segments_csv(std::istream& in, std::string_view source_name);

// All segments must share one rate; values are written round-trip exact.
void write_segments_csv(std::ostream& out, const std::vector<RawSegment>& segments);
void save_segments_csv(const std::filesystem::path& path, const std::vector<RawSegment>& segments);

// resample -> first window -> moving average -> min-max scale.
EcgSegment preprocess(const RawSegment& raw, const PreprocessConfig& config = {});

// Non-overlapping windows of window_s seconds; the tail is dropped.
std::vector<Signal> segment_record(const Signal& record, double window_s = 5.0);

// Preprocesses every segment, skipping (and reporting) the ones that fail.
BuildResult build_dataset(const std::vector<RawSegment>& raw, const PreprocessConfig& config = {});

Dataset make_dataset(std::vector<EcgSegment> segments);

}  // namespace ecg
