#include "ecg/ingest.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ecg/error.hpp"

namespace ecg {

namespace {

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view token, double& value) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last && std::isfinite(value);
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::string_view to_string(ArrhythmiaClass c) {
  switch (c) {
    case ArrhythmiaClass::NSR: return "NSR";
    case ArrhythmiaClass::SB: return "SB";
    case ArrhythmiaClass::ST: return "ST";
    case ArrhythmiaClass::VF: return "VF";
    case ArrhythmiaClass::AF: return "AF";
  }
  return "?";
}

std::optional<ArrhythmiaClass> parse_class(std::string_view token) {
  for (const auto c : kAllClasses)
    if (token == to_string(c)) return c;
  return std::nullopt;
}

ArrhythmiaClass class_from_index(int index) {
  if (index < 0 || index >= static_cast<int>(kNumClasses))
    throw Error(ErrorCode::InvalidArgument, "class index out of range: " + std::to_string(index));
  return static_cast<ArrhythmiaClass>(index);
}

std::size_t PreprocessConfig::window_samples() const {
  return static_cast<std::size_t>(std::llround(window_s * target_hz));
}

std::size_t Dataset::classes_present() const {
  std::size_t n = 0;
  for (const auto c : class_counts) n += c > 0 ? 1 : 0;
  return n;
}

std::vector<RawSegment> parse_segments_csv(std::istream& in, std::string_view source_name) {
  std::vector<RawSegment> segments;
  std::optional<double> rate;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (!rate) {
      constexpr std::string_view key = "rate_hz=";
      if (view.front() != '#')
        throw Error(ErrorCode::MissingRateHeader, "line 1 must be '# rate_hz=<float>'");
      std::string_view rest = trim(view.substr(1));
      if (rest.substr(0, key.size()) != key)
        throw Error(ErrorCode::MissingRateHeader, "line " + std::to_string(line_no) + " is not a rate header");
      double value = 0.0;
      if (!parse_double(trim(rest.substr(key.size())), value) || value <= 0.0)
        throw Error(ErrorCode::MissingRateHeader, "invalid rate_hz value on line " + std::to_string(line_no));
      rate = value;
      continue;
    }
    if (view.front() == '#') continue;

    RawSegment seg;
    seg.signal.rate_hz = *rate;
    seg.source_id = std::string(source_name) + ":" + std::to_string(line_no);
    std::size_t column = 0;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = view.find(',', pos);
      const std::string_view cell = trim(view.substr(pos, comma == std::string_view::npos ? view.npos : comma - pos));
      ++column;
      if (column == 1) {
        if (cell != "?") {
          seg.label = parse_class(cell);
          if (!seg.label)
            throw Error(ErrorCode::UnknownLabel, "row " + std::to_string(line_no) + ": unknown label '" +
                                                     std::string(cell) + "'");
        }
      } else {
        double value = 0.0;
        if (!parse_double(cell, value))
          throw Error(ErrorCode::ParseError, "row " + std::to_string(line_no) + ", column " +
                                                 std::to_string(column) + ": '" + std::string(cell) +
                                                 "' is not a finite number");
        seg.signal.samples.push_back(value);
      }
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (seg.signal.samples.empty())
      throw Error(ErrorCode::ParseError, "row " + std::to_string(line_no) + " has no samples");
    segments.push_back(std::move(seg));
  }
  if (!rate) throw Error(ErrorCode::MissingRateHeader, "no '# rate_hz=' header found");
  return segments;
}

std::vector<RawSegment> load_segments_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return parse_segments_csv(in, path.stem().string());
}

void write_segments_csv(std::ostream& out, const std::vector<RawSegment>& segments) {
  if (segments.empty()) throw Error(ErrorCode::EmptyInput, "no segments to write");
  const double rate = segments.front().signal.rate_hz;
  out << "# rate_hz=" << format_double(rate) << '\n';
  for (const auto& seg : segments) {
    if (seg.signal.rate_hz != rate)
      throw Error(ErrorCode::InvalidArgument, "segments in one CSV must share a sampling rate");
    out << (seg.label ? to_string(*seg.label) : std::string_view("?"));
    for (const double v : seg.signal.samples) out << ',' << format_double(v);
    out << '\n';
  }
}

void save_segments_csv(const std::filesystem::path& path, const std::vector<RawSegment>& segments) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  write_segments_csv(out, segments);
}

EcgSegment preprocess(const RawSegment& raw, const PreprocessConfig& config) {
  validate(raw.signal);
  Signal resampled = resample(raw.signal, config.target_hz, {config.resample_prefilter});
  const std::size_t window = config.window_samples();
  if (resampled.size() < window)
    throw Error(ErrorCode::SegmentTooShort, "segment has " + std::to_string(resampled.size()) +
                                                " samples after resampling; need " + std::to_string(window));
  resampled.samples.resize(window);
  auto smoothed = moving_average(resampled, config.ma_window);
  auto [scaled, params] = min_max_normalize(smoothed);
  return {std::move(scaled), raw.label, raw.source_id};
}

std::vector<Signal> segment_record(const Signal& record, double window_s) {
  if (!(window_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "window length must be positive");
  const auto window = static_cast<std::size_t>(std::llround(window_s * record.rate_hz));
  if (window == 0 || record.size() < window)
    throw Error(ErrorCode::SegmentTooShort, "record of " + std::to_string(record.size()) +
                                                " samples is shorter than one window of " + std::to_string(window));
  std::vector<Signal> out;
  out.reserve(record.size() / window);
  for (std::size_t start = 0; start + window <= record.size(); start += window) {
    out.push_back(Signal{std::vector<double>(record.samples.begin() + static_cast<std::ptrdiff_t>(start),
                                             record.samples.begin() + static_cast<std::ptrdiff_t>(start + window)),
                         record.rate_hz});
  }
  return out;
}

Dataset make_dataset(std::vector<EcgSegment> segments) {
  Dataset ds;
  ds.segments = std::move(segments);
  for (const auto& s : ds.segments)
    if (s.label) ++ds.class_counts[static_cast<std::size_t>(class_index(*s.label))];
  return ds;
}

BuildResult build_dataset(const std::vector<RawSegment>& raw, const PreprocessConfig& config) {
  BuildResult result;
  std::vector<EcgSegment> kept;
  kept.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    try {
      kept.push_back(preprocess(raw[i], config));
    } catch (const Error& e) {
      result.skipped.push_back({i, raw[i].source_id, e.what()});
    }
  }
  result.dataset = make_dataset(std::move(kept));
  return result;
}

}  // namespace ecg
