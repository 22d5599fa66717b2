#include "ecg/model_file.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include <zlib.h>

#include "ecg/error.hpp"

namespace ecg {

namespace {

constexpr std::string_view kEndHeader = "END_HEADER";

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t size) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, data, static_cast<uInt>(size));
  return static_cast<std::uint32_t>(crc);
}

std::string fmt_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

class Writer {
 public:
  void line(std::string_view key, const std::string& value) {
    text(key);
    bytes_.push_back('=');
    text(value);
    bytes_.push_back('\n');
  }
  void text(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  template <typename Dense>
  void array(const Dense& m) {
    // Row-major order regardless of Eigen's storage.
    u32(static_cast<std::uint32_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, std::size_t pos, std::size_t end) : b_(bytes), pos_(pos), end_(end) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_++]) << (8 * i);
    return std::bit_cast<double>(v);
  }
  Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols, const char* what) {
    const std::uint32_t count = u32();
    if (static_cast<Eigen::Index>(count) != rows * cols)
      throw Error(ErrorCode::FormatError, std::string(what) + " has " + std::to_string(count) + " values, expected " +
                                              std::to_string(rows * cols));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = f64();
    return m;
  }
  Eigen::VectorXd vector(Eigen::Index n, const char* what) { return matrix(n, 1, what).col(0); }
  bool done() const { return pos_ == end_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw Error(ErrorCode::FormatError, "payload ends early");
  }
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_;
  std::size_t end_;
};

class Header {
 public:
  explicit Header(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}
  const std::string& str(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw Error(ErrorCode::FormatError, "model header lacks '" + key + "'");
    return it->second;
  }
  double num(const std::string& key) const {
    const auto& s = str(key);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw Error(ErrorCode::FormatError, "model header field '" + key + "' is not numeric");
    return v;
  }
  long long integer(const std::string& key) const {
    const auto& s = str(key);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw Error(ErrorCode::FormatError, "model header field '" + key + "' is not an integer");
    return v;
  }
  std::uint64_t uinteger(const std::string& key) const {
    const auto& s = str(key);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw Error(ErrorCode::FormatError, "model header field '" + key + "' is not an unsigned integer");
    return v;
  }

 private:
  std::map<std::string, std::string> kv_;
};

std::string joined_feature_names() {
  std::string s;
  for (std::size_t i = 0; i < kFeatureNames.size(); ++i) {
    if (i) s += ',';
    s += kFeatureNames[i];
  }
  return s;
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08x", v);
  return buf;
}

// Reads "key=value" lines up to END_HEADER; returns the offset just past it.
std::size_t read_header_lines(const std::vector<std::uint8_t>& bytes, std::map<std::string, std::string>& kv) {
  std::size_t pos = 0;
  bool first = true;
  while (pos < bytes.size()) {
    std::size_t eol = pos;
    while (eol < bytes.size() && bytes[eol] != '\n') ++eol;
    if (eol == bytes.size()) break;
    const std::string line(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.begin() + static_cast<std::ptrdiff_t>(eol));
    pos = eol + 1;
    if (first) {
      if (line != kModelMagic) throw Error(ErrorCode::FormatError, "not a model file (bad magic)");
      first = false;
      continue;
    }
    if (line == kEndHeader) return pos;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::FormatError, "malformed header line '" + line + "'");
    kv.emplace(line.substr(0, eq), line.substr(eq + 1));
  }
  if (first) throw Error(ErrorCode::FormatError, "not a model file (bad magic)");
  return std::string::npos;
}

}  // namespace

std::uint32_t feature_order_checksum() {
  const auto s = joined_feature_names();
  return crc32_of(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
}

std::vector<std::uint8_t> serialize_model(const ModelFile& m) {
  const auto& mlp = m.mlp;
  if (static_cast<Eigen::Index>(m.pca.dim()) != m.pca.mean_vector.size() ||
      m.pca.components.rows() != static_cast<Eigen::Index>(kPcaComponents) ||
      m.pca.components.cols() != m.pca.mean_vector.size())
    throw Error(ErrorCode::InvalidArgument, "inconsistent PCA model");
  if (mlp.w1.rows() != kHiddenUnits || mlp.w1.cols() != mlp.input_dim || mlp.w2.rows() != kOutputUnits ||
      mlp.w2.cols() != kHiddenUnits)
    throw Error(ErrorCode::InvalidArgument, "inconsistent MLP shapes");

  Writer w;
  w.text(kModelMagic);
  w.text("\n");
  w.line("format_version", std::to_string(kModelFormatVersion));
  w.line("feature_order", joined_feature_names());
  w.line("feature_order_crc32", hex32(feature_order_checksum()));
  w.line("segment_length", std::to_string(m.pca.dim()));
  w.line("input_dim", std::to_string(mlp.input_dim));
  w.line("hidden_units", std::to_string(kHiddenUnits));
  w.line("output_units", std::to_string(kOutputUnits));
  w.line("class_order", "NSR,SB,ST,VF,AF");
  w.line("target_hz", fmt_double(m.preprocess.target_hz));
  w.line("ma_window", std::to_string(m.preprocess.ma_window));
  w.line("window_s", fmt_double(m.preprocess.window_s));
  w.line("resample_prefilter", m.preprocess.resample_prefilter ? "1" : "0");
  w.line("entropy_bins", std::to_string(m.features.entropy_bins));
  w.line("peak_threshold_sigma", fmt_double(m.features.peak_threshold_sigma));
  w.line("refractory_s", fmt_double(m.features.refractory_s));
  w.line("leaky_slope", fmt_double(mlp.leaky_slope));
  w.line("bn_epsilon", fmt_double(mlp.bn_epsilon));
  w.line("pca_degenerate", m.pca.degenerate ? "1" : "0");
  w.line("epochs", std::to_string(m.train.epochs));
  w.line("learning_rate", fmt_double(m.train.learning_rate));
  w.line("l1_lambda", fmt_double(m.train.l1_lambda));
  w.line("batch_size", std::to_string(m.train.batch_size));
  w.line("test_fraction", fmt_double(m.train.test_fraction));
  w.line("seed", std::to_string(m.train.seed));
  w.line("adam_beta1", fmt_double(m.train.adam_beta1));
  w.line("adam_beta2", fmt_double(m.train.adam_beta2));
  w.line("adam_epsilon", fmt_double(m.train.adam_epsilon));
  w.line("bn_momentum", fmt_double(m.train.bn_momentum));
  w.text(kEndHeader);
  w.text("\n");

  w.array(m.pca.mean_vector);
  w.array(m.pca.components);
  w.array(Eigen::Map<const Eigen::VectorXd>(m.pca.explained_variance.data(), kPcaComponents));
  w.array(mlp.bn_gamma);
  w.array(mlp.bn_beta);
  w.array(mlp.bn_running_mean);
  w.array(mlp.bn_running_var);
  w.array(mlp.w1);
  w.array(mlp.b1);
  w.array(mlp.w2);
  w.array(mlp.b2);

  auto& bytes = w.bytes();
  const std::uint32_t crc = crc32_of(bytes.data(), bytes.size());
  w.u32(crc);
  return std::move(bytes);
}

ModelFile deserialize_model(const std::vector<std::uint8_t>& bytes) {
  // Magic and version are checked before the checksum so that a newer (or
  // older) file reports VersionMismatch rather than corruption.
  constexpr std::string_view version_key = "format_version=";
  {
    const std::string prefix(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(bytes.size(), 64)));
    if (prefix.rfind(std::string(kModelMagic) + "\n", 0) != 0)
      throw Error(ErrorCode::FormatError, "not a model file (bad magic)");
    const auto vpos = kModelMagic.size() + 1;
    if (prefix.compare(vpos, version_key.size(), version_key) == 0) {
      const auto eol = prefix.find('\n', vpos);
      if (eol != std::string::npos) {
        const auto v = prefix.substr(vpos + version_key.size(), eol - vpos - version_key.size());
        if (v != std::to_string(kModelFormatVersion))
          throw Error(ErrorCode::VersionMismatch, "model format version " + v + ", this build reads " +
                                                      std::to_string(kModelFormatVersion));
      }
    }
  }
  if (bytes.size() < 4) throw Error(ErrorCode::ChecksumFailure, "file too short");
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(bytes[body + static_cast<std::size_t>(i)]) << (8 * i);
  if (crc32_of(bytes.data(), body) != stored)
    throw Error(ErrorCode::ChecksumFailure, "model checksum does not match contents");

  std::map<std::string, std::string> kv;
  const std::size_t payload = read_header_lines(bytes, kv);
  if (payload == std::string::npos || payload > body) throw Error(ErrorCode::FormatError, "header not terminated");
  const Header h(std::move(kv));
  if (h.integer("format_version") != kModelFormatVersion)
    throw Error(ErrorCode::VersionMismatch, "unsupported model format version");
  if (h.str("feature_order_crc32") != hex32(feature_order_checksum()))
    throw Error(ErrorCode::FormatError, "model was written with a different feature order");
  if (h.integer("hidden_units") != kHiddenUnits || h.integer("output_units") != kOutputUnits)
    throw Error(ErrorCode::FormatError, "unsupported network architecture");

  ModelFile m;
  m.preprocess.target_hz = h.num("target_hz");
  m.preprocess.ma_window = static_cast<std::size_t>(h.uinteger("ma_window"));
  m.preprocess.window_s = h.num("window_s");
  m.preprocess.resample_prefilter = h.integer("resample_prefilter") != 0;
  m.features.entropy_bins = static_cast<std::size_t>(h.uinteger("entropy_bins"));
  m.features.peak_threshold_sigma = h.num("peak_threshold_sigma");
  m.features.refractory_s = h.num("refractory_s");
  m.train.epochs = static_cast<int>(h.integer("epochs"));
  m.train.learning_rate = h.num("learning_rate");
  m.train.l1_lambda = h.num("l1_lambda");
  m.train.batch_size = static_cast<int>(h.integer("batch_size"));
  m.train.test_fraction = h.num("test_fraction");
  m.train.seed = h.uinteger("seed");
  m.train.adam_beta1 = h.num("adam_beta1");
  m.train.adam_beta2 = h.num("adam_beta2");
  m.train.adam_epsilon = h.num("adam_epsilon");
  m.train.bn_momentum = h.num("bn_momentum");

  const auto dim = static_cast<Eigen::Index>(h.integer("segment_length"));
  const auto in = static_cast<Eigen::Index>(h.integer("input_dim"));
  if (dim < 1 || in < 1) throw Error(ErrorCode::FormatError, "invalid dimensions in header");

  Reader r(bytes, payload, body);
  m.pca.mean_vector = r.vector(dim, "pca mean");
  m.pca.components = r.matrix(static_cast<Eigen::Index>(kPcaComponents), dim, "pca components");
  const Eigen::VectorXd ev = r.vector(static_cast<Eigen::Index>(kPcaComponents), "explained variance");
  for (std::size_t j = 0; j < kPcaComponents; ++j) m.pca.explained_variance[j] = ev(static_cast<Eigen::Index>(j));
  m.pca.degenerate = h.integer("pca_degenerate") != 0;

  auto& mlp = m.mlp;
  mlp.input_dim = static_cast<int>(in);
  mlp.leaky_slope = h.num("leaky_slope");
  mlp.bn_epsilon = h.num("bn_epsilon");
  mlp.bn_gamma = r.vector(in, "bn gamma");
  mlp.bn_beta = r.vector(in, "bn beta");
  mlp.bn_running_mean = r.vector(in, "bn running mean");
  mlp.bn_running_var = r.vector(in, "bn running var");
  mlp.w1 = r.matrix(kHiddenUnits, in, "w1");
  mlp.b1 = r.vector(kHiddenUnits, "b1");
  mlp.w2 = r.matrix(kOutputUnits, kHiddenUnits, "w2");
  mlp.b2 = r.vector(kOutputUnits, "b2");
  if (!r.done()) throw Error(ErrorCode::FormatError, "trailing bytes after payload");
  return m;
}

void save_model(const std::filesystem::path& path, const ModelFile& model) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace ecg
