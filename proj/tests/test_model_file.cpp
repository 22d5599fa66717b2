#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include "ecg/error.hpp"
#include "ecg/model_file.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ecg;

namespace {

ModelFile sample_model() {
  ModelFile m;
  m.pca = pca_fit(oracle::random_matrix(12, 40, 3));
  m.mlp = init_model(17, 4);
  m.mlp.bn_running_mean = Eigen::VectorXd::LinSpaced(17, -1, 1);
  m.mlp.bn_running_var = Eigen::VectorXd::LinSpaced(17, 0.5, 3);
  m.mlp.b2 << 0.1, -0.2, 0.3, 1e-17, -5e300;
  m.train.seed = 12345678901234ULL;
  m.train.learning_rate = 0.1 + 0.2;
  m.features.entropy_bins = 16;
  m.preprocess.resample_prefilter = true;
  return m;
}

std::size_t find(const std::vector<std::uint8_t>& bytes, const std::string& needle) {
  const std::string s(bytes.begin(), bytes.end());
  return s.find(needle);
}

}  // namespace

TEST_CASE("serialize, deserialize, serialize is byte identical") {
  const auto model = sample_model();
  const auto bytes = serialize_model(model);
  const auto back = deserialize_model(bytes);
  CHECK(serialize_model(back) == bytes);
  CHECK(back.mlp.w1 == model.mlp.w1);
  CHECK(back.mlp.b2 == model.mlp.b2);
  CHECK(back.pca.components == model.pca.components);
  CHECK(back.train.seed == model.train.seed);
  CHECK(back.train.learning_rate == model.train.learning_rate);
  CHECK(back.features.entropy_bins == 16);
  CHECK(back.preprocess.resample_prefilter);
  CHECK(find(bytes, "ECGNN-MODEL\nformat_version=1\n") == 0);
}

TEST_CASE("loaded models infer bitwise identically") {
  const auto model = sample_model();
  const auto path = std::filesystem::temp_directory_path() / "ecg_test_model.bin";
  save_model(path, model);
  const auto back = load_model(path);
  std::filesystem::remove(path);
  const Eigen::MatrixXd x = oracle::random_matrix(100, 17, 9);
  CHECK(forward_infer(back.mlp, x) == forward_infer(model.mlp, x));
  const auto v = oracle::random_vector(40, 1);
  CHECK(pca_project(back.pca, v) == pca_project(model.pca, v));
}

TEST_CASE("damaged files are rejected") {
  const auto bytes = serialize_model(sample_model());

  auto truncated = bytes;
  truncated.resize(bytes.size() - 9);
  CHECK(code_of([&] { deserialize_model(truncated); }) == ErrorCode::ChecksumFailure);

  auto flipped = bytes;
  flipped[bytes.size() - 40] ^= 0x10;
  CHECK(code_of([&] { deserialize_model(flipped); }) == ErrorCode::ChecksumFailure);

  auto version = bytes;
  version[find(bytes, "format_version=1") + 15] = '2';
  CHECK(code_of([&] { deserialize_model(version); }) == ErrorCode::VersionMismatch);

  auto magic = bytes;
  magic[0] = 'X';
  CHECK(code_of([&] { deserialize_model(magic); }) == ErrorCode::FormatError);

  CHECK(code_of([] { deserialize_model({}); }) == ErrorCode::FormatError);
  CHECK(code_of([] { load_model("/nonexistent/model.bin"); }) == ErrorCode::IoError);
}

TEST_CASE("feature order checksum is stable") {
  CHECK(feature_order_checksum() == feature_order_checksum());
  char hex[16];
  std::snprintf(hex, sizeof(hex), "%08x", feature_order_checksum());
  CHECK(find(serialize_model(sample_model()), std::string("feature_order_crc32=") + hex) != std::string::npos);
}
