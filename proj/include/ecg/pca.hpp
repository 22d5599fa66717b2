#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ecg {

inline constexpr std::size_t kPcaComponents = 3;

struct PcaModel {
  Eigen::VectorXd mean_vector;
  // kPcaComponents rows, one unit-norm component per row.
  Eigen::MatrixXd components;
  std::array<double, kPcaComponents> explained_variance{};
  // Set when the data had fewer than kPcaComponents non-negligible singular
  // values; the missing components are zero rows with zero variance.
  bool degenerate = false;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean_vector.size()); }
};

// rows: one training signal per row. Components are the top right singular
// vectors of the centered matrix, each flipped so that its largest-magnitude
// entry is positive. Explained variance uses the population divisor.
PcaModel pca_fit(const Eigen::MatrixXd& rows);
PcaModel pca_fit(const std::vector<std::vector<double>>& rows);

std::array<double, kPcaComponents> pca_project(const PcaModel& model, std::span<const double> x);
Eigen::VectorXd pca_reconstruct(const PcaModel& model, const std::array<double, kPcaComponents>& scores);

}  // namespace ecg
