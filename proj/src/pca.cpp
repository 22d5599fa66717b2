#include "ecg/pca.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ecg/error.hpp"

namespace ecg {

PcaModel pca_fit(const Eigen::MatrixXd& rows) {
  if (rows.rows() < 4)
    throw Error(ErrorCode::InsufficientRows, "PCA needs at least 4 rows, got " + std::to_string(rows.rows()));
  if (!rows.allFinite()) throw Error(ErrorCode::NonFiniteInput, "PCA input contains non-finite values");

  PcaModel model;
  model.mean_vector = rows.colwise().mean().transpose();
  const Eigen::MatrixXd centered = rows.rowwise() - model.mean_vector.transpose();

  const Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const Eigen::MatrixXd& v = svd.matrixV();

  const auto dim = rows.cols();
  model.components = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(kPcaComponents), dim);
  const double tol = sigma.size() > 0 ? static_cast<double>(std::max(rows.rows(), dim)) *
                                            std::numeric_limits<double>::epsilon() * sigma(0)
                                      : 0.0;
  const double n = static_cast<double>(rows.rows());
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(kPcaComponents); ++j) {
    if (j >= sigma.size() || !(sigma(j) > tol)) {
      model.degenerate = true;
      continue;
    }
    Eigen::VectorXd component = v.col(j);
    Eigen::Index pivot = 0;
    component.cwiseAbs().maxCoeff(&pivot);
    if (component(pivot) < 0.0) component = -component;
    model.components.row(j) = component.transpose();
    model.explained_variance[static_cast<std::size_t>(j)] = sigma(j) * sigma(j) / n;
  }
  return model;
}

PcaModel pca_fit(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw Error(ErrorCode::InsufficientRows, "PCA needs at least 4 rows, got 0");
  const std::size_t dim = rows.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != dim)
      throw Error(ErrorCode::LengthMismatch, "PCA row " + std::to_string(i) + " has length " +
                                                 std::to_string(rows[i].size()) + ", expected " +
                                                 std::to_string(dim));
    for (std::size_t c = 0; c < dim; ++c) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
  }
  return pca_fit(m);
}

std::array<double, kPcaComponents> pca_project(const PcaModel& model, std::span<const double> x) {
  if (x.size() != model.dim())
    throw Error(ErrorCode::LengthMismatch, "signal length " + std::to_string(x.size()) +
                                               " does not match PCA dimension " + std::to_string(model.dim()));
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd centered = xv - model.mean_vector;
  std::array<double, kPcaComponents> scores{};
  for (std::size_t j = 0; j < kPcaComponents; ++j)
    scores[j] = model.components.row(static_cast<Eigen::Index>(j)).dot(centered);
  return scores;
}

Eigen::VectorXd pca_reconstruct(const PcaModel& model, const std::array<double, kPcaComponents>& scores) {
  Eigen::VectorXd out = model.mean_vector;
  for (std::size_t j = 0; j < kPcaComponents; ++j)
    out += scores[j] * model.components.row(static_cast<Eigen::Index>(j)).transpose();
  return out;
}

}  // namespace ecg
