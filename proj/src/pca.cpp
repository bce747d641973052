#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "userscope/error.hpp"
#include "userscope/vectorize.hpp"

namespace userscope {

namespace {

// Eigenvalues below this fraction of the largest are treated as zero rank.
constexpr double kRankTolerance = 1e-10;

void fix_sign(Eigen::RowVectorXd& component) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < component.size(); ++j) {
    if (std::abs(component(j)) > std::abs(component(best))) best = j;
  }
  if (component.size() > 0 && component(best) < 0) component = -component;
}

}  // namespace

PcaModel pca_fit(const Eigen::MatrixXd& data, std::size_t k) {
  if (k < 1) throw Error("INVALID_ARGUMENT", "PCA needs k >= 1");
  if (data.rows() < 2) throw Error("INVALID_ARGUMENT", "PCA needs at least 2 rows");

  const Eigen::Index n = data.rows();
  const Eigen::Index dim = data.cols();
  PcaModel model;
  model.requested_components = k;
  model.mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - model.mean.transpose();

  // Work in whichever of the covariance (dim x dim) or Gram (n x n) matrix is smaller;
  // both share their nonzero spectrum.
  const bool use_gram = n < dim;
  const Eigen::MatrixXd scatter =
      use_gram ? Eigen::MatrixXd(centered * centered.transpose()) : Eigen::MatrixXd(centered.transpose() * centered);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(scatter / static_cast<double>(n - 1));
  if (solver.info() != Eigen::Success) throw Error("NUMERICAL_ERROR", "eigendecomposition failed");

  // Eigen returns ascending eigenvalues.
  const Eigen::VectorXd values = solver.eigenvalues().reverse();
  const Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();
  const double total = values.cwiseMax(0.0).sum();
  const double top = values.size() > 0 ? std::max(values(0), 0.0) : 0.0;

  Eigen::Index rank = 0;
  while (rank < values.size() && values(rank) > top * kRankTolerance && values(rank) > 0.0) ++rank;
  const Eigen::Index keep = std::min<Eigen::Index>(rank, static_cast<Eigen::Index>(k));

  model.components.resize(keep, dim);
  for (Eigen::Index i = 0; i < keep; ++i) {
    Eigen::RowVectorXd component;
    if (use_gram) {
      Eigen::VectorXd v = centered.transpose() * vectors.col(i);
      component = (v / v.norm()).transpose();
    } else {
      component = vectors.col(i).transpose();
    }
    fix_sign(component);
    model.components.row(i) = component;
  }
  model.explained_variance = values.head(keep);
  model.explained_variance_ratio =
      total > 0.0 ? Eigen::VectorXd(model.explained_variance / total) : Eigen::VectorXd::Zero(keep);
  return model;
}

Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& data) {
  if (data.cols() != model.mean.size()) throw Error("INVALID_ARGUMENT", "PCA input dimensionality mismatch");
  return (data.rowwise() - model.mean.transpose()) * model.components.transpose();
}

}  // namespace userscope
