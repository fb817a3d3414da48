#include "scout/ridge.hpp"

#include <stdexcept>

namespace scout {

Eigen::VectorXd RidgeModel::predict(const Eigen::VectorXd& x) const {
  if (x.size() != coef.rows()) throw std::invalid_argument("ridge: feature dimension mismatch");
  return coef.transpose() * x + intercept;
}

Eigen::MatrixXd RidgeModel::predict_rows(const Eigen::MatrixXd& x_rows) const {
  if (x_rows.cols() != coef.rows()) throw std::invalid_argument("ridge: feature dimension mismatch");
  return (x_rows * coef).rowwise() + intercept.transpose();
}

RidgeModel fit_ridge(const Eigen::MatrixXd& x_rows, const Eigen::MatrixXd& targets_rows, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("ridge alpha must be positive");
  if (x_rows.rows() < 1) throw std::invalid_argument("ridge: need at least one row");
  if (x_rows.rows() != targets_rows.rows()) throw std::invalid_argument("ridge: row count mismatch");

  const double n = static_cast<double>(x_rows.rows());
  const Eigen::RowVectorXd x_mean = x_rows.colwise().sum() / n;
  const Eigen::RowVectorXd y_mean = targets_rows.colwise().sum() / n;
  const Eigen::MatrixXd xc = x_rows.rowwise() - x_mean;
  const Eigen::MatrixXd yc = targets_rows.rowwise() - y_mean;

  RidgeModel m;
  m.alpha = alpha;
  if (xc.rows() >= xc.cols()) {
    Eigen::MatrixXd gram = xc.transpose() * xc;
    gram.diagonal().array() += alpha;
    m.coef = gram.ldlt().solve(xc.transpose() * yc);
  } else {
    Eigen::MatrixXd gram = xc * xc.transpose();
    gram.diagonal().array() += alpha;
    m.coef = xc.transpose() * gram.ldlt().solve(yc);
  }
  m.intercept = (y_mean - x_mean * m.coef).transpose();
  return m;
}

}  // namespace scout
