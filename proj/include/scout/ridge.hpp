#pragma once

#include <Eigen/Dense>

namespace scout {

// Ridge regression with an unpenalised intercept, one column of
// coefficients per target.
struct RidgeModel {
  Eigen::MatrixXd coef;        // D x T
  Eigen::VectorXd intercept;   // T
  double alpha = 1e3;

  Eigen::VectorXd predict(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd predict_rows(const Eigen::MatrixXd& x_rows) const;  // N x T
};

// Closed-form solution of (Xc'Xc + alpha I) w = Xc'yc on centred data.
// Switches to the dual system when there are fewer rows than features.
RidgeModel fit_ridge(const Eigen::MatrixXd& x_rows, const Eigen::MatrixXd& targets_rows, double alpha);

}  // namespace scout
