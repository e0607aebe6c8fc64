#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace dataval {

// L1-penalized least squares, objective (1/2n)||y - b0 - X beta||^2 + lambda*||beta||_1,
// solved by cyclic coordinate descent on centered data. The intercept is implicit.
Eigen::VectorXd lasso_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                          const Eigen::VectorXd* warm_start = nullptr);

// Smallest lambda for which every coefficient is zero.
double lasso_lambda_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

// 5-fold cross-validation over a geometric grid of n_lambdas values spanning
// [lambda_max * min_ratio, lambda_max]; returns the refit at the best lambda.
struct LassoCvResult {
    Eigen::VectorXd coefficients;
    double best_lambda = 0.0;
    std::vector<double> grid;
    std::vector<double> cv_mse;
};

LassoCvResult lasso_cv(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int n_folds, int n_lambdas,
                       double min_ratio, std::uint64_t seed);

}  // namespace dataval
