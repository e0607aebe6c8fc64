#pragma once

#include <Eigen/Core>

#include "dataval/dataset.hpp"

namespace dataval {

struct OTProblem {
    Eigen::MatrixXd cost;   // m x n_val, nonnegative
    Eigen::VectorXd mu;     // length m, sums to 1
    Eigen::VectorXd nu;     // length n_val, sums to 1
    double epsilon = 0.01;
    int max_iters = 5000;
    double tol = 1e-6;
};

struct DualPotentials {
    Eigen::VectorXd h;        // training side, centered to mean zero
    Eigen::VectorXd g;        // validation side
    double marginal_err = 0.0;
    int iterations = 0;
    bool converged = false;
};

// cost[i][v] = ||x_i - x~_v||_2 + label_weight * 1(y_i != y~_v)
Eigen::MatrixXd ground_cost(const Dataset& ds, const SplitIndices& split, double label_weight);

DualPotentials sinkhorn_duals(const OTProblem& problem);

}  // namespace dataval
