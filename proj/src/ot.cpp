#include "dataval/ot.hpp"

#include <cmath>
#include <limits>

#include "dataval/error.hpp"

namespace dataval {

Eigen::MatrixXd ground_cost(const Dataset& ds, const SplitIndices& split, double label_weight) {
    require(label_weight >= 0.0, ErrorCode::invalid_argument, "ground_cost: label_weight must be nonnegative");
    const int m = static_cast<int>(split.train.size());
    const int nv = static_cast<int>(split.valid.size());
    Eigen::MatrixXd cost(m, nv);
    for (int i = 0; i < m; ++i) {
        const int ti = split.train[static_cast<std::size_t>(i)];
        for (int v = 0; v < nv; ++v) {
            const int vi = split.valid[static_cast<std::size_t>(v)];
            double c = (ds.features.row(ti) - ds.features.row(vi)).norm();
            if (ds.labels[ti] != ds.labels[vi]) c += label_weight;
            cost(i, v) = c;
        }
    }
    return cost;
}

namespace {

// Row-wise log-sum-exp of a matrix.
Eigen::VectorXd rowwise_lse(const Eigen::MatrixXd& m) {
    const Eigen::VectorXd rowmax = m.rowwise().maxCoeff();
    const Eigen::VectorXd sums = (m.colwise() - rowmax).array().exp().rowwise().sum();
    return rowmax.array() + sums.array().log();
}

}  // namespace

DualPotentials sinkhorn_duals(const OTProblem& problem) {
    const int m = static_cast<int>(problem.cost.rows());
    const int nv = static_cast<int>(problem.cost.cols());
    require(m >= 1 && nv >= 1, ErrorCode::invalid_argument, "sinkhorn: empty cost matrix");
    require(problem.epsilon > 0.0, ErrorCode::invalid_argument, "sinkhorn: epsilon must be positive");
    require(problem.mu.size() == m && problem.nu.size() == nv, ErrorCode::invalid_argument,
            "sinkhorn: weight lengths do not match the cost matrix");
    require(problem.cost.allFinite() && problem.cost.minCoeff() >= 0.0, ErrorCode::invalid_argument,
            "sinkhorn: cost entries must be finite and nonnegative");

    const double eps = problem.epsilon;
    const Eigen::VectorXd log_mu = problem.mu.array().log();
    const Eigen::VectorXd log_nu = problem.nu.array().log();
    const Eigen::MatrixXd neg_cost = -problem.cost / eps;

    Eigen::VectorXd f = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(nv);

    auto marginal_error = [&]() {
        // log of the implied plan: (f_i + g_v - C_iv)/eps + log_mu_i + log_nu_v
        Eigen::MatrixXd log_plan = neg_cost;
        log_plan.colwise() += (f / eps + log_mu).eval();
        log_plan.rowwise() += (g / eps + log_nu).transpose().eval();
        const Eigen::VectorXd row_sums = rowwise_lse(log_plan).array().exp();
        const Eigen::VectorXd col_sums = rowwise_lse(log_plan.transpose()).array().exp();
        const double row_err = (row_sums - problem.mu).cwiseAbs().maxCoeff();
        const double col_err = (col_sums - problem.nu).cwiseAbs().maxCoeff();
        return std::max(row_err, col_err);
    };

    DualPotentials out;
    double err = std::numeric_limits<double>::infinity();
    int iter = 0;
    while (iter < problem.max_iters) {
        // alternating log-domain scalings
        {
            Eigen::MatrixXd t = neg_cost;
            t.rowwise() += (g / eps + log_nu).transpose().eval();
            f = eps * (log_mu - rowwise_lse(t));
        }
        {
            Eigen::MatrixXd t = neg_cost.transpose();
            t.rowwise() += (f / eps + log_mu).transpose().eval();
            g = eps * (log_nu - rowwise_lse(t));
        }
        ++iter;
        if (iter % 10 == 0 || iter == problem.max_iters) {
            err = marginal_error();
            if (err < problem.tol) {
                out.converged = true;
                break;
            }
        }
    }
    if (!out.converged) err = marginal_error();

    // duals are defined up to an additive constant; pin mean(h) = 0
    const double shift = f.mean();
    out.h = f.array() - shift;
    out.g = g.array() + shift;
    out.marginal_err = err;
    out.iterations = iter;
    return out;
}

}  // namespace dataval
