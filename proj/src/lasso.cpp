#include "dataval/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dataval/error.hpp"
#include "dataval/rng.hpp"

namespace dataval {

namespace {

double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

struct Centered {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    Eigen::RowVectorXd x_mean;
    double y_mean = 0.0;
    Eigen::VectorXd col_sq;  // (1/n) * ||x_j||^2 per centered column
};

Centered center(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    Centered c;
    c.x_mean = x.colwise().mean();
    c.y_mean = y.mean();
    c.x = x.rowwise() - c.x_mean;
    c.y = y.array() - c.y_mean;
    c.col_sq = c.x.colwise().squaredNorm() / static_cast<double>(x.rows());
    return c;
}

Eigen::VectorXd coordinate_descent(const Centered& c, double lambda, Eigen::VectorXd beta) {
    const int n = static_cast<int>(c.x.rows());
    const int p = static_cast<int>(c.x.cols());
    Eigen::VectorXd residual = c.y - c.x * beta;
    const int max_sweeps = 1000;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (int j = 0; j < p; ++j) {
            if (c.col_sq[j] == 0.0) continue;  // constant column stays at zero
            const double old = beta[j];
            const double rho = c.x.col(j).dot(residual) / n + c.col_sq[j] * old;
            const double updated = soft_threshold(rho, lambda) / c.col_sq[j];
            if (updated != old) {
                residual += c.x.col(j) * (old - updated);
                beta[j] = updated;
                max_change = std::max(max_change, std::abs(updated - old));
            }
        }
        const double scale = std::max(1.0, beta.cwiseAbs().maxCoeff());
        if (max_change < 1e-9 * scale) break;
    }
    return beta;
}

}  // namespace

Eigen::VectorXd lasso_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                          const Eigen::VectorXd* warm_start) {
    require(x.rows() == y.size() && x.rows() >= 1, ErrorCode::invalid_argument, "lasso: shape mismatch");
    Centered c = center(x, y);
    Eigen::VectorXd beta = warm_start != nullptr ? *warm_start : Eigen::VectorXd::Zero(x.cols());
    return coordinate_descent(c, lambda, std::move(beta));
}

double lasso_lambda_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    Centered c = center(x, y);
    return (c.x.transpose() * c.y).cwiseAbs().maxCoeff() / static_cast<double>(x.rows());
}

LassoCvResult lasso_cv(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int n_folds, int n_lambdas,
                       double min_ratio, std::uint64_t seed) {
    const int n = static_cast<int>(x.rows());
    require(n >= n_folds && n_folds >= 2, ErrorCode::invalid_argument, "lasso_cv: too few rows for the fold count");

    LassoCvResult result;
    const double lmax = lasso_lambda_max(x, y);
    if (lmax == 0.0) {
        // response is constant after centering; all-zero coefficients
        result.coefficients = Eigen::VectorXd::Zero(x.cols());
        result.best_lambda = 0.0;
        return result;
    }

    result.grid.resize(static_cast<std::size_t>(n_lambdas));
    const double ratio = std::pow(min_ratio, 1.0 / static_cast<double>(n_lambdas - 1));
    double lam = lmax;
    for (int t = 0; t < n_lambdas; ++t, lam *= ratio) result.grid[static_cast<std::size_t>(t)] = lam;

    // deterministic shuffled fold assignment
    std::vector<int> assignment(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) assignment[static_cast<std::size_t>(i)] = i % n_folds;
    Rng rng(mix_seed(seed, {0x1a550u}));
    rng.shuffle(assignment);

    result.cv_mse.assign(static_cast<std::size_t>(n_lambdas), 0.0);
    for (int fold = 0; fold < n_folds; ++fold) {
        std::vector<int> train_rows, held_rows;
        for (int i = 0; i < n; ++i)
            (assignment[static_cast<std::size_t>(i)] == fold ? held_rows : train_rows).push_back(i);

        Eigen::MatrixXd xt(static_cast<int>(train_rows.size()), x.cols());
        Eigen::VectorXd yt(static_cast<int>(train_rows.size()));
        for (std::size_t i = 0; i < train_rows.size(); ++i) {
            xt.row(static_cast<int>(i)) = x.row(train_rows[i]);
            yt[static_cast<int>(i)] = y[train_rows[i]];
        }
        Centered ct = center(xt, yt);

        Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
        for (int t = 0; t < n_lambdas; ++t) {
            beta = coordinate_descent(ct, result.grid[static_cast<std::size_t>(t)], beta);  // warm start down the path
            double mse = 0.0;
            for (int i : held_rows) {
                const double pred = (x.row(i) - ct.x_mean) * beta + ct.y_mean;
                mse += (y[i] - pred) * (y[i] - pred);
            }
            result.cv_mse[static_cast<std::size_t>(t)] += mse / static_cast<double>(held_rows.size());
        }
    }
    for (double& v : result.cv_mse) v /= static_cast<double>(n_folds);

    // smallest mean CV error; ties resolve toward the larger lambda
    std::size_t best = 0;
    for (std::size_t t = 1; t < result.cv_mse.size(); ++t)
        if (result.cv_mse[t] < result.cv_mse[best]) best = t;
    result.best_lambda = result.grid[best];
    result.coefficients = lasso_fit(x, y, result.best_lambda);
    return result;
}

}  // namespace dataval
