#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <vector>

#include "dataval/dataset.hpp"
#include "dataval/utility.hpp"

namespace dataval {

// Any set function over train positions 0..m-1.
using SetFunction = std::function<double(const std::vector<int>&)>;

struct ConvergenceConfig {
    double gr_threshold = 1.05;
    int min_permutations = 300;
    int max_permutations = 10000;
    double trunc_tol = 1e-8;
    int trunc_patience = 10;
    int n_chains = 10;
};

// Per-point, per-cardinality marginal samples accumulated over permutations.
// cell_sum(i, j-1) / cell_count(i, j-1) estimates the marginal contribution
// of point i at cardinality j; truncated positions contribute exact zeros.
struct MarginalAccumulator {
    Eigen::MatrixXd cell_sum;
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> cell_count;
    int permutations_used = 0;
    int n_chains = 0;
    bool converged = false;
    double gelman_rubin_stat = 0.0;

    int n_points() const { return static_cast<int>(cell_sum.rows()); }

    // mean over every sample seen for point i (the Shapley estimate)
    Eigen::VectorXd point_means() const;
};

// Walks one permutation, returning the marginal sample for each position.
// Scanning stops once trunc_patience relative changes fall below trunc_tol;
// unscanned positions keep a zero sample.
std::vector<double> scan_permutation(const std::vector<int>& perm, const SetFunction& u,
                                     const ConvergenceConfig& cfg);

// chains[c][t][i]: chain c, step t, per-point estimate i. Returns the maximum
// over points of sqrt((l-1)/l + B/(l*W)).
double gelman_rubin(const std::vector<std::vector<std::vector<double>>>& chains);

MarginalAccumulator run_tmc(const SetFunction& u, int n_points, const ConvergenceConfig& cfg, std::uint64_t seed,
                            int workers = 0);
MarginalAccumulator run_tmc(const UtilitySpec& spec, const Dataset& ds, const SplitIndices& split,
                            const ConvergenceConfig& cfg, std::uint64_t seed, int workers = 0);

}  // namespace dataval
