#include "dataval/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dataval/error.hpp"
#include "dataval/parallel.hpp"
#include "dataval/rng.hpp"

namespace dataval {

namespace {

// Streaming mean/variance used both by the public diagnostic and run_tmc.
struct Welford {
    long count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++count;
        const double delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (x - mean);
    }
    double variance() const { return count < 2 ? 0.0 : m2 / static_cast<double>(count - 1); }
};

// R-hat for one monitored quantity from per-chain series moments.
double rhat_from_moments(const std::vector<Welford>& chains) {
    const long len = chains.front().count;
    double w = 0.0;
    Welford means;
    for (const auto& c : chains) {
        w += c.variance();
        means.add(c.mean);
    }
    w /= static_cast<double>(chains.size());
    const double b = static_cast<double>(len) * means.variance();
    if (w == 0.0) return b == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    const double l = static_cast<double>(len);
    return std::sqrt((l - 1.0) / l + b / (l * w));
}

}  // namespace

Eigen::VectorXd MarginalAccumulator::point_means() const {
    const int m = n_points();
    Eigen::VectorXd out(m);
    for (int i = 0; i < m; ++i) {
        const double total = cell_sum.row(i).sum();
        std::int64_t count = 0;
        for (int j = 0; j < m; ++j) count += cell_count(i, j);
        require(count > 0, ErrorCode::internal, "marginal accumulator has a point with no samples");
        out[i] = total / static_cast<double>(count);
    }
    return out;
}

std::vector<double> scan_permutation(const std::vector<int>& perm, const SetFunction& u,
                                     const ConvergenceConfig& cfg) {
    const std::size_t m = perm.size();
    std::vector<bool> seen(m, false);
    for (int p : perm) {
        require(p >= 0 && static_cast<std::size_t>(p) < m && !seen[static_cast<std::size_t>(p)],
                ErrorCode::invalid_argument, "scan_permutation: input is not a permutation");
        seen[static_cast<std::size_t>(p)] = true;
    }

    std::vector<double> samples(m, 0.0);
    std::vector<int> prefix;
    prefix.reserve(m);
    double u_prev = u(prefix);  // U(empty set)
    int patience = 0;
    for (std::size_t l = 1; l <= m; ++l) {
        prefix.push_back(perm[l - 1]);
        const double u_cur = u(prefix);
        samples[l - 1] = u_cur - u_prev;
        if (l >= 2 && u_prev != 0.0) {
            // relative change of the step into position l, measured at prefix l-1
            const double v = std::abs(u_cur - u_prev) / std::abs(u_prev);
            if (v <= cfg.trunc_tol) {
                ++patience;
                if (patience >= cfg.trunc_patience) break;
            }
        }
        u_prev = u_cur;
    }
    return samples;
}

double gelman_rubin(const std::vector<std::vector<std::vector<double>>>& chains) {
    require(chains.size() >= 2, ErrorCode::invalid_argument, "gelman_rubin: need at least two chains");
    const std::size_t len = chains.front().size();
    require(len >= 2, ErrorCode::invalid_argument, "gelman_rubin: chain length must be >= 2");
    for (const auto& chain : chains)
        require(chain.size() == len, ErrorCode::invalid_argument, "gelman_rubin: unequal chain lengths");
    const std::size_t n_points = chains.front().front().size();
    for (const auto& chain : chains)
        for (const auto& step : chain)
            require(step.size() == n_points, ErrorCode::invalid_argument, "gelman_rubin: ragged point vectors");

    double worst = 0.0;
    std::vector<Welford> moments(chains.size());
    for (std::size_t i = 0; i < n_points; ++i) {
        for (std::size_t c = 0; c < chains.size(); ++c) {
            moments[c] = Welford{};
            for (std::size_t t = 0; t < len; ++t) moments[c].add(chains[c][t][i]);
        }
        worst = std::max(worst, rhat_from_moments(moments));
    }
    return worst;
}

MarginalAccumulator run_tmc(const SetFunction& u, int n_points, const ConvergenceConfig& cfg, std::uint64_t seed,
                            int workers) {
    require(n_points >= 1, ErrorCode::invalid_argument, "run_tmc: empty train split");
    require(cfg.n_chains >= 2, ErrorCode::invalid_argument, "run_tmc: need at least two chains");
    require(cfg.min_permutations <= cfg.max_permutations, ErrorCode::invalid_argument,
            "run_tmc: min_permutations exceeds max_permutations");

    const int m = n_points;
    MarginalAccumulator acc;
    acc.cell_sum = Eigen::MatrixXd::Zero(m, m);
    acc.cell_count = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(m, m);
    acc.n_chains = cfg.n_chains;

    struct Chain {
        Rng rng;
        std::vector<double> point_sum;            // running sums per point
        std::vector<Welford> running_mean_series; // series moments per point
        explicit Chain(std::uint64_t s, int m)
            : rng(s), point_sum(static_cast<std::size_t>(m), 0.0), running_mean_series(static_cast<std::size_t>(m)) {}
    };
    std::vector<Chain> chains;
    chains.reserve(static_cast<std::size_t>(cfg.n_chains));
    for (int c = 0; c < cfg.n_chains; ++c)
        chains.emplace_back(mix_seed(seed, {0x7c6du, static_cast<std::uint64_t>(c)}), m);

    const int max_rounds = cfg.max_permutations / cfg.n_chains;
    std::vector<std::vector<int>> perms(static_cast<std::size_t>(cfg.n_chains));
    std::vector<std::vector<double>> samples(static_cast<std::size_t>(cfg.n_chains));

    for (int round = 0; round < max_rounds; ++round) {
        parallel_for(static_cast<std::size_t>(cfg.n_chains), workers, [&](std::size_t c) {
            std::vector<int> perm(static_cast<std::size_t>(m));
            std::iota(perm.begin(), perm.end(), 0);
            chains[c].rng.shuffle(perm);
            samples[c] = scan_permutation(perm, u, cfg);
            perms[c] = std::move(perm);
        });

        // merge in chain order so results are independent of scheduling
        for (int c = 0; c < cfg.n_chains; ++c) {
            Chain& chain = chains[static_cast<std::size_t>(c)];
            const auto& perm = perms[static_cast<std::size_t>(c)];
            const auto& sample = samples[static_cast<std::size_t>(c)];
            for (int pos = 0; pos < m; ++pos) {
                const int point = perm[static_cast<std::size_t>(pos)];
                acc.cell_sum(point, pos) += sample[static_cast<std::size_t>(pos)];
                acc.cell_count(point, pos) += 1;
                chain.point_sum[static_cast<std::size_t>(point)] += sample[static_cast<std::size_t>(pos)];
            }
            const double inv_rounds = 1.0 / static_cast<double>(round + 1);
            for (int i = 0; i < m; ++i)
                chain.running_mean_series[static_cast<std::size_t>(i)].add(chain.point_sum[static_cast<std::size_t>(i)] *
                                                                           inv_rounds);
        }
        acc.permutations_used += cfg.n_chains;

        if (acc.permutations_used >= cfg.min_permutations && round >= 1) {
            double worst = 0.0;
            std::vector<Welford> moments(static_cast<std::size_t>(cfg.n_chains));
            for (int i = 0; i < m; ++i) {
                for (int c = 0; c < cfg.n_chains; ++c)
                    moments[static_cast<std::size_t>(c)] =
                        chains[static_cast<std::size_t>(c)].running_mean_series[static_cast<std::size_t>(i)];
                worst = std::max(worst, rhat_from_moments(moments));
            }
            acc.gelman_rubin_stat = worst;
            if (worst < cfg.gr_threshold) {
                acc.converged = true;
                break;
            }
        }
    }
    return acc;
}

MarginalAccumulator run_tmc(const UtilitySpec& spec, const Dataset& ds, const SplitIndices& split,
                            const ConvergenceConfig& cfg, std::uint64_t seed, int workers) {
    Utility utility(spec, ds, split);
    SetFunction u = [&utility](const std::vector<int>& subset) { return utility(subset); };
    return run_tmc(u, utility.n_train(), cfg, seed, workers);
}

}  // namespace dataval
