#include "dataval/utility.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>

#include "dataval/error.hpp"

namespace dataval {

const char* metric_name(Metric metric) {
    switch (metric) {
        case Metric::accuracy: return "accuracy";
        case Metric::neg_mse: return "neg_mse";
        case Metric::knn_accuracy: return "knn_accuracy";
        case Metric::volume: return "volume";
    }
    return "unknown";
}

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& src, const std::vector<int>& rows) {
    Eigen::MatrixXd out(static_cast<int>(rows.size()), src.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<int>(i)) = src.row(rows[i]);
    return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& src, const std::vector<int>& rows) {
    Eigen::VectorXd out(static_cast<int>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<int>(i)] = src[rows[i]];
    return out;
}

}  // namespace

double volume_of_rows(const Eigen::MatrixXd& rows) {
    const int d = static_cast<int>(rows.cols());
    if (rows.rows() == 0) return 0.0;
    Eigen::MatrixXd gram = rows.transpose() * rows;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& ev = solver.eigenvalues();
    const double cutoff = 1e-12 * std::max(1.0, ev[d - 1]);
    double log_det = 0.0;
    for (int i = 0; i < d; ++i) {
        if (ev[i] < cutoff) return 0.0;
        log_det += std::log(ev[i]);
    }
    return std::exp(0.5 * log_det);
}

Utility::Utility(const UtilitySpec& spec, const Dataset& ds, const SplitIndices& split, EvalSide side)
    : spec_(spec), task_(ds.task) {
    train_x_ = gather_rows(ds.features, split.train);
    train_y_ = gather(ds.labels, split.train);
    const std::vector<int>& eval_rows = side == EvalSide::valid ? split.valid : split.test;
    eval_x_ = gather_rows(ds.features, eval_rows);
    eval_y_ = gather(ds.labels, eval_rows);
    require(spec_.metric == Metric::volume || eval_x_.rows() >= 1, ErrorCode::invalid_argument,
            "utility needs at least one evaluation row");
    require(spec_.knn_k >= 1, ErrorCode::invalid_argument, "knn_accuracy: k must be >= 1");

    // best constant model, the empty-subset convention
    switch (spec_.metric) {
        case Metric::accuracy: {
            std::map<int, int> counts;
            for (int i = 0; i < eval_y_.size(); ++i) ++counts[static_cast<int>(eval_y_[i])];
            int best = 0;
            for (const auto& [cls, c] : counts) best = std::max(best, c);
            empty_value_ = static_cast<double>(best) / static_cast<double>(eval_y_.size());
            break;
        }
        case Metric::neg_mse: {
            const double mean = eval_y_.mean();
            empty_value_ = -(eval_y_.array() - mean).square().mean();
            break;
        }
        case Metric::knn_accuracy:
        case Metric::volume:
            empty_value_ = 0.0;
            break;
    }
}

double Utility::operator()(const std::vector<int>& subset) const {
    for (int idx : subset)
        require(idx >= 0 && idx < n_train(), ErrorCode::invalid_argument, "utility: subset index out of range");
    switch (spec_.metric) {
        case Metric::accuracy:
        case Metric::neg_mse:
            return subset.empty() ? empty_value_ : fit_and_score(subset);
        case Metric::knn_accuracy:
            return knn_value(subset);
        case Metric::volume:
            return volume_value(subset);
    }
    return 0.0;
}

double Utility::fit_and_score(const std::vector<int>& subset) const {
    LearnerSpec learner = spec_.learner;
    learner.seed = spec_.seed;
    const FittedModel model = fit(learner, gather_rows(train_x_, subset), gather(train_y_, subset), task_);
    const Eigen::VectorXd pred = model.predict(eval_x_);
    if (spec_.metric == Metric::accuracy) {
        double hits = 0.0;
        for (int i = 0; i < pred.size(); ++i)
            if (pred[i] == eval_y_[i]) hits += 1.0;
        return hits / static_cast<double>(pred.size());
    }
    return -(pred - eval_y_).squaredNorm() / static_cast<double>(pred.size());
}

double Utility::knn_value(const std::vector<int>& subset) const {
    if (subset.empty()) return 0.0;
    const int k = spec_.knn_k;
    const int take = std::min<int>(k, static_cast<int>(subset.size()));
    double total = 0.0;
    std::vector<std::pair<double, int>> dist(subset.size());
    for (int v = 0; v < eval_x_.rows(); ++v) {
        for (std::size_t s = 0; s < subset.size(); ++s)
            dist[s] = {(train_x_.row(subset[s]) - eval_x_.row(v)).squaredNorm(), subset[s]};
        std::partial_sort(dist.begin(), dist.begin() + take, dist.end());
        for (int t = 0; t < take; ++t) {
            const double yj = train_y_[dist[static_cast<std::size_t>(t)].second];
            if (task_ == Task::classification)
                total += yj == eval_y_[v] ? 1.0 : 0.0;
            else
                total -= (eval_y_[v] - yj) * (eval_y_[v] - yj);
        }
    }
    // denominator keeps the preset k even when fewer neighbors exist
    return total / (static_cast<double>(eval_x_.rows()) * static_cast<double>(k));
}

double Utility::volume_value(const std::vector<int>& subset) const {
    if (subset.empty()) return 0.0;
    return volume_of_rows(gather_rows(train_x_, subset));
}

double eval_utility(const UtilitySpec& spec, const std::vector<int>& subset, const Dataset& ds,
                    const SplitIndices& split) {
    return Utility(spec, ds, split)(subset);
}

double knn_utility(const UtilitySpec& spec, const std::vector<int>& subset, const Dataset& ds,
                   const SplitIndices& split) {
    UtilitySpec knn_spec = spec;
    knn_spec.metric = Metric::knn_accuracy;
    return Utility(knn_spec, ds, split)(subset);
}

double volume_utility(const std::vector<int>& subset, const Dataset& ds, const SplitIndices& split) {
    UtilitySpec spec;
    spec.metric = Metric::volume;
    return Utility(spec, ds, split)(subset);
}

}  // namespace dataval
