#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "dataval/dataset.hpp"
#include "dataval/learners.hpp"

namespace dataval {

enum class Metric { accuracy, neg_mse, knn_accuracy, volume };

const char* metric_name(Metric metric);

struct UtilitySpec {
    Metric metric = Metric::accuracy;
    LearnerSpec learner{};   // unused for knn_accuracy and volume
    int knn_k = 10;          // knn_accuracy only
    std::uint64_t seed = 0;  // forwarded to stochastic learners
};

// Which rows of the split the utility is evaluated against.
enum class EvalSide { valid, test };

// A set function over train subsets, bound to one dataset/split. Subsets are
// given as positions into split.train (0..m-1). Pure and safe to call
// concurrently.
class Utility {
public:
    Utility(const UtilitySpec& spec, const Dataset& ds, const SplitIndices& split, EvalSide side = EvalSide::valid);

    double operator()(const std::vector<int>& subset) const;

    int n_train() const { return static_cast<int>(train_x_.rows()); }
    int n_eval() const { return static_cast<int>(eval_x_.rows()); }
    Task task() const { return task_; }
    const UtilitySpec& spec() const { return spec_; }
    const Eigen::MatrixXd& train_features() const { return train_x_; }
    const Eigen::VectorXd& train_labels() const { return train_y_; }
    const Eigen::MatrixXd& eval_features() const { return eval_x_; }
    const Eigen::VectorXd& eval_labels() const { return eval_y_; }

    double empty_set_value() const { return empty_value_; }

private:
    double fit_and_score(const std::vector<int>& subset) const;
    double knn_value(const std::vector<int>& subset) const;
    double volume_value(const std::vector<int>& subset) const;

    UtilitySpec spec_;
    Task task_;
    Eigen::MatrixXd train_x_;
    Eigen::VectorXd train_y_;
    Eigen::MatrixXd eval_x_;
    Eigen::VectorXd eval_y_;
    double empty_value_ = 0.0;
};

// Module entry points taking raw subsets of train positions.
double eval_utility(const UtilitySpec& spec, const std::vector<int>& subset, const Dataset& ds,
                    const SplitIndices& split);
double knn_utility(const UtilitySpec& spec, const std::vector<int>& subset, const Dataset& ds,
                   const SplitIndices& split);
double volume_utility(const std::vector<int>& subset, const Dataset& ds, const SplitIndices& split);

// sqrt(det(sum of x x^T)) with relative eigenvalue cutoff 1e-12; rank-deficient -> 0.
double volume_of_rows(const Eigen::MatrixXd& rows);

}  // namespace dataval
