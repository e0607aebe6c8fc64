#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "dataval/dataset.hpp"

namespace dataval {

enum class LearnerKind { logistic, tree, knn, constant, bagging };

const char* learner_kind_name(LearnerKind kind);

struct LearnerSpec {
    LearnerKind kind = LearnerKind::logistic;
    // logistic
    double l2 = 1e-4;
    int epochs = 200;
    double step = 0.1;
    // tree (also the bagging base learner)
    int max_depth = 6;
    int min_split = 2;
    // knn
    int k = 5;
    // bagging
    int bags = 100;
    std::uint64_t seed = 0;
};

namespace detail {

struct ConstantModel {
    double value = 0.0;
};

struct LogisticModel {
    Eigen::MatrixXd weights;          // d x K over the classes seen at fit time
    Eigen::RowVectorXd bias;          // 1 x K
    std::vector<int> classes;         // sorted original class indices
    std::vector<double> loss_history; // per-epoch training loss, non-increasing
};

struct LinearModel {
    Eigen::VectorXd weights;
    double bias = 0.0;
    std::vector<double> loss_history;
};

struct TreeNode {
    int feature = -1;      // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;    // leaf prediction
};

struct TreeModel {
    std::vector<TreeNode> nodes;
    double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

struct KnnModel {
    Eigen::MatrixXd train_x;
    Eigen::VectorXd train_y;
    int k = 1;
    Task task = Task::classification;
};

struct BaggingModel {
    std::vector<TreeModel> trees;
    Eigen::MatrixXi oob_counts;  // B x m bootstrap multiplicities
    Task task = Task::classification;
};

}  // namespace detail

class FittedModel {
public:
    Task task() const { return task_; }

    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
    // classification: rows are per-class scores over classes(), nonnegative, summing to 1
    Eigen::MatrixXd scores(const Eigen::MatrixXd& x) const;
    const std::vector<int>& classes() const { return classes_; }

    // bagging accessors
    const Eigen::MatrixXi& oob_counts() const;
    Eigen::VectorXd predict_bag(int b, const Eigen::MatrixXd& x) const;
    int bag_count() const;

    // logistic/linear diagnostic: per-epoch loss, non-increasing
    const std::vector<double>& loss_history() const;

    friend FittedModel fit(const LearnerSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Task task);

private:
    using Impl = std::variant<detail::ConstantModel, detail::LogisticModel, detail::LinearModel, detail::TreeModel,
                              detail::KnnModel, detail::BaggingModel>;
    Impl impl_;
    Task task_ = Task::classification;
    std::vector<int> classes_;  // sorted class indices present at fit time (classification)
    int dim_ = 0;
};

FittedModel fit(const LearnerSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Task task);

}  // namespace dataval
