#include "dataval/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "dataval/error.hpp"
#include "dataval/parallel.hpp"
#include "dataval/rng.hpp"

namespace dataval {

const char* learner_kind_name(LearnerKind kind) {
    switch (kind) {
        case LearnerKind::logistic: return "logistic";
        case LearnerKind::tree: return "tree";
        case LearnerKind::knn: return "knn";
        case LearnerKind::constant: return "constant";
        case LearnerKind::bagging: return "bagging";
    }
    return "unknown";
}

namespace detail {

double TreeModel::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    int node = 0;
    while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const TreeNode& nd = nodes[static_cast<std::size_t>(node)];
        node = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[static_cast<std::size_t>(node)].value;
}

}  // namespace detail

namespace {

using detail::BaggingModel;
using detail::ConstantModel;
using detail::KnnModel;
using detail::LinearModel;
using detail::LogisticModel;
using detail::TreeModel;
using detail::TreeNode;

std::vector<int> distinct_classes(const Eigen::VectorXd& y) {
    std::vector<int> classes;
    for (int i = 0; i < y.size(); ++i) {
        const double v = y[i];
        require(v >= 0.0 && v == std::floor(v), ErrorCode::invalid_argument,
                "classification labels must be nonnegative integers");
        const int c = static_cast<int>(v);
        if (std::find(classes.begin(), classes.end(), c) == classes.end()) classes.push_back(c);
    }
    std::sort(classes.begin(), classes.end());
    return classes;
}

double multinomial_loss(const Eigen::MatrixXd& x, const std::vector<int>& yc, const Eigen::MatrixXd& w,
                        const Eigen::RowVectorXd& b, double l2) {
    const int m = static_cast<int>(x.rows());
    Eigen::MatrixXd z = (x * w).rowwise() + b;
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
        const double zmax = z.row(i).maxCoeff();
        const double lse = zmax + std::log((z.row(i).array() - zmax).exp().sum());
        total += lse - z(i, yc[static_cast<std::size_t>(i)]);
    }
    return total / m + 0.5 * l2 * w.squaredNorm();
}

LogisticModel fit_logistic(const LearnerSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           const std::vector<int>& classes) {
    const int m = static_cast<int>(x.rows());
    const int d = static_cast<int>(x.cols());
    const int k = static_cast<int>(classes.size());

    std::vector<int> yc(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        auto it = std::lower_bound(classes.begin(), classes.end(), static_cast<int>(y[i]));
        yc[static_cast<std::size_t>(i)] = static_cast<int>(it - classes.begin());
    }

    LogisticModel model;
    model.classes = classes;
    model.weights = Eigen::MatrixXd::Zero(d, k);
    model.bias = Eigen::RowVectorXd::Zero(k);

    double step = spec.step;
    double loss = multinomial_loss(x, yc, model.weights, model.bias, spec.l2);
    model.loss_history.push_back(loss);

    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        Eigen::MatrixXd z = (x * model.weights).rowwise() + model.bias;
        Eigen::MatrixXd p(m, k);
        for (int i = 0; i < m; ++i) {
            Eigen::RowVectorXd e = (z.row(i).array() - z.row(i).maxCoeff()).exp();
            p.row(i) = e / e.sum();
        }
        for (int i = 0; i < m; ++i) p(i, yc[static_cast<std::size_t>(i)]) -= 1.0;
        p /= static_cast<double>(m);
        Eigen::MatrixXd gw = x.transpose() * p + spec.l2 * model.weights;
        Eigen::RowVectorXd gb = p.colwise().sum();

        // backtrack until the epoch does not increase the loss
        while (true) {
            Eigen::MatrixXd w2 = model.weights - step * gw;
            Eigen::RowVectorXd b2 = model.bias - step * gb;
            const double loss2 = multinomial_loss(x, yc, w2, b2, spec.l2);
            if (loss2 <= loss) {
                model.weights = std::move(w2);
                model.bias = std::move(b2);
                loss = loss2;
                break;
            }
            step *= 0.5;
            if (step < 1e-16) break;
        }
        model.loss_history.push_back(loss);
    }
    return model;
}

double linear_loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w, double b, double l2) {
    const Eigen::VectorXd r = x * w + Eigen::VectorXd::Constant(x.rows(), b) - y;
    return 0.5 * r.squaredNorm() / static_cast<double>(x.rows()) + 0.5 * l2 * w.squaredNorm();
}

LinearModel fit_linear(const LearnerSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const int m = static_cast<int>(x.rows());
    LinearModel model;
    model.weights = Eigen::VectorXd::Zero(x.cols());
    model.bias = 0.0;
    double step = spec.step;
    double loss = linear_loss(x, y, model.weights, model.bias, spec.l2);
    model.loss_history.push_back(loss);
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        const Eigen::VectorXd r = (x * model.weights + Eigen::VectorXd::Constant(m, model.bias) - y) / m;
        const Eigen::VectorXd gw = x.transpose() * r + spec.l2 * model.weights;
        const double gb = r.sum();
        while (true) {
            Eigen::VectorXd w2 = model.weights - step * gw;
            const double b2 = model.bias - step * gb;
            const double loss2 = linear_loss(x, y, w2, b2, spec.l2);
            if (loss2 <= loss) {
                model.weights = std::move(w2);
                model.bias = b2;
                loss = loss2;
                break;
            }
            step *= 0.5;
            if (step < 1e-16) break;
        }
        model.loss_history.push_back(loss);
    }
    return model;
}

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double child_impurity = std::numeric_limits<double>::infinity();
};

double gini(const std::vector<int>& counts, int total) {
    if (total == 0) return 0.0;
    double s = 0.0;
    for (int c : counts) {
        const double f = static_cast<double>(c) / total;
        s += f * f;
    }
    return 1.0 - s;
}

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Task task, int n_classes, int max_depth,
                int min_split)
        : x_(x), y_(y), task_(task), n_classes_(n_classes), max_depth_(max_depth), min_split_(min_split) {}

    TreeModel build(const std::vector<int>& rows) {
        TreeModel model;
        grow(model, rows, 0);
        return model;
    }

private:
    int grow(TreeModel& model, const std::vector<int>& rows, int depth) {
        const int id = static_cast<int>(model.nodes.size());
        model.nodes.push_back(TreeNode{});
        model.nodes[static_cast<std::size_t>(id)].value = leaf_value(rows);
        if (depth >= max_depth_ || static_cast<int>(rows.size()) < min_split_ || is_pure(rows))
            return id;
        const SplitChoice choice = best_split(rows);
        if (!choice.found) return id;

        std::vector<int> left_rows, right_rows;
        left_rows.reserve(rows.size());
        right_rows.reserve(rows.size());
        for (int r : rows)
            (x_(r, choice.feature) <= choice.threshold ? left_rows : right_rows).push_back(r);
        const int left = grow(model, left_rows, depth + 1);
        const int right = grow(model, right_rows, depth + 1);
        TreeNode& node = model.nodes[static_cast<std::size_t>(id)];
        node.feature = choice.feature;
        node.threshold = choice.threshold;
        node.left = left;
        node.right = right;
        return id;
    }

    bool is_pure(const std::vector<int>& rows) const {
        for (std::size_t i = 1; i < rows.size(); ++i)
            if (y_[rows[i]] != y_[rows[0]]) return false;
        return true;
    }

    double leaf_value(const std::vector<int>& rows) const {
        if (rows.empty()) return 0.0;
        if (task_ == Task::regression) {
            double s = 0.0;
            for (int r : rows) s += y_[r];
            return s / static_cast<double>(rows.size());
        }
        std::vector<int> counts(static_cast<std::size_t>(n_classes_), 0);
        for (int r : rows) ++counts[static_cast<std::size_t>(static_cast<int>(y_[r]))];
        int best = 0;
        for (int c = 1; c < n_classes_; ++c)
            if (counts[static_cast<std::size_t>(c)] > counts[static_cast<std::size_t>(best)]) best = c;
        return best;  // ties keep the smallest class index
    }

    SplitChoice best_split(const std::vector<int>& rows) const {
        SplitChoice best;
        const int n = static_cast<int>(rows.size());
        std::vector<std::pair<double, int>> order(rows.size());
        for (int f = 0; f < x_.cols(); ++f) {
            for (std::size_t i = 0; i < rows.size(); ++i) order[i] = {x_(rows[i], f), rows[i]};
            std::sort(order.begin(), order.end());
            if (order.front().first == order.back().first) continue;

            if (task_ == Task::classification) {
                std::vector<int> left(static_cast<std::size_t>(n_classes_), 0);
                std::vector<int> right(static_cast<std::size_t>(n_classes_), 0);
                for (int r : rows) ++right[static_cast<std::size_t>(static_cast<int>(y_[r]))];
                for (int i = 0; i + 1 < n; ++i) {
                    const int c = static_cast<int>(y_[order[static_cast<std::size_t>(i)].second]);
                    ++left[static_cast<std::size_t>(c)];
                    --right[static_cast<std::size_t>(c)];
                    if (order[static_cast<std::size_t>(i)].first == order[static_cast<std::size_t>(i + 1)].first)
                        continue;
                    const int nl = i + 1, nr = n - nl;
                    const double impurity = (nl * gini(left, nl) + nr * gini(right, nr)) / n;
                    if (impurity < best.child_impurity - 1e-12) {
                        best.found = true;
                        best.feature = f;
                        best.threshold = 0.5 * (order[static_cast<std::size_t>(i)].first +
                                                order[static_cast<std::size_t>(i + 1)].first);
                        best.child_impurity = impurity;
                    }
                }
            } else {
                double left_sum = 0.0, left_sq = 0.0;
                double right_sum = 0.0, right_sq = 0.0;
                for (int r : rows) {
                    right_sum += y_[r];
                    right_sq += y_[r] * y_[r];
                }
                for (int i = 0; i + 1 < n; ++i) {
                    const double v = y_[order[static_cast<std::size_t>(i)].second];
                    left_sum += v;
                    left_sq += v * v;
                    right_sum -= v;
                    right_sq -= v * v;
                    if (order[static_cast<std::size_t>(i)].first == order[static_cast<std::size_t>(i + 1)].first)
                        continue;
                    const int nl = i + 1, nr = n - nl;
                    const double var_l = left_sq - left_sum * left_sum / nl;
                    const double var_r = right_sq - right_sum * right_sum / nr;
                    const double impurity = (var_l + var_r) / n;
                    if (impurity < best.child_impurity - 1e-12) {
                        best.found = true;
                        best.feature = f;
                        best.threshold = 0.5 * (order[static_cast<std::size_t>(i)].first +
                                                order[static_cast<std::size_t>(i + 1)].first);
                        best.child_impurity = impurity;
                    }
                }
            }
        }
        return best;
    }

    const Eigen::MatrixXd& x_;
    const Eigen::VectorXd& y_;
    Task task_;
    int n_classes_;
    int max_depth_;
    int min_split_;
};

TreeModel fit_tree(const LearnerSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Task task,
                   const std::vector<int>& rows, int n_classes) {
    TreeBuilder builder(x, y, task, n_classes, spec.max_depth, spec.min_split);
    return builder.build(rows);
}

BaggingModel fit_bagging(const LearnerSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Task task,
                         int n_classes) {
    require(spec.bags >= 1, ErrorCode::invalid_argument, "bagging needs at least one bag");
    const int m = static_cast<int>(x.rows());
    BaggingModel model;
    model.task = task;
    model.trees.resize(static_cast<std::size_t>(spec.bags));
    model.oob_counts = Eigen::MatrixXi::Zero(spec.bags, m);

    parallel_for(static_cast<std::size_t>(spec.bags), 0, [&](std::size_t b) {
        Rng rng(mix_seed(spec.seed, {0xbau, static_cast<std::uint64_t>(b)}));
        std::vector<int> counts(static_cast<std::size_t>(m), 0);
        std::vector<int> rows;
        rows.reserve(static_cast<std::size_t>(m));
        for (int t = 0; t < m; ++t) {
            const int r = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
            ++counts[static_cast<std::size_t>(r)];
        }
        for (int j = 0; j < m; ++j) {
            model.oob_counts(static_cast<int>(b), j) = counts[static_cast<std::size_t>(j)];
            for (int t = 0; t < counts[static_cast<std::size_t>(j)]; ++t) rows.push_back(j);
        }
        model.trees[b] = fit_tree(spec, x, y, task, rows, n_classes);
    });
    return model;
}

int vote_winner(const std::map<int, double>& votes) {
    int best = votes.begin()->first;
    double best_v = votes.begin()->second;
    for (const auto& [cls, v] : votes) {
        if (v > best_v) {
            best = cls;
            best_v = v;
        }
    }
    return best;  // map order makes ties resolve to the smallest class
}

}  // namespace

FittedModel fit(const LearnerSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Task task) {
    require(x.rows() == y.size(), ErrorCode::invalid_argument, "fit: rows(X) != len(y)");
    require(!x.hasNaN(), ErrorCode::invalid_argument, "fit: NaN in feature matrix");

    FittedModel model;
    model.task_ = task;
    model.dim_ = static_cast<int>(x.cols());

    if (x.rows() == 0) {
        model.impl_ = ConstantModel{0.0};
        model.dim_ = -1;
        if (task == Task::classification) model.classes_ = {0};
        return model;
    }

    if (task == Task::classification) {
        model.classes_ = distinct_classes(y);
        if (model.classes_.size() == 1 && spec.kind != LearnerKind::knn && spec.kind != LearnerKind::bagging) {
            model.impl_ = ConstantModel{static_cast<double>(model.classes_[0])};
            return model;
        }
    }

    const int n_classes = task == Task::classification ? model.classes_.empty() ? 1 : model.classes_.back() + 1 : 0;
    std::vector<int> all_rows(static_cast<std::size_t>(x.rows()));
    std::iota(all_rows.begin(), all_rows.end(), 0);

    switch (spec.kind) {
        case LearnerKind::constant: {
            if (task == Task::classification) {
                std::map<int, double> votes;
                for (int i = 0; i < y.size(); ++i) votes[static_cast<int>(y[i])] += 1.0;
                model.impl_ = ConstantModel{static_cast<double>(vote_winner(votes))};
            } else {
                model.impl_ = ConstantModel{y.mean()};
            }
            break;
        }
        case LearnerKind::logistic: {
            if (task == Task::classification)
                model.impl_ = fit_logistic(spec, x, y, model.classes_);
            else
                model.impl_ = fit_linear(spec, x, y);
            break;
        }
        case LearnerKind::tree: {
            model.impl_ = fit_tree(spec, x, y, task, all_rows, n_classes);
            break;
        }
        case LearnerKind::knn: {
            require(spec.k >= 1, ErrorCode::invalid_argument, "knn: k must be >= 1");
            model.impl_ = KnnModel{x, y, spec.k, task};
            break;
        }
        case LearnerKind::bagging: {
            model.impl_ = fit_bagging(spec, x, y, task, n_classes);
            break;
        }
    }
    return model;
}

namespace {

double knn_predict_row(const KnnModel& knn, const Eigen::Ref<const Eigen::RowVectorXd>& q) {
    const int m = static_cast<int>(knn.train_x.rows());
    std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) dist[static_cast<std::size_t>(i)] = {(knn.train_x.row(i) - q).squaredNorm(), i};
    const int take = std::min(knn.k, m);
    std::partial_sort(dist.begin(), dist.begin() + take, dist.end());
    if (knn.task == Task::regression) {
        double s = 0.0;
        for (int t = 0; t < take; ++t) s += knn.train_y[dist[static_cast<std::size_t>(t)].second];
        return s / take;
    }
    std::map<int, double> votes;
    for (int t = 0; t < take; ++t) votes[static_cast<int>(knn.train_y[dist[static_cast<std::size_t>(t)].second])] += 1.0;
    return vote_winner(votes);
}

}  // namespace

Eigen::VectorXd FittedModel::predict(const Eigen::MatrixXd& x) const {
    require(dim_ < 0 || x.cols() == dim_, ErrorCode::invalid_argument, "predict: feature dimension mismatch");
    const int n = static_cast<int>(x.rows());
    Eigen::VectorXd out(n);

    if (const auto* c = std::get_if<ConstantModel>(&impl_)) {
        out.setConstant(c->value);
        return out;
    }
    if (const auto* lg = std::get_if<LogisticModel>(&impl_)) {
        Eigen::MatrixXd z = (x * lg->weights).rowwise() + lg->bias;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            for (int c = 1; c < z.cols(); ++c)
                if (z(i, c) > z(i, best)) best = c;  // first max -> smallest class on ties
            out[i] = lg->classes[static_cast<std::size_t>(best)];
        }
        return out;
    }
    if (const auto* ln = std::get_if<LinearModel>(&impl_)) {
        out = x * ln->weights + Eigen::VectorXd::Constant(n, ln->bias);
        return out;
    }
    if (const auto* tr = std::get_if<TreeModel>(&impl_)) {
        for (int i = 0; i < n; ++i) out[i] = tr->predict_row(x.row(i));
        return out;
    }
    if (const auto* knn = std::get_if<KnnModel>(&impl_)) {
        for (int i = 0; i < n; ++i) out[i] = knn_predict_row(*knn, x.row(i));
        return out;
    }
    const auto& bag = std::get<BaggingModel>(impl_);
    for (int i = 0; i < n; ++i) {
        if (bag.task == Task::regression) {
            double s = 0.0;
            for (const auto& tree : bag.trees) s += tree.predict_row(x.row(i));
            out[i] = s / static_cast<double>(bag.trees.size());
        } else {
            std::map<int, double> votes;
            for (const auto& tree : bag.trees) votes[static_cast<int>(tree.predict_row(x.row(i)))] += 1.0;
            out[i] = vote_winner(votes);
        }
    }
    return out;
}

Eigen::MatrixXd FittedModel::scores(const Eigen::MatrixXd& x) const {
    require(task_ == Task::classification, ErrorCode::unsupported, "scores: classification models only");
    require(dim_ < 0 || x.cols() == dim_, ErrorCode::invalid_argument, "scores: feature dimension mismatch");
    const int n = static_cast<int>(x.rows());
    const int k = static_cast<int>(classes_.size());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, k);

    auto class_slot = [&](double label) {
        auto it = std::lower_bound(classes_.begin(), classes_.end(), static_cast<int>(label));
        return static_cast<int>(it - classes_.begin());
    };

    if (const auto* lg = std::get_if<LogisticModel>(&impl_)) {
        Eigen::MatrixXd z = (x * lg->weights).rowwise() + lg->bias;
        for (int i = 0; i < n; ++i) {
            Eigen::RowVectorXd e = (z.row(i).array() - z.row(i).maxCoeff()).exp();
            out.row(i) = e / e.sum();
        }
        return out;
    }
    if (const auto* bag = std::get_if<BaggingModel>(&impl_)) {
        for (int i = 0; i < n; ++i) {
            for (const auto& tree : bag->trees) out(i, class_slot(tree.predict_row(x.row(i)))) += 1.0;
            out.row(i) /= out.row(i).sum();
        }
        return out;
    }
    // constant / tree / knn: one-hot on the predicted class
    const Eigen::VectorXd pred = predict(x);
    for (int i = 0; i < n; ++i) out(i, class_slot(pred[i])) = 1.0;
    return out;
}

const Eigen::MatrixXi& FittedModel::oob_counts() const {
    const auto* bag = std::get_if<BaggingModel>(&impl_);
    require(bag != nullptr, ErrorCode::unsupported, "oob_counts: bagging models only");
    return bag->oob_counts;
}

Eigen::VectorXd FittedModel::predict_bag(int b, const Eigen::MatrixXd& x) const {
    const auto* bag = std::get_if<BaggingModel>(&impl_);
    require(bag != nullptr, ErrorCode::unsupported, "predict_bag: bagging models only");
    require(b >= 0 && b < static_cast<int>(bag->trees.size()), ErrorCode::invalid_argument, "predict_bag: bad index");
    Eigen::VectorXd out(x.rows());
    for (int i = 0; i < x.rows(); ++i) out[i] = bag->trees[static_cast<std::size_t>(b)].predict_row(x.row(i));
    return out;
}

int FittedModel::bag_count() const {
    const auto* bag = std::get_if<BaggingModel>(&impl_);
    return bag ? static_cast<int>(bag->trees.size()) : 0;
}

const std::vector<double>& FittedModel::loss_history() const {
    static const std::vector<double> empty;
    if (const auto* lg = std::get_if<LogisticModel>(&impl_)) return lg->loss_history;
    if (const auto* ln = std::get_if<LinearModel>(&impl_)) return ln->loss_history;
    return empty;
}

}  // namespace dataval
