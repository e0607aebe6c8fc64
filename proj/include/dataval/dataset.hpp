#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace dataval {

enum class Task { classification, regression };

struct Dataset {
    Eigen::MatrixXd features;     // n x d, one row per sample
    Eigen::VectorXd labels;       // class index (as double) or regression target
    Task task = Task::classification;
    int n_classes = 0;            // classification only
    std::string name;

    int n() const { return static_cast<int>(features.rows()); }
    int d() const { return static_cast<int>(features.cols()); }
};

struct SplitIndices {
    std::vector<int> train;
    std::vector<int> valid;
    std::vector<int> test;
};

enum class NoiseKind { none, label_flip, feature_gauss };

struct NoiseRecord {
    NoiseKind kind = NoiseKind::none;
    double rate = 0.0;
    double sigma = 0.0;             // feature_gauss only
    std::vector<int> affected;      // absolute dataset row indices, subset of train
};

const char* noise_kind_name(NoiseKind kind);

Dataset load_csv(const std::string& path, int label_column, Task task);
Dataset synth_blobs(int n, int d, int n_classes, double sep, std::uint64_t seed);
Dataset synth_friedman(int n, std::uint64_t seed);

SplitIndices split_by_count(const Dataset& ds, int n_train, int n_valid, int n_test, std::uint64_t seed);

std::pair<Dataset, NoiseRecord> inject_label_noise(const Dataset& ds, const SplitIndices& split, double rate,
                                                   std::uint64_t seed);
std::pair<Dataset, NoiseRecord> inject_feature_noise(const Dataset& ds, const SplitIndices& split, double rate,
                                                     double sigma, std::uint64_t seed);

// Positions within split.train whose rows were corrupted, sorted ascending.
std::vector<int> affected_train_positions(const NoiseRecord& record, const SplitIndices& split);

}  // namespace dataval
