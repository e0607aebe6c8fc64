#include "dataval/dataset.hpp"

#include <algorithm>
#include <cfenv>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dataval/error.hpp"
#include "dataval/rng.hpp"

namespace dataval {

const char* noise_kind_name(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::none: return "none";
        case NoiseKind::label_flip: return "label_flip";
        case NoiseKind::feature_gauss: return "feature_gauss";
    }
    return "unknown";
}

namespace {

bool parse_number(const std::string& cell, double& out) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
    if (begin == end) return false;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

// round-half-to-even: how many train rows a noise rate touches
int affected_count(double rate, std::size_t n_train) {
    return static_cast<int>(std::nearbyint(rate * static_cast<double>(n_train)));
}

}  // namespace

Dataset load_csv(const std::string& path, int label_column, Task task) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::io, "cannot open file: " + path);

    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    bool first_content_line = true;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells = split_line(line);
        std::vector<double> parsed(cells.size());
        bool all_numeric = true;
        std::size_t bad_col = 0;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (!parse_number(cells[c], parsed[c])) {
                all_numeric = false;
                bad_col = c;
                break;
            }
        }
        if (first_content_line) {
            first_content_line = false;
            width = cells.size();
            if (!all_numeric) continue;  // header row
        }
        if (!all_numeric)
            fail(ErrorCode::parse, "non-numeric cell at row " + std::to_string(line_no) + ", column " +
                                       std::to_string(bad_col + 1) + " in " + path);
        if (cells.size() != width)
            fail(ErrorCode::parse, "row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                       " columns, expected " + std::to_string(width) + " in " + path);
        rows.push_back(std::move(parsed));
    }
    require(!rows.empty(), ErrorCode::parse, "no data rows in " + path);
    require(label_column >= 0 && static_cast<std::size_t>(label_column) < width, ErrorCode::invalid_argument,
            "label column " + std::to_string(label_column) + " out of range for width " + std::to_string(width));
    require(width >= 2, ErrorCode::parse, "need at least one feature column besides the label in " + path);

    const int n = static_cast<int>(rows.size());
    const int d = static_cast<int>(width) - 1;
    Dataset ds;
    ds.task = task;
    ds.name = path;
    ds.features.resize(n, d);
    ds.labels.resize(n);
    for (int i = 0; i < n; ++i) {
        int fc = 0;
        for (int c = 0; c < static_cast<int>(width); ++c) {
            if (c == label_column)
                ds.labels[i] = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
            else
                ds.features(i, fc++) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
        }
    }
    require(ds.features.allFinite(), ErrorCode::parse, "non-finite feature value in " + path);

    if (task == Task::classification) {
        // re-index raw labels to 0..C-1 by sorted distinct value
        std::set<double> distinct(ds.labels.begin(), ds.labels.end());
        std::map<double, int> index;
        int next = 0;
        for (double v : distinct) index[v] = next++;
        for (int i = 0; i < n; ++i) ds.labels[i] = index[ds.labels[i]];
        ds.n_classes = next;
    }
    return ds;
}

Dataset synth_blobs(int n, int d, int n_classes, double sep, std::uint64_t seed) {
    require(n >= n_classes, ErrorCode::invalid_argument, "blobs: n must be >= number of classes");
    require(d >= 1 && n_classes >= 1, ErrorCode::invalid_argument, "blobs: d and classes must be >= 1");
    require(sep > 0, ErrorCode::invalid_argument, "blobs: sep must be positive");

    Rng rng(mix_seed(seed, {0x62lu, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(d)}));
    Dataset ds;
    ds.task = Task::classification;
    ds.n_classes = n_classes;
    ds.name = "blobs";
    ds.features.resize(n, d);
    ds.labels.resize(n);

    // class sizes differ by at most one
    int row = 0;
    for (int c = 0; c < n_classes; ++c) {
        int count = n / n_classes + (c < n % n_classes ? 1 : 0);
        for (int t = 0; t < count; ++t, ++row) {
            ds.labels[row] = c;
            for (int j = 0; j < d; ++j) ds.features(row, j) = rng.normal();
            ds.features(row, c % d) += sep;
        }
    }
    return ds;
}

Dataset synth_friedman(int n, std::uint64_t seed) {
    require(n >= 2, ErrorCode::invalid_argument, "friedman: n must be >= 2");
    Rng rng(mix_seed(seed, {0x66lu, static_cast<std::uint64_t>(n)}));
    const int d = 10;
    Dataset ds;
    ds.task = Task::classification;
    ds.n_classes = 2;
    ds.name = "friedman";
    ds.features.resize(n, d);
    Eigen::VectorXd score(n);
    constexpr double pi = 3.14159265358979323846;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) ds.features(i, j) = rng.uniform();
        const auto x = ds.features.row(i);
        score[i] = 10.0 * std::sin(pi * x[0] * x[1]) + 20.0 * (x[2] - 0.5) * (x[2] - 0.5) + 10.0 * x[3] + 5.0 * x[4];
    }
    std::vector<double> sorted(score.begin(), score.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t h = sorted.size() / 2;
    const double median =
        sorted.size() % 2 == 1 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
    ds.labels.resize(n);
    for (int i = 0; i < n; ++i) ds.labels[i] = score[i] > median ? 1.0 : 0.0;
    return ds;
}

SplitIndices split_by_count(const Dataset& ds, int n_train, int n_valid, int n_test, std::uint64_t seed) {
    require(n_train >= 0 && n_valid >= 0 && n_test >= 0, ErrorCode::invalid_argument, "split: negative count");
    require(n_train + n_valid + n_test <= ds.n(), ErrorCode::invalid_argument,
            "split: requested " + std::to_string(n_train + n_valid + n_test) + " rows from a dataset of " +
                std::to_string(ds.n()));
    std::vector<int> perm(static_cast<std::size_t>(ds.n()));
    for (int i = 0; i < ds.n(); ++i) perm[static_cast<std::size_t>(i)] = i;
    Rng rng(mix_seed(seed, {0x73lu}));
    rng.shuffle(perm);
    SplitIndices split;
    split.train.assign(perm.begin(), perm.begin() + n_train);
    split.valid.assign(perm.begin() + n_train, perm.begin() + n_train + n_valid);
    split.test.assign(perm.begin() + n_train + n_valid, perm.begin() + n_train + n_valid + n_test);
    return split;
}

std::pair<Dataset, NoiseRecord> inject_label_noise(const Dataset& ds, const SplitIndices& split, double rate,
                                                   std::uint64_t seed) {
    require(ds.task == Task::classification, ErrorCode::unsupported, "label noise requires a classification task");
    require(ds.n_classes >= 2, ErrorCode::unsupported, "label noise requires at least two classes");
    require(rate >= 0.0 && rate <= 1.0, ErrorCode::invalid_argument, "noise rate must lie in [0,1]");

    Dataset noisy = ds;
    NoiseRecord record;
    record.kind = NoiseKind::label_flip;
    record.rate = rate;

    const int count = affected_count(rate, split.train.size());
    Rng rng(mix_seed(seed, {0x6elu, 1}));
    std::vector<int> chosen = rng.sample_without_replacement(static_cast<int>(split.train.size()), count);
    std::sort(chosen.begin(), chosen.end());
    for (int pos : chosen) {
        const int row = split.train[static_cast<std::size_t>(pos)];
        const int old_label = static_cast<int>(ds.labels[row]);
        int new_label;
        if (ds.n_classes == 2) {
            new_label = 1 - old_label;
        } else {
            // uniform over the other C-1 classes
            int r = static_cast<int>(rng.below(static_cast<std::uint64_t>(ds.n_classes - 1)));
            new_label = r < old_label ? r : r + 1;
        }
        noisy.labels[row] = new_label;
        record.affected.push_back(row);
    }
    return {std::move(noisy), std::move(record)};
}

std::pair<Dataset, NoiseRecord> inject_feature_noise(const Dataset& ds, const SplitIndices& split, double rate,
                                                     double sigma, std::uint64_t seed) {
    require(rate >= 0.0 && rate <= 1.0, ErrorCode::invalid_argument, "noise rate must lie in [0,1]");
    require(sigma >= 0.0, ErrorCode::invalid_argument, "sigma must be nonnegative");

    Dataset noisy = ds;
    NoiseRecord record;
    record.kind = NoiseKind::feature_gauss;
    record.rate = rate;
    record.sigma = sigma;

    const int count = affected_count(rate, split.train.size());
    Rng rng(mix_seed(seed, {0x6elu, 2}));
    std::vector<int> chosen = rng.sample_without_replacement(static_cast<int>(split.train.size()), count);
    std::sort(chosen.begin(), chosen.end());
    for (int pos : chosen) {
        const int row = split.train[static_cast<std::size_t>(pos)];
        for (int j = 0; j < ds.d(); ++j) noisy.features(row, j) += sigma * rng.normal();
        record.affected.push_back(row);
    }
    return {std::move(noisy), std::move(record)};
}

std::vector<int> affected_train_positions(const NoiseRecord& record, const SplitIndices& split) {
    std::vector<int> positions;
    positions.reserve(record.affected.size());
    for (std::size_t pos = 0; pos < split.train.size(); ++pos) {
        const int row = split.train[pos];
        if (std::find(record.affected.begin(), record.affected.end(), row) != record.affected.end())
            positions.push_back(static_cast<int>(pos));
    }
    return positions;
}

}  // namespace dataval
