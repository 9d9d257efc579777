#pragma once

#include <algorithm>
#include <cmath>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "error.hpp"
#include "random.hpp"

namespace damvi {

constexpr int kPositive = +1;
constexpr int kNegative = -1;

struct Example {
    std::vector<double> features;
    int label = kNegative;
};

/// Labeled binary examples sharing one feature dimension. Labels are always
/// normalized to {-1, +1}.
class Dataset {
public:
    Dataset() = default;

    Dataset(std::vector<Example> examples, std::size_t dimension)
        : examples_(std::move(examples)), dimension_(dimension) {
        if (dimension_ == 0) throw Error(Errc::invalid_argument, "dataset dimension must be positive");
        for (std::size_t i = 0; i < examples_.size(); ++i) {
            const auto& ex = examples_[i];
            if (ex.label != kPositive && ex.label != kNegative)
                throw Error(Errc::invalid_argument,
                            "example " + std::to_string(i) + " has label outside {-1,+1}");
            if (ex.features.size() != dimension_)
                throw Error(Errc::dimension_mismatch,
                            "example " + std::to_string(i) + " has " + std::to_string(ex.features.size()) +
                                " features, expected " + std::to_string(dimension_));
            if (ex.label == kPositive) ++positives_;
        }
    }

    std::size_t size() const noexcept { return examples_.size(); }
    bool empty() const noexcept { return examples_.empty(); }
    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t positive_count() const noexcept { return positives_; }
    std::size_t negative_count() const noexcept { return examples_.size() - positives_; }

    double imbalance_ratio() const noexcept {
        return examples_.empty() ? 0.0 : static_cast<double>(positives_) / static_cast<double>(examples_.size());
    }

    const Example& operator[](std::size_t i) const { return examples_[i]; }
    const std::vector<Example>& examples() const noexcept { return examples_; }
    auto begin() const noexcept { return examples_.begin(); }
    auto end() const noexcept { return examples_.end(); }

    std::vector<int> labels() const {
        std::vector<int> out;
        out.reserve(examples_.size());
        for (const auto& ex : examples_) out.push_back(ex.label);
        return out;
    }

    /// Subset by index, in the given order (indices may repeat).
    Dataset select(std::span<const std::size_t> indices) const {
        std::vector<Example> out;
        out.reserve(indices.size());
        for (auto i : indices) out.push_back(examples_.at(i));
        return Dataset(std::move(out), dimension_);
    }

    friend bool operator==(const Dataset& a, const Dataset& b) {
        if (a.dimension_ != b.dimension_ || a.examples_.size() != b.examples_.size()) return false;
        for (std::size_t i = 0; i < a.examples_.size(); ++i) {
            if (a.examples_[i].label != b.examples_[i].label ||
                a.examples_[i].features != b.examples_[i].features)
                return false;
        }
        return true;
    }

private:
    std::vector<Example> examples_;
    std::size_t dimension_ = 1;
    std::size_t positives_ = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(trim(line.substr(start)));
            break;
        }
        cells.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return cells;
}

inline bool parse_double(std::string_view cell, double& value) {
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    if (cell.empty()) return false;
    const auto* first = cell.data();
    const auto* last = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    return ec == std::errc() && ptr == last && std::isfinite(value);
}

/// Indices of examples with the given label, in dataset order.
inline std::vector<std::size_t> indices_with_label(const Dataset& ds, int label) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (ds[i].label == label) out.push_back(i);
    return out;
}

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
    // Fisher-Yates with our own index draw; std::shuffle is implementation-defined.
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

inline double standard_normal(Rng& rng) {
    // Box-Muller; u1 in (0, 1].
    const double u1 = 1.0 - uniform_unit(rng);
    const double u2 = uniform_unit(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

inline std::size_t round_half_up(double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); }

inline void require_both_classes(const Dataset& ds, const char* op) {
    if (ds.positive_count() == 0 || ds.negative_count() == 0)
        throw Error(Errc::single_class, std::string(op) + ": both classes must be present");
}

} // namespace detail

/// Reads a headered CSV. Rows whose label cell equals `positive_label` become
/// +1, every other row -1. All remaining columns are features in header order.
inline Dataset load_csv(const std::string& path, const std::string& label_column,
                        const std::string& positive_label) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::missing_file, "cannot open dataset file '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw Error(Errc::empty_dataset, "dataset file '" + path + "' is empty");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

    std::vector<std::string> header;
    for (auto cell : detail::split_csv_line(line)) header.emplace_back(cell);
    std::size_t label_idx = header.size();
    for (std::size_t c = 0; c < header.size(); ++c)
        if (header[c] == label_column) label_idx = c;
    if (label_idx == header.size())
        throw Error(Errc::missing_column, "label column '" + label_column + "' not found in '" + path + "'");
    if (header.size() < 2) throw Error(Errc::parse_error, "dataset '" + path + "' has no feature columns");

    const std::size_t dim = header.size() - 1;
    const auto positive = detail::trim(positive_label);
    std::vector<Example> examples;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw Error(Errc::parse_error, "row " + std::to_string(row) + ": expected " +
                                               std::to_string(header.size()) + " cells, found " +
                                               std::to_string(cells.size()));
        Example ex;
        ex.features.reserve(dim);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c == label_idx) {
                ex.label = cells[c] == positive ? kPositive : kNegative;
                continue;
            }
            double value = 0.0;
            if (!detail::parse_double(cells[c], value))
                throw Error(Errc::parse_error, "row " + std::to_string(row) + ", column '" +
                                                   header[c] + "': non-numeric value '" +
                                                   std::string(cells[c]) + "'");
            ex.features.push_back(value);
        }
        examples.push_back(std::move(ex));
    }
    if (examples.empty()) throw Error(Errc::empty_dataset, "dataset file '" + path + "' has no rows");
    return Dataset(std::move(examples), dim);
}

/// Writes `ds` as CSV with columns x0..x{d-1},label (labels as -1/+1).
inline void write_csv(const Dataset& ds, std::ostream& out) {
    for (std::size_t j = 0; j < ds.dimension(); ++j) out << 'x' << j << ',';
    out << "label\n";
    std::ostringstream cell;
    cell.precision(17);
    for (const auto& ex : ds) {
        for (double v : ex.features) {
            cell.str({});
            cell << v;
            out << cell.str() << ',';
        }
        out << ex.label << '\n';
    }
}

struct Split {
    Dataset train;
    Dataset test;
};

/// Per-class shuffle, then round-half-up(class_count * test_fraction) of each
/// class goes to test. Output keeps the original relative order.
inline Split stratified_split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw Error(Errc::invalid_argument, "test_fraction must lie in (0, 1)");
    detail::require_both_classes(ds, "stratified_split");

    auto rng = make_rng(seed);
    std::vector<char> in_test(ds.size(), 0);
    std::size_t test_total = 0;
    for (int label : {kPositive, kNegative}) {
        auto idx = detail::indices_with_label(ds, label);
        detail::shuffle(idx, rng);
        const auto take = detail::round_half_up(static_cast<double>(idx.size()) * test_fraction);
        for (std::size_t i = 0; i < take; ++i) in_test[idx[i]] = 1;
        test_total += take;
    }
    if (test_total == 0 || test_total == ds.size())
        throw Error(Errc::invalid_argument, "test_fraction produces an empty split");

    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < ds.size(); ++i) (in_test[i] ? test_idx : train_idx).push_back(i);
    return {ds.select(train_idx), ds.select(test_idx)};
}

/// ceil(fraction * n) draws, uniform with replacement.
inline Dataset bootstrap_sample(const Dataset& ds, double fraction, std::uint64_t seed) {
    if (ds.empty()) throw Error(Errc::empty_dataset, "bootstrap_sample: empty dataset");
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw Error(Errc::invalid_argument, "bootstrap fraction must lie in (0, 1]");
    const auto m = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(ds.size()) - 1e-9));
    auto rng = make_rng(seed);
    std::vector<std::size_t> idx(std::max<std::size_t>(m, 1));
    for (auto& i : idx) i = uniform_index(rng, ds.size());
    return ds.select(idx);
}

/// Two mirrored unit-variance isotropic Gaussians at +/- separation * (1,..,1)/sqrt(d).
/// Positives come first, then negatives.
inline Dataset make_synthetic(std::size_t n, std::size_t d, double imbalance_ratio, double class_separation,
                              std::uint64_t seed) {
    if (d == 0) throw Error(Errc::invalid_argument, "make_synthetic: dimension must be positive");
    if (!(imbalance_ratio > 0.0 && imbalance_ratio <= 0.5))
        throw Error(Errc::invalid_argument, "make_synthetic: imbalance ratio must lie in (0, 0.5]");
    if (class_separation < 0.0) throw Error(Errc::invalid_argument, "make_synthetic: negative separation");
    const auto positives = detail::round_half_up(imbalance_ratio * static_cast<double>(n));
    if (positives == 0) throw Error(Errc::invalid_argument, "make_synthetic: parameters imply zero positives");

    const double offset = class_separation / std::sqrt(static_cast<double>(d));
    auto rng = make_rng(seed);
    std::vector<Example> examples(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& ex = examples[i];
        ex.label = i < positives ? kPositive : kNegative;
        ex.features.resize(d);
        for (auto& v : ex.features) v = ex.label * offset + detail::standard_normal(rng);
    }
    return Dataset(std::move(examples), d);
}

namespace detail {

inline int minority_label(const Dataset& ds) {
    return ds.positive_count() <= ds.negative_count() ? kPositive : kNegative;
}

inline Dataset append(const Dataset& ds, std::vector<Example> extra) {
    std::vector<Example> all = ds.examples();
    all.insert(all.end(), std::make_move_iterator(extra.begin()), std::make_move_iterator(extra.end()));
    return Dataset(std::move(all), ds.dimension());
}

} // namespace detail

/// Duplicates minority examples (uniform with replacement) until classes balance.
/// Originals are kept in place and copies appended.
inline Dataset random_oversample(const Dataset& ds, std::uint64_t seed) {
    detail::require_both_classes(ds, "random_oversample");
    const int minority = detail::minority_label(ds);
    const auto pool = detail::indices_with_label(ds, minority);
    const auto majority_count = std::max(ds.positive_count(), ds.negative_count());
    auto rng = make_rng(seed);
    std::vector<Example> extra;
    for (std::size_t c = pool.size(); c < majority_count; ++c) extra.push_back(ds[pool[uniform_index(rng, pool.size())]]);
    return detail::append(ds, std::move(extra));
}

constexpr std::size_t kDefaultSmoteNeighbors = 5;

/// SMOTE: synthetic minority points on segments between a random minority example
/// and one of its exact Euclidean nearest minority neighbours.
inline Dataset smote(const Dataset& ds, std::size_t k_neighbors, std::uint64_t seed) {
    detail::require_both_classes(ds, "smote");
    if (k_neighbors == 0) throw Error(Errc::invalid_argument, "smote: k_neighbors must be at least 1");
    const int minority = detail::minority_label(ds);
    const auto pool = detail::indices_with_label(ds, minority);
    if (pool.size() < 2) throw Error(Errc::invalid_argument, "smote: minority class needs at least 2 examples");
    const auto majority_count = std::max(ds.positive_count(), ds.negative_count());
    if (pool.size() == majority_count) return ds;

    const std::size_t k = std::min(k_neighbors, pool.size() - 1);
    const std::size_t m = pool.size();
    const std::size_t d = ds.dimension();

    // neighbours[a] = k nearest pool positions of pool member a, ties by position.
    std::vector<std::vector<std::size_t>> neighbours(m);
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t a = 0; a < m; ++a) {
        dist.clear();
        const auto& xa = ds[pool[a]].features;
        for (std::size_t b = 0; b < m; ++b) {
            if (b == a) continue;
            const auto& xb = ds[pool[b]].features;
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += (xa[j] - xb[j]) * (xa[j] - xb[j]);
            dist.emplace_back(s, b);
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        for (std::size_t t = 0; t < k; ++t) neighbours[a].push_back(dist[t].second);
    }

    auto rng = make_rng(seed);
    std::vector<Example> extra;
    for (std::size_t c = m; c < majority_count; ++c) {
        const auto a = uniform_index(rng, m);
        const auto b = neighbours[a][uniform_index(rng, k)];
        const double u = uniform_unit(rng);
        const auto& xa = ds[pool[a]].features;
        const auto& xb = ds[pool[b]].features;
        Example ex;
        ex.label = minority;
        ex.features.resize(d);
        for (std::size_t j = 0; j < d; ++j) ex.features[j] = xa[j] + u * (xb[j] - xa[j]);
        extra.push_back(std::move(ex));
    }
    return detail::append(ds, std::move(extra));
}

/// Random undersampling of one class so that positives / n is close to `target_ir`.
/// If the target is above the current ratio negatives are dropped, otherwise
/// positives are. Kept examples retain their original order, and for a fixed
/// seed the kept subset of a class shrinks monotonically with the class's
/// target count.
inline Dataset subsample_to_ratio(const Dataset& ds, double target_ir, std::uint64_t seed) {
    if (!(target_ir > 0.0 && target_ir <= 0.5))
        throw Error(Errc::invalid_argument, "subsample_to_ratio: target ratio must lie in (0, 0.5]");
    detail::require_both_classes(ds, "subsample_to_ratio");
    const double pos = static_cast<double>(ds.positive_count());
    const double neg = static_cast<double>(ds.negative_count());
    const double current = ds.imbalance_ratio();

    std::size_t keep_pos = ds.positive_count();
    std::size_t keep_neg = ds.negative_count();
    if (target_ir > current) {
        keep_neg = detail::round_half_up(pos * (1.0 - target_ir) / target_ir);
    } else if (target_ir < current) {
        keep_pos = detail::round_half_up(target_ir * neg / (1.0 - target_ir));
        if (keep_pos == 0)
            throw Error(Errc::invalid_argument, "subsample_to_ratio: target implies zero minority examples");
    } else {
        return ds;
    }
    keep_pos = std::min(keep_pos, ds.positive_count());
    keep_neg = std::max<std::size_t>(std::min(keep_neg, ds.negative_count()), 1);

    std::vector<char> keep(ds.size(), 0);
    for (int label : {kPositive, kNegative}) {
        auto idx = detail::indices_with_label(ds, label);
        auto rng = make_rng(derive_seed(seed, label == kPositive ? 1 : 2));
        detail::shuffle(idx, rng);
        const auto count = label == kPositive ? keep_pos : keep_neg;
        for (std::size_t i = 0; i < count; ++i) keep[idx[i]] = 1;
    }
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (keep[i]) kept.push_back(i);
    return ds.select(kept);
}

/// Undersamples the majority class down to the minority count.
inline Dataset random_undersample(const Dataset& ds, std::uint64_t seed) {
    detail::require_both_classes(ds, "random_undersample");
    if (ds.positive_count() == ds.negative_count()) return ds;
    const int majority = -detail::minority_label(ds);
    const auto minority_count = std::min(ds.positive_count(), ds.negative_count());
    auto idx = detail::indices_with_label(ds, majority);
    auto rng = make_rng(seed);
    detail::shuffle(idx, rng);
    std::vector<char> drop(ds.size(), 0);
    for (std::size_t i = minority_count; i < idx.size(); ++i) drop[idx[i]] = 1;
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (!drop[i]) kept.push_back(i);
    return ds.select(kept);
}

} // namespace damvi
