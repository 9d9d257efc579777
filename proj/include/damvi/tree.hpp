#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"

namespace damvi {

struct TreeParams {
    std::optional<std::size_t> max_depth; ///< nullopt grows until purity
    std::size_t min_samples_split = 2;
    std::size_t min_samples_leaf = 1;

    void validate() const {
        if (min_samples_split < 2) throw Error(Errc::invalid_argument, "min_samples_split must be >= 2");
        if (min_samples_leaf < 1) throw Error(Errc::invalid_argument, "min_samples_leaf must be >= 1");
    }
};

/// One node of a fitted tree. `feature < 0` marks a leaf.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int label = kPositive;
    double positive_fraction = 0.0;

    bool is_leaf() const noexcept { return feature < 0; }
};

/// Binary CART classifier stored as a flat node array; node 0 is the root.
class Tree {
public:
    Tree() = default;
    Tree(std::vector<TreeNode> nodes, std::size_t dimension) : nodes_(std::move(nodes)), dimension_(dimension) {
        validate();
    }

    static Tree leaf(int label, double positive_fraction, std::size_t dimension) {
        TreeNode n;
        n.label = label;
        n.positive_fraction = positive_fraction;
        return Tree({n}, dimension);
    }

    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    const TreeNode& root() const { return nodes_.front(); }
    std::size_t dimension() const noexcept { return dimension_; }

    /// x[feature] <= threshold descends left.
    int predict(std::span<const double> x) const {
        if (x.size() != dimension_)
            throw Error(Errc::dimension_mismatch, "tree expects " + std::to_string(dimension_) +
                                                      " features, got " + std::to_string(x.size()));
        return predict_unchecked(x);
    }

    int predict_unchecked(std::span<const double> x) const noexcept {
        std::size_t at = 0;
        while (!nodes_[at].is_leaf()) {
            const auto& n = nodes_[at];
            at = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
        }
        return nodes_[at].label;
    }

    std::size_t depth() const { return depth_from(0); }
    std::size_t leaf_count() const {
        return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const auto& n) { return n.is_leaf(); }));
    }

    friend bool operator==(const Tree& a, const Tree& b) {
        if (a.dimension_ != b.dimension_ || a.nodes_.size() != b.nodes_.size()) return false;
        for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
            const auto &x = a.nodes_[i], &y = b.nodes_[i];
            if (x.feature != y.feature || x.left != y.left || x.right != y.right || x.label != y.label ||
                x.threshold != y.threshold || x.positive_fraction != y.positive_fraction)
                return false;
        }
        return true;
    }

private:
    std::size_t depth_from(std::size_t at) const {
        const auto& n = nodes_[at];
        if (n.is_leaf()) return 0;
        return 1 + std::max(depth_from(static_cast<std::size_t>(n.left)), depth_from(static_cast<std::size_t>(n.right)));
    }

    void validate() const {
        if (nodes_.empty()) throw Error(Errc::invalid_argument, "tree has no nodes");
        const auto count = static_cast<std::int32_t>(nodes_.size());
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const auto& n = nodes_[i];
            if (n.is_leaf()) {
                if (n.label != kPositive && n.label != kNegative)
                    throw Error(Errc::invalid_argument, "tree leaf label outside {-1,+1}");
                continue;
            }
            if (static_cast<std::size_t>(n.feature) >= dimension_)
                throw Error(Errc::invalid_argument, "tree split feature out of range");
            // Children always follow their parent, which also rules out cycles.
            const auto self = static_cast<std::int32_t>(i);
            if (n.left <= self || n.right <= self || n.left >= count || n.right >= count)
                throw Error(Errc::invalid_argument, "tree child index out of range");
        }
    }

    std::vector<TreeNode> nodes_;
    std::size_t dimension_ = 1;
};

namespace detail {

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double score = -std::numeric_limits<double>::infinity();
};

/// Gini split search maximizing sum over children of (pos^2 + neg^2) / size,
/// which is equivalent to minimizing size-weighted Gini impurity. Scans
/// features then thresholds in ascending order and only accepts strict
/// improvements, so ties resolve to the lowest feature and then lowest threshold.
class TreeBuilder {
public:
    TreeBuilder(const Dataset& ds, const TreeParams& params) : ds_(ds), params_(params) {}

    std::vector<TreeNode> build() {
        std::vector<std::size_t> idx(ds_.size());
        std::iota(idx.begin(), idx.end(), 0);
        nodes_.clear();
        grow(idx, 0);
        return std::move(nodes_);
    }

private:
    std::int32_t grow(std::vector<std::size_t>& idx, std::size_t depth) {
        const auto self = static_cast<std::int32_t>(nodes_.size());
        nodes_.emplace_back();

        std::size_t pos = 0;
        for (auto i : idx) pos += ds_[i].label == kPositive ? 1 : 0;
        const double frac = static_cast<double>(pos) / static_cast<double>(idx.size());
        nodes_[static_cast<std::size_t>(self)].positive_fraction = frac;
        nodes_[static_cast<std::size_t>(self)].label = frac >= 0.5 ? kPositive : kNegative;

        const bool pure = pos == 0 || pos == idx.size();
        const bool depth_reached = params_.max_depth && depth >= *params_.max_depth;
        if (pure || depth_reached || idx.size() < params_.min_samples_split) return self;

        const auto split = best_split(idx, pos);
        if (split.feature < 0) return self;

        std::vector<std::size_t> left, right;
        for (auto i : idx)
            (ds_[i].features[static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right).push_back(i);
        idx.clear();
        idx.shrink_to_fit();

        auto& node = nodes_[static_cast<std::size_t>(self)];
        node.feature = split.feature;
        node.threshold = split.threshold;
        const auto l = grow(left, depth + 1);
        const auto r = grow(right, depth + 1);
        nodes_[static_cast<std::size_t>(self)].left = l;
        nodes_[static_cast<std::size_t>(self)].right = r;
        return self;
    }

    SplitChoice best_split(const std::vector<std::size_t>& idx, std::size_t total_pos) const {
        SplitChoice best;
        const std::size_t n = idx.size();
        const std::size_t min_leaf = params_.min_samples_leaf;
        std::vector<std::pair<double, int>> column(n);
        for (std::size_t f = 0; f < ds_.dimension(); ++f) {
            for (std::size_t t = 0; t < n; ++t) column[t] = {ds_[idx[t]].features[f], ds_[idx[t]].label};
            std::sort(column.begin(), column.end());
            std::size_t left_pos = 0;
            for (std::size_t t = 1; t < n; ++t) {
                left_pos += column[t - 1].second == kPositive ? 1 : 0;
                if (column[t - 1].first == column[t].first) continue;
                if (t < min_leaf || n - t < min_leaf) continue;
                const double nl = static_cast<double>(t);
                const double nr = static_cast<double>(n - t);
                const double lp = static_cast<double>(left_pos);
                const double rp = static_cast<double>(total_pos - left_pos);
                const double score = (lp * lp + (nl - lp) * (nl - lp)) / nl + (rp * rp + (nr - rp) * (nr - rp)) / nr;
                if (best.feature < 0 || score > best.score + 1e-12 * std::max(1.0, best.score)) {
                    best.score = score;
                    best.feature = static_cast<int>(f);
                    best.threshold = midpoint(column[t - 1].first, column[t].first);
                }
            }
        }
        return best;
    }

    static double midpoint(double lo, double hi) {
        const double mid = lo + (hi - lo) / 2.0;
        // Rounding can land the midpoint on `hi`, which would send it left.
        return mid >= hi ? lo : mid;
    }

    const Dataset& ds_;
    const TreeParams& params_;
    std::vector<TreeNode> nodes_;
};

} // namespace detail

/// Greedy CART fit with Gini impurity on the unweighted examples of `ds`.
inline Tree fit_tree(const Dataset& ds, const TreeParams& params = {}) {
    if (ds.empty()) throw Error(Errc::empty_dataset, "fit_tree: empty dataset");
    params.validate();
    detail::TreeBuilder builder(ds, params);
    return Tree(builder.build(), ds.dimension());
}

inline int predict_tree(const Tree& tree, std::span<const double> x) { return tree.predict(x); }

} // namespace damvi
