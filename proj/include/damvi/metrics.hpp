#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"

namespace damvi {

namespace detail {

inline void check_labels(std::span<const int> labels) {
    for (int y : labels)
        if (y != kPositive && y != kNegative) throw Error(Errc::invalid_argument, "label outside {-1,+1}");
}

inline std::size_t count_positive(std::span<const int> labels) {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kPositive));
}

} // namespace detail

/// Harmonic mean of precision and recall on the positive class. Returns 0 when
/// there are no true positives (including when nothing is predicted positive).
inline double f1_score(std::span<const int> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size()) throw Error(Errc::length_mismatch, "f1_score: length mismatch");
    detail::check_labels(predictions);
    detail::check_labels(labels);
    if (detail::count_positive(labels) == 0) throw Error(Errc::single_class, "f1_score: no positive labels");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool pred = predictions[i] == kPositive;
        const bool truth = labels[i] == kPositive;
        tp += pred && truth;
        fp += pred && !truth;
        fn += !pred && truth;
    }
    if (tp == 0) return 0.0;
    // 2PR/(P+R) simplifies to 2TP / (2TP + FP + FN).
    return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

struct ScoredPredictions {
    std::vector<double> scores;
    std::vector<int> labels;

    void validate() const {
        if (scores.size() != labels.size()) throw Error(Errc::length_mismatch, "scores and labels differ in length");
        detail::check_labels(labels);
        if (detail::count_positive(labels) == 0) throw Error(Errc::single_class, "no positive labels");
    }
};

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
};

/// One (recall, precision) point per distinct score, thresholds descending;
/// tied scores enter together.
inline std::vector<PrPoint> pr_curve(const ScoredPredictions& sp) {
    sp.validate();
    const std::size_t n = sp.scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sp.scores[a] > sp.scores[b]; });
    const double total_pos = static_cast<double>(detail::count_positive(sp.labels));

    std::vector<PrPoint> curve;
    std::size_t tp = 0, seen = 0;
    for (std::size_t at = 0; at < n;) {
        const double s = sp.scores[order[at]];
        while (at < n && sp.scores[order[at]] == s) {
            tp += sp.labels[order[at]] == kPositive;
            ++seen;
            ++at;
        }
        curve.push_back({static_cast<double>(tp) / total_pos, static_cast<double>(tp) / static_cast<double>(seen)});
    }
    return curve;
}

/// Step-wise area: Sum_n (R_n - R_{n-1}) P_n with R_0 = 0.
inline double average_precision(const ScoredPredictions& sp) {
    double ap = 0.0;
    double prev_recall = 0.0;
    for (const auto& p : pr_curve(sp)) {
        ap += (p.recall - prev_recall) * p.precision;
        prev_recall = p.recall;
    }
    return ap;
}

inline void write_pr_curve_csv(const std::vector<PrPoint>& curve, std::ostream& out) {
    out << "recall,precision\n";
    const auto old = out.precision(17);
    for (const auto& p : curve) out << p.recall << ',' << p.precision << '\n';
    out.precision(old);
}

struct RankSumResult {
    double statistic = 0.0; ///< rank sum of the first sample (midranks for ties)
    double p_value = 1.0;   ///< two-sided
    bool exact = false;
};

constexpr std::size_t kExactRankSumLimit = 12;

namespace detail {

/// Doubled midranks of the pooled sample so tied ranks stay integral.
inline std::vector<std::int64_t> doubled_midranks(std::span<const double> pooled) {
    const std::size_t n = pooled.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
    std::vector<std::int64_t> ranks(n);
    for (std::size_t at = 0; at < n;) {
        std::size_t end = at;
        while (end < n && pooled[order[end]] == pooled[order[at]]) ++end;
        // ranks at+1 .. end share (at+1+end)/2; doubled: at+1+end.
        for (std::size_t t = at; t < end; ++t) ranks[order[t]] = static_cast<std::int64_t>(at + 1 + end);
        at = end;
    }
    return ranks;
}

inline double normal_two_sided(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

} // namespace detail

/// Two-sided Wilcoxon rank-sum (Mann-Whitney) test. Exact permutation null when
/// the pooled size is at most 12, otherwise the normal approximation with tie
/// and continuity corrections.
inline RankSumResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw Error(Errc::invalid_argument, "wilcoxon_rank_sum: empty sample");
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = detail::doubled_midranks(pooled);
    const std::size_t na = a.size(), n = pooled.size();

    std::int64_t observed2 = 0;
    for (std::size_t i = 0; i < na; ++i) observed2 += ranks[i];
    RankSumResult out;
    out.statistic = static_cast<double>(observed2) / 2.0;
    // Null mean of 2W is na (n + 1).
    const std::int64_t mean2 = static_cast<std::int64_t>(na * (n + 1));

    if (n <= kExactRankSumLimit) {
        out.exact = true;
        // |2W - na(n+1)| over all C(n, na) assignments of ranks to the first sample.
        const std::int64_t target = std::abs(observed2 - mean2);
        std::size_t extreme = 0, total = 0;
        std::vector<bool> pick(n, false);
        std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(na), true);
        do {
            std::int64_t s = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (pick[i]) s += ranks[i];
            extreme += std::abs(s - mean2) >= target;
            ++total;
        } while (std::prev_permutation(pick.begin(), pick.end()));
        out.p_value = static_cast<double>(extreme) / static_cast<double>(total);
        return out;
    }

    const double nad = static_cast<double>(na);
    const double nbd = static_cast<double>(b.size());
    const double nd = static_cast<double>(n);
    double tie_term = 0.0;
    {
        std::vector<double> sorted = pooled;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t at = 0; at < n;) {
            std::size_t end = at;
            while (end < n && sorted[end] == sorted[at]) ++end;
            const double t = static_cast<double>(end - at);
            tie_term += t * t * t - t;
            at = end;
        }
    }
    const double variance = nad * nbd / 12.0 * ((nd + 1.0) - tie_term / (nd * (nd - 1.0)));
    if (variance <= 0.0) {
        out.p_value = 1.0;
        return out;
    }
    const double deviation = std::max(std::abs(out.statistic - nad * (nd + 1.0) / 2.0) - 0.5, 0.0);
    out.p_value = std::min(1.0, detail::normal_two_sided(deviation / std::sqrt(variance)));
    return out;
}

inline double mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
inline double stddev(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

} // namespace damvi
