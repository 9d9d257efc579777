#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "distribution.hpp"
#include "error.hpp"
#include "tree.hpp"

namespace damvi {

/// Row-major n x K matrix of base-classifier votes, each exactly -1 or +1,
/// paired with the true labels of the n examples.
class VoteMatrix {
public:
    VoteMatrix(std::vector<std::int8_t> votes, std::vector<int> labels, std::size_t classifiers)
        : votes_(std::move(votes)), labels_(std::move(labels)), k_(classifiers) {
        if (k_ == 0) throw Error(Errc::invalid_argument, "vote matrix needs at least one classifier");
        if (votes_.size() != labels_.size() * k_)
            throw Error(Errc::length_mismatch, "vote matrix size does not match labels x classifiers");
        for (auto v : votes_)
            if (v != 1 && v != -1) throw Error(Errc::invalid_argument, "vote matrix entry outside {-1,+1}");
        for (auto y : labels_)
            if (y != kPositive && y != kNegative) throw Error(Errc::invalid_argument, "label outside {-1,+1}");
    }

    std::size_t examples() const noexcept { return labels_.size(); }
    std::size_t classifiers() const noexcept { return k_; }
    int operator()(std::size_t i, std::size_t k) const { return votes_[i * k_ + k]; }
    std::span<const std::int8_t> row(std::size_t i) const { return {votes_.data() + i * k_, k_}; }
    int label(std::size_t i) const { return labels_[i]; }
    const std::vector<int>& labels() const noexcept { return labels_; }

    /// Sum_k q_k h_k(x_i).
    double score(std::size_t i, const PosteriorWeights& q) const {
        double s = 0.0;
        const auto r = row(i);
        for (std::size_t k = 0; k < k_; ++k) s += q[k] * r[k];
        return s;
    }

    /// y_i * score(i, q).
    double margin(std::size_t i, const PosteriorWeights& q) const { return labels_[i] * score(i, q); }

private:
    std::vector<std::int8_t> votes_;
    std::vector<int> labels_;
    std::size_t k_;
};

/// The weighted majority vote B_Q: K trees and a posterior over them.
class Ensemble {
public:
    Ensemble(std::vector<Tree> classifiers, PosteriorWeights weights)
        : classifiers_(std::move(classifiers)), weights_(std::move(weights)) {
        if (classifiers_.empty()) throw Error(Errc::invalid_argument, "ensemble needs at least one classifier");
        if (weights_.size() != classifiers_.size())
            throw Error(Errc::length_mismatch, "ensemble weights length differs from classifier count");
        for (const auto& t : classifiers_)
            if (t.dimension() != classifiers_.front().dimension())
                throw Error(Errc::dimension_mismatch, "ensemble classifiers disagree on dimension");
    }

    const std::vector<Tree>& classifiers() const noexcept { return classifiers_; }
    const PosteriorWeights& weights() const noexcept { return weights_; }
    std::size_t size() const noexcept { return classifiers_.size(); }
    std::size_t dimension() const noexcept { return classifiers_.front().dimension(); }

    friend bool operator==(const Ensemble&, const Ensemble&) = default;

private:
    std::vector<Tree> classifiers_;
    PosteriorWeights weights_;
};

/// H[i][k] = h_k(x_i).
inline VoteMatrix vote_matrix(std::span<const Tree> classifiers, const Dataset& ds) {
    if (classifiers.empty()) throw Error(Errc::invalid_argument, "vote_matrix: no classifiers");
    if (ds.empty()) throw Error(Errc::empty_dataset, "vote_matrix: empty dataset");
    for (const auto& t : classifiers)
        if (t.dimension() != ds.dimension())
            throw Error(Errc::dimension_mismatch, "vote_matrix: classifier dimension " +
                                                      std::to_string(t.dimension()) + " vs dataset " +
                                                      std::to_string(ds.dimension()));
    const std::size_t k = classifiers.size();
    std::vector<std::int8_t> votes(ds.size() * k);
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t c = 0; c < k; ++c)
            votes[i * k + c] = static_cast<std::int8_t>(classifiers[c].predict_unchecked(ds[i].features));
    return VoteMatrix(std::move(votes), ds.labels(), k);
}

inline VoteMatrix vote_matrix(const Ensemble& e, const Dataset& ds) { return vote_matrix(e.classifiers(), ds); }

/// Sign with the tie rule sign(0) = +1.
inline int sign_with_tie(double score) noexcept { return score >= 0.0 ? kPositive : kNegative; }

inline double ensemble_score(const Ensemble& e, std::span<const double> x) {
    if (x.size() != e.dimension())
        throw Error(Errc::dimension_mismatch, "ensemble expects " + std::to_string(e.dimension()) +
                                                  " features, got " + std::to_string(x.size()));
    double s = 0.0;
    const auto& trees = e.classifiers();
    for (std::size_t k = 0; k < trees.size(); ++k) s += e.weights()[k] * trees[k].predict_unchecked(x);
    return s;
}

inline int predict_mv(const Ensemble& e, std::span<const double> x) { return sign_with_tie(ensemble_score(e, x)); }

inline std::vector<double> ensemble_scores(const Ensemble& e, const Dataset& ds) {
    std::vector<double> out;
    out.reserve(ds.size());
    for (const auto& ex : ds) out.push_back(ensemble_score(e, ex.features));
    return out;
}

inline std::vector<int> predict_mv(const Ensemble& e, const Dataset& ds) {
    std::vector<int> out;
    out.reserve(ds.size());
    for (const auto& ex : ds) out.push_back(predict_mv(e, ex.features));
    return out;
}

/// Sum_i D_i * I[B_Q(x_i) != y_i]; uniform D when `dist` is empty.
inline double empirical_mv_risk(const Ensemble& e, const Dataset& ds,
                                const std::optional<ExampleDistribution>& dist = std::nullopt) {
    if (dist && dist->size() != ds.size())
        throw Error(Errc::length_mismatch, "empirical_mv_risk: distribution length differs from dataset size");
    if (ds.empty()) throw Error(Errc::empty_dataset, "empirical_mv_risk: empty dataset");
    const double uniform = 1.0 / static_cast<double>(ds.size());
    double risk = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (predict_mv(e, ds[i].features) != ds[i].label) risk += dist ? (*dist)[i] : uniform;
    return risk;
}

/// Same quantity computed from precomputed votes.
inline double empirical_mv_risk(const VoteMatrix& v, const PosteriorWeights& q, const ExampleDistribution& dist) {
    if (q.size() != v.classifiers()) throw Error(Errc::length_mismatch, "weights length differs from classifier count");
    if (dist.size() != v.examples()) throw Error(Errc::length_mismatch, "distribution length differs from example count");
    double risk = 0.0;
    for (std::size_t i = 0; i < v.examples(); ++i)
        if (sign_with_tie(v.score(i, q)) != v.label(i)) risk += dist[i];
    return risk;
}

} // namespace damvi
