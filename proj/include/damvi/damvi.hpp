#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <string>
#include <thread>
#include <vector>

#include "cbound.hpp"
#include "dataset.hpp"
#include "distribution.hpp"
#include "error.hpp"
#include "random.hpp"
#include "tree.hpp"
#include "vote.hpp"

namespace damvi {

inline constexpr std::size_t kDefaultClassifiers = 100;
inline constexpr double kDefaultBootstrapFraction = 0.2;

struct DamviConfig {
    std::size_t classifiers = kDefaultClassifiers;
    double bootstrap_fraction = kDefaultBootstrapFraction;
    TreeParams tree;
    OptimizerConfig optimizer;
    std::uint64_t seed = 0;
    /// 0 uses std::thread::hardware_concurrency().
    std::size_t threads = 0;

    void validate() const {
        if (classifiers == 0) throw Error(Errc::invalid_argument, "number of classifiers must be at least 1");
        if (!(bootstrap_fraction > 0.0 && bootstrap_fraction <= 1.0))
            throw Error(Errc::invalid_argument, "bootstrap fraction must lie in (0, 1]");
        tree.validate();
    }
};

struct TrainingReport {
    double cbound = 1.0;
    double objective = 0.0;
    double uniform_objective = 0.0;
    double gibbs_risk = 0.0;
    double disagreement = 0.0;
    std::size_t optimizer_iterations = 0;
    OptimizerStatus optimizer_status = OptimizerStatus::converged;
    bool bound_applicable = true;
};

struct TrainedModel {
    Ensemble ensemble;
    TrainingReport report;
};

namespace detail {

/// Runs body(k) for k in [0, count) over a small pool of threads. Each index is
/// handled exactly once, so results depend only on k.
inline void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (std::size_t k = 0; k < count; ++k) body(k);
        return;
    }
    std::vector<std::future<void>> workers;
    for (std::size_t t = 0; t < threads; ++t)
        workers.push_back(std::async(std::launch::async, [&, t] {
            for (std::size_t k = t; k < count; k += threads) body(k);
        }));
    for (auto& w : workers) w.get();
}

enum SeedStream : std::uint64_t { kBootstrapStream = 1, kOptimizerStream = 2, kResampleStream = 3 };

inline std::vector<Tree> bagged_trees(const Dataset& train, const DamviConfig& config,
                                      const std::function<Dataset(const Dataset&, std::size_t)>& member_data) {
    std::vector<Tree> trees(config.classifiers);
    parallel_for(config.classifiers, config.threads, [&](std::size_t k) {
        const auto sample = member_data(train, k);
        trees[k] = fit_tree(sample, config.tree);
    });
    return trees;
}

inline std::vector<Tree> bootstrap_trees(const Dataset& train, const DamviConfig& config) {
    return bagged_trees(train, config, [&](const Dataset& ds, std::size_t k) {
        return bootstrap_sample(ds, config.bootstrap_fraction, derive_seed(config.seed, kBootstrapStream, k));
    });
}

inline void require_trainable(const Dataset& train, const DamviConfig& config) {
    config.validate();
    if (train.empty()) throw Error(Errc::empty_dataset, "training set is empty");
    require_both_classes(train, "training");
}

} // namespace detail

/// Reweights positives by exp(-margin) under `q`; negatives keep their weight.
/// The result is renormalized to sum to one.
inline ExampleDistribution update_example_weights(const ExampleDistribution& dist, const VoteMatrix& v,
                                                  const PosteriorWeights& q) {
    if (dist.size() != v.examples()) throw Error(Errc::length_mismatch, "update_example_weights: distribution length");
    if (q.size() != v.classifiers()) throw Error(Errc::length_mismatch, "update_example_weights: weights length");
    std::vector<double> w(dist.size());
    double z = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = v.label(i) == kPositive ? dist[i] * std::exp(-v.margin(i, q)) : dist[i];
        z += w[i];
    }
    if (!(z > 0.0)) throw Error(Errc::degenerate_denominator, "update_example_weights: all weights vanished");
    for (auto& x : w) x /= z;
    return ExampleDistribution(std::move(w));
}

/// Fits Q on fixed base classifiers: uniform vote, one positive reweighting
/// pass, then C-Bound maximization from the uniform posterior.
inline TrainedModel learn_posterior(std::vector<Tree> trees, const Dataset& train, const DamviConfig& config) {
    const std::size_t k = trees.size();
    const auto uniform_q = PosteriorWeights::uniform(k);
    const auto votes = vote_matrix(trees, train);
    const auto dist = update_example_weights(ExampleDistribution::uniform(train.size()), votes, uniform_q);
    const auto r = risk_vector(votes, dist);
    const auto m = disagreement_matrix(votes, dist);

    auto opt_config = config.optimizer;
    opt_config.seed = derive_seed(config.seed, detail::kOptimizerStream);
    const auto result = optimize_weights(r, m, uniform_q, opt_config);

    TrainingReport report;
    report.objective = result.objective;
    report.uniform_objective = result.initial_objective;
    report.cbound = 1.0 - result.objective;
    report.gibbs_risk = gibbs_risk(result.weights, r);
    report.disagreement = expected_disagreement(result.weights, m);
    report.optimizer_iterations = result.iterations;
    report.optimizer_status = result.status;
    report.bound_applicable = report.gibbs_risk <= 0.5 && result.status != OptimizerStatus::degenerate;
    return {Ensemble(std::move(trees), result.weights), report};
}

/// Full DAMVI training: K bootstrap trees, positive reweighting, C-Bound weights.
inline TrainedModel train_damvi(const Dataset& train, const DamviConfig& config = {}) {
    detail::require_trainable(train, config);
    return learn_posterior(detail::bootstrap_trees(train, config), train, config);
}

/// Same trees as train_damvi with the same config, uniform weights.
inline Ensemble train_uniform_bagging(const Dataset& train, const DamviConfig& config = {}) {
    detail::require_trainable(train, config);
    return Ensemble(detail::bootstrap_trees(train, config), PosteriorWeights::uniform(config.classifiers));
}

/// Uniform bagging on a randomly oversampled training set.
inline Ensemble train_ros_bagging(const Dataset& train, const DamviConfig& config = {}) {
    detail::require_trainable(train, config);
    const auto balanced = random_oversample(train, derive_seed(config.seed, detail::kResampleStream));
    return Ensemble(detail::bootstrap_trees(balanced, config), PosteriorWeights::uniform(config.classifiers));
}

/// Uniform bagging on a SMOTE-balanced training set.
inline Ensemble train_smote_bagging(const Dataset& train, const DamviConfig& config = {},
                                    std::size_t k_neighbors = kDefaultSmoteNeighbors) {
    detail::require_trainable(train, config);
    const auto balanced = smote(train, k_neighbors, derive_seed(config.seed, detail::kResampleStream));
    return Ensemble(detail::bootstrap_trees(balanced, config), PosteriorWeights::uniform(config.classifiers));
}

/// Each member undersamples the majority class to a balanced set and fits a
/// tree on a full-size bootstrap of it.
inline Ensemble train_balanced_bagging(const Dataset& train, const DamviConfig& config = {}) {
    detail::require_trainable(train, config);
    auto trees = detail::bagged_trees(train, config, [&](const Dataset& ds, std::size_t k) {
        const auto balanced = random_undersample(ds, derive_seed(config.seed, detail::kResampleStream, k));
        return bootstrap_sample(balanced, 1.0, derive_seed(config.seed, detail::kBootstrapStream, k));
    });
    return Ensemble(std::move(trees), PosteriorWeights::uniform(config.classifiers));
}

} // namespace damvi
