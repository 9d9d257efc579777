#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "distribution.hpp"
#include "error.hpp"
#include "random.hpp"
#include "vote.hpp"

namespace damvi {

/// Guard on the C-Bound denominator 1 - 2 d(Q).
inline constexpr double kDenominatorEpsilon = 1e-9;

/// r_k: weighted error of classifier k.
class RiskVector {
public:
    explicit RiskVector(std::vector<double> r) : r_(std::move(r)) {
        for (double x : r_)
            if (!(x >= 0.0 && x <= 1.0 + 1e-12)) throw Error(Errc::invalid_argument, "risk entry outside [0,1]");
    }
    std::size_t size() const noexcept { return r_.size(); }
    double operator[](std::size_t k) const { return r_[k]; }
    std::span<const double> values() const noexcept { return r_; }

private:
    std::vector<double> r_;
};

/// m_{kk'}: weighted probability that classifiers k and k' disagree.
/// Symmetric, zero diagonal, entries in [0,1]. Stored dense row-major.
class DisagreementMatrix {
public:
    DisagreementMatrix(std::vector<double> m, std::size_t k) : m_(std::move(m)), k_(k) {
        if (m_.size() != k_ * k_) throw Error(Errc::length_mismatch, "disagreement matrix is not K x K");
        for (std::size_t a = 0; a < k_; ++a) {
            if (m_[a * k_ + a] != 0.0) throw Error(Errc::invalid_argument, "disagreement diagonal must be zero");
            for (std::size_t b = 0; b < k_; ++b) {
                const double x = m_[a * k_ + b];
                if (!(x >= 0.0 && x <= 1.0 + 1e-12))
                    throw Error(Errc::invalid_argument, "disagreement entry outside [0,1]");
                if (x != m_[b * k_ + a]) throw Error(Errc::invalid_argument, "disagreement matrix not symmetric");
            }
        }
    }

    std::size_t size() const noexcept { return k_; }
    double operator()(std::size_t a, std::size_t b) const { return m_[a * k_ + b]; }
    std::span<const double> row(std::size_t a) const { return {m_.data() + a * k_, k_}; }

private:
    std::vector<double> m_;
    std::size_t k_;
};

namespace detail {

inline void require_same(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw Error(Errc::length_mismatch, std::string(what) + ": length mismatch (" + std::to_string(a) +
                                                       " vs " + std::to_string(b) + ")");
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline std::vector<double> mat_vec(const DisagreementMatrix& m, std::span<const double> q) {
    std::vector<double> out(m.size());
    for (std::size_t a = 0; a < m.size(); ++a) out[a] = dot(m.row(a), q);
    return out;
}

} // namespace detail

inline RiskVector risk_vector(const VoteMatrix& v, const ExampleDistribution& dist) {
    detail::require_same(v.examples(), dist.size(), "risk_vector");
    std::vector<double> r(v.classifiers(), 0.0);
    for (std::size_t i = 0; i < v.examples(); ++i) {
        const auto row = v.row(i);
        for (std::size_t k = 0; k < r.size(); ++k)
            if (row[k] != v.label(i)) r[k] += dist[i];
    }
    for (auto& x : r) x = std::min(x, 1.0);
    return RiskVector(std::move(r));
}

inline DisagreementMatrix disagreement_matrix(const VoteMatrix& v, const ExampleDistribution& dist) {
    detail::require_same(v.examples(), dist.size(), "disagreement_matrix");
    const std::size_t k = v.classifiers();
    std::vector<double> m(k * k, 0.0);
    for (std::size_t i = 0; i < v.examples(); ++i) {
        const auto row = v.row(i);
        const double w = dist[i];
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = a + 1; b < k; ++b)
                if (row[a] != row[b]) m[a * k + b] += w;
    }
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a + 1; b < k; ++b) {
            m[a * k + b] = std::min(m[a * k + b], 1.0);
            m[b * k + a] = m[a * k + b];
        }
    return DisagreementMatrix(std::move(m), k);
}

/// Sum_k q_k r_k.
inline double gibbs_risk(const PosteriorWeights& q, const RiskVector& r) {
    detail::require_same(q.size(), r.size(), "gibbs_risk");
    return detail::dot(q.values(), r.values());
}

/// q^T m q.
inline double expected_disagreement(const PosteriorWeights& q, const DisagreementMatrix& m) {
    detail::require_same(q.size(), m.size(), "expected_disagreement");
    return detail::dot(q.values(), detail::mat_vec(m, q.values()));
}

/// (1 - 2 G)^2 / (1 - 2 d), the quantity maximized when learning Q.
/// Works on raw vectors so the optimizer can evaluate off-simplex trial points.
inline double cbound_objective(std::span<const double> q, const RiskVector& r, const DisagreementMatrix& m) {
    detail::require_same(q.size(), r.size(), "cbound_objective");
    detail::require_same(q.size(), m.size(), "cbound_objective");
    const double numerator = 1.0 - 2.0 * detail::dot(q, r.values());
    const double denominator = 1.0 - 2.0 * detail::dot(q, detail::mat_vec(m, q));
    if (denominator < kDenominatorEpsilon)
        throw Error(Errc::degenerate_denominator, "C-Bound denominator 1 - 2d below guard");
    return numerator * numerator / denominator;
}

inline double cbound_objective(const PosteriorWeights& q, const RiskVector& r, const DisagreementMatrix& m) {
    return cbound_objective(q.values(), r, m);
}

/// 1 - (1 - 2 G)^2 / (1 - 2 d). Only meaningful when G <= 1/2.
inline double cbound_value(const PosteriorWeights& q, const RiskVector& r, const DisagreementMatrix& m) {
    const double g = gibbs_risk(q, r);
    if (g > 0.5 + 1e-12)
        throw Error(Errc::bound_inapplicable, "C-Bound inapplicable: Gibbs risk " + std::to_string(g) + " > 1/2");
    return 1.0 - cbound_objective(q, r, m);
}

/// Gradient of (1 - 2 r.q)^2 / (1 - 2 q.m.q) with respect to q (unconstrained).
inline std::vector<double> cbound_gradient(std::span<const double> q, const RiskVector& r,
                                           const DisagreementMatrix& m) {
    detail::require_same(q.size(), r.size(), "cbound_gradient");
    detail::require_same(q.size(), m.size(), "cbound_gradient");
    const auto mq = detail::mat_vec(m, q);
    const double lin = 1.0 - 2.0 * detail::dot(q, r.values());
    const double den = 1.0 - 2.0 * detail::dot(q, mq);
    if (den < kDenominatorEpsilon)
        throw Error(Errc::degenerate_denominator, "C-Bound denominator 1 - 2d below guard");
    const double num = lin * lin;
    std::vector<double> g(q.size());
    for (std::size_t k = 0; k < q.size(); ++k)
        g[k] = (-4.0 * lin * r[k] * den + 4.0 * num * mq[k]) / (den * den);
    return g;
}

inline std::vector<double> cbound_gradient(const PosteriorWeights& q, const RiskVector& r,
                                           const DisagreementMatrix& m) {
    return cbound_gradient(q.values(), r, m);
}

/// Euclidean projection onto the probability simplex (sort and threshold).
inline PosteriorWeights project_simplex(std::span<const double> v) {
    if (v.empty()) throw Error(Errc::invalid_argument, "project_simplex: empty vector");
    std::vector<double> u(v.begin(), v.end());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cumulative += u[j];
        const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0) theta = t;
    }
    std::vector<double> w(v.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        w[k] = std::max(v[k] - theta, 0.0);
        if (w[k] < 1e-12) w[k] = 0.0;
        sum += w[k];
    }
    if (sum <= 0.0) {
        // Only reachable through non-finite input; fall back to the largest entry.
        std::fill(w.begin(), w.end(), 0.0);
        w[static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin())] = 1.0;
        sum = 1.0;
    }
    for (auto& x : w) x /= sum;
    return PosteriorWeights(std::move(w));
}

enum class OptimizerStatus {
    converged,      ///< improvement or movement fell below tol
    max_iterations, ///< iteration budget exhausted
    trivial,        ///< K = 1, nothing to optimize
    degenerate,     ///< every start hit the denominator guard; init returned
};

inline const char* to_string(OptimizerStatus s) {
    switch (s) {
    case OptimizerStatus::converged: return "converged";
    case OptimizerStatus::max_iterations: return "max_iterations";
    case OptimizerStatus::trivial: return "trivial";
    case OptimizerStatus::degenerate: return "degenerate";
    }
    return "unknown";
}

struct TraceRow {
    std::size_t start = 0; ///< 0 = init, 1.. = random restarts
    std::size_t iteration = 0;
    double objective = 0.0;
    double step = 0.0;
};

struct OptimizerConfig {
    double tol = 1e-10;
    std::size_t max_iter = 1000;
    std::size_t restarts = 4;
    bool vertex_start = true; ///< also ascend from the best single classifier
    double initial_step = 1.0;
    double shrink = 0.5;
    double armijo = 1e-4;
    double min_step = 1e-12;
    std::uint64_t seed = 0;
    std::vector<TraceRow>* trace = nullptr;
};

struct OptimizerResult {
    PosteriorWeights weights;
    double objective = 0.0;
    double initial_objective = 0.0;
    std::size_t iterations = 0; ///< summed over all starts
    OptimizerStatus status = OptimizerStatus::converged;
};

namespace detail {

struct AscentRun {
    std::vector<double> q;
    double objective = -std::numeric_limits<double>::infinity();
    std::size_t iterations = 0;
    bool feasible = false;
    bool converged = false;
};

inline double safe_objective(std::span<const double> q, const RiskVector& r, const DisagreementMatrix& m) {
    const auto mq = mat_vec(m, q);
    const double den = 1.0 - 2.0 * dot(q, mq);
    if (!(den >= kDenominatorEpsilon)) return -std::numeric_limits<double>::infinity();
    const double lin = 1.0 - 2.0 * dot(q, r.values());
    return lin * lin / den;
}

/// Projected gradient ascent with Armijo backtracking along the projection arc.
inline AscentRun projected_ascent(std::vector<double> q, const RiskVector& r, const DisagreementMatrix& m,
                                  const OptimizerConfig& cfg, std::size_t start) {
    AscentRun run;
    run.objective = safe_objective(q, r, m);
    if (!std::isfinite(run.objective)) {
        run.q = std::move(q);
        return run;
    }
    run.feasible = true;
    if (cfg.trace) cfg.trace->push_back({start, 0, run.objective, 0.0});

    for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
        run.iterations = it;
        const auto grad = cbound_gradient(q, r, m);
        std::vector<double> trial(q.size());
        double step = cfg.initial_step;
        bool accepted = false;
        std::vector<double> next;
        double next_obj = 0.0;
        while (step >= cfg.min_step) {
            for (std::size_t k = 0; k < q.size(); ++k) trial[k] = q[k] + step * grad[k];
            next = project_simplex(trial).vector();
            next_obj = safe_objective(next, r, m);
            double predicted = 0.0;
            for (std::size_t k = 0; k < q.size(); ++k) predicted += grad[k] * (next[k] - q[k]);
            if (std::isfinite(next_obj) && next_obj >= run.objective + cfg.armijo * predicted) {
                accepted = true;
                break;
            }
            step *= cfg.shrink;
        }
        if (!accepted) {
            run.converged = true;
            break;
        }
        double movement = 0.0;
        for (std::size_t k = 0; k < q.size(); ++k) movement = std::max(movement, std::abs(next[k] - q[k]));
        const double improvement = next_obj - run.objective;
        q = std::move(next);
        run.objective = next_obj;
        if (cfg.trace) cfg.trace->push_back({start, it, run.objective, step});
        if (improvement < cfg.tol || movement < cfg.tol) {
            run.converged = true;
            break;
        }
    }
    run.q = std::move(q);
    return run;
}

inline std::vector<double> dirichlet_one(std::size_t k, Rng& rng) {
    // Normalized Exp(1) draws are Dirichlet(1, ..., 1).
    std::vector<double> out(k);
    double sum = 0.0;
    for (auto& x : out) {
        x = -std::log(1.0 - uniform_unit(rng));
        sum += x;
    }
    for (auto& x : out) x /= sum;
    return out;
}

} // namespace detail

/// Maximizes (1 - 2G)^2 / (1 - 2d) over the simplex from `init`, from
/// `config.restarts` Dirichlet(1) starting points and, if enabled, from the best
/// single-classifier vertex; returns the best feasible end point. The result
/// never scores below `init`.
inline OptimizerResult optimize_weights(const RiskVector& r, const DisagreementMatrix& m,
                                        const PosteriorWeights& init, const OptimizerConfig& config = {}) {
    detail::require_same(r.size(), m.size(), "optimize_weights");
    detail::require_same(r.size(), init.size(), "optimize_weights");
    if (!(config.shrink > 0.0 && config.shrink < 1.0) || config.initial_step <= 0.0)
        throw Error(Errc::invalid_argument, "optimize_weights: invalid step policy");

    const double init_obj = detail::safe_objective(init.values(), r, m);
    if (init.size() == 1) return {init, init_obj, init_obj, 0, OptimizerStatus::trivial};

    auto best = detail::projected_ascent(init.vector(), r, m, config, 0);
    std::size_t iterations = best.iterations;
    for (std::size_t s = 1; s <= config.restarts; ++s) {
        auto rng = make_rng(derive_seed(config.seed, s));
        auto run = detail::projected_ascent(detail::dirichlet_one(r.size(), rng), r, m, config, s);
        iterations += run.iterations;
        if (run.feasible && (!best.feasible || run.objective > best.objective)) best = std::move(run);
    }
    if (config.vertex_start) {
        // At vertex k the objective is (1 - 2 r_k)^2 since m has a zero diagonal.
        std::size_t top = 0;
        for (std::size_t k = 1; k < r.size(); ++k)
            if (std::abs(1.0 - 2.0 * r[k]) > std::abs(1.0 - 2.0 * r[top])) top = k;
        std::vector<double> vertex(r.size(), 0.0);
        vertex[top] = 1.0;
        auto run = detail::projected_ascent(std::move(vertex), r, m, config, config.restarts + 1);
        iterations += run.iterations;
        if (run.feasible && (!best.feasible || run.objective > best.objective)) best = std::move(run);
    }

    if (!best.feasible || !(best.objective >= init_obj)) {
        const auto status = best.feasible ? OptimizerStatus::converged : OptimizerStatus::degenerate;
        return {init, init_obj, init_obj, iterations, status};
    }
    const auto status = best.converged ? OptimizerStatus::converged : OptimizerStatus::max_iterations;
    return {PosteriorWeights(std::move(best.q)), best.objective, init_obj, iterations, status};
}

struct MarginMoments {
    double mu1 = 0.0;
    double mu2 = 0.0;
    double variance = 0.0;
};

/// First and second moments of the margin y * Sum_k q_k h_k(x) under `dist`.
inline MarginMoments margin_moments(const PosteriorWeights& q, const VoteMatrix& v, const ExampleDistribution& dist) {
    detail::require_same(q.size(), v.classifiers(), "margin_moments");
    detail::require_same(dist.size(), v.examples(), "margin_moments");
    MarginMoments out;
    for (std::size_t i = 0; i < v.examples(); ++i) {
        const double s = v.score(i, q);
        out.mu1 += dist[i] * v.label(i) * s;
        out.mu2 += dist[i] * s * s;
    }
    out.variance = out.mu2 - out.mu1 * out.mu1;
    return out;
}

} // namespace damvi
