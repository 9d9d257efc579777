// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
// gating criterion fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "damvi/cbound.hpp"
#include "damvi/damvi.hpp"
#include "damvi/experiment.hpp"
#include "damvi/metrics.hpp"
#include "random_instances.hpp"

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
    bool skipped = false;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

std::vector<damvi::testing::Instance> instance_set() {
    std::mt19937_64 gen(20240601);
    std::vector<damvi::testing::Instance> out;
    for (int i = 0; i < 3000; ++i) out.push_back(damvi::testing::random_instance(gen));
    return out;
}

Outcome cbound_validity(const std::vector<damvi::testing::Instance>& set) {
    const auto t0 = Clock::now();
    std::size_t checked = 0, violations = 0;
    double worst = -1.0;
    for (const auto& inst : set) {
        const auto r = damvi::risk_vector(inst.votes, inst.dist);
        const auto m = damvi::disagreement_matrix(inst.votes, inst.dist);
        const double g = damvi::gibbs_risk(inst.q, r);
        const double d = damvi::expected_disagreement(inst.q, m);
        if (g > 0.5 || d >= 0.5 - 1e-9) continue;
        ++checked;
        const double gap = damvi::empirical_mv_risk(inst.votes, inst.q, inst.dist) - damvi::cbound_value(inst.q, r, m);
        worst = std::max(worst, gap);
        violations += gap > 1e-9;
    }
    const double secs = seconds_since(t0);
    return {checked >= 1000 && violations == 0 && secs < 5.0,
            fmt("%.0f eligible instances, %.0f violations, max(risk - bound) = %.3g, %.2f s", double(checked),
                double(violations), worst, secs)};
}

Outcome moment_identities(const std::vector<damvi::testing::Instance>& set) {
    double worst_g = 0, worst_d = 0;
    for (const auto& inst : set) {
        const auto mm = damvi::margin_moments(inst.q, inst.votes, inst.dist);
        worst_g = std::max(worst_g, std::abs(damvi::gibbs_risk(inst.q, damvi::risk_vector(inst.votes, inst.dist)) -
                                             (1.0 - mm.mu1) / 2.0));
        worst_d = std::max(worst_d, std::abs(damvi::expected_disagreement(
                                                 inst.q, damvi::disagreement_matrix(inst.votes, inst.dist)) -
                                             (1.0 - mm.mu2) / 2.0));
    }
    return {worst_g < 1e-12 && worst_d < 1e-12,
            fmt("max |G - (1-mu1)/2| = %.3g, max |d - (1-mu2)/2| = %.3g", worst_g, worst_d)};
}

Outcome factor_two(const std::vector<damvi::testing::Instance>& set) {
    double worst = -1.0;
    for (const auto& inst : set) {
        const double mv = damvi::empirical_mv_risk(inst.votes, inst.q, inst.dist);
        const double g = damvi::gibbs_risk(inst.q, damvi::risk_vector(inst.votes, inst.dist));
        worst = std::max(worst, mv - 2.0 * g);
    }
    return {worst <= 1e-12, fmt("%.0f instances, max(R(B_Q) - 2 G) = %.3g", double(set.size()), worst)};
}

Outcome gradient_check() {
    std::mt19937_64 gen(7);
    std::size_t done = 0;
    double worst = 0.0;
    while (done < 100) {
        const auto inst = damvi::testing::random_instance(gen, 50, 8, 2);
        const auto r = damvi::risk_vector(inst.votes, inst.dist);
        const auto m = damvi::disagreement_matrix(inst.votes, inst.dist);
        const auto q = inst.q.vector();
        if (1.0 - 2.0 * damvi::expected_disagreement(inst.q, m) < 0.05) continue;
        if (*std::min_element(q.begin(), q.end()) < 1e-4) continue;
        const auto g = damvi::cbound_gradient(inst.q, r, m);
        const double h = 1e-6;
        double diff = 0.0, scale = 0.0;
        for (std::size_t k = 0; k < q.size(); ++k) {
            auto up = q, down = q;
            up[k] += h;
            down[k] -= h;
            const double fd =
                (damvi::cbound_objective(up, r, m) - damvi::cbound_objective(down, r, m)) / (2.0 * h);
            diff = std::max(diff, std::abs(fd - g[k]));
            scale = std::max(scale, std::abs(fd));
        }
        worst = std::max(worst, diff / std::max(1.0, scale));
        ++done;
    }
    return {worst <= 1e-5, fmt("100 interior points, max relative error %.3g", worst)};
}

Outcome optimizer_vs_grid() {
    const auto t0 = Clock::now();
    std::mt19937_64 gen(99);
    double worst = 1e300;
    std::size_t instances = 0;
    for (std::size_t k = 2; k <= 5; ++k) {
        for (int t = 0; t < 50; ++t) {
            const auto inst = damvi::testing::random_instance(gen, 50, k, k);
            const auto r = damvi::risk_vector(inst.votes, inst.dist);
            const auto m = damvi::disagreement_matrix(inst.votes, inst.dist);
            damvi::OptimizerConfig cfg;
            cfg.seed = static_cast<std::uint64_t>(t);
            const auto res = damvi::optimize_weights(r, m, damvi::PosteriorWeights::uniform(k), cfg);
            const double grid = damvi::testing::grid_max_objective(r, m, 50);
            if (grid < 0) continue; // no feasible grid point
            worst = std::min(worst, res.objective - grid);
            ++instances;
        }
    }
    const double secs = seconds_since(t0);
    return {worst >= -1e-3 && secs < 30.0,
            fmt("%.0f instances, min(optimizer - grid) = %.3g, %.2f s", double(instances), worst, secs)};
}

Outcome step7_contract() {
    std::mt19937_64 gen(5);
    double sum_err = 0, pos_err = 0, neg_err = 0;
    for (int t = 0; t < 1000; ++t) {
        const auto inst = damvi::testing::random_instance(gen);
        const auto d = damvi::update_example_weights(inst.dist, inst.votes, inst.q);
        double s = 0;
        for (double x : d) s += x;
        sum_err = std::max(sum_err, std::abs(s - 1.0));
        const auto n = inst.votes.examples();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const int yi = inst.votes.label(i);
                if (yi != inst.votes.label(j) || d[j] <= 0.0) continue;
                if (yi > 0) {
                    const double want = inst.dist[i] * std::exp(-inst.votes.margin(i, inst.q)) /
                                        (inst.dist[j] * std::exp(-inst.votes.margin(j, inst.q)));
                    pos_err = std::max(pos_err, std::abs(d[i] / d[j] - want) / std::max(1.0, want));
                } else {
                    const double want = inst.dist[i] / inst.dist[j];
                    neg_err = std::max(neg_err, std::abs(d[i] / d[j] - want) / std::max(1.0, want));
                }
            }
    }
    return {sum_err <= 1e-12 && pos_err <= 1e-12 && neg_err <= 1e-12,
            fmt("|sum - 1| = %.3g, positive ratio err %.3g, negative ratio err %.3g", sum_err, pos_err, neg_err)};
}

std::pair<double, double> method_means(const std::vector<damvi::RunRecord>& runs, damvi::Method m) {
    double f1 = 0, ap = 0, count = 0;
    for (const auto& r : runs)
        if (r.method == m) {
            f1 += r.f1;
            ap += r.average_precision;
            ++count;
        }
    return {f1 / count, ap / count};
}

damvi::ExperimentConfig desk_config() {
    damvi::ExperimentConfig cfg;
    cfg.repetitions = 5;
    cfg.test_fraction = 0.3;
    cfg.methods = {damvi::Method::damvi, damvi::Method::uniform_bagging};
    cfg.damvi.classifiers = 50;
    cfg.base_seed = 0;
    return cfg;
}

Outcome desk_scale() {
    const auto t0 = Clock::now();
    const auto ds = damvi::make_synthetic(5000, 10, 0.02, 2.0, 0);
    const auto runs = damvi::run_repetitions(ds, desk_config());
    const double secs = seconds_since(t0);
    const auto [df1, dap] = method_means(runs, damvi::Method::damvi);
    const auto [uf1, uap] = method_means(runs, damvi::Method::uniform_bagging);
    return {df1 >= uf1 && dap >= uap && secs < 120.0,
            fmt("F1 damvi %.4f vs uniform %.4f, AP damvi %.4f vs uniform %.4f", df1, uf1, dap, uap) +
                fmt(", %.1f s", secs)};
}

Outcome ir_sweep() {
    const auto ds = damvi::make_synthetic(5000, 10, 0.02, 2.0, 0);
    const std::vector<double> grid{0.005, 0.01, 0.02, 0.04};
    const auto sweep = damvi::run_sweep(ds, desk_config(), grid);
    bool ok = true;
    std::string detail;
    for (double ir : grid) {
        std::vector<damvi::RunRecord> block;
        for (const auto& s : sweep)
            if (s.ir == ir) block.push_back(s.run);
        const double d = method_means(block, damvi::Method::damvi).first;
        const double u = method_means(block, damvi::Method::uniform_bagging).first;
        ok = ok && d >= u;
        detail += fmt("IR %.3f: F1 %.4f vs %.4f; ", ir, d, u);
    }
    return {ok, detail};
}

Outcome mammography() {
    const char* path = std::getenv("DAMVI_MAMMOGRAPHY_CSV");
    if (!path) return {false, "set DAMVI_MAMMOGRAPHY_CSV to a local copy to run", true};
    const char* column = std::getenv("DAMVI_MAMMOGRAPHY_LABEL");
    const char* positive = std::getenv("DAMVI_MAMMOGRAPHY_POSITIVE");
    const auto ds = damvi::load_csv(path, column ? column : "class", positive ? positive : "1");
    auto cfg = desk_config();
    cfg.damvi.classifiers = 100;
    cfg.methods = {damvi::Method::damvi};
    const auto [f1, ap] = method_means(damvi::run_repetitions(ds, cfg), damvi::Method::damvi);
    return {std::abs(f1 - 0.6661) <= 0.08 && std::abs(ap - 0.7142) <= 0.08,
            fmt("F1 %.4f (target 0.6661 +/- 0.08), AP %.4f (target 0.7142 +/- 0.08)", f1, ap)};
}

// Exhaustive all-thresholds AP: for each distinct score t, predict positive
// when score >= t, then sum precision times recall increments.
double brute_force_ap(const std::vector<double>& scores, const std::vector<int>& labels) {
    std::vector<double> thresholds(scores);
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    double positives = 0;
    for (int y : labels) positives += y > 0;
    double ap = 0, prev_recall = 0;
    for (double t : thresholds) {
        double tp = 0, predicted = 0;
        for (std::size_t i = 0; i < scores.size(); ++i)
            if (scores[i] >= t) {
                ++predicted;
                tp += labels[i] > 0;
            }
        const double recall = tp / positives;
        ap += (recall - prev_recall) * (tp / predicted);
        prev_recall = recall;
    }
    return ap;
}

// Two-sided exact rank-sum p-value by enumerating every subset of the pooled
// sample with |a| members.
double brute_force_rank_sum(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::size_t n = pooled.size();
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n; ++i) {
        double less = 0, equal = 0;
        for (double x : pooled) {
            less += x < pooled[i];
            equal += x == pooled[i];
        }
        rank[i] = less + (equal + 1.0) / 2.0;
    }
    const double center = static_cast<double>(a.size()) * static_cast<double>(n + 1) / 2.0;
    double observed = 0;
    for (std::size_t i = 0; i < a.size(); ++i) observed += rank[i];
    const double target = std::abs(observed - center);
    double extreme = 0, total = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<std::size_t>(std::popcount(mask)) != a.size()) continue;
        double s = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1u) s += rank[i];
        ++total;
        extreme += std::abs(s - center) >= target - 1e-9;
    }
    return extreme / total;
}

Outcome metric_oracles() {
    // AP: every label pattern for n <= 10 (at least one positive), each with a
    // fixed family of score vectors that includes tie-heavy ones.
    std::size_t ap_cases = 0;
    double ap_worst = 0;
    for (std::size_t n = 1; n <= 10; ++n)
        for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
            std::vector<int> labels(n);
            for (std::size_t i = 0; i < n; ++i) labels[i] = (mask >> i & 1u) ? 1 : -1;
            for (std::size_t levels : {1u, 2u, 3u, 10u})
                for (std::size_t stride : {1u, 3u, 7u}) {
                    std::vector<double> scores(n);
                    for (std::size_t i = 0; i < n; ++i) scores[i] = static_cast<double>((i * stride + n) % levels);
                    const double got = damvi::average_precision({scores, labels});
                    ap_worst = std::max(ap_worst, std::abs(got - brute_force_ap(scores, labels)));
                    ++ap_cases;
                }
        }

    // Rank-sum: all size splits with |a| + |b| <= 12 on tied and untied data.
    std::mt19937_64 gen(3);
    std::size_t rs_cases = 0;
    double rs_worst = 0;
    for (std::size_t na = 1; na <= 11; ++na)
        for (std::size_t nb = 1; na + nb <= 12; ++nb)
            for (int rep = 0; rep < 6; ++rep) {
                std::uniform_int_distribution<int> value(0, rep % 2 ? 4 : 1000);
                std::vector<double> a(na), b(nb);
                for (auto& x : a) x = value(gen);
                for (auto& x : b) x = value(gen) + (rep / 2);
                const auto got = damvi::wilcoxon_rank_sum(a, b);
                rs_worst = std::max(rs_worst, got.exact ? std::abs(got.p_value - brute_force_rank_sum(a, b)) : 1.0);
                ++rs_cases;
            }
    return {ap_worst <= 1e-12 && rs_worst <= 1e-12,
            fmt("AP: %.0f cases, max err %.3g; rank-sum: %.0f cases, max p err %.3g", double(ap_cases), ap_worst,
                double(rs_cases), rs_worst)};
}

} // namespace

int main() {
    const auto set = instance_set();
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
        bool gating;
    };
    const std::vector<Criterion> criteria{
        {1, "C-Bound validity", [&] { return cbound_validity(set); }, true},
        {2, "margin moment identities", [&] { return moment_identities(set); }, true},
        {3, "factor-2 bound", [&] { return factor_two(set); }, true},
        {4, "gradient check", gradient_check, true},
        {5, "optimizer vs grid oracle", optimizer_vs_grid, true},
        {6, "example reweighting contract", step7_contract, true},
        {7, "desk-scale end-to-end", desk_scale, true},
        {8, "imbalance-ratio sweep ordering", ir_sweep, true},
        {9, "Mammography spot check (non-gating)", mammography, false},
        {10, "metric oracles", metric_oracles, true},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const char* tag = o.skipped ? "SKIP" : (o.pass ? "PASS" : "FAIL");
        std::printf("[%s] %2d %s: %s\n", tag, c.id, c.name, o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass && !o.skipped && c.gating) ++failures;
    }
    std::printf("%d gating criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
