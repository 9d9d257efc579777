#pragma once

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "damvi.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "random.hpp"
#include "vote.hpp"

namespace damvi {

enum class Method { damvi, uniform_bagging, ros_bagging, smote_bagging, balanced_bagging };

inline constexpr std::string_view method_name(Method m) {
    switch (m) {
    case Method::damvi: return "damvi";
    case Method::uniform_bagging: return "uniform-bagging";
    case Method::ros_bagging: return "ros-bagging";
    case Method::smote_bagging: return "smote-bagging";
    case Method::balanced_bagging: return "balanced-bagging";
    }
    return "unknown";
}

inline Method parse_method(std::string_view name) {
    for (auto m : {Method::damvi, Method::uniform_bagging, Method::ros_bagging, Method::smote_bagging,
                   Method::balanced_bagging})
        if (method_name(m) == name) return m;
    throw Error(Errc::invalid_argument, "unknown method '" + std::string(name) + "'");
}

inline Ensemble train_method(Method m, const Dataset& train, const DamviConfig& config) {
    switch (m) {
    case Method::damvi: return train_damvi(train, config).ensemble;
    case Method::uniform_bagging: return train_uniform_bagging(train, config);
    case Method::ros_bagging: return train_ros_bagging(train, config);
    case Method::smote_bagging: return train_smote_bagging(train, config);
    case Method::balanced_bagging: return train_balanced_bagging(train, config);
    }
    throw Error(Errc::invalid_argument, "unknown method");
}

struct EvalMetrics {
    double f1 = 0.0;
    double average_precision = 0.0;
    std::size_t n = 0;
    std::size_t positive_count = 0;
};

/// F1 of the majority vote and AP of the vote margin on `ds`.
inline EvalMetrics evaluate(const Ensemble& e, const Dataset& ds) {
    if (ds.dimension() != e.dimension())
        throw Error(Errc::dimension_mismatch, "model expects " + std::to_string(e.dimension()) +
                                                  " features, dataset has " + std::to_string(ds.dimension()));
    const auto labels = ds.labels();
    EvalMetrics out;
    out.n = ds.size();
    out.positive_count = ds.positive_count();
    out.f1 = f1_score(predict_mv(e, ds), labels);
    out.average_precision = average_precision({ensemble_scores(e, ds), labels});
    return out;
}

struct ExperimentConfig {
    double test_fraction = 0.3;
    std::size_t repetitions = 5;
    std::vector<Method> methods{Method::damvi, Method::uniform_bagging};
    DamviConfig damvi;
    std::uint64_t base_seed = 0;

    void validate() const {
        if (repetitions == 0) throw Error(Errc::invalid_argument, "repetitions must be at least 1");
        if (methods.empty()) throw Error(Errc::invalid_argument, "no methods selected");
        damvi.validate();
    }

    /// Split seed of repetition r; independent of execution order and method list.
    std::uint64_t split_seed(std::size_t r) const { return derive_seed(base_seed, 10, r); }
    /// Model seed of repetition r, shared by all methods so bagging baselines see
    /// the same bootstraps as damvi.
    std::uint64_t model_seed(std::size_t r) const { return derive_seed(base_seed, 11, r); }
    std::uint64_t subsample_seed() const { return derive_seed(base_seed, 12); }
};

struct RunRecord {
    Method method = Method::damvi;
    std::size_t repetition = 0;
    double f1 = 0.0;
    double average_precision = 0.0;
};

struct MethodSummary {
    Method method = Method::damvi;
    double f1_mean = 0.0;
    double f1_std = 0.0;
    double ap_mean = 0.0;
    double ap_std = 0.0;
    std::optional<double> p_f1; ///< Wilcoxon rank-sum vs damvi; empty for damvi itself
    std::optional<double> p_ap;
};

/// `repetitions` stratified splits; every method is trained and scored on each.
inline std::vector<RunRecord> run_repetitions(const Dataset& ds, const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<RunRecord> records;
    for (std::size_t r = 0; r < cfg.repetitions; ++r) {
        const auto split = stratified_split(ds, cfg.test_fraction, cfg.split_seed(r));
        auto model_cfg = cfg.damvi;
        model_cfg.seed = cfg.model_seed(r);
        for (auto m : cfg.methods) {
            const auto metrics = evaluate(train_method(m, split.train, model_cfg), split.test);
            records.push_back({m, r, metrics.f1, metrics.average_precision});
        }
    }
    return records;
}

inline std::vector<MethodSummary> summarize(const std::vector<RunRecord>& records, const std::vector<Method>& methods) {
    auto column = [&](Method m, bool f1) {
        std::vector<double> out;
        for (const auto& rec : records)
            if (rec.method == m) out.push_back(f1 ? rec.f1 : rec.average_precision);
        return out;
    };
    const bool has_damvi = std::find(methods.begin(), methods.end(), Method::damvi) != methods.end();
    std::vector<MethodSummary> out;
    for (auto m : methods) {
        MethodSummary s;
        s.method = m;
        const auto f1 = column(m, true);
        const auto ap = column(m, false);
        s.f1_mean = mean(f1);
        s.f1_std = stddev(f1);
        s.ap_mean = mean(ap);
        s.ap_std = stddev(ap);
        if (has_damvi && m != Method::damvi && !f1.empty()) {
            s.p_f1 = wilcoxon_rank_sum(column(Method::damvi, true), f1).p_value;
            s.p_ap = wilcoxon_rank_sum(column(Method::damvi, false), ap).p_value;
        }
        out.push_back(s);
    }
    return out;
}

struct SweepRecord {
    double ir = 0.0;
    std::size_t positives = 0;
    RunRecord run;
};

/// Imbalance-ratio sweep: the dataset is subsampled to each target ratio (one
/// shared seed, so kept subsets are nested) and then run like a comparison.
inline std::vector<SweepRecord> run_sweep(const Dataset& ds, const ExperimentConfig& cfg,
                                          const std::vector<double>& ir_grid) {
    cfg.validate();
    if (ir_grid.empty()) throw Error(Errc::invalid_argument, "empty IR grid");
    std::vector<SweepRecord> out;
    for (double ir : ir_grid) {
        const auto sub = subsample_to_ratio(ds, ir, cfg.subsample_seed());
        for (const auto& rec : run_repetitions(sub, cfg)) out.push_back({ir, sub.positive_count(), rec});
    }
    return out;
}

namespace detail {

inline std::string format_real(double x) {
    std::ostringstream s;
    s << std::setprecision(17) << x;
    return s.str();
}

} // namespace detail

inline void write_runs_csv(const std::vector<RunRecord>& records, std::ostream& out) {
    out << "method,repetition,f1,ap\n";
    for (const auto& r : records)
        out << method_name(r.method) << ',' << r.repetition << ',' << detail::format_real(r.f1) << ','
            << detail::format_real(r.average_precision) << '\n';
}

inline void write_summary_csv(const std::vector<MethodSummary>& rows, std::ostream& out) {
    out << "method,f1_mean,f1_std,ap_mean,ap_std,p_f1,p_ap\n";
    for (const auto& s : rows) {
        out << method_name(s.method) << ',' << detail::format_real(s.f1_mean) << ',' << detail::format_real(s.f1_std)
            << ',' << detail::format_real(s.ap_mean) << ',' << detail::format_real(s.ap_std) << ','
            << (s.p_f1 ? detail::format_real(*s.p_f1) : "") << ',' << (s.p_ap ? detail::format_real(*s.p_ap) : "")
            << '\n';
    }
}

inline void write_sweep_csv(const std::vector<SweepRecord>& records, std::ostream& out) {
    out << "ir,method,repetition,f1,ap\n";
    for (const auto& r : records)
        out << detail::format_real(r.ir) << ',' << method_name(r.run.method) << ',' << r.run.repetition << ','
            << detail::format_real(r.run.f1) << ',' << detail::format_real(r.run.average_precision) << '\n';
}

} // namespace damvi
