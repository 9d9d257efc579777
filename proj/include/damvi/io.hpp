#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "damvi.hpp"
#include "error.hpp"
#include "tree.hpp"
#include "vote.hpp"

namespace damvi {

inline constexpr int kModelFormatVersion = 1;
inline constexpr int kReportFormatVersion = 1;

using Json = nlohmann::json;

namespace detail {

inline Json node_to_json(const Tree& tree, std::size_t at) {
    const auto& n = tree.nodes()[at];
    if (n.is_leaf()) return Json{{"kind", "leaf"}, {"label", n.label}, {"positive_fraction", n.positive_fraction}};
    return Json{{"kind", "split"},
                {"feature", n.feature},
                {"threshold", n.threshold},
                {"positive_fraction", n.positive_fraction},
                {"left", node_to_json(tree, static_cast<std::size_t>(n.left))},
                {"right", node_to_json(tree, static_cast<std::size_t>(n.right))}};
}

inline std::int32_t node_from_json(const Json& j, std::vector<TreeNode>& out) {
    const auto self = static_cast<std::int32_t>(out.size());
    out.emplace_back();
    TreeNode node;
    const auto kind = j.at("kind").get<std::string>();
    node.positive_fraction = j.value("positive_fraction", 0.0);
    if (kind == "leaf") {
        node.label = j.at("label").get<int>();
    } else if (kind == "split") {
        node.feature = j.at("feature").get<int>();
        if (node.feature < 0) throw Error(Errc::parse_error, "model: negative split feature");
        node.threshold = j.at("threshold").get<double>();
        node.label = node.positive_fraction >= 0.5 ? kPositive : kNegative;
        node.left = node_from_json(j.at("left"), out);
        node.right = node_from_json(j.at("right"), out);
    } else {
        throw Error(Errc::parse_error, "model: unknown tree node kind '" + kind + "'");
    }
    out[static_cast<std::size_t>(self)] = node;
    return self;
}

template <class F>
auto parse_guarded(F&& f) {
    try {
        return f();
    } catch (const Json::exception& e) {
        throw Error(Errc::parse_error, std::string("malformed JSON: ") + e.what());
    }
}

} // namespace detail

inline Json tree_to_json(const Tree& tree) { return detail::node_to_json(tree, 0); }

inline Tree tree_from_json(const Json& j, std::size_t dimension) {
    return detail::parse_guarded([&] {
        std::vector<TreeNode> nodes;
        detail::node_from_json(j, nodes);
        return Tree(std::move(nodes), dimension);
    });
}

inline Json ensemble_to_json(const Ensemble& e) {
    Json trees = Json::array();
    for (const auto& t : e.classifiers()) trees.push_back(tree_to_json(t));
    return Json{{"format_version", kModelFormatVersion},
                {"dimension", e.dimension()},
                {"weights", e.weights().vector()},
                {"trees", std::move(trees)}};
}

inline Ensemble ensemble_from_json(const Json& j) {
    return detail::parse_guarded([&] {
        const auto version = j.at("format_version").get<int>();
        if (version != kModelFormatVersion)
            throw Error(Errc::parse_error, "model: unsupported format_version " + std::to_string(version));
        const auto dim = j.at("dimension").get<std::size_t>();
        std::vector<Tree> trees;
        for (const auto& t : j.at("trees")) trees.push_back(tree_from_json(t, dim));
        return Ensemble(std::move(trees), PosteriorWeights(j.at("weights").get<std::vector<double>>()));
    });
}

inline Json report_to_json(const TrainingReport& r) {
    return Json{{"format_version", kReportFormatVersion},
                {"cbound", r.cbound},
                {"objective", r.objective},
                {"uniform_objective", r.uniform_objective},
                {"gibbs_risk", r.gibbs_risk},
                {"disagreement", r.disagreement},
                {"optimizer_iterations", r.optimizer_iterations},
                {"optimizer_status", to_string(r.optimizer_status)},
                {"bound_applicable", r.bound_applicable}};
}

inline void write_json_file(const Json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::missing_file, "cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::missing_file, "cannot open '" + path + "'");
    return detail::parse_guarded([&] { return Json::parse(in); });
}

inline void save_ensemble(const Ensemble& e, const std::string& path) { write_json_file(ensemble_to_json(e), path); }
inline Ensemble load_ensemble(const std::string& path) { return ensemble_from_json(read_json_file(path)); }

} // namespace damvi
