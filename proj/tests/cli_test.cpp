#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "damvi/experiment.hpp"
#include "damvi/io.hpp"

namespace {

namespace fs = std::filesystem;

const std::string kSynthetic = "n=400,d=3,ir=0.1,sep=2.0,seed=7";

int run(const std::string& args) {
    const std::string cmd = std::string(DAMVI_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::path(testing::TempDir()) / ("damvi_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

TEST(Cli, TrainWritesModelAndIsDeterministic) {
    const auto a = scratch("train_a"), b = scratch("train_b");
    ASSERT_EQ(run("train --synthetic " + kSynthetic + " --k 10 --seed 3 --out " + a.string()), 0);
    ASSERT_EQ(run("train --synthetic " + kSynthetic + " --k 10 --seed 3 --out " + b.string()), 0);

    const auto model = damvi::read_json_file((a / "model.json").string());
    EXPECT_EQ(model.at("trees").size(), 10u);
    const auto w = model.at("weights").get<std::vector<double>>();
    ASSERT_EQ(w.size(), 10u);
    EXPECT_NO_THROW(damvi::PosteriorWeights{w});
    EXPECT_EQ(slurp(a / "model.json"), slurp(b / "model.json"));
    EXPECT_EQ(slurp(a / "report.json"), slurp(b / "report.json"));
    EXPECT_TRUE(damvi::read_json_file((a / "report.json").string()).contains("format_version"));
}

TEST(Cli, EvaluateMatchesLibrary) {
    const auto dir = scratch("evaluate");
    const auto data = dir / "data.csv";
    const auto ds = damvi::make_synthetic(300, 2, 0.15, 1.5, 4);
    {
        std::ofstream out(data);
        damvi::write_csv(ds, out);
    }
    ASSERT_EQ(run("train --data " + data.string() + " --k 5 --out " + dir.string()), 0);
    ASSERT_EQ(run("evaluate --data " + data.string() + " --model " + (dir / "model.json").string() + " --out " +
                  (dir / "metrics.json").string() + " --pr-curve " + (dir / "pr.csv").string()),
              0);
    const auto j = damvi::read_json_file((dir / "metrics.json").string());
    const auto lib = damvi::evaluate(damvi::load_ensemble((dir / "model.json").string()),
                                     damvi::load_csv(data.string(), "label", "1"));
    EXPECT_EQ(j.at("f1").get<double>(), lib.f1);
    EXPECT_EQ(j.at("average_precision").get<double>(), lib.average_precision);
    EXPECT_GE(lib.f1, 0.0);
    EXPECT_LE(lib.f1, 1.0);
    EXPECT_EQ(j.at("n").get<std::size_t>(), 300u);
    EXPECT_EQ(j.at("positive_count").get<std::size_t>(), ds.positive_count());
    EXPECT_EQ(slurp(dir / "pr.csv").rfind("recall,precision", 0), 0u);

    // Model trained on 2 features, data with 3.
    EXPECT_EQ(run("evaluate --synthetic n=100,d=3,ir=0.2,seed=1 --model " + (dir / "model.json").string()), 2);
}

TEST(Cli, CompareAndSweepOutputs) {
    const auto dir = scratch("compare");
    ASSERT_EQ(run("compare --synthetic " + kSynthetic + " --k 4 --reps 2 --methods damvi,uniform-bagging --out " +
                  dir.string()),
              0);
    std::istringstream results(slurp(dir / "results.csv"));
    std::string line;
    std::getline(results, line);
    EXPECT_EQ(line, "method,f1_mean,f1_std,ap_mean,ap_std,p_f1,p_ap");
    int rows = 0;
    while (std::getline(results, line)) ++rows;
    EXPECT_EQ(rows, 2);
    EXPECT_EQ(damvi::read_json_file((dir / "manifest.json").string()).at("format_version"), 1);

    const auto sweep = scratch("sweep");
    ASSERT_EQ(run("sweep --synthetic n=1000,d=3,ir=0.1,sep=2.0 --k 3 --reps 1 --methods damvi,uniform-bagging "
                  "--ir-grid 0.08,0.04 --out " +
                  sweep.string()),
              0);
    std::istringstream csv(slurp(sweep / "sweep.csv"));
    rows = 0;
    while (std::getline(csv, line)) ++rows;
    EXPECT_EQ(rows, 1 + 2 * 2);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run("train --data /nonexistent/data.csv --k 2"), 2);
    EXPECT_EQ(run("train --k 2"), 1);
    EXPECT_EQ(run("bogus"), 1);
    EXPECT_EQ(run("compare --synthetic " + kSynthetic + " --methods damvi"), 1);
    const auto dir = scratch("single_class");
    {
        std::ofstream out(dir / "one.csv");
        out << "a,label\n1,0\n2,0\n3,0\n";
    }
    EXPECT_EQ(run("train --data " + (dir / "one.csv").string() + " --k 2 --out " + dir.string()), 2);
}

} // namespace
