#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "cli.hpp"
#include "grnr/feature.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using grnr::testing::fixture_dir;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "grnr");
    std::ostringstream out;
    std::ostringstream err;
    const int code = grnr::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string model() { return (fixture_dir() / "tiny_backbone.onnx").string(); }
std::string image() { return (fixture_dir() / "fixture_texture.png").string(); }

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override { unsetenv("GRNR_MODEL"); }
    void TearDown() override { unsetenv("GRNR_MODEL"); }
};

}  // namespace

TEST_F(Cli, NoSubcommandIsUsageError) {
    EXPECT_EQ(run({}).code, grnr::cli::kExitUsage);
    EXPECT_EQ(run({"frobnicate"}).code, grnr::cli::kExitUsage);
}

TEST_F(Cli, HelpExitsZero) {
    const auto r = run({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("detect"), std::string::npos);
}

TEST_F(Cli, DetectWithoutModelOrFeaturesPrintsUsage) {
    const auto r = run({"detect", "--input", image()});
    EXPECT_EQ(r.code, grnr::cli::kExitUsage);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
    EXPECT_TRUE(r.out.empty());
}

TEST_F(Cli, DetectPrintsOneScoreAndWritesOutputs) {
    const auto dir = grnr::testing::scratch_dir("cli_detect");
    const auto heat = (dir / "heat.png").string();
    const auto raw = (dir / "raw.fmap").string();
    const auto r = run({"detect", "--input", image(), "--model", model(), "--out", heat, "--raw", raw});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto lines = lines_of(r.out);
    ASSERT_EQ(lines.size(), 1u);
    std::size_t used = 0;
    const double score = std::stod(lines[0], &used);
    EXPECT_EQ(used, lines[0].size());
    EXPECT_GT(score, 0.0);
    EXPECT_TRUE(fs::exists(heat));
    const auto map = grnr::feature::load_feature_stack(raw);
    EXPECT_EQ(map.maps[0].height, 256);
}

TEST_F(Cli, FeaturesPathMatchesModelPath) {
    const auto dir = grnr::testing::scratch_dir("cli_cross");
    const auto dump = (dir / "f.fmap").string();
    const auto ex = run({"extract", "--input", image(), "--model", model(), "--out", dump});
    ASSERT_EQ(ex.code, 0) << ex.err;
    EXPECT_NE(ex.out.find("level 2: 24x32x32"), std::string::npos);
    const auto a = run({"detect", "--input", image(), "--model", model()});
    const auto b = run({"detect", "--input", image(), "--features", dump});
    ASSERT_EQ(a.code, 0);
    ASSERT_EQ(b.code, 0);
    const double sa = std::stod(a.out);
    const double sb = std::stod(b.out);
    EXPECT_NEAR(sa, sb, 1e-4 * sa);
}

TEST_F(Cli, ModelFromEnvironment) {
    setenv("GRNR_MODEL", model().c_str(), 1);
    const auto r = run({"detect", "--input", image()});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(lines_of(r.out).size(), 1u);
}

TEST_F(Cli, ExitCodesByFailureClass) {
    EXPECT_EQ(run({"detect", "--input", "/nonexistent.png", "--model", model()}).code, grnr::cli::kExitIo);
    EXPECT_EQ(run({"detect", "--features", "/nonexistent.fmap"}).code, grnr::cli::kExitIo);
    const auto dir = grnr::testing::scratch_dir("cli_codes");
    std::ofstream(dir / "bad.onnx") << "garbage";
    EXPECT_EQ(run({"detect", "--input", image(), "--model", (dir / "bad.onnx").string()}).code,
              grnr::cli::kExitBackend);
    EXPECT_EQ(run({"detect", "--input", image(), "--model", model(), "--crop", "400"}).code, grnr::cli::kExitUsage);
    EXPECT_EQ(run({"detect", "--input", image(), "--model", model(), "--k", "0"}).code, grnr::cli::kExitUsage);
    EXPECT_EQ(run({"detect", "--input", image(), "--model", model(), "--sigma", "-1"}).code, grnr::cli::kExitUsage);
    EXPECT_EQ(run({"detect", "--input", image(), "--model", model(), "--k", "abc"}).code, grnr::cli::kExitUsage);
    EXPECT_EQ(run({"detect", "--input", image(), "--model", model(), "--levels", "2,9"}).code, grnr::cli::kExitUsage);
}

class CliSuite : public Cli {
protected:
    static void SetUpTestSuite() {
        root_ = grnr::testing::scratch_dir("cli_suite");
        const auto r = run({"synth", "--out", (root_ / "suite").string(), "--count", "4", "--size", "64"});
        ASSERT_EQ(r.code, 0) << r.err;
    }
    static std::vector<std::string> eval_args() {
        return {"eval", "--root", (root_ / "suite").string(), "--stand-in", "0", "--resize", "64", "--crop", "64",
                "--k", "8"};
    }
    static fs::path root_;
};
fs::path CliSuite::root_;

TEST_F(CliSuite, CsvHasOneRowPerCategoryPlusMean) {
    auto args = eval_args();
    args.insert(args.end(), {"--report", (root_ / "out.csv").string()});
    const auto r = run(args);
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(root_ / "out.csv");
    std::vector<std::string> rows;
    for (std::string l; std::getline(in, l);) rows.push_back(l);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[1].substr(0, 8), "checker,");
    EXPECT_EQ(rows[2].substr(0, 9), "sinusoid,");
    EXPECT_EQ(rows[3].substr(0, 5), "mean,");
}

TEST_F(CliSuite, SingleCategoryJsonIsOneObject) {
    auto args = eval_args();
    args.insert(args.end(), {"--category", "checker", "--report", (root_ / "one.json").string()});
    const auto r = run(args);
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(std::ifstream(root_ / "one.json"));
    ASSERT_TRUE(j.is_object());
    EXPECT_EQ(j["category"], "checker");
    EXPECT_EQ(j["sample_count"], 4);
}

TEST_F(CliSuite, InvalidCategoryListsAvailableOnes) {
    auto args = eval_args();
    args.insert(args.end(), {"--category", "carpet"});
    const auto r = run(args);
    EXPECT_EQ(r.code, grnr::cli::kExitDataset);
    EXPECT_NE(r.err.find("checker, sinusoid"), std::string::npos) << r.err;
}

TEST_F(CliSuite, ReportsAreReproducibleApartFromTimings) {
    auto a = eval_args();
    auto b = eval_args();
    a.insert(a.end(), {"--report", (root_ / "a.json").string()});
    b.insert(b.end(), {"--report", (root_ / "b.json").string(), "--threads", "3"});
    ASSERT_EQ(run(a).code, 0);
    ASSERT_EQ(run(b).code, 0);
    auto ja = nlohmann::json::parse(std::ifstream(root_ / "a.json"));
    auto jb = nlohmann::json::parse(std::ifstream(root_ / "b.json"));
    for (auto* j : {&ja, &jb}) {
        for (auto& e : *j) e.erase("per_image_ms");
    }
    EXPECT_EQ(ja, jb);
}

TEST_F(CliSuite, MissingRootIsDatasetError) {
    EXPECT_EQ(run({"eval", "--root", "/nonexistent", "--stand-in", "0"}).code, grnr::cli::kExitDataset);
}

TEST_F(Cli, BenchPrintsFourStages) {
    const auto dir = grnr::testing::scratch_dir("cli_bench");
    const auto dump = (dir / "f.fmap").string();
    ASSERT_EQ(run({"extract", "--input", image(), "--model", model(), "--out", dump}).code, 0);
    const auto r = run({"bench", "--features", dump, "--iters", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto lines = lines_of(r.out);
    ASSERT_EQ(lines.size(), 5u);
    for (const char* stage : {"extract", "sample_global", "regression", "postproc"}) {
        EXPECT_NE(r.out.find(stage), std::string::npos) << stage;
    }
}

TEST_F(Cli, BenchRejectsZeroIterations) {
    EXPECT_EQ(run({"bench", "--iters", "0"}).code, grnr::cli::kExitUsage);
}
