#include "xssguard/cli.hpp"
#include "xssguard/learners.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace xssguard;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "xssguard");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    Run r;
    r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = std::filesystem::temp_directory_path() / "xssguard_cli_test";
        std::filesystem::remove_all(dir_);
        std::filesystem::create_directories(dir_);
        ASSERT_EQ(run({"generate", "--n", "460", "--seed", "42", "--out", data()}).code, cli::kExitOk);
    }
    static void TearDownTestSuite() { std::filesystem::remove_all(dir_); }

    static std::string data() { return (dir_ / "d.csv").string(); }
    static std::string path(const std::string& name) { return (dir_ / name).string(); }

    static std::filesystem::path dir_;
};

std::filesystem::path Cli::dir_;

} // namespace

TEST_F(Cli, HelpExitsZero) {
    const auto r = run({"--help"});
    EXPECT_EQ(r.code, cli::kExitOk);
    EXPECT_NE(r.out.find("evaluate"), std::string::npos);
}

TEST_F(Cli, BadFlagIsUsageError) {
    const auto r = run({"generate", "--bogus"});
    EXPECT_EQ(r.code, cli::kExitUsage);
    EXPECT_FALSE(r.err.empty());
    EXPECT_EQ(run({}).code, cli::kExitUsage);
    EXPECT_EQ(run({"evaluate", "--data", data(), "--all", "--classifiers", "nb"}).code, cli::kExitUsage);
}

TEST_F(Cli, RuntimeErrorExitsOne) {
    std::ofstream(path("bad.csv")) << "app_name,label\nx,Yes\n";
    const auto r = run({"rank", "--data", path("bad.csv")});
    EXPECT_EQ(r.code, cli::kExitRuntime);
    EXPECT_NE(r.err.find("error:"), std::string::npos);
    EXPECT_EQ(run({"train", "--data", data(), "--classifier", "knn", "--out", path("m.json")}).code,
              cli::kExitRuntime);
}

TEST_F(Cli, GenerateWritesHeaderPlusRows) {
    const std::string text = slurp(data());
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 461);
    const auto again = run({"generate", "--n", "460", "--seed", "42"});
    EXPECT_EQ(again.out, text);
}

TEST_F(Cli, RankPutsApiNameFirstEverywhere) {
    const auto r = run({"rank", "--data", data(), "--methods", "ig,gr,relieff", "--format", "csv"});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    std::size_t firsts = 0;
    while (std::getline(in, line)) {
        if (line.find(",1,") != std::string::npos) {
            ++firsts;
            EXPECT_NE(line.find(",1,api_name,"), std::string::npos) << line;
        }
    }
    EXPECT_EQ(firsts, 3u);
    const auto text = run({"rank", "--data", data()});
    EXPECT_EQ(text.code, cli::kExitOk);
    EXPECT_NE(text.out.find("api_name"), std::string::npos);
}

TEST_F(Cli, EvaluateAllWritesSevenEntries) {
    const auto r = run({"evaluate", "--data", data(), "--k", "3", "--all", "--param", "esvm.population=2",
                        "--param", "esvm.generations=2", "--param", "rf.trees=10", "--param", "mlp.epochs=10",
                        "--out", path("report.json"), "--table", path("table.csv")});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    const Json doc = Json::parse(slurp(path("report.json")));
    ASSERT_EQ(doc["classifiers"].size(), 7u);
    const std::string table = slurp(path("table.csv"));
    EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 8);

    const auto roc = run({"roc", "--report", path("report.json"), "--out", path("roc.csv")});
    ASSERT_EQ(roc.code, cli::kExitOk) << roc.err;
    EXPECT_EQ(slurp(path("roc.csv")).rfind("classifier,fpr,tpr\n", 0), 0u);
}

TEST_F(Cli, EvaluateIsReproducible) {
    const std::vector<std::string> args = {"evaluate", "--data", data(), "--k", "4", "--classifiers", "nb,j48"};
    EXPECT_EQ(run(args).out, run(args).out);
}

TEST_F(Cli, RocNeedsExactlyOneSource) {
    std::ofstream(path("r.json")) << "{}";
    EXPECT_EQ(run({"roc", "--report", path("r.json"), "--data", data()}).code, cli::kExitUsage);
    EXPECT_EQ(run({"roc"}).code, cli::kExitUsage);
}

TEST_F(Cli, TrainScenarioAndReplay) {
    ASSERT_EQ(run({"train", "--data", data(), "--classifier", "j48", "--out", path("j48.json")}).code, cli::kExitOk);
    EXPECT_EQ(ClassifierModel::load(path("j48.json")).spec().kind(), ClassifierKind::J48);
    ASSERT_EQ(run({"scenario", "--data", data(), "--out", path("s.jsonl")}).code, cli::kExitOk);
    const auto r = run({"replay", "--scenario", path("s.jsonl"), "--model", path("j48.json"), "--policy",
                        "always_block", "--blocklist", path("bl.jsonl"), "--out", path("session.jsonl")});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    const std::string log = slurp(path("session.jsonl"));
    EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 460);
    EXPECT_NE(log.find("UserBlocked"), std::string::npos);
    EXPECT_EQ(run({"replay", "--scenario", path("s.jsonl"), "--model", path("j48.json"), "--policy", "scripted"}).code,
              cli::kExitUsage);
}
