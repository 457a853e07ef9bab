#include <vdc/cli.hpp>

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using vdc::cli::dispatch;
using vdc::cli::json;

namespace
{

struct outcome
{
    int code;
    json doc;
    std::string out, err;
};

outcome run(const std::vector<std::string> &args)
{
    std::ostringstream out, err;
    const int code = dispatch(args, out, err);
    json doc;
    if (!out.str().empty() && out.str().front() == '{') {
        doc = json::parse(out.str());
    }
    return {code, doc, out.str(), err.str()};
}

std::string temp_path(const std::string &name) { return (std::filesystem::temp_directory_path() / ("vdc_cli_" + name)).string(); }

} // namespace

TEST(Cli, CountExample)
{
    const auto r = run({"count", "--poly", "x1^4+x2^4-2*x3^4", "--n", "3", "--B", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.doc["subcommand"], "count");
    EXPECT_EQ(r.doc["result"]["value"], 9);
    EXPECT_EQ(r.doc["schema_version"], 1);
    EXPECT_TRUE(r.doc["run"].contains("points_enumerated"));
    EXPECT_FALSE(r.doc["run"].contains("workers"));
}

TEST(Cli, PolyDiffExample)
{
    const auto r = run({"poly", "diff", "--poly", "x1^3", "--n", "1", "--y", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("3*x1^2 + 3*x1 + 1"), std::string::npos);
}

TEST(Cli, ExponentsExample)
{
    const auto r = run({"exponents", "--n", "29"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("25 + 1055/1069"), std::string::npos);
}

TEST(Cli, ExitCodes)
{
    EXPECT_EQ(run({"count", "--bogus"}).code, 64);
    EXPECT_EQ(run({}).code, 64);
    const auto parse = run({"count", "--poly", "x1^", "--n", "1", "--B", "1"});
    EXPECT_EQ(parse.code, 2);
    EXPECT_TRUE(parse.doc.contains("error"));
    EXPECT_FALSE(parse.err.empty());
    const auto budget = run({"--budget", "10", "count", "--poly", "x1+x2+x3", "--n", "3", "--B", "5"});
    EXPECT_EQ(budget.code, 2);
    EXPECT_EQ(budget.doc["error"]["kind"], "budget_exceeded");
    EXPECT_EQ(run({"exponents", "--n", "4"}).code, 64);
}

TEST(Cli, WorkerCountDoesNotChangeOutput)
{
    const std::vector<std::string> a{"count", "--poly", "x1^4-3*x2^4+x1*x2+5", "--n", "2", "--B", "12", "--mod", "35", "--weight", "smooth"};
    auto w1 = a, w4 = a;
    w1.insert(w1.begin(), {"--workers", "1"});
    w4.insert(w4.begin(), {"--workers", "4"});
    EXPECT_EQ(run(w1).out, run(w4).out);
}

TEST(Cli, EmitAndManifestReplay)
{
    const auto emit = temp_path("emit.json"), manifest = temp_path("manifest.json");
    const auto r = run({"--emit", emit, "--manifest", manifest, "pipeline", "--poly", "x1^4-2*x2^4+x1*x2+3", "--n", "2", "--B", "2", "--pi", "2",
                        "--p", "3", "--q", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_FALSE(r.doc["result"].contains("rows"));

    std::ifstream ef(emit);
    const json full = json::parse(ef);
    EXPECT_TRUE(full["result"].contains("rows"));

    std::ifstream mf(manifest);
    const json m = json::parse(mf);
    EXPECT_EQ(m["exit_code"], 0);
    EXPECT_TRUE(m.contains("wall_time_seconds"));
    const auto argv = m["argv"].get<std::vector<std::string>>();
    EXPECT_EQ(std::find(argv.begin(), argv.end(), "--manifest"), argv.end());

    const auto again = run({"replay", manifest});
    EXPECT_EQ(again.code, 0);
    EXPECT_EQ(again.out, r.out);

    std::remove(emit.c_str());
    std::remove(manifest.c_str());
    EXPECT_EQ(run({"replay", manifest}).code, 2);
}
