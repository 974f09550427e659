#include <tfpc/cli.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace tfpc;
namespace fs = std::filesystem;

namespace {

struct run_result {
    int code;
    std::string out;
    std::string err;
};

run_result run(std::vector<std::string> args) {
    args.insert(args.begin(), "tfpc");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli_run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
  protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("tfpc_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string write(const std::string& name, const std::string& content) {
        auto p = dir_ / name;
        std::ofstream(p) << content;
        return p.string();
    }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

std::string diamonds_like(std::size_t n) {
    std::mt19937_64 rng(6);
    std::lognormal_distribution<double> carat(-0.4, 0.5);
    const char* cut[] = {"Fair", "Good", "Very Good", "Premium", "Ideal"};
    std::string csv = "carat,cut,depth,price\n";
    char buf[128];
    for (std::size_t i = 0; i < n; ++i) {
        const double c = carat(rng);
        std::snprintf(buf, sizeof buf, "%.2f,%s,%.1f,%d\n", c, cut[rng() % 5], 58 + double(rng() % 60) / 10,
                      int(300 + 4000 * c + double(rng() % 500)));
        csv += buf;
    }
    return csv;
}

} // namespace

TEST_F(CliTest, CountPrintsTopPatterns) {
    auto in = write("ex.csv", "U,V\n1,2\n3,2\n3,NA\n3,2\n3,1\n2,2\n");
    auto r = run({"count", in, "--lines", "4"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream out(r.out);
    std::string header, first;
    std::getline(out, header);
    std::getline(out, first);
    EXPECT_EQ(header, "U\tV\tFreq");
    EXPECT_EQ(first, "3\t2\t2.000000");
}

TEST_F(CliTest, DiscretizedPipelineWritesSvgAndJson) {
    auto in = write("diamonds.csv", diamonds_like(3000));
    auto svg = path("out.svg"), js = path("out.json"), freq = path("freq.tsv");
    auto r = run({"count", in, "--nlevels", "4", "--lines", "2500", "--svg", svg, "--json", js, "--export-freq", freq});
    ASSERT_EQ(r.code, 0) << r.err;
    ASSERT_TRUE(fs::exists(svg));
    ASSERT_TRUE(fs::exists(js));
    ASSERT_TRUE(fs::exists(freq));
    std::ifstream jf(js);
    std::stringstream ss;
    ss << jf.rdbuf();
    auto m = parse_json(ss.str());
    EXPECT_EQ(axis_names(m), (std::vector<std::string>{"carat", "cut", "depth", "price"}));
    for (const auto& a : m.axes) EXPECT_LE(a.ticks.size(), a.name == "cut" ? 5u : 4u);
    EXPECT_FALSE(m.lines.empty());
}

TEST_F(CliTest, NegativeLinesIsOutlierMode) {
    auto in = write("diamonds.csv", diamonds_like(2000));
    auto r = run({"count", in, "--nlevels", "4", "--lines", "-25"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream out(r.out);
    std::vector<double> weights;
    std::string line;
    std::getline(out, line);
    while (std::getline(out, line)) weights.push_back(std::stod(line.substr(line.rfind('\t') + 1)));
    ASSERT_EQ(weights.size(), 25u);
    EXPECT_TRUE(std::is_sorted(weights.begin(), weights.end()));
}

TEST_F(CliTest, MissingInputExitsOneWithoutOutputs) {
    auto svg = path("never.svg");
    auto r = run({"count", path("nope.csv"), "--svg", svg});
    EXPECT_EQ(r.code, 1);
    EXPECT_FALSE(fs::exists(svg));
    EXPECT_NE(r.err.find("nope.csv"), std::string::npos);
}

TEST_F(CliTest, PipelineErrorLeavesNoPartialOutput) {
    auto in = write("ex.csv", "U,V\n1,2\n3,2\n");
    auto svg = path("out.svg"), freq = path("freq.tsv");
    auto r = run({"count", in, "--svg", svg, "--export", freq, "--accentuate", "U=9:2"});
    EXPECT_EQ(r.code, 1);
    EXPECT_FALSE(fs::exists(svg));
    EXPECT_FALSE(fs::exists(freq));
}

TEST_F(CliTest, UsageErrorsExitTwo) {
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"count"}).code, 2);
    auto in = write("ex.csv", "U,V\n1,2\n");
    EXPECT_EQ(run({"count", in, "--lines", "0"}).code, 2);
    EXPECT_EQ(run({"count", in, "--na-method", "bogus"}).code, 2);
    EXPECT_EQ(run({"count", in, "--nlevels", "1"}).code, 1);
}

TEST_F(CliTest, NaMethodsRun) {
    auto in = write("ex.csv", "U,V\n1,2\n3,2\n3,NA\n3,2\n3,1\n2,2\n");
    for (const char* m : {"drop", "naexp", "mom", "mar"}) {
        auto r = run({"count", in, "--na-method", m});
        EXPECT_EQ(r.code, 0) << m << ": " << r.err;
    }
    auto r = run({"count", in, "--naexp", "0"});
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("3\t2\t2.500000"), std::string::npos);
}

TEST_F(CliTest, DensityWithLabels) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z;
    std::string csv = "Height,Weight,Age\n";
    for (int i = 0; i < 300; ++i)
        csv += std::to_string(73 + 2 * z(rng)) + "," + std::to_string(200 + 20 * z(rng)) + "," +
               std::to_string(28 + 4 * z(rng)) + "\n";
    auto in = write("mlb.csv", csv);
    auto js = path("d.json");
    auto r = run({"density", in, "--lines", "-5", "--labels", "--json", js, "--order", "Age,Height,Weight"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream out(r.out);
    std::string line;
    std::getline(out, line);
    EXPECT_EQ(line, "row\tdensity");
    std::size_t rows = 0;
    while (std::getline(out, line)) ++rows;
    EXPECT_EQ(rows, 5u);
    std::ifstream jf(js);
    std::stringstream ss;
    ss << jf.rdbuf();
    auto m = parse_json(ss.str());
    EXPECT_EQ(axis_names(m), (std::vector<std::string>{"Age", "Height", "Weight"}));
    for (const auto& l : m.lines) EXPECT_TRUE(l.label.has_value());
}

TEST_F(CliTest, DiagnoseAndSubsample) {
    auto in = write("ex.csv", "U,V\n1,2\n3,2\n3,NA\n3,2\n3,1\n2,2\n");
    auto r = run({"diagnose", in});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("q\t0.083333"), std::string::npos);
    auto svg = path("s.svg");
    auto s = run({"subsample", in, "--n", "3", "--svg", svg});
    EXPECT_EQ(s.code, 0) << s.err;
    EXPECT_TRUE(fs::exists(svg));
}
