#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "epsbench/cli.hpp"
#include "epsbench/harness.hpp"
#include "oracles.hpp"

using namespace epsbench;
namespace fs = std::filesystem;

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("epsbench_test_" + name);
    fs::remove_all(p);
    return p;
}

ExperimentConfig small_fig3() {
    auto c = ExperimentConfig::defaults_for(ExperimentKind::MYOPIC_CURVES);
    c.candidate_sizes = {30, 300};
    c.machines = 6;
    c.m_max = 8;
    c.seed = 7;
    c.workers = 1;
    return c;
}

ExperimentConfig small_fig5() {
    auto c = ExperimentConfig::defaults_for(ExperimentKind::PREDICTOR_COMPARISON);
    c.candidate_sizes = {30};
    c.machines = 2;
    c.ngrc_m = 3;
    c.train_len = 3000;
    c.test_len = 1000;
    c.lstm_max_epochs = 2;
    c.lstm_validation_warmup = 50;
    c.seed = 3;
    c.workers = 1;
    return c;
}

struct CliRun {
    int code = 0;
    std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
    args.insert(args.begin(), "epsbench");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    CliRun r;
    r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

const std::string kGoldenMean = std::string(EPSBENCH_DATA_DIR) + "/golden_mean.machine";

}  // namespace

// ---------------------------------------------------------------------------
// Config

TEST(ExperimentConfigTest, JsonRoundTripPreservesEveryField) {
    auto c = small_fig5();
    c.families = {Family::LSTM, Family::NGRC};
    c.renewal_n_max = {10, 20, 30};
    c.l2_lambda = 0.25;
    ExperimentConfig d;
    apply_json(d, to_json(c));
    EXPECT_EQ(to_json(c).dump(), to_json(d).dump());
}

TEST(ExperimentConfigTest, UnknownKeyIsRejected) {
    ExperimentConfig c;
    EXPECT_THROW(apply_json(c, nlohmann::json{{"machnes", 3}}), std::invalid_argument);
    EXPECT_THROW(apply_json(c, nlohmann::json{{"machines", "three"}}), std::invalid_argument);
    EXPECT_THROW(apply_json(c, nlohmann::json::array()), std::invalid_argument);
}

TEST(ExperimentConfigTest, PartialJsonOverlaysOnlyGivenKeys) {
    auto c = ExperimentConfig::defaults_for(ExperimentKind::MYOPIC_CURVES);
    apply_json(c, nlohmann::json{{"machines", 4}});
    EXPECT_EQ(c.machines, 4);
    EXPECT_EQ(c.m_max, 15);
    EXPECT_EQ(c.candidate_sizes, (std::vector<std::int32_t>{30, 300, 3000}));
}

TEST(ExperimentConfigTest, CheckRejectsNonPositiveCounts) {
    auto c = small_fig3();
    c.machines = 0;
    EXPECT_THROW(c.check(), std::invalid_argument);
    c = small_fig3();
    c.candidate_sizes = {};
    EXPECT_THROW(c.check(), std::invalid_argument);
    c = small_fig3();
    c.m_max = 20;
    EXPECT_THROW(c.check(), std::invalid_argument);
    c = small_fig3();
    c.workers = 0;
    EXPECT_THROW(c.check(), std::invalid_argument);
}

TEST(ExperimentConfigTest, ExperimentNamesParse) {
    EXPECT_EQ(parse_experiment("fig3"), ExperimentKind::MYOPIC_CURVES);
    EXPECT_EQ(parse_experiment("fig4"), ExperimentKind::RENEWAL_CURVES);
    EXPECT_EQ(parse_experiment("fig5"), ExperimentKind::PREDICTOR_COMPARISON);
    EXPECT_EQ(parse_experiment("PREDICTOR_COMPARISON"), ExperimentKind::PREDICTOR_COMPARISON);
    EXPECT_THROW(parse_experiment("fig6"), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Myopic survey

TEST(MyopicSurveyTest, SingleCandidateGivesFlatCurveAtBinaryEntropy) {
    auto c = small_fig3();
    c.candidate_sizes = {1};
    c.machines = 1;
    c.m_max = 2;
    const auto r = run_myopic_survey(c);
    const auto rows = parse_csv(r.table("myopic_curves.csv"));
    ASSERT_EQ(rows.size(), 4u);
    const auto s = sample_epsilon_machine({1, c.alpha, 2, survey_machine_seed(c.seed, 1, 0)});
    const double p = s.machine.emission(0, 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_NEAR(std::stod(rows[i][5]), oracle::binary_entropy(p), 1e-12);
        EXPECT_NEAR(std::stod(rows[i][6]), oracle::binary_entropy(p), 1e-12);
    }
}

TEST(MyopicSurveyTest, RowCountsMatchConfig) {
    const auto c = small_fig3();
    const auto r = run_myopic_survey(c);
    const auto curves = parse_csv(r.table("myopic_curves.csv"));
    const auto bands = parse_csv(r.table("myopic_bands.csv"));
    EXPECT_EQ(curves[0].size(), 10u);
    EXPECT_EQ(curves.size(), 1 + c.candidate_sizes.size() * c.machines * (c.m_max + 1));
    EXPECT_EQ(bands.size(), 1 + c.candidate_sizes.size() * (c.m_max + 1));
    EXPECT_EQ(r.seeds.size(), c.candidate_sizes.size() * c.machines);
    EXPECT_TRUE(r.failures.empty());
}

TEST(MyopicSurveyTest, BandsBracketMedianAndMatchRows) {
    const auto c = small_fig3();
    const auto r = run_myopic_survey(c);
    const auto curves = parse_csv(r.table("myopic_curves.csv"));
    const auto bands = parse_csv(r.table("myopic_bands.csv"));
    for (std::size_t i = 1; i < bands.size(); ++i) {
        const auto& b = bands[i];
        for (int k : {3, 6, 9}) {
            EXPECT_LE(std::stod(b[k]), std::stod(b[k + 1]));
            EXPECT_LE(std::stod(b[k + 1]), std::stod(b[k + 2]));
        }
        std::vector<double> h;
        for (std::size_t j = 1; j < curves.size(); ++j)
            if (curves[j][0] == b[0] && curves[j][4] == b[1]) h.push_back(std::stod(curves[j][5]));
        ASSERT_EQ(std::to_string(h.size()), b[2]);
        EXPECT_NEAR(std::stod(b[4]), median(h), 1e-9);
    }
}

TEST(MyopicSurveyTest, ByteIdenticalAcrossWorkerCounts) {
    auto c = small_fig3();
    const auto a = run_myopic_survey(c);
    c.workers = 4;
    const auto b = run_myopic_survey(c);
    EXPECT_EQ(a.table("myopic_curves.csv"), b.table("myopic_curves.csv"));
    EXPECT_EQ(a.table("myopic_bands.csv"), b.table("myopic_bands.csv"));
}

TEST(MyopicSurveyTest, CurveStartsNearLn2AndDecreases) {
    auto c = small_fig3();
    c.candidate_sizes = {300};
    c.machines = 4;
    const auto r = run_myopic_survey(c);
    const auto rows = parse_csv(r.table("myopic_curves.csv"));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const int m = std::stoi(rows[i][4]);
        if (m == 0) EXPECT_NEAR(std::stod(rows[i][5]), std::log(2.0), 0.05);
        if (m > 0) EXPECT_LE(std::stod(rows[i][5]), std::stod(rows[i - 1][5]) + 1e-12);
    }
}

TEST(MyopicSurveyTest, FailingUnitsAreRecordedAndOthersKept) {
    auto c = small_fig3();
    c.candidate_sizes = {30};
    c.alphabet_size = 3;
    c.m_max = 12;  // exceeds the general-alphabet enumeration cap
    const auto r = run_myopic_survey(c);
    EXPECT_EQ(r.failures.size(), static_cast<std::size_t>(c.machines));
    EXPECT_EQ(parse_csv(r.table("myopic_curves.csv")).size(), 1u);
    const auto dir = scratch("failures");
    write_result(r, dir.string());
    const auto f = nlohmann::json::parse(slurp(dir / "failures.json"));
    EXPECT_EQ(f.size(), static_cast<std::size_t>(c.machines));
    EXPECT_EQ(f[0]["unit"], "n30/machine0");
    fs::remove_all(dir);
}

// ---------------------------------------------------------------------------
// Survey

TEST(SurveyExperimentTest, MatchesSamplerSurvey) {
    auto c = ExperimentConfig::defaults_for(ExperimentKind::SURVEY);
    c.machines = 5;
    c.candidate_sizes = {40};
    c.workers = 1;
    const auto r = run_survey(c);
    const auto rows = parse_csv(r.table("machines.csv"));
    ASSERT_EQ(rows.size(), 6u);
    const auto direct = survey({40, 1.0, 2, c.seed}, 5);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(rows[i + 1][1], std::to_string(direct.rows[i].seed));
        EXPECT_EQ(rows[i + 1][5], format_number(direct.rows[i].h_mu));
    }
}

// ---------------------------------------------------------------------------
// Renewal curves

TEST(RenewalExperimentTest, EmitsBothTruncationsWithColumn) {
    auto c = ExperimentConfig::defaults_for(ExperimentKind::RENEWAL_CURVES);
    c.m_max = 6;
    c.log_m_m_max = 1000;
    const auto r = run_renewal_curves(c);
    const auto rows = parse_csv(r.table("renewal_curves.csv"));
    EXPECT_EQ(rows[0].back(), "n_max");
    ASSERT_EQ(rows.size(), 1u + 2u * 7u);
    EXPECT_EQ(rows[1].back(), "1000");
    EXPECT_EQ(rows.back().back(), "10000");
}

TEST(RenewalExperimentTest, LogMCurveIsMonotoneDecreasing) {
    auto c = ExperimentConfig::defaults_for(ExperimentKind::RENEWAL_CURVES);
    c.m_max = 2;
    c.renewal_n_max = {100};
    const auto r = run_renewal_curves(c);
    const auto rows = parse_csv(r.table("log_m_curve.csv"));
    ASSERT_EQ(rows.size(), 1u + 10001u);
    std::vector<double> pct;
    for (std::size_t i = 1; i < rows.size(); ++i) pct.push_back(std::stod(rows[i][5]));
    for (std::size_t m = 2; m < pct.size(); ++m) EXPECT_LE(pct[m], pct[m - 1]) << m;
    EXPECT_GT(pct[10], pct[100]);
    EXPECT_GT(pct[100], pct[1000]);
    EXPECT_GT(pct[1000], 0.0);
}

// ---------------------------------------------------------------------------
// Predictor comparison

TEST(PredictorComparisonTest, EmitsOneRowPerMachineAndFamily) {
    const auto c = small_fig5();
    const auto r = run_predictor_comparison(c);
    EXPECT_TRUE(r.failures.empty());
    const auto rows = parse_csv(r.table("predictor_results.csv"));
    ASSERT_EQ(rows.size(), 1u + 2u * 4u);
    EXPECT_EQ(rows[1][1], "NGRC");
    EXPECT_EQ(rows[1][2], "9");
    EXPECT_EQ(rows[2][2], "9");
    EXPECT_EQ(rows[3][2], "12");
    EXPECT_EQ(rows[4][2], "12");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double pe = std::stod(rows[i][5]), pe_min = std::stod(rows[i][6]);
        EXPECT_NEAR(std::stod(rows[i][7]), (pe - pe_min) / pe_min * 100.0, 1e-3 * std::abs(std::stod(rows[i][7])) + 1e-6);
        if (rows[i][1] == "NGRC")
            EXPECT_GE(std::stod(rows[i][8]), std::stod(rows[i + 1][8]) - 1e-12);  // h(m) >= h_mu
        else
            EXPECT_LE(std::stod(rows[i][8]), pe_min + 1e-9);
    }
    const auto summary = parse_csv(r.table("predictor_summary.csv"));
    EXPECT_EQ(summary.size(), 5u);
}

TEST(PredictorComparisonTest, FanoBoundUsesFamilyMemory) {
    const auto c = small_fig5();
    const auto r = run_predictor_comparison(c);
    const auto rows = parse_csv(r.table("predictor_results.csv"));
    const auto s = sample_epsilon_machine({30, 1.0, 2, comparison_machine_seed(c.seed, 0)});
    const auto pi = stationary_distribution(s.machine);
    const auto curve = myopic_entropy_rate(s.machine, pi, c.ngrc_m);
    EXPECT_EQ(rows[1][8], format_number(inverse_binary_entropy(curve[c.ngrc_m])));
    EXPECT_EQ(rows[2][8], format_number(inverse_binary_entropy(curve.h_mu)));
}

TEST(PredictorComparisonTest, ByteIdenticalAcrossWorkerCounts) {
    auto c = small_fig5();
    c.families = {Family::NGRC, Family::RC_QUADRATIC, Family::LSTM};
    const auto a = run_predictor_comparison(c);
    c.workers = 3;
    const auto b = run_predictor_comparison(c);
    EXPECT_EQ(a.table("predictor_results.csv"), b.table("predictor_results.csv"));
    EXPECT_EQ(a.table("predictor_summary.csv"), b.table("predictor_summary.csv"));
}

TEST(PredictorComparisonTest, DivergingUnitIsRecordedAndRunContinues) {
    auto c = small_fig5();
    c.lstm_learning_rate = std::numeric_limits<double>::infinity();
    const auto r = run_predictor_comparison(c);
    ASSERT_EQ(r.failures.size(), 2u);
    EXPECT_EQ(r.failures[0].unit, "machine0/rep0/LSTM");
    EXPECT_NE(r.failures[0].error.find("non-finite"), std::string::npos);
    EXPECT_EQ(parse_csv(r.table("predictor_results.csv")).size(), 1u + 2u * 3u);
}

TEST(PredictorComparisonTest, RepetitionsMultiplyRows) {
    auto c = small_fig5();
    c.machines = 1;
    c.repetitions = 2;
    c.families = {Family::NGRC};
    const auto r = run_predictor_comparison(c);
    const auto rows = parse_csv(r.table("predictor_results.csv"));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[1][0], "m0r0");
    EXPECT_EQ(rows[2][0], "m0r1");
}

// ---------------------------------------------------------------------------
// Output files

TEST(WriteResultTest, ManifestHoldsResolvedConfigAndSeeds) {
    const auto c = small_fig3();
    const auto r = run_myopic_survey(c);
    const auto dir = scratch("manifest");
    write_result(r, dir.string());
    EXPECT_TRUE(fs::exists(dir / "myopic_curves.csv"));
    EXPECT_TRUE(fs::exists(dir / "myopic_bands.csv"));
    EXPECT_FALSE(fs::exists(dir / "failures.json"));
    const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(m["experiment"], "MYOPIC_CURVES");
    EXPECT_EQ(m["version"], std::string(kVersion));
    EXPECT_EQ(m["seeds"].size(), 12u);
    EXPECT_TRUE(m.contains("wall_seconds"));
    const auto defaults = to_json(ExperimentConfig{});
    for (const auto& [key, value] : defaults.items()) EXPECT_TRUE(m["config"].contains(key)) << key;
    ExperimentConfig back;
    apply_json(back, m["config"]);
    EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
    fs::remove_all(dir);
}

// ---------------------------------------------------------------------------
// CLI

TEST(CliTest, AnalyzeGoldenMean) {
    const auto r = cli({"analyze", kGoldenMean});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("h_mu=0.4621 nats"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("pe_min=0.3333"), std::string::npos) << r.out;
}

TEST(CliTest, AnalyzeWithCurve) {
    const auto r = cli({"analyze", kGoldenMean, "--m-max", "3"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find(kCurveCsvHeader), std::string::npos);
}

TEST(CliTest, UnknownFlagIsUsageError) {
    const auto r = cli({"analyze", kGoldenMean, "--bogus"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("Usage"), std::string::npos) << r.err;
}

TEST(CliTest, MissingSubcommandIsUsageError) {
    const auto r = cli({});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(CliTest, UnknownExperimentIsUsageError) { EXPECT_EQ(cli({"experiment", "fig9"}).code, 1); }

TEST(CliTest, InvalidConfigValueIsUsageError) {
    EXPECT_EQ(cli({"experiment", "fig3", "--machines", "0", "--out", scratch("bad").string()}).code, 1);
}

TEST(CliTest, MalformedMachineIsRuntimeFailure) {
    const auto dir = scratch("malformed");
    fs::create_directories(dir);
    std::ofstream(dir / "bad.machine") << "epsilon_machine 2\n";
    const auto r = cli({"analyze", (dir / "bad.machine").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("header"), std::string::npos);
    fs::remove_all(dir);
}

TEST(CliTest, HelpExitsZero) { EXPECT_EQ(cli({"--help"}).code, 0); }

TEST(CliTest, Fig3TwiceGivesIdenticalOutputs) {
    const auto a = scratch("fig3a"), b = scratch("fig3b");
    ASSERT_EQ(cli({"experiment", "fig3", "--machines", "5", "--m-max", "8", "--seed", "7", "--out", a.string()}).code, 0);
    ASSERT_EQ(cli({"experiment", "fig3", "--machines", "5", "--m-max", "8", "--seed", "7", "--workers", "3", "--out",
                   b.string()})
                  .code,
              0);
    for (const auto* name : {"myopic_curves.csv", "myopic_bands.csv"}) EXPECT_EQ(slurp(a / name), slurp(b / name));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(CliTest, FlagsOverrideConfigFileOverridesDefaults) {
    const auto dir = scratch("precedence");
    fs::create_directories(dir);
    std::ofstream(dir / "c.json") << R"({"machines": 2, "m_max": 3, "candidate_sizes": [20], "seed": 5})";
    const auto out = dir / "out";
    ASSERT_EQ(cli({"experiment", "fig3", "--config", (dir / "c.json").string(), "--m-max", "4", "--out", out.string()})
                  .code,
              0);
    const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
    EXPECT_EQ(m["config"]["machines"], 2);
    EXPECT_EQ(m["config"]["m_max"], 4);
    EXPECT_EQ(m["config"]["seed"], 5);
    EXPECT_EQ(m["config"]["alpha"], 1.0);
    EXPECT_EQ(m["config"]["candidate_sizes"], nlohmann::json::array({20}));
    fs::remove_all(dir);
}

TEST(CliTest, SampleSimulateRoundTrip) {
    const auto dir = scratch("sample");
    const auto machine = (dir / "m.machine").string();
    ASSERT_EQ(cli({"sample", "--candidates", "20", "--seed", "4", "--out", machine}).code, 0);
    const auto m = deserialize(slurp(machine));
    EXPECT_TRUE(validate(m).ok());
    EXPECT_TRUE(fs::exists(machine + ".manifest.json"));
    const auto series = (dir / "s.txt").string();
    ASSERT_EQ(cli({"simulate", machine, "--length", "500", "--seed", "9", "--out", series}).code, 0);
    const auto s = read_series(series);
    EXPECT_EQ(s.size(), 500u);
    EXPECT_EQ(s.symbols, simulate(m, 500, 9).symbols);
    fs::remove_all(dir);
}

TEST(CliTest, RenewalPrintsCurve) {
    const auto r = cli({"renewal", "--n-max", "50", "--m-max", "3"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(parse_csv(r.out).size(), 5u);
    EXPECT_EQ(cli({"renewal", "--beta", "-1"}).code, 1);
}

TEST(CliTest, TrainReportsErrorOnGoldenMean) {
    const auto dir = scratch("train");
    const auto model = (dir / "p.txt").string();
    const auto r = cli({"train", kGoldenMean, "--family", "NGRC", "--ngrc-m", "1", "--train-len", "20000",
                        "--test-len", "20000", "--out", model});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto pos = r.out.find("pe=");
    ASSERT_NE(pos, std::string::npos);
    EXPECT_NEAR(std::stod(r.out.substr(pos + 3)), 1.0 / 3.0, 0.02);
    EXPECT_NO_THROW(load_predictor(slurp(model)));
    EXPECT_EQ(cli({"train", kGoldenMean, "--family", "GRU"}).code, 1);
    fs::remove_all(dir);
}
