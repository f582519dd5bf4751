#include "tbreak/runner.hpp"
#include "tbreak/scenario.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

using namespace tbreak::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarioDir{TBREAK_SCENARIO_DIR};

struct Command {
    int exit_code;
    std::string out;
};

// Runs the CLI binary; stderr is folded into the captured text when requested.
Command run_cli(const std::string& args, bool merge_stderr = false) {
    std::string cmd = std::string("\"") + TBREAK_CLI_PATH + "\" " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return {-1, {}};
    std::string text;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) text.append(buf, n);
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, text};
}

class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("tbreak-test-" + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    fs::path write(const std::string& name, const std::string& text) const {
        const fs::path p = path_ / name;
        std::ofstream(p) << text;
        return p;
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

std::size_t count_lines(const std::string& s) {
    std::size_t n = 0;
    for (char c : s) n += (c == '\n');
    return n;
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    for (std::string cell; std::getline(in, cell, ',');) out.push_back(cell);
    return out;
}

const char* kTwoLevel = R"({
  "id": "t",
  "mode": "probability",
  "system": {
    "energies": [0.0, 1.0],
    "perturbation": { "kind": "constant", "matrix": [[0.0, 0.1], [0.1, 0.0]] }
  },
  "lambda": { "base": 0.0 },
  "channels": { "pairs": [[0, 1]], "window": { "t_i": 0.0, "t_f": 3.141592653589793 } }
})";

} // namespace

TEST(RunScenario, LambdaSweepProducesOneRowPerPoint) {
    RunOptions opt;
    const RunResult r = run_scenario(kScenarioDir / "two_level_lambda_sweep.json", opt);
    ASSERT_EQ(r.exit_code, kExitOk) << r.error;
    const auto body = lines(result_body(r.output, OutputFormat::Csv));
    ASSERT_EQ(body.size(), 6u);
    const auto header = split_csv(body[0]);
    const auto col = [&](const std::string& name) {
        return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
    };
    ASSERT_LT(col("probability_re"), header.size());
    ASSERT_LT(col("probability_im"), header.size());
    ASSERT_LT(col("pr_qm"), header.size());
    const double lambdas[] = {-1.0, -0.5, 0.0, 0.5, 1.0};
    for (std::size_t k = 0; k < 5; ++k) {
        const auto row = split_csv(body[k + 1]);
        EXPECT_NEAR(std::stod(row[col("probability_re")]), (1.0 + lambdas[k]) * 0.04, 1e-10);
        EXPECT_NEAR(std::stod(row[col("sweep_value")]), lambdas[k], 0.0);
    }
}

TEST(RunScenario, ManifestPrecedesBody) {
    RunOptions opt;
    opt.timestamp = "fixed";
    const RunResult r = run_scenario(kScenarioDir / "two_level_lambda_sweep.json", opt);
    ASSERT_EQ(r.exit_code, kExitOk);
    const auto all = lines(r.output);
    ASSERT_FALSE(all.empty());
    EXPECT_EQ(all[0].rfind("# tbreak-manifest ", 0), 0u);
    EXPECT_NE(all[0].find("\"version\""), std::string::npos);
    EXPECT_NE(all[0].find("\"scenario\""), std::string::npos);
}

TEST(RunScenario, BandRateSweepConvergesWithRegimeFlags) {
    const RunResult r = run_scenario(kScenarioDir / "band_rate_sweep.json", {});
    ASSERT_EQ(r.exit_code, kExitOk) << r.error;
    const auto body = lines(result_body(r.output, r.format));
    ASSERT_EQ(body.size(), 5u);
    const auto header = split_csv(body[0]);
    const auto at = [&](const std::vector<std::string>& row, const std::string& name) {
        return row[static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin())];
    };
    double previous = 1.0;
    for (std::size_t k = 1; k < body.size(); ++k) {
        const auto row = split_csv(body[k]);
        const double dev = std::abs(std::stod(at(row, "relative_deviation")));
        EXPECT_LT(dev, previous);
        previous = dev;
        EXPECT_FALSE(at(row, "regime").empty());
    }
    EXPECT_LT(previous, 0.01);
}

TEST(RunScenario, EveryBundledScenarioRuns) {
    for (const auto& entry : fs::directory_iterator(kScenarioDir)) {
        if (entry.path().extension() != ".json") continue;
        const RunResult r = run_scenario(entry.path(), {});
        EXPECT_EQ(r.exit_code, kExitOk) << entry.path() << ": " << r.error;
        EXPECT_GT(count_lines(result_body(r.output, r.format)), 1u) << entry.path();
    }
}

TEST(RunScenario, MissingEnergiesIsASchemaError) {
    TempDir dir;
    std::string text = kTwoLevel;
    text.replace(text.find("\"energies\": [0.0, 1.0],"), std::string("\"energies\": [0.0, 1.0],").size(), "");
    const fs::path p = dir.write("bad.json", text);
    const RunResult r = run_scenario(p, {});
    EXPECT_EQ(r.exit_code, kExitValidation);
    EXPECT_NE(r.error.find("system.energies"), std::string::npos) << r.error;
    const Command c = run_cli("run \"" + p.string() + "\"", true);
    EXPECT_EQ(c.exit_code, 1);
    EXPECT_NE(c.out.find("system.energies"), std::string::npos) << c.out;
}

TEST(RunScenario, ParseErrorsReportLine) {
    TempDir dir;
    const fs::path p = dir.write("broken.json", "{\n  \"id\": \"x\",\n  \"mode\": \n}\n");
    const RunResult r = run_scenario(p, {});
    EXPECT_EQ(r.exit_code, kExitValidation);
    EXPECT_NE(r.error.find("line 4"), std::string::npos) << r.error;
}

TEST(RunScenario, UnknownKeysAreRejected) {
    TempDir dir;
    std::string text = kTwoLevel;
    text.replace(text.find("\"lambda\""), 8, "\"lambdaa\"");
    const RunResult r = run_scenario(dir.write("typo.json", text), {});
    EXPECT_EQ(r.exit_code, kExitValidation);
    EXPECT_NE(r.error.find("lambdaa"), std::string::npos) << r.error;
}

TEST(RunScenario, SetOverridesScenarioValues) {
    RunOptions opt;
    opt.sets = {"lambda.base=0.5"};
    TempDir dir;
    const fs::path p = dir.write("s.json", kTwoLevel);
    const RunResult r = run_scenario(p, opt);
    ASSERT_EQ(r.exit_code, kExitOk) << r.error;
    EXPECT_NE(r.output.find("0.06"), std::string::npos);
    RunOptions bad;
    bad.sets = {"system.hbar=abc"};
    EXPECT_EQ(run_scenario(p, bad).exit_code, kExitValidation);
}

TEST(RunScenario, NumericalErrorsCarryContextAndExitTwo) {
    TempDir dir;
    std::string text = kTwoLevel;
    text.insert(text.rfind('}'), R"(,  "numerics": { "quadrature": { "max_subdivisions": 1, "abs_tol": 1e-16, "rel_tol": 1e-16 } }
)");
    const fs::path p = dir.write("strict.json", text);
    const RunResult lenient = run_scenario(p, {});
    EXPECT_EQ(lenient.exit_code, kExitOk) << lenient.error;
    EXPECT_FALSE(lenient.warnings.empty());
    EXPECT_NE(lenient.output.find("false"), std::string::npos);
    RunOptions opt;
    opt.strict = true;
    const RunResult strict = run_scenario(p, opt);
    EXPECT_EQ(strict.exit_code, kExitNumerical);
    EXPECT_NE(strict.error.find("scenario 't'"), std::string::npos) << strict.error;
    EXPECT_EQ(run_cli("run --strict \"" + p.string() + "\"").exit_code, 2);
}

TEST(RunScenario, JsonLinesFormat) {
    RunOptions opt;
    opt.format = OutputFormat::JsonLines;
    const RunResult r = run_scenario(kScenarioDir / "two_level_lambda_sweep.json", opt);
    ASSERT_EQ(r.exit_code, kExitOk);
    const auto all = lines(r.output);
    ASSERT_EQ(all.size(), 6u);
    EXPECT_EQ(all[0].rfind("{\"manifest\":", 0), 0u);
    const auto row = Json::parse(all[3]);
    ASSERT_TRUE(row.at("probability").is_array());
    EXPECT_NEAR(row.at("probability")[0].get<double>(), 0.04, 1e-10);
    EXPECT_EQ(row.at("i").get<int>(), 0);
}

TEST(RunScenario, WritesToOutputPath) {
    TempDir dir;
    RunOptions opt;
    opt.out = (dir.path() / "out.csv").string();
    const RunResult r = run_scenario(kScenarioDir / "two_level_lambda_sweep.json", opt);
    ASSERT_EQ(r.exit_code, kExitOk);
    ASSERT_TRUE(r.written_to.has_value());
    std::ifstream in(*r.written_to);
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_EQ(ss.str(), r.output);
}

TEST(Reproducibility, SerialAndParallelBodiesAreIdentical) {
    const fs::path p = kScenarioDir / "two_level_lambda_sweep.json";
    RunOptions serial;
    RunOptions parallel;
    parallel.threads = 4;
    const RunResult a = run_scenario(p, serial);
    const RunResult b = run_scenario(p, serial);
    const RunResult c = run_scenario(p, parallel);
    ASSERT_EQ(a.exit_code, kExitOk);
    EXPECT_EQ(result_body(a.output, a.format), result_body(b.output, b.format));
    EXPECT_EQ(result_body(a.output, a.format), result_body(c.output, c.format));
}

TEST(Reproducibility, CliRunsAreIdenticalAcrossThreadCounts) {
    const std::string p = "\"" + (kScenarioDir / "band_rate_sweep.json").string() + "\"";
    const Command a = run_cli("run " + p);
    const Command b = run_cli("run --threads 4 " + p);
    ASSERT_EQ(a.exit_code, 0);
    ASSERT_EQ(b.exit_code, 0);
    EXPECT_EQ(result_body(a.out, OutputFormat::Csv), result_body(b.out, OutputFormat::Csv));
}

TEST(Validate, ValidScenarioHasNoDiagnostics) {
    const ValidationReport r = validate_scenario(kScenarioDir / "two_level_lambda_sweep.json");
    EXPECT_TRUE(r.diagnostics.empty());
    EXPECT_EQ(r.exit_code(), 0);
    const Command c = run_cli("validate \"" + (kScenarioDir / "deselection.json").string() + "\"");
    EXPECT_EQ(c.exit_code, 0);
    EXPECT_EQ(c.out, "ok\n");
}

TEST(Validate, NonHermitianPerturbationNamesEntry) {
    TempDir dir;
    std::string text = kTwoLevel;
    text.replace(text.find("[[0.0, 0.1], [0.1, 0.0]]"), 24, "[[0.0, 0.1], [0.3, 0.0]]");
    const ValidationReport r = validate_scenario(dir.write("nh.json", text));
    ASSERT_FALSE(r.ok());
    const std::string msg = to_string(r.diagnostics.front());
    EXPECT_NE(msg.find("(0, 1)"), std::string::npos) << msg;
    EXPECT_NE(msg.find("0.2"), std::string::npos) << msg;
    EXPECT_EQ(r.exit_code(), 1);
}

TEST(Validate, LambdaBelowMinusOneWarns) {
    TempDir dir;
    std::string text = kTwoLevel;
    text.replace(text.find("\"base\": 0.0"), 11, "\"base\": -1.5");
    const fs::path p = dir.write("neg.json", text);
    const ValidationReport r = validate_scenario(p);
    ASSERT_EQ(r.diagnostics.size(), 1u);
    EXPECT_EQ(r.diagnostics[0].severity, Diagnostic::Severity::Warning);
    EXPECT_TRUE(r.ok());
    const Command c = run_cli("validate \"" + p.string() + "\"", true);
    EXPECT_EQ(c.exit_code, 0);
    EXPECT_NE(c.out.find("negative"), std::string::npos) << c.out;
}

TEST(Cli, VersionAndUsage) {
    const Command v = run_cli("version");
    EXPECT_EQ(v.exit_code, 0);
    EXPECT_EQ(v.out, std::string(kToolName) + " " + kToolVersion + "\n");
    EXPECT_EQ(run_cli("frobnicate").exit_code, 1);
}

TEST(Cli, RunWritesCsvToStdout) {
    const Command c = run_cli("run \"" + (kScenarioDir / "two_level_lambda_sweep.json").string() + "\"");
    ASSERT_EQ(c.exit_code, 0);
    EXPECT_EQ(count_lines(result_body(c.out, OutputFormat::Csv)), 6u);
}

TEST(ParseAssignment, SplitsKeyAndJsonValue) {
    const auto [k, v] = parse_assignment("band.time=12.5");
    EXPECT_EQ(k, "band.time");
    EXPECT_EQ(v.get<double>(), 12.5);
    EXPECT_THROW(parse_assignment("novalue"), SchemaError);
}
