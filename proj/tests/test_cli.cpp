#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "rapid/rapid.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code;
    std::string output;
};

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("rapid_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

RunResult run(const std::string& args) {
    static int counter = 0;
    const fs::path log = fs::temp_directory_path() / ("rapid_cli_log_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ".txt");
    const std::string cmd = std::string(RAPID_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    fs::remove(log);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t field(const std::string& out, const std::string& rule, const std::string& key) {
    const std::regex re("rule=" + rule + " .*" + key + "=([0-9]+)");
    std::smatch m;
    if (!std::regex_search(out, m, re)) return 0;
    return std::stoul(m[1]);
}

double final_objective(const std::string& out, const std::string& rule) {
    const std::regex re("rule=" + rule + " .*final_objective=([-0-9.e+]+)");
    std::smatch m;
    if (!std::regex_search(out, m, re)) return NAN;
    return std::stod(m[1]);
}

const std::string kToyData = std::string(RAPID_DATA_DIR) + "/toy_svm.txt";

} // namespace

TEST(CliGenerate, WritesDeterministicFiles) {
    const fs::path a = scratch("gen_a"), b = scratch("gen_b");
    ASSERT_EQ(run("generate --n 30 --d 20 --seed 7 --out " + a.string()).code, 0);
    ASSERT_EQ(run("generate --n 30 --d 20 --seed 7 --out " + b.string()).code, 0);
    EXPECT_EQ(slurp(a / "A.txt"), slurp(b / "A.txt"));
    EXPECT_EQ(slurp(a / "y.txt"), slurp(b / "y.txt"));
    const auto m = rapid::read_dense((a / "A.txt").string());
    EXPECT_EQ(m.rows(), 30u);
    EXPECT_EQ(m.cols(), 20u);
}

TEST(CliGenerate, ZeroSizeIsUsageError) { EXPECT_EQ(run("generate --n 0").code, 1); }

TEST(CliSolve, ThreeRulesAgree) {
    const fs::path out = scratch("solve");
    const auto r = run("solve --n 80 --d 60 --seed 3 --rel-tol 1e-12 --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.output;
    for (const char* rule : {"fista", "rapid1", "rapid2"}) EXPECT_TRUE(fs::exists(out / ("trace_" + std::string(rule) + ".csv")));
    EXPECT_TRUE(fs::exists(out / "manifest.txt"));
    const double f = final_objective(r.output, "fista");
    EXPECT_NEAR(final_objective(r.output, "rapid1"), f, 1e-5 * std::abs(f));
    EXPECT_NEAR(final_objective(r.output, "rapid2"), f, 1e-5 * std::abs(f));
}

TEST(CliSolve, FromGeneratedFiles) {
    const fs::path data = scratch("solve_data_in"), out = scratch("solve_data_out");
    ASSERT_EQ(run("generate --n 40 --d 30 --seed 1 --out " + data.string()).code, 0);
    const auto from_files = run("solve --data " + data.string() + " --rule rapid2 --out " + out.string());
    ASSERT_EQ(from_files.code, 0) << from_files.output;
    const auto synthetic = run("solve --n 40 --d 30 --seed 1 --rule rapid2 --out " + out.string() + "_syn");
    EXPECT_EQ(final_objective(from_files.output, "rapid2"), final_objective(synthetic.output, "rapid2"));
    fs::remove_all(out.string() + "_syn");
}

TEST(CliSolve, MaxIterOneGivesOneRecord) {
    const fs::path out = scratch("solve_one");
    ASSERT_EQ(run("solve --n 20 --d 20 --max-iter 1 --rule rapid1 --out " + out.string()).code, 0);
    EXPECT_EQ(rapid::read_trace((out / "trace_rapid1.csv").string()).size(), 1u);
}

TEST(CliSolve, OtherProblems) {
    const fs::path out = scratch("solve_other");
    EXPECT_EQ(run("solve --problem group-lasso --group-size 4 --n 40 --d 40 --out " + out.string()).code, 0);
    EXPECT_EQ(run("solve --problem trace-norm --m 3 --n 30 --d 10 --out " + out.string()).code, 0);
    EXPECT_EQ(run("solve --problem trace-norm --n 30 --d 10 --out " + out.string()).code, 1);
}

TEST(CliSolve, UsageAndNumericalErrors) {
    EXPECT_EQ(run("solve --rule newton").code, 1);
    EXPECT_EQ(run("solve --rel-tol 0").code, 1);
    EXPECT_EQ(run("").code, 1);
    // an overflowing Lipschitz constant leaves no usable step size
    const fs::path data = scratch("solve_overflow");
    std::ofstream(data / "A.txt") << "1 1\n1e300\n";
    std::ofstream(data / "y.txt") << "1 1\n1\n";
    EXPECT_EQ(run("solve --data " + data.string() + " --out " + data.string()).code, 2);
}

TEST(CliCompare, WritesAlignedCsvAndScript) {
    const fs::path out = scratch("compare");
    const auto r = run("compare --n 60 --d 60 --seed 2 --oracle-iters 5000 --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.output;
    std::ifstream csv(out / "compare.csv");
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "rule,t,objective_error,envelope_error");
    std::size_t rows = 0;
    double prev_env = INFINITY;
    std::string prev_rule;
    while (std::getline(csv, line)) {
        ++rows;
        std::stringstream ss(line);
        std::string rule, t, err, env;
        std::getline(ss, rule, ',');
        std::getline(ss, t, ',');
        std::getline(ss, err, ',');
        std::getline(ss, env, ',');
        if (rule != prev_rule) prev_env = INFINITY;
        EXPECT_GE(std::stod(err), 0.0);
        EXPECT_LE(std::stod(env), prev_env);
        EXPECT_LE(std::stod(env), std::stod(err));
        prev_env = std::stod(env);
        prev_rule = rule;
    }
    EXPECT_GT(rows, 3u);
    const std::string gp = slurp(out / "compare.gp");
    EXPECT_NE(gp.find("'compare.csv'"), std::string::npos);
    EXPECT_EQ(gp.find(out.string()), std::string::npos);  // relative paths only
}

TEST(CliCompare, SingleRuleIsUsageError) {
    EXPECT_EQ(run("compare --n 10 --d 10 --rule rapid2").code, 1);
    EXPECT_EQ(run("compare --n 10 --d 10 --rule rapid2 --rule rapid2").code, 1);
}

TEST(CliCompare, RepeatableTraces) {
    const fs::path a = scratch("cmp_a"), b = scratch("cmp_b");
    ASSERT_EQ(run("compare --n 50 --d 40 --seed 9 --oracle-iters 1000 --out " + a.string()).code, 0);
    ASSERT_EQ(run("compare --n 50 --d 40 --seed 9 --oracle-iters 1000 --out " + b.string()).code, 0);
    for (const char* f : {"trace_fista.csv", "trace_rapid1.csv", "trace_rapid2.csv", "compare.csv"})
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(CliSvm, ToyDataConverges) {
    const fs::path out = scratch("svm");
    const auto r = run("svm --data " + kToyData + " --c 0.1 --rule rapid2 --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_NE(r.output.find("rule=rapid2 iterations="), std::string::npos);
    EXPECT_NE(r.output.find("converged=1"), std::string::npos);
    EXPECT_NE(r.output.find("test_acc="), std::string::npos);
    EXPECT_TRUE(fs::exists(out / "trace_svm_rapid2.csv"));
}

TEST(CliSvm, TwoRulesOneRun) {
    const fs::path out = scratch("svm_cmp");
    const auto r = run("svm --data " + kToyData + " --c 1 --rule apg --rule rapid2 --seed 3 --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_GT(field(r.output, "apg", "iterations"), 0u);
    EXPECT_GT(field(r.output, "rapid2", "iterations"), 0u);
    EXPECT_EQ(field(r.output, "apg", "converged"), 1u);
    EXPECT_EQ(field(r.output, "rapid2", "converged"), 1u);
    EXPECT_TRUE(fs::exists(out / "trace_svm_apg.csv"));
    EXPECT_TRUE(fs::exists(out / "trace_svm_rapid2.csv"));
}

TEST(CliSvm, UsageErrors) {
    EXPECT_EQ(run("svm --c -1").code, 1);
    EXPECT_EQ(run("svm --fraction 1.5").code, 1);
    EXPECT_EQ(run("svm --rule smo").code, 1);
    EXPECT_EQ(run("svm --data /nonexistent/data.txt").code, 1);
}

TEST(CliAudit, FreshRapidTracePasses) {
    const fs::path out = scratch("audit");
    ASSERT_EQ(run("solve --n 40 --d 40 --seed 4 --out " + out.string()).code, 0);
    const auto r = run("audit --trace " + (out / "trace_rapid2.csv").string() + " --manifest " +
                       (out / "manifest.txt").string());
    EXPECT_EQ(r.code, 0) << r.output;
    EXPECT_NE(r.output.find("audit: PASS"), std::string::npos);
    EXPECT_NE(r.output.find("sandwich"), std::string::npos);

    const auto fista = run("audit --trace " + (out / "trace_fista.csv").string());
    EXPECT_EQ(fista.code, 0);
    EXPECT_NE(fista.output.find("n/a"), std::string::npos);

    const auto kv = run("audit --format kv --trace " + (out / "trace_rapid1.csv").string());
    EXPECT_NE(kv.output.find("passed=1"), std::string::npos);
}

TEST(CliAudit, CorruptedTraceFails) {
    const fs::path out = scratch("audit_bad");
    ASSERT_EQ(run("solve --n 40 --d 40 --seed 4 --rule rapid2 --out " + out.string()).code, 0);
    auto trace = rapid::read_trace((out / "trace_rapid2.csv").string());
    ASSERT_GT(trace.size(), 5u);
    trace[4].eta *= 1.5;
    rapid::write_trace((out / "bad_eta.csv").string(), trace);
    EXPECT_EQ(run("audit --trace " + (out / "bad_eta.csv").string()).code, 3);

    std::ofstream(out / "garbage.csv") << rapid::kTraceHeader << "\n1,2,3\n";
    EXPECT_NE(run("audit --trace " + (out / "garbage.csv").string()).code, 0);
    EXPECT_EQ(run("audit --trace " + (out / "missing.csv").string()).code, 1);
}
