// rapid: command-line front end for the RAPID / FISTA solvers.
//
//   rapid generate  synthetic regression or classification data
//   rapid solve     run one or more rules on a regression problem
//   rapid compare   aligned objective-error curves + gnuplot script
//   rapid svm       dual SVM on a seeded train/test split
//   rapid audit     check a trace against the convergence guarantees
//
// Exit codes: 0 success, 1 usage, 2 numerical failure, 3 audit failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rapid/rapid.hpp"

namespace fs = std::filesystem;
using namespace rapid;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitAudit = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Everything needed to rebuild a regression problem; written next to traces.
struct RunManifest {
    std::string problem = "lasso";
    std::string data_dir;  // empty: synthetic
    std::size_t n = 200;
    std::size_t d = 200;
    std::size_t m = 1;
    std::uint64_t seed = 0;
    bool planted = false;
    double noise = 0.0;
    std::optional<double> lambda;
    std::size_t group_size = 5;
    std::vector<std::string> rules = {"fista", "rapid1", "rapid2"};
    std::size_t max_iter = 1000;
    double rel_tol = 1e-7;
    std::string step = "fixed";
    std::string out = ".";
    bool timing = false;
};

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_manifest(const std::string& path, const RunManifest& m, double lambda) {
    std::ofstream out(path);
    require(out.good(), "io", "cannot write '" + path + "'");
    out << "problem=" << m.problem << '\n'
        << "data=" << (m.data_dir.empty() ? "synthetic" : m.data_dir) << '\n'
        << "n=" << m.n << '\n'
        << "d=" << m.d << '\n'
        << "m=" << m.m << '\n'
        << "seed=" << m.seed << '\n'
        << "planted=" << (m.planted ? 1 : 0) << '\n'
        << "noise=" << fmt17(m.noise) << '\n'
        << "lambda=" << fmt17(lambda) << '\n'
        << "group_size=" << m.group_size << '\n'
        << "max_iter=" << m.max_iter << '\n'
        << "rel_tol=" << fmt17(m.rel_tol) << '\n'
        << "step=" << m.step << '\n';
}

RunManifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open manifest '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto get = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw UsageError(std::string("manifest is missing '") + key + "'");
        return it->second;
    };
    RunManifest m;
    m.problem = get("problem");
    m.data_dir = get("data") == "synthetic" ? "" : get("data");
    m.n = std::stoull(get("n"));
    m.d = std::stoull(get("d"));
    m.m = std::stoull(get("m"));
    m.seed = std::stoull(get("seed"));
    m.planted = get("planted") == "1";
    m.noise = std::stod(get("noise"));
    m.lambda = std::stod(get("lambda"));
    m.group_size = std::stoull(get("group_size"));
    m.max_iter = std::stoull(get("max_iter"));
    m.rel_tol = std::stod(get("rel_tol"));
    m.step = get("step");
    return m;
}

RegressionData load_regression(const RunManifest& m) {
    RegressionData data;
    if (!m.data_dir.empty()) {
        data.a = read_dense((fs::path(m.data_dir) / "A.txt").string());
        DenseMatrix y = read_dense((fs::path(m.data_dir) / "y.txt").string());
        if (y.cols() == 1)
            data.y = DenseVector(std::vector<double>(y.values()));
        else
            data.y_multi = std::move(y);
    } else {
        SyntheticSpec spec;
        spec.n = m.n;
        spec.d = m.d;
        spec.m = m.problem == "trace-norm" ? m.m : 1;
        spec.seed = m.seed;
        spec.planted = m.planted;
        spec.noise_sigma = m.noise;
        data = generate_regression(spec);
    }
    return data;
}

struct BuiltProblem {
    ProblemSpec spec;
    double lambda = 0.0;
};

BuiltProblem build_problem(const RunManifest& m) {
    RegressionData data = load_regression(m);
    BuiltProblem out;
    if (m.problem == "trace-norm") {
        if (data.y_multi.size() == 0) throw UsageError("trace-norm needs a multi-column target (use --m > 1)");
        if (m.lambda) {
            out.lambda = *m.lambda;
        } else {
            // 0.1 × spectral norm of AᵀY, the trace-norm analog of ‖Aᵀy‖∞
            const DenseMatrix g = gemm(data.a, data.y_multi, true);
            out.lambda = 0.1 * std::sqrt(spectral_norm_sq(g).value);
        }
        data.lambda = out.lambda;
        out.spec = build_trace_norm(std::move(data));
        return out;
    }
    if (data.y.empty()) throw UsageError(m.problem + " needs a single target column");
    out.lambda = m.lambda ? *m.lambda : default_lambda(data.a, data.y);
    data.lambda = out.lambda;
    if (m.problem == "lasso") {
        out.spec = build_lasso(std::move(data));
    } else if (m.problem == "group-lasso") {
        data.groups = GroupPartition::contiguous(data.a.cols(), m.group_size);
        out.spec = build_group_lasso(std::move(data));
    } else {
        throw UsageError("unknown problem '" + m.problem + "'");
    }
    return out;
}

void add_problem_options(CLI::App& cmd, RunManifest& m) {
    cmd.add_option("--problem", m.problem, "Problem kind")
        ->check(CLI::IsMember({"lasso", "group-lasso", "trace-norm"}));
    cmd.add_option("--data", m.data_dir, "Directory with A.txt and y.txt (default: synthetic)");
    cmd.add_option("--n", m.n, "Synthetic sample count")->check(CLI::PositiveNumber);
    cmd.add_option("--d", m.d, "Synthetic dimension")->check(CLI::PositiveNumber);
    cmd.add_option("--m", m.m, "Tasks for trace-norm")->check(CLI::PositiveNumber);
    cmd.add_option("--seed", m.seed, "Random seed");
    cmd.add_flag("--planted", m.planted, "Targets from a sparse planted model");
    cmd.add_option("--noise", m.noise, "Noise level for --planted")->check(CLI::NonNegativeNumber);
    cmd.add_option("--lambda", m.lambda, "Regularization weight (default 0.1*critical)")
        ->check(CLI::NonNegativeNumber);
    cmd.add_option("--group-size", m.group_size, "Contiguous group size for group-lasso")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--rule", m.rules, "Solver rule (repeatable)")
        ->check(CLI::IsMember({"fista", "rapid1", "rapid2"}));
    cmd.add_option("--max-iter", m.max_iter, "Iteration cap")->check(CLI::PositiveNumber);
    cmd.add_option("--rel-tol", m.rel_tol, "Relative objective change that stops a run")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--step", m.step, "Step size policy")->check(CLI::IsMember({"fixed", "backtracking"}));
    cmd.add_option("--out", m.out, "Output directory");
    cmd.add_flag("--timing", m.timing, "Record wall time in traces (makes them non-reproducible)");
}

SolverConfig solver_config(const RunManifest& m, const std::string& rule) {
    SolverConfig c;
    c.rule = parse_rule(rule);
    c.step_policy = m.step == "backtracking" ? StepPolicy::Backtracking : StepPolicy::FixedInverseL;
    c.max_iter = m.max_iter;
    c.rel_tol = m.rel_tol;
    c.record_timing = m.timing;
    return c;
}

std::string trace_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / ("trace_" + name + ".csv")).string();
}

struct RuleRun {
    std::string rule;
    SolveResult result;
};

std::vector<RuleRun> run_rules(const RunManifest& m, const BuiltProblem& bp) {
    fs::create_directories(m.out);
    std::vector<RuleRun> runs;
    for (const auto& rule : m.rules) {
        const auto t0 = std::chrono::steady_clock::now();
        SolveResult res = solve(bp.spec, solver_config(m, rule), DenseVector(bp.spec.dim));
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        write_trace(trace_path(m.out, rule), res.trace);
        std::printf("rule=%s iterations=%zu converged=%d final_objective=%.12g wall_ms=%.1f\n", rule.c_str(),
                    res.iterations, res.converged ? 1 : 0, bp.spec.value(res.solution), ms);
        runs.push_back({rule, std::move(res)});
    }
    write_manifest((fs::path(m.out) / "manifest.txt").string(), m, bp.lambda);
    return runs;
}

// ---------------------------------------------------------------------------

int cmd_generate(const std::string& kind, const SyntheticSpec& spec, double separation, const std::string& out) {
    fs::create_directories(out);
    if (kind == "classification") {
        const LabeledData data = generate_classification(spec.n, spec.d, spec.seed, separation);
        const std::string path = (fs::path(out) / "classification.txt").string();
        write_sparse_classification(path, data);
        std::printf("wrote %s (%zu samples, %zu features)\n", path.c_str(), spec.n, spec.d);
        return 0;
    }
    const RegressionData data = generate_regression(spec);
    write_dense((fs::path(out) / "A.txt").string(), data.a);
    if (spec.m == 1)
        write_dense((fs::path(out) / "y.txt").string(), DenseMatrix(spec.n, 1, data.y.values()));
    else
        write_dense((fs::path(out) / "y.txt").string(), data.y_multi);
    std::printf("wrote %s/A.txt (%zux%zu) and y.txt (%zux%zu)\n", out.c_str(), spec.n, spec.d, spec.n, spec.m);
    return 0;
}

int cmd_solve(const RunManifest& m) {
    const BuiltProblem bp = build_problem(m);
    std::printf("problem=%s dim=%zu lambda=%.12g L=%.12g\n", m.problem.c_str(), bp.spec.dim, bp.lambda,
                bp.spec.lipschitz);
    run_rules(m, bp);
    return 0;
}

int cmd_compare(const RunManifest& m, std::size_t oracle_iters) {
    std::vector<std::string> unique = m.rules;
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    if (unique.size() < 2) throw UsageError("compare needs at least two distinct --rule values");

    const BuiltProblem bp = build_problem(m);
    std::printf("problem=%s dim=%zu lambda=%.12g L=%.12g\n", m.problem.c_str(), bp.spec.dim, bp.lambda,
                bp.spec.lipschitz);
    const auto runs = run_rules(m, bp);

    double f_star = estimate_f_star(bp.spec, oracle_iters);
    for (const auto& r : runs)
        for (const auto& rec : r.result.trace) f_star = std::min(f_star, rec.f_theta_x);
    std::printf("f_star=%.17g\n", f_star);

    const std::string csv = (fs::path(m.out) / "compare.csv").string();
    std::ofstream out(csv, std::ios::binary);
    require(out.good(), "io", "cannot write '" + csv + "'");
    out << "rule,t,objective_error,envelope_error\n";
    for (const auto& r : runs) {
        double envelope = INFINITY;
        for (const auto& rec : r.result.trace) {
            const double err = rec.f_theta_x - f_star;
            envelope = std::min(envelope, err);
            out << r.rule << ',' << rec.t << ',' << fmt17(err) << ',' << fmt17(envelope) << '\n';
        }
    }
    require(out.good(), "io", "write failed for '" + csv + "'");

    std::ofstream gp(fs::path(m.out) / "compare.gp");
    gp << "# gnuplot -persist compare.gp   (run from this directory)\n"
       << "set datafile separator ','\n"
       << "set logscale y\n"
       << "set format y '%.0e'\n"
       << "set xlabel 'iteration'\n"
       << "set ylabel 'f - f*'\n"
       << "set key top right\n"
       << "rules = \"";
    for (std::size_t i = 0; i < runs.size(); ++i) gp << (i ? " " : "") << runs[i].rule;
    gp << "\"\n"
       << "plot for [r in rules] 'compare.csv' every ::1 using 2:(strcol(1) eq r ? ($4 > 0 ? $4 : 1e-16) : 1/0) "
          "with lines title r\n";
    std::printf("wrote %s and compare.gp\n", csv.c_str());
    return 0;
}

struct SvmOptions {
    std::string data_file;
    std::size_t n = 2000;
    std::size_t d = 10;
    double separation = 2.0;
    double c = 1.0;
    std::vector<std::string> rules = {"rapid2"};
    double fraction = 0.05;
    std::uint64_t seed = 0;
    std::size_t max_iter = 5000;
    double rel_tol = 1e-7;
    std::string feasibility = "dykstra";
    std::string out = ".";
    bool timing = false;
};

int cmd_svm(const SvmOptions& o) {
    const LabeledData all = o.data_file.empty() ? generate_classification(o.n, o.d, o.seed, o.separation)
                                                : read_sparse_classification(o.data_file);
    const Split split = subsample(all, o.fraction, o.seed);
    const SvmProblem p = build_linear_kernel(split.train.x, split.train.y, o.c);
    std::printf("train=%zu test=%zu features=%zu C=%.6g\n", split.train.x.rows(), split.test.x.rows(),
                all.x.cols(), o.c);
    fs::create_directories(o.out);
    for (const auto& rule : o.rules) {
        SvmConfig cfg;
        cfg.rule = parse_svm_rule(rule);
        cfg.max_iter = o.max_iter;
        cfg.rel_tol = o.rel_tol;
        cfg.record_timing = o.timing;
        cfg.feasibility = o.feasibility == "plain" ? FeasibilityMethod::Plain : FeasibilityMethod::Dykstra;
        const auto t0 = std::chrono::steady_clock::now();
        const SvmResult res = solve_svm(p, cfg);
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        write_trace(trace_path(o.out, "svm_" + rule), res.trace);
        const LinearSvmModel model = linear_model(split.train.x, p, res.alpha);
        const auto feas = feasibility_residuals(p, res.alpha);
        std::printf("rule=%s iterations=%zu converged=%d dual_objective=%.12g train_acc=%.4f test_acc=%.4f "
                    "box_violation=%.3g hyperplane_residual=%.3g wall_ms=%.1f\n",
                    rule.c_str(), res.iterations, res.converged ? 1 : 0, svm_objective(p, res.alpha),
                    accuracy(model, split.train.x, split.train.y), accuracy(model, split.test.x, split.test.y),
                    feas.box, feas.hyperplane, ms);
    }
    return 0;
}

int cmd_audit(const std::string& trace_file, const std::string& manifest_file, std::optional<double> f_star,
              std::size_t oracle_iters, std::size_t samples, const std::string& format) {
    if (!fs::exists(trace_file)) throw UsageError("trace '" + trace_file + "' does not exist");
    const Trace trace = read_trace(trace_file);
    if (trace.empty()) throw UsageError("trace '" + trace_file + "' has no iterations");

    AuditReport report;
    report.checks.push_back(check_eta_sequence(trace));
    report.checks.push_back(check_theta_descent(trace));
    if (!manifest_file.empty()) {
        const RunManifest m = read_manifest(manifest_file);
        const BuiltProblem bp = build_problem(m);
        const std::size_t budget = std::max(oracle_iters, 10 * trace.size());
        const OracleSolution oracle = estimate_minimum(bp.spec, budget);
        report.f_star_estimate = f_star.value_or(oracle.f_star);
        report.f_star_source = f_star ? FStarSource::UserSupplied : FStarSource::OracleRun;
        report.checks.push_back(check_rate_bound(trace, report.f_star_estimate, bp.spec.lipschitz,
                                                 DenseVector(bp.spec.dim), oracle.x_star));
        report.checks.push_back(check_sandwich(bp.spec, samples, m.seed));
    }
    std::cout << (format == "kv" ? render_key_value(report) : render_text(report));
    return report.hard_checks_passed() ? 0 : kExitAudit;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"RAPID accelerated proximal gradient solvers"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Write synthetic data");
    std::string gen_kind = "regression";
    SyntheticSpec gen_spec;
    double gen_sep = 2.0;
    std::string gen_out = ".";
    gen->add_option("--kind", gen_kind, "regression or classification")
        ->check(CLI::IsMember({"regression", "classification"}));
    gen->add_option("--n", gen_spec.n, "Samples")->check(CLI::PositiveNumber);
    gen->add_option("--d", gen_spec.d, "Features")->check(CLI::PositiveNumber);
    gen->add_option("--m", gen_spec.m, "Regression tasks")->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_spec.seed, "Random seed");
    gen->add_flag("--planted", gen_spec.planted, "Targets from a sparse planted model");
    gen->add_option("--noise", gen_spec.noise_sigma, "Noise for --planted")->check(CLI::NonNegativeNumber);
    gen->add_option("--separation", gen_sep, "Class separation for classification")
        ->check(CLI::NonNegativeNumber);
    gen->add_option("--out", gen_out, "Output directory");

    // solve / compare
    auto* solve_cmd = app.add_subcommand("solve", "Run solver rules on a regression problem");
    RunManifest solve_m;
    add_problem_options(*solve_cmd, solve_m);

    auto* cmp = app.add_subcommand("compare", "Objective-error curves across rules");
    RunManifest cmp_m;
    std::size_t cmp_oracle = 20000;
    add_problem_options(*cmp, cmp_m);
    cmp->add_option("--oracle-iters", cmp_oracle, "FISTA iterations used to estimate f*")
        ->check(CLI::PositiveNumber);

    // svm
    auto* svm = app.add_subcommand("svm", "Dual linear-kernel SVM on a seeded split");
    SvmOptions so;
    svm->add_option("--data", so.data_file, "Sparse 'label idx:val' file (default: synthetic)");
    svm->add_option("--n", so.n, "Synthetic samples")->check(CLI::PositiveNumber);
    svm->add_option("--d", so.d, "Synthetic features")->check(CLI::PositiveNumber);
    svm->add_option("--separation", so.separation, "Synthetic class separation")->check(CLI::NonNegativeNumber);
    svm->add_option("--c", so.c, "Box bound C")->check(CLI::NonNegativeNumber);
    svm->add_option("--rule", so.rules, "apg, rapid1 or rapid2 (repeatable)")
        ->check(CLI::IsMember({"apg", "rapid1", "rapid2"}));
    svm->add_option("--fraction", so.fraction, "Training fraction")->check(CLI::Range(0.0, 1.0));
    svm->add_option("--seed", so.seed, "Split / data seed");
    svm->add_option("--max-iter", so.max_iter, "Iteration cap")->check(CLI::PositiveNumber);
    svm->add_option("--rel-tol", so.rel_tol, "Relative objective change that stops a run")
        ->check(CLI::PositiveNumber);
    svm->add_option("--feasibility", so.feasibility, "dykstra or plain alternating projection")
        ->check(CLI::IsMember({"dykstra", "plain"}));
    svm->add_option("--out", so.out, "Output directory");
    svm->add_flag("--timing", so.timing, "Record wall time in traces");

    // audit
    auto* aud = app.add_subcommand("audit", "Check a trace against the convergence guarantees");
    std::string aud_trace, aud_manifest, aud_format = "text";
    std::optional<double> aud_fstar;
    std::size_t aud_oracle = 20000, aud_samples = 500;
    aud->add_option("--trace", aud_trace, "Trace CSV")->required();
    aud->add_option("--manifest", aud_manifest, "manifest.txt from solve/compare (enables rate and sandwich checks)");
    aud->add_option("--f-star", aud_fstar, "Known optimal value");
    aud->add_option("--oracle-iters", aud_oracle, "Minimum oracle iterations")->check(CLI::PositiveNumber);
    aud->add_option("--samples", aud_samples, "Random pairs for the sandwich check")->check(CLI::PositiveNumber);
    aud->add_option("--format", aud_format, "text or kv")->check(CLI::IsMember({"text", "kv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (gen->parsed()) return cmd_generate(gen_kind, gen_spec, gen_sep, gen_out);
        if (solve_cmd->parsed()) return cmd_solve(solve_m);
        if (cmp->parsed()) return cmd_compare(cmp_m, cmp_oracle);
        if (svm->parsed()) {
            if (!(so.fraction > 0.0 && so.fraction < 1.0)) throw UsageError("--fraction must lie in (0, 1)");
            return cmd_svm(so);
        }
        if (aud->parsed()) return cmd_audit(aud_trace, aud_manifest, aud_fstar, aud_oracle, aud_samples, aud_format);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code() == "io" || e.code() == "malformed" || e.code() == "empty-data" || e.code() == "bad-labels"
                   ? kExitUsage
                   : kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitUsage;
}
