#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace rapid;
using rapid::testing::exact_feasible_projection;
using rapid::testing::grid_search_svm;
using rapid::testing::kkt_residual;
using rapid::testing::max_abs_diff;
using rapid::testing::random_matrix;
using rapid::testing::random_vector;
using rapid::testing::reference_svm_solution;

namespace {

std::string error_code(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

SvmProblem toy_problem(std::size_t n, std::size_t d, std::uint64_t seed, double c) {
    const LabeledData data = generate_classification(n, d, seed, 2.0);
    return build_linear_kernel(data.x, data.y, c);
}

} // namespace

TEST(SvmProblem, Validation) {
    const DenseVector y{1, -1};
    EXPECT_NO_THROW(make_svm_problem(DenseMatrix::identity(2), y, 1.0));
    EXPECT_EQ(error_code([&] { make_svm_problem(DenseMatrix::identity(3), y, 1.0); }), "shape");
    EXPECT_EQ(error_code([&] { make_svm_problem(DenseMatrix::identity(2), y, -1.0); }), "bad-c");
    EXPECT_EQ(error_code([&] { make_svm_problem(DenseMatrix::identity(2), DenseVector{1, 0}, 1.0); }),
              "bad-labels");
    EXPECT_EQ(error_code([&] { make_svm_problem(DenseMatrix::from_rows({{1, 0.5}, {0, 1}}), y, 1.0); }),
              "not-symmetric");
    EXPECT_EQ(error_code([&] { make_svm_problem(DenseMatrix::from_rows({{1, 2}, {2, 1}}), y, 1.0); }), "not-psd");
}

TEST(LinearKernel, Examples) {
    // orthonormal rows give K = I, so Q = I as well
    const auto p = build_linear_kernel(DenseMatrix::identity(3), DenseVector{1, -1, 1}, 1.0);
    EXPECT_EQ(p.q, DenseMatrix::identity(3));

    const DenseMatrix x = DenseMatrix::from_rows({{1, 2}, {3, 4}, {1, 2}});
    const auto d = build_linear_kernel(x, DenseVector{1, 1, 1}, 1.0);
    for (std::size_t j = 0; j < 3; ++j) {
        EXPECT_EQ(d.q(0, j), d.q(2, j));
        EXPECT_EQ(d.q(j, 0), d.q(j, 2));
    }
    EXPECT_EQ(d.q(0, 1), 11.0);
    EXPECT_EQ(error_code([&] { build_linear_kernel(x, DenseVector{1, 2, 1}, 1.0); }), "bad-labels");
}

TEST(SvmObjective, Examples) {
    const auto p = make_svm_problem(DenseMatrix::identity(2), DenseVector{1, -1}, 1.0);
    EXPECT_EQ(svm_objective(p, DenseVector(2)), 0.0);
    EXPECT_EQ(svm_objective(p, DenseVector{1, 1}), -1.0);
    EXPECT_EQ(error_code([&] { svm_objective(p, DenseVector(3)); }), "shape");
}

TEST(Direction, Examples) {
    const auto balanced = make_svm_problem(DenseMatrix::identity(2), DenseVector{1, -1}, 1.0);
    EXPECT_EQ(projected_gradient_direction(balanced, DenseVector(2)), (DenseVector{-1, -1}));

    const DenseVector y{1, 1, -1};
    const auto p = make_svm_problem(DenseMatrix::identity(3), y, 1.0);
    const DenseVector d = projected_gradient_direction(p, DenseVector(3));
    const DenseVector expect = axpy(1.0 / 3.0, y, DenseVector{-1, -1, -1});
    EXPECT_LT(max_abs_diff(d, expect), 1e-15);
    EXPECT_NEAR(dot(y, d), 0.0, 1e-15);
}

TEST(ExactStep, MinimizesAlongDirection) {
    const auto p = toy_problem(8, 3, 1, 1.0);
    RandomStream rng(1, RandomStream::Test);
    const DenseVector v = random_vector(rng, 8, 0.3);
    const DenseVector dv = projected_gradient_direction(p, v);
    const double g = exact_step_size(p, dv, v);
    const double f0 = svm_objective(p, axpy(-g, dv, v));
    for (double h : {1e-3, -1e-3}) EXPECT_LE(f0, svm_objective(p, axpy(-(g + h), dv, v)));
    const auto flat = make_svm_problem(DenseMatrix(2, 2), DenseVector{1, -1}, 1.0);
    EXPECT_EQ(error_code([&] { exact_step_size(flat, DenseVector{1, 1}, DenseVector(2)); }), "flat-direction");
}

TEST(Feasibility, Examples) {
    const auto p = make_svm_problem(DenseMatrix::identity(2), DenseVector{1, -1}, 1.0);
    EXPECT_EQ(alternate_project_feasible(DenseVector{0.3, 0.3}, p, 1e-12, 10), (DenseVector{0.3, 0.3}));

    const DenseVector a = alternate_project_feasible(DenseVector{2, 0}, p, 1e-12, 1000);
    EXPECT_NEAR(a[0], a[1], 1e-12);
    EXPECT_GE(a[0], 0.0);
    EXPECT_LE(a[0], 1.0);

    const auto zero_c = make_svm_problem(DenseMatrix::identity(3), DenseVector{1, -1, 1}, 0.0);
    EXPECT_EQ(alternate_project_feasible(DenseVector{2, -1, 5}, zero_c, 1e-12, 100), DenseVector(3));
}

TEST(Feasibility, DykstraMatchesExactProjection) {
    RandomStream rng(2, RandomStream::Test);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng.below(30);
        DenseVector y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = rng.uniform() < 0.5 ? 1.0 : -1.0;
        const double c = rng.uniform(0.1, 3.0);
        const auto p = make_svm_problem(DenseMatrix::identity(n), y, c);
        const DenseVector u = random_vector(rng, n, 2.0);
        const DenseVector got = alternate_project_feasible(u, p, 1e-12, 100000);
        const DenseVector ref = exact_feasible_projection(u, y, c);
        EXPECT_LT(max_abs_diff(got, ref), 1e-8);
        const auto res = feasibility_residuals(p, got);
        EXPECT_EQ(res.box, 0.0);
        EXPECT_LT(res.hyperplane, 1e-10);
    }
}

TEST(Feasibility, PlainAlternationIsFeasibleButNotNearest) {
    const auto p = make_svm_problem(DenseMatrix::identity(3), DenseVector{1, 1, -1}, 1.0);
    const DenseVector u{3.0, -1.0, 0.2};
    const DenseVector plain = alternate_project_feasible(u, p, 1e-12, 100000, FeasibilityMethod::Plain);
    const DenseVector exact = exact_feasible_projection(u, p.y, p.c);
    const auto res = feasibility_residuals(p, plain);
    EXPECT_EQ(res.box, 0.0);
    EXPECT_LT(res.hyperplane, 1e-10);
    EXPECT_GE(norm2(axpy(-1.0, u, plain)), norm2(axpy(-1.0, u, exact)) - 1e-12);
}

TEST(Feasibility, StallCarriesResiduals) {
    const auto p = make_svm_problem(DenseMatrix::identity(4), DenseVector{1, -1, 1, -1}, 1.0);
    try {
        alternate_project_feasible(DenseVector{5, -3, 2, 9}, p, 1e-14, 1);
        FAIL() << "expected a stall";
    } catch (const FeasibilityStall& e) {
        EXPECT_EQ(e.code(), "feasibility-stall");
        EXPECT_GE(e.box_violation(), 0.0);
        EXPECT_GE(e.hyperplane_residual(), 0.0);
    }
}

TEST(SvmTheta, Guards) {
    const auto p = make_svm_problem(DenseMatrix::identity(2), DenseVector{1, -1}, 2.0);
    EXPECT_EQ(svm_theta(p, DenseVector(2)), 1.0);
    // eᵀα/αᵀQα = 1/0.5 = 2, box cap = 2/0.5 = 4
    EXPECT_DOUBLE_EQ(svm_theta(p, DenseVector{0.5, 0.5}), 1.0 / 0.5);
    const auto flat = make_svm_problem(DenseMatrix(2, 2), DenseVector{1, -1}, 2.0);
    EXPECT_DOUBLE_EQ(svm_theta(flat, DenseVector{0.5, 0.25}), 2.0 / 0.5);
}

TEST(SolveSvm, MatchesReferenceSolver) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        for (double c : {0.1, 1.0, 10.0}) {
            const auto p = toy_problem(40, 4, seed, c);
            const double ref = svm_objective(p, reference_svm_solution(p, 20000));
            for (SvmRule r : {SvmRule::Apg, SvmRule::RapidI, SvmRule::RapidII}) {
                SvmConfig cfg;
                cfg.rule = r;
                cfg.rel_tol = 1e-15;
                cfg.max_iter = 20000;
                const auto res = solve_svm(p, cfg);
                EXPECT_NEAR(svm_objective(p, res.alpha), ref, 1e-6 * (1 + std::abs(ref)))
                    << "seed " << seed << " C " << c << " rule " << to_string(r);
                const auto feas = feasibility_residuals(p, res.alpha);
                EXPECT_LE(feas.box, 1e-12);
                EXPECT_LE(feas.hyperplane, 1e-8);
                EXPECT_LT(kkt_residual(p, res.alpha), 1e-4);
            }
        }
    }
}

// the unclipped exact step is ~10/L here; without halving, iterates 2-cycle
// between two vertices and never reach the optimum
TEST(SolveSvm, ClippedExactStepDoesNotCycle) {
    const LabeledData data = generate_classification(3, 2, 515, 1.0);
    const auto p = build_linear_kernel(data.x, data.y, 0.1);
    for (SvmRule r : {SvmRule::Apg, SvmRule::RapidII}) {
        SvmConfig cfg;
        cfg.rule = r;
        cfg.rel_tol = 1e-15;
        cfg.max_iter = 5000;
        const auto res = solve_svm(p, cfg);
        EXPECT_NEAR(svm_objective(p, res.alpha), grid_search_svm(p, 200), 1e-8) << to_string(r);
    }
}

TEST(SolveSvm, TraceIsMonotone) {
    const auto p = toy_problem(60, 5, 7, 1.0);
    SvmConfig cfg;
    const auto res = solve_svm(p, cfg);
    ASSERT_FALSE(res.trace.empty());
    for (std::size_t k = 1; k < res.trace.size(); ++k) {
        EXPECT_LE(res.trace[k].f_theta_x, res.trace[k - 1].f_theta_x);
        EXPECT_EQ(res.trace[k].t, k + 1);
    }
    EXPECT_TRUE(res.converged);
    EXPECT_NEAR(svm_objective(p, res.alpha), res.trace.back().f_theta_x, 1e-9);
}

TEST(SolveSvm, SameSignLabelsGiveZero) {
    const DenseMatrix x = DenseMatrix::from_rows({{1, 0}, {0, 1}, {1, 1}});
    const auto p = build_linear_kernel(x, DenseVector{1, 1, 1}, 1.0);
    const auto res = solve_svm(p, SvmConfig{});
    EXPECT_LT(norm_inf(res.alpha), 1e-9);
    for (std::size_t k = 1; k < res.trace.size(); ++k) EXPECT_LE(res.trace[k].f_theta_x, res.trace[k - 1].f_theta_x);
}

TEST(SolveSvm, DeterministicAndConfigChecked) {
    const auto p = toy_problem(30, 3, 3, 1.0);
    SvmConfig cfg;
    EXPECT_EQ(solve_svm(p, cfg).trace, solve_svm(p, cfg).trace);
    cfg.rel_tol = 0.0;
    EXPECT_EQ(error_code([&] { solve_svm(p, cfg); }), "bad-config");
}

TEST(SvmRules, Parse) {
    EXPECT_EQ(parse_svm_rule("apg"), SvmRule::Apg);
    EXPECT_EQ(parse_svm_rule("fista"), SvmRule::Apg);
    EXPECT_EQ(parse_svm_rule("rapid2"), SvmRule::RapidII);
    EXPECT_EQ(error_code([] { parse_svm_rule("smo"); }), "bad-rule");
}

TEST(LinearModel, SeparatesEasyData) {
    const LabeledData data = generate_classification(200, 4, 5, 6.0);
    const auto p = build_linear_kernel(data.x, data.y, 1.0);
    const auto res = solve_svm(p, SvmConfig{});
    const auto model = linear_model(data.x, p, res.alpha);
    EXPECT_GT(accuracy(model, data.x, data.y), 0.97);
}
