#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace rapid;
using rapid::testing::max_abs_diff;
using rapid::testing::random_matrix;
using rapid::testing::random_vector;

namespace {

std::string error_code(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

double moreau(const DenseVector& x, const DenseVector& u, double t, double reg) {
    return 0.5 * norm2_sq(axpy(-1.0, u, x)) + t * reg;
}

} // namespace

TEST(ProxL1, Examples) {
    EXPECT_EQ(prox_l1(DenseVector{2, -0.3}, 0.5), (DenseVector{1.5, 0}));
    const DenseVector u{1, -2, 0.25};
    EXPECT_EQ(prox_l1(u, 0.0), u);
    EXPECT_EQ(prox_l1(DenseVector(3), 1.0), DenseVector(3));
    EXPECT_EQ(error_code([&] { prox_l1(u, -1.0); }), "bad-threshold");
}

TEST(ProxL1, OptimalityAgainstPerturbations) {
    RandomStream rng(1, RandomStream::Test);
    for (int trial = 0; trial < 100; ++trial) {
        const DenseVector u = random_vector(rng, 6, 2.0);
        const double t = rng.uniform(0.0, 2.0);
        const DenseVector x = prox_l1(u, t);
        const double best = moreau(x, u, t, norm1(x));
        for (int k = 0; k < 50; ++k) {
            const DenseVector z = axpy(1.0, random_vector(rng, 6, 0.1), x);
            EXPECT_LE(best, moreau(z, u, t, norm1(z)) + 1e-12);
        }
    }
}

TEST(ProxL1, Nonexpansive) {
    RandomStream rng(2, RandomStream::Test);
    for (int trial = 0; trial < 200; ++trial) {
        const DenseVector a = random_vector(rng, 5, 3.0), b = random_vector(rng, 5, 3.0);
        const double t = rng.uniform(0.0, 2.0);
        EXPECT_LE(norm2(axpy(-1.0, prox_l1(b, t), prox_l1(a, t))), norm2(axpy(-1.0, b, a)) + 1e-12);
    }
}

TEST(GroupPartition, Validation) {
    EXPECT_NO_THROW(GroupPartition({{0, 2}, {1}}, 3));
    EXPECT_EQ(error_code([] { GroupPartition({{0}, {0, 1}}, 2); }), "bad-partition");
    EXPECT_EQ(error_code([] { GroupPartition({{0}}, 2); }), "bad-partition");
    EXPECT_EQ(error_code([] { GroupPartition({{0, 5}}, 2); }), "bad-partition");
    EXPECT_EQ(error_code([] { GroupPartition({{}, {0}}, 1); }), "bad-partition");
    const auto c = GroupPartition::contiguous(7, 3);
    ASSERT_EQ(c.groups().size(), 3u);
    EXPECT_EQ(c.groups()[2], (std::vector<std::size_t>{6}));
}

TEST(ProxGroupL2, Examples) {
    const auto one = GroupPartition({{0, 1}}, 2);
    const DenseVector out = prox_group_l2(DenseVector{3, 4}, 2.5, one);
    EXPECT_NEAR(out[0], 1.5, 1e-15);
    EXPECT_NEAR(out[1], 2.0, 1e-15);
    EXPECT_EQ(prox_group_l2(DenseVector{3, 4}, 5.0, one), DenseVector(2));
    EXPECT_EQ(prox_group_l2(DenseVector{3, 4}, 0.0, one), (DenseVector{3, 4}));
    EXPECT_EQ(error_code([&] { prox_group_l2(DenseVector{1, 2, 3}, 1.0, one); }), "bad-partition");
}

TEST(ProxGroupL2, SingletonsMatchL1) {
    RandomStream rng(3, RandomStream::Test);
    const auto part = GroupPartition::singletons(8);
    for (int trial = 0; trial < 50; ++trial) {
        const DenseVector u = random_vector(rng, 8, 2.0);
        const double t = rng.uniform(0.0, 2.0);
        EXPECT_LT(max_abs_diff(prox_group_l2(u, t, part), prox_l1(u, t)), 1e-15);
    }
}

TEST(ProxTrace, Examples) {
    const DenseMatrix d = prox_trace(DenseMatrix::from_rows({{3, 0}, {0, 1}}), 2.0);
    EXPECT_LT(max_abs_diff(d, DenseMatrix::from_rows({{1, 0}, {0, 0}})), 1e-12);

    RandomStream rng(4, RandomStream::Test);
    const DenseMatrix u = random_matrix(rng, 4, 3);
    EXPECT_LT(max_abs_diff(prox_trace(u, 0.0), u), 1e-8);

    // rank one with σ = 5: shrinking by 1 scales by 4/5
    DenseVector a = random_vector(rng, 4), b = random_vector(rng, 3);
    a = scale(1.0 / norm2(a), a);
    b = scale(5.0 / norm2(b), b);
    DenseMatrix r(4, 3);
    for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t i = 0; i < 4; ++i) r(i, j) = a[i] * b[j];
    DenseMatrix expect = r;
    for (double& v : std::span<double>(expect.data(), expect.size())) v *= 0.8;
    EXPECT_LT(max_abs_diff(prox_trace(r, 1.0), expect), 1e-12);
    EXPECT_NEAR(trace_norm(r), 5.0, 1e-12);

    EXPECT_EQ(prox_trace(DenseMatrix(2, 3), 1.0), DenseMatrix(2, 3));
    EXPECT_EQ(error_code([&] { prox_trace(u, -0.5); }), "bad-threshold");
}

TEST(ProxTrace, OptimalityAgainstPerturbations) {
    RandomStream rng(5, RandomStream::Test);
    for (int trial = 0; trial < 30; ++trial) {
        const DenseMatrix u = random_matrix(rng, 3, 3);
        const double t = rng.uniform(0.0, 1.5);
        const DenseMatrix x = prox_trace(u, t);
        const DenseVector xf = flatten(x), uf = flatten(u);
        const double best = moreau(xf, uf, t, trace_norm(x));
        for (int k = 0; k < 30; ++k) {
            const DenseVector z = axpy(1.0, random_vector(rng, 9, 0.05), xf);
            EXPECT_LE(best, moreau(z, uf, t, trace_norm(unflatten(z, 3, 3))) + 1e-10);
        }
    }
}

TEST(ProjectBox, Examples) {
    EXPECT_EQ(project_box(DenseVector{-1, 0.5, 9}, 0.0, 1.0), (DenseVector{0, 0.5, 1}));
    EXPECT_EQ(project_box(DenseVector{0.2, 0.3}, 0.0, 1.0), (DenseVector{0.2, 0.3}));
    EXPECT_EQ(project_box(DenseVector{-3, 3}, 0.0, 0.0), DenseVector(2));
    EXPECT_EQ(error_code([] { project_box(DenseVector{1}, 1.0, 0.0); }), "bad-box");
}

TEST(ProjectHyperplane, Examples) {
    const DenseVector y{1, -1};
    EXPECT_EQ(project_hyperplane(DenseVector{2, 2}, y), (DenseVector{2, 2}));
    const DenseVector p = project_hyperplane(DenseVector{1, 0}, y);
    EXPECT_EQ(p, (DenseVector{0.5, 0.5}));
    EXPECT_EQ(dot(y, p), 0.0);
    const DenseVector y3{1, -1, 1};
    EXPECT_LT(norm_inf(project_hyperplane(y3, y3)), 1e-15);
    EXPECT_EQ(error_code([] { project_hyperplane(DenseVector{1, 2}, DenseVector{1, 0}); }), "bad-labels");
    EXPECT_EQ(error_code([] { project_hyperplane(DenseVector{1, 2}, DenseVector{1}); }), "shape");
}

TEST(ProjectHyperplane, IdempotentAndOrthogonal) {
    RandomStream rng(6, RandomStream::Test);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.below(10);
        DenseVector y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = rng.uniform() < 0.5 ? 1.0 : -1.0;
        const DenseVector u = random_vector(rng, n, 3.0);
        const DenseVector p = project_hyperplane(u, y);
        EXPECT_NEAR(dot(y, p), 0.0, 1e-12);
        EXPECT_LT(max_abs_diff(project_hyperplane(p, y), p), 1e-14);
        // u − p is parallel to y
        const DenseVector r = axpy(-1.0, p, u);
        const double c = dot(r, y) / static_cast<double>(n);
        EXPECT_LT(max_abs_diff(r, scale(c, y)), 1e-12);
    }
}
