#include <gtest/gtest.h>

#include "support.hpp"

using namespace pfdr;
using pfdr::testing::Gen;
using pfdr::testing::max_abs_diff;

TEST(Grid, Quadratic)
{
    const auto g = grid_minimize([](std::span<const double> p) { return (p[0] - 1) * (p[0] - 1); }, {{0, 2}}, 1e-4);
    EXPECT_NEAR(g.point[0], 1.0, 1e-4);
}

TEST(Grid, LassoAndSubgradientCondition)
{
    auto f = [](std::span<const double> p) { return 0.5 * (p[0] - 2) * (p[0] - 2) + std::abs(p[0]); };
    const auto g = grid_minimize(f, {{-3, 3}}, 1e-4);
    EXPECT_NEAR(g.point[0], 1.0, 1e-4);
    // 0 in x - 2 + d|x| at x = 1
    EXPECT_NEAR(g.point[0] - 2.0 + 1.0, 0.0, 1e-4);
    EXPECT_NEAR(g.value, 1.5, 1e-8);
}

TEST(Grid, SimplexIndicator)
{
    auto f = [](std::span<const double> p) {
        if (p[0] + p[1] > 1.0) return infinity;
        return (p[0] - 0.7) * (p[0] - 0.7) + (p[1] - 0.9) * (p[1] - 0.9);
    };
    const auto g = grid_minimize(f, {{0, 1}, {0, 1}}, 1e-4);
    EXPECT_LE(g.point[0] + g.point[1], 1.0);
    EXPECT_NEAR(g.point[0], 0.4, 1e-3);
    EXPECT_NEAR(g.point[1], 0.6, 1e-3);
}

TEST(Grid, ThreeDimensions)
{
    auto f = [](std::span<const double> p) {
        return std::abs(p[0] - 0.1) + (p[1] + 0.3) * (p[1] + 0.3) + std::abs(p[2] - 0.77);
    };
    const auto g = grid_minimize(f, {{-1, 1}, {-1, 1}, {-1, 1}}, 1e-4);
    EXPECT_LT(max_abs_diff(g.point, Vector{0.1, -0.3, 0.77}), 1e-4);
}

TEST(Grid, NotAboveProbedPoints)
{
    Gen gen(1);
    for (int t = 0; t < 20; ++t) {
        const Vector c = gen.vec(2, -1, 1);
        const double w = gen.uniform(0.1, 3);
        auto f = [&](std::span<const double> p) {
            return w * std::abs(p[0] - c[0]) + (p[1] - c[1]) * (p[1] - c[1]) + std::sin(3 * p[0]) * 0.1;
        };
        const auto g = grid_minimize(f, {{-2, 2}, {-2, 2}}, 1e-3);
        for (int s = 0; s < 50; ++s) {
            const auto probe = gen.vec(2, -2, 2);
            EXPECT_LE(g.value, f(probe) + 1e-9);
        }
    }
}

TEST(Grid, Errors)
{
    try {
        grid_minimize([](std::span<const double>) { return infinity; }, {{0, 1}}, 1e-2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::no_feasible_point);
    }
    auto f = [](std::span<const double>) { return 0.0; };
    EXPECT_THROW(grid_minimize(f, {{0, 1}}, 0.0), Error);
    EXPECT_THROW(grid_minimize(f, {{1, 0}}, 1e-2), Error);
    const std::vector<Interval> four(4, Interval{0, 1});
    EXPECT_THROW(grid_minimize(f, four, 1e-2), Error);
}

TEST(FiniteDifferences, HalfSquaredNorm)
{
    Gen gen(2);
    auto f = [](std::span<const double> x) { return 0.5 * detail::dot(x, x); };
    const auto x = gen.vec(5, -2, 2);
    EXPECT_LT(max_abs_diff(fd_gradient(f, x, 1e-4), x), 1e-9);
}

TEST(FiniteDifferences, SecondOrder)
{
    auto f = [](std::span<const double> x) { return std::exp(x[0]) * std::sin(2 * x[1]); };
    const Vector x{0.3, 0.4};
    const Vector exact{std::exp(0.3) * std::sin(0.8), 2 * std::exp(0.3) * std::cos(0.8)};
    const double e1 = max_abs_diff(fd_gradient(f, x, 1e-2), exact);
    const double e2 = max_abs_diff(fd_gradient(f, x, 5e-3), exact);
    EXPECT_NEAR(e1 / e2, 4.0, 0.1);
}

TEST(FiniteDifferences, KlGradient)
{
    Gen gen(3);
    for (int t = 0; t < 20; ++t) {
        const index_t K = gen.integer(2, 4);
        const double beta = gen.uniform(0.05, 0.9);
        const auto q = gen.simplex_rows(2, K), p = gen.simplex_rows(2, K);
        auto f = [&](std::span<const double> x) { return kl_data_term(x, q, beta, K); };
        EXPECT_LT(relative_error(fd_gradient(f, p, 1e-6), grad_smoothed_kl(p, q, beta, K)), 1e-6);
    }
}

TEST(FiniteDifferences, NonFiniteIsDomainViolation)
{
    auto f = [](std::span<const double> x) { return x[0] > 0 ? std::log(x[0]) : infinity; };
    try {
        fd_gradient(f, Vector{1e-9}, 1e-6);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::domain_violation);
    }
}

TEST(Reference, Lasso)
{
    SmoothTerm f;
    f.gradient = [](std::span<const double> x, std::span<double> g) { g[0] = x[0] - 2.0; };
    f.curvature = DiagonalOperator(1, 1.0);
    auto p = single_block_problem(1, l1_prox({1.0}), f, {}, 0.5);
    p.objective = [](std::span<const double> x) { return 0.5 * (x[0] - 2) * (x[0] - 2) + std::abs(x[0]); };
    const auto a = reference_solution(p);
    EXPECT_NEAR(a.f_inf, 1.5, 1e-10);
    const auto b = reference_solution(p);
    EXPECT_EQ(a.f_inf, b.f_inf);
    EXPECT_LT(a.residual, 1e-8 * (1 + std::abs(a.x[0])));
}

TEST(Reference, SeparableClosedForm)
{
    Gen gen(4);
    EEGInstance inst;
    inst.graph = chain_graph(6, 0.0);
    inst.phi = DenseOperator::identity(6);
    inst.y = gen.vec(6, -1, 2);
    inst.lambda_l1.assign(6, 0.25);
    double closed = 0.0;
    for (double y : inst.y) {
        const double x = std::max(y - 0.25, 0.0);
        closed += 0.5 * (x - y) * (x - y) + 0.25 * x;
    }
    const auto ref = reference_solution(build_eeg_problem(inst, SplitMode::pfdr));
    EXPECT_NEAR(ref.f_inf, closed, 1e-10);
}

TEST(Reference, ResidualSmallOnDeskInstances)
{
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto inst = synth_eeg(seed, 30, 12, 6, 0.01);
        const auto ref = reference_solution(build_eeg_problem(inst, SplitMode::pfdr), 20000);
        EXPECT_LT(ref.residual, 1e-8 * (1 + detail::norm_inf(ref.x)));
    }
}

TEST(OracleSuite, AllChecksPass)
{
    const auto results = run_oracle_checks();
    ASSERT_EQ(results.size(), 12u);
    for (const auto& r : results) {
        EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
        EXPECT_GT(r.instances, 0u);
    }
}

TEST(OracleSuite, PerturbedConstantIsNamed)
{
    OracleCheckOptions o;
    o.perturbation = 1e-3;
    const auto r = check_soft_threshold(o);
    EXPECT_FALSE(r.passed);
    EXPECT_EQ(r.name, "prox-grid/soft_threshold");
    EXPECT_FALSE(r.detail.empty());
}
