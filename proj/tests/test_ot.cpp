#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "wmdx/error.hpp"
#include "wmdx/ot.hpp"
#include "wmdx/rng.hpp"

using namespace wmdx;

namespace {

CostMatrix make_cost(std::size_t n, std::size_t m, std::vector<double> entries) {
    CostMatrix c(n, m);
    c.data() = std::move(entries);
    return c;
}

double max_marginal_residual(const TransportPlan& plan, const DiscreteMeasure& a,
                             const DiscreteMeasure& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < b.size(); ++j) row += plan.coupling(i, j);
        worst = std::max(worst, std::abs(row - a[i]));
    }
    for (std::size_t j = 0; j < b.size(); ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) col += plan.coupling(i, j);
        worst = std::max(worst, std::abs(col - b[j]));
    }
    return worst;
}

struct RandomInstance {
    DiscreteMeasure a;
    DiscreteMeasure b;
    CostMatrix cost;
};

RandomInstance random_instance(std::mt19937_64& rng, std::size_t max_side) {
    const std::size_t n = 1 + uniform_below(rng, max_side);
    const std::size_t m = 1 + uniform_below(rng, max_side);
    auto weights = [&](std::size_t k) {
        std::vector<double> w(k);
        double total = 0.0;
        for (auto& v : w) {
            v = 0.05 + uniform01(rng);
            total += v;
        }
        for (auto& v : w) v /= total;
        return w;
    };
    CostMatrix c(n, m);
    for (auto& v : c.data()) v = uniform01(rng);
    return {DiscreteMeasure(weights(n)), DiscreteMeasure(weights(m)), std::move(c)};
}

} // namespace

TEST_CASE("single-column instance forces the plan") {
    DiscreteMeasure a({0.5, 0.5});
    DiscreteMeasure b({1.0});
    const auto plan = solve_emd(a, b, make_cost(2, 1, {1.0, 3.0}));
    CHECK(plan.objective == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(plan.coupling(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(plan.coupling(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("identity coupling has zero cost") {
    DiscreteMeasure a({0.5, 0.5});
    const auto plan = solve_emd(a, a, make_cost(2, 2, {0.0, 1.0, 1.0, 0.0}));
    CHECK(plan.objective == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("2x2 instance against enumerated optimum") {
    DiscreteMeasure a({0.7, 0.3});
    DiscreteMeasure b({0.4, 0.6});
    const auto cost = make_cost(2, 2, {0.0, 1.0, 1.0, 0.0});
    const auto plan = solve_emd(a, b, cost);
    const auto oracle = brute_force_emd(a, b, cost);
    // Frozen from the oracle: moving the 0.3 surplus of row 0 costs 0.3.
    CHECK(plan.objective == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(oracle.objective == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("1x1 oracle returns the single feasible plan") {
    DiscreteMeasure one({1.0});
    const auto plan = brute_force_emd(one, one, make_cost(1, 1, {2.75}));
    CHECK(plan.objective == doctest::Approx(2.75).epsilon(1e-15));
    CHECK(plan.coupling(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("oracle rejects oversized instances") {
    std::vector<double> w(7, 1.0 / 7.0);
    DiscreteMeasure big(w);
    DiscreteMeasure one({1.0});
    CHECK_THROWS_WITH_AS(brute_force_emd(big, one, CostMatrix(7, 1, 1.0)),
                         doctest::Contains("6x6"), Error);
}

TEST_CASE("input validation") {
    DiscreteMeasure a({0.5, 0.5});
    DiscreteMeasure b({1.0});

    SUBCASE("dimension mismatch") {
        try {
            solve_emd(a, b, CostMatrix(3, 1, 1.0));
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::DimensionMismatch);
        }
    }
    SUBCASE("negative weight") {
        CHECK_THROWS_AS(DiscreteMeasure({1.2, -0.2}), Error);
    }
    SUBCASE("mass far from one") {
        CHECK_THROWS_AS(DiscreteMeasure({0.4, 0.4}), Error);
    }
    SUBCASE("mass within 1e-6 is renormalized") {
        DiscreteMeasure m({0.5 + 4e-7, 0.5});
        CHECK(m[0] + m[1] == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("non-finite cost") {
        try {
            solve_emd(a, b, make_cost(2, 1, {1.0, std::numeric_limits<double>::quiet_NaN()}));
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::NonfiniteCost);
        }
    }
    SUBCASE("negative cost") {
        CHECK_THROWS_AS(solve_emd(a, b, make_cost(2, 1, {1.0, -0.5})), Error);
    }
}

TEST_CASE("solver matches oracle on random instances") {
    std::mt19937_64 rng(20240117);
    for (int trial = 0; trial < 300; ++trial) {
        const auto inst = random_instance(rng, 6);
        const auto fast = solve_emd(inst.a, inst.b, inst.cost);
        const auto slow = brute_force_emd(inst.a, inst.b, inst.cost);
        CAPTURE(trial);
        CHECK(std::abs(fast.objective - slow.objective) <= 1e-9);
        CHECK(max_marginal_residual(fast, inst.a, inst.b) <= 1e-8);
        CHECK(max_marginal_residual(slow, inst.a, inst.b) <= 1e-8);
    }
}

TEST_CASE("positive homogeneity in the cost matrix") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const auto inst = random_instance(rng, 5);
        const double lambda = 0.25 + 3.0 * uniform01(rng);
        CostMatrix scaled = inst.cost;
        for (auto& v : scaled.data()) v *= lambda;
        const double base = solve_emd(inst.a, inst.b, inst.cost).objective;
        const double stretched = solve_emd(inst.a, inst.b, scaled).objective;
        CHECK(stretched == doctest::Approx(lambda * base).epsilon(1e-10));
    }
}

TEST_CASE("transpose symmetry") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const auto inst = random_instance(rng, 6);
        CostMatrix t(inst.cost.cols(), inst.cost.rows());
        for (std::size_t i = 0; i < inst.cost.rows(); ++i) {
            for (std::size_t j = 0; j < inst.cost.cols(); ++j) t(j, i) = inst.cost(i, j);
        }
        const double forward = solve_emd(inst.a, inst.b, inst.cost).objective;
        const double backward = solve_emd(inst.b, inst.a, t).objective;
        CHECK(std::abs(forward - backward) <= 1e-10);
    }
}

TEST_CASE("zero diagonal and equal measures give zero objective") {
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 25; ++trial) {
        const auto inst = random_instance(rng, 6);
        const std::size_t n = inst.a.size();
        CostMatrix c(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) c(i, j) = (i == j) ? 0.0 : uniform01(rng);
        }
        CHECK(std::abs(solve_emd(inst.a, inst.a, c).objective) <= 1e-12);
    }
}

TEST_CASE("identical inputs give identical plans") {
    std::mt19937_64 rng(555);
    const auto inst = random_instance(rng, 6);
    const auto first = solve_emd(inst.a, inst.b, inst.cost);
    const auto second = solve_emd(inst.a, inst.b, inst.cost);
    CHECK(first.objective == second.objective);
    CHECK(first.coupling == second.coupling);
}

TEST_CASE("near-zero weights are pruned and restored as zero rows") {
    DiscreteMeasure a({1.0 - 1e-13, 1e-13});
    DiscreteMeasure b({0.5, 0.5});
    const auto plan = solve_emd(a, b, make_cost(2, 2, {1.0, 2.0, 0.5, 0.5}));
    CHECK(plan.coupling(1, 0) == 0.0);
    CHECK(plan.coupling(1, 1) == 0.0);
    CHECK(plan.objective == doctest::Approx(1.5).epsilon(1e-9));
}

TEST_CASE("plan objective matches coupling contraction") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        const auto inst = random_instance(rng, 6);
        const auto plan = solve_emd(inst.a, inst.b, inst.cost);
        double recomputed = 0.0;
        for (std::size_t i = 0; i < inst.cost.rows(); ++i) {
            for (std::size_t j = 0; j < inst.cost.cols(); ++j) {
                recomputed += plan.coupling(i, j) * inst.cost(i, j);
            }
        }
        CHECK(plan.objective == doctest::Approx(recomputed).epsilon(1e-10));
    }
}
