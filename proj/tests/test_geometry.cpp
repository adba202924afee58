#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "wmdx/error.hpp"
#include "wmdx/geometry.hpp"
#include "wmdx/rng.hpp"

using namespace wmdx;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t d, double scale = 1.0) {
    std::vector<double> v(d);
    for (auto& x : v) x = scale * (2.0 * uniform01(rng) - 1.0);
    return v;
}

} // namespace

TEST_CASE("squared euclidean cost") {
    const std::vector<double> a{0.3, -0.7};
    CHECK(euclidean_sq_cost(a, a) == 0.0);
    CHECK(euclidean_sq_cost(std::vector<double>{0, 0}, std::vector<double>{3, 4}) == 25.0);
    CHECK(euclidean_sq_cost(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 2.0);
    CHECK_THROWS_AS(euclidean_sq_cost(a, std::vector<double>{1.0}), Error);
}

TEST_CASE("poincare ball cost") {
    const std::vector<double> p{0.2, 0.1};
    CHECK(poincare_cost(p, p) == 0.0);

    // arcosh(5/3) = ln 3 for the pair (0, 0), (0.5, 0).
    const std::vector<double> origin{0.0, 0.0};
    const std::vector<double> half{0.5, 0.0};
    CHECK(poincare_cost(origin, half) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(poincare_cost(half, origin) == poincare_cost(origin, half));

    SUBCASE("boundary vectors are rejected") {
        const std::vector<double> edge{1.0 - 1e-10, 0.0};
        try {
            poincare_cost(origin, edge);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::OutsideBall);
        }
    }

    SUBCASE("strictly increasing along a ray") {
        double previous = -1.0;
        for (int step = 1; step <= 100; ++step) {
            const double radius = 0.999 * double(step) / 101.0;
            const double value = poincare_cost(origin, std::vector<double>{radius, 0.0});
            CHECK(value > previous);
            previous = value;
        }
    }
}

TEST_CASE("cosine cost") {
    CHECK(cosine_cost(std::vector<double>{2, 1}, std::vector<double>{2, 1}) == 0.0);
    CHECK(cosine_cost(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 1.0);
    CHECK(cosine_cost(std::vector<double>{1, 0}, std::vector<double>{-1, 0}) == 2.0);
    CHECK_THROWS_AS(cosine_cost(std::vector<double>{0, 0}, std::vector<double>{1, 0}), Error);
}

TEST_CASE("fisher cosine cost") {
    const auto identity = FisherMatrix::identity(2);
    CHECK(fisher_cosine_cost(std::vector<double>{1, 0}, std::vector<double>{0, 1}, identity) == 1.0);
    CHECK(fisher_cosine_cost(std::vector<double>{0.4, -1.0}, std::vector<double>{0.4, -1.0},
                             identity) == doctest::Approx(0.0).epsilon(1e-15));

    // M = diag(4, 1), u = (1, 0), v = (1, 1): 1 - 4 / (2 sqrt 5).
    const FisherMatrix diag(2, {4, 0, 0, 1});
    const double expected = 1.0 - 4.0 / (2.0 * std::sqrt(5.0));
    CHECK(fisher_cosine_cost(std::vector<double>{1, 0}, std::vector<double>{1, 1}, diag) ==
          doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(0.1056).epsilon(1e-3));

    SUBCASE("identity metric matches plain cosine") {
        std::mt19937_64 rng(42);
        const auto id8 = FisherMatrix::identity(8);
        for (int trial = 0; trial < 1000; ++trial) {
            const auto u = random_vector(rng, 8);
            const auto v = random_vector(rng, 8);
            CHECK(std::abs(fisher_cosine_cost(u, v, id8) - cosine_cost(u, v)) <= 1e-12);
        }
    }

    SUBCASE("zero metric norm is rejected") {
        try {
            fisher_cosine_cost(std::vector<double>{0, 0}, std::vector<double>{1, 0}, identity);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::ZeroVector);
        }
    }
}

TEST_CASE("fisher matrix validation") {
    CHECK_THROWS_AS(FisherMatrix(2, {1, 0.5, 0.2, 1}), Error);      // asymmetric
    CHECK_THROWS_AS(FisherMatrix(2, {1, 2, 2, 1}), Error);          // indefinite
    CHECK_THROWS_AS(FisherMatrix(2, {0, 0, 0, 0}), Error);          // singular
    CHECK_NOTHROW(FisherMatrix(2, {2, 0.5, 0.5, 1}));
}

TEST_CASE("cost functions are exactly symmetric") {
    std::mt19937_64 rng(7);
    const FisherMatrix metric(3, {2, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 1.0});
    for (int trial = 0; trial < 200; ++trial) {
        const auto u = random_vector(rng, 3, 0.5);
        const auto v = random_vector(rng, 3, 0.5);
        CHECK(euclidean_sq_cost(u, v) == euclidean_sq_cost(v, u));
        CHECK(poincare_cost(u, v) == poincare_cost(v, u));
        CHECK(cosine_cost(u, v) == cosine_cost(v, u));
        CHECK(fisher_cosine_cost(u, v, metric) == fisher_cosine_cost(v, u, metric));
    }
}

TEST_CASE("cosine costs are scale invariant") {
    std::mt19937_64 rng(11);
    const FisherMatrix metric(3, {2, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 1.0});
    for (int trial = 0; trial < 200; ++trial) {
        const auto u = random_vector(rng, 3);
        const auto v = random_vector(rng, 3);
        std::vector<double> su(u), sv(v);
        const double factor = 0.01 + 10.0 * uniform01(rng);
        for (auto& x : su) x *= factor;
        for (auto& x : sv) x *= 2.5;
        CHECK(cosine_cost(su, sv) == doctest::Approx(cosine_cost(u, v)).epsilon(1e-10));
        CHECK(fisher_cosine_cost(su, sv, metric) ==
              doctest::Approx(fisher_cosine_cost(u, v, metric)).epsilon(1e-10));
    }
}

TEST_CASE("zero iff equal for point distances") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const auto u = random_vector(rng, 4, 0.4);
        auto v = u;
        CHECK(euclidean_sq_cost(u, v) <= 1e-12);
        CHECK(poincare_cost(u, v) <= 1e-12);
        v[1] += 0.05;
        CHECK(euclidean_sq_cost(u, v) > 1e-12);
        CHECK(poincare_cost(u, v) > 1e-12);
    }
}

TEST_CASE("cost matrix assembly") {
    EmbeddingTable table(2);
    table.add("origin", std::vector<double>{0, 0});
    table.add("far", std::vector<double>{3, 4});
    table.add("e1", std::vector<double>{1, 0});
    table.add("e2", std::vector<double>{0, 1});

    Geometry euclid;
    const std::uint32_t origin = *table.index_of("origin");
    const std::uint32_t far = *table.index_of("far");
    const std::uint32_t e1 = *table.index_of("e1");
    const std::uint32_t e2 = *table.index_of("e2");

    SUBCASE("single word, zero self cost") {
        const std::vector<std::uint32_t> w{far};
        for (auto kind : {GeometryKind::EuclideanSquared, GeometryKind::Cosine}) {
            Geometry g;
            g.kind = kind;
            const auto c = build_cost_matrix(w, w, table, g);
            CHECK(c.rows() == 1);
            CHECK(c(0, 0) == 0.0);
        }
    }

    SUBCASE("2x1 euclidean block") {
        const std::vector<std::uint32_t> a{origin, far};
        const std::vector<std::uint32_t> b{origin};
        const auto c = build_cost_matrix(a, b, table, euclid);
        CHECK(c(0, 0) == 0.0);
        CHECK(c(1, 0) == 25.0);
    }

    SUBCASE("euclidean power 1 takes the root") {
        Geometry g;
        g.euclidean_power = 1;
        const std::vector<std::uint32_t> a{origin, far};
        const std::vector<std::uint32_t> b{origin};
        const auto c = build_cost_matrix(a, b, table, g);
        CHECK(c(1, 0) == 5.0);
    }

    SUBCASE("orthonormal words under cosine") {
        Geometry g;
        g.kind = GeometryKind::Cosine;
        const std::vector<std::uint32_t> w{e1, e2};
        const auto c = build_cost_matrix(w, w, table, g);
        CHECK(c(0, 0) == 0.0);
        CHECK(c(1, 1) == 0.0);
        CHECK(c(0, 1) == 1.0);
        CHECK(c(1, 0) == 1.0);
    }

    SUBCASE("per-pair errors name the words") {
        Geometry g;
        g.kind = GeometryKind::Cosine;
        const std::vector<std::uint32_t> a{origin};
        const std::vector<std::uint32_t> b{e1};
        CHECK_THROWS_WITH_AS(build_cost_matrix(a, b, table, g), doctest::Contains("origin"),
                             Error);
    }

    SUBCASE("fisher geometry needs a metric") {
        Geometry g;
        g.kind = GeometryKind::FisherCosine;
        const std::vector<std::uint32_t> w{e1};
        CHECK_THROWS_AS(build_cost_matrix(w, w, table, g), Error);
    }
}

TEST_CASE("fisher matrix file round trip") {
    const auto path = std::filesystem::temp_directory_path() / "wmdx_fisher_test.txt";
    {
        std::ofstream out(path);
        out << "2\n4 0\n0 1\n";
    }
    const auto metric = load_fisher_matrix(path);
    CHECK(metric.dimension() == 2);
    CHECK(metric(0, 0) == 4.0);
    CHECK(metric(1, 1) == 1.0);
    std::filesystem::remove(path);
}
