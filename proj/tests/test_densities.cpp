#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "qcdlab/classify.hpp"
#include "qcdlab/grid_density.hpp"

using namespace qcdlab;

namespace {

GridDensity one_plus_abs(std::size_t m = 257) {
    std::vector<double> v(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double x = -1.0 + 2.0 * double(i) / double(m - 1);
        v[i] = 1.0 + std::abs(x);
    }
    return GridDensity(-1.0, 1.0, std::move(v));
}

GridDensity constant_density(double c, double a, double b, std::size_t m = 65) {
    return GridDensity(a, b, std::vector<double>(m, c));
}

} // namespace

TEST_CASE("grid density basics") {
    GridDensity h(0.0, 1.0, {0.0, 1.0, 0.0});
    CHECK(h.eval(0.25) == doctest::Approx(0.5));
    CHECK(h.eval(-0.1) == 0.0);
    CHECK(h.eval(2.0) == 0.0);
    CHECK(h.mass() == doctest::Approx(0.5));
    CHECK(h.integral(0.0, 0.5) == doctest::Approx(0.25));
    CHECK_THROWS(GridDensity(1.0, 0.0, {1.0, 1.0}));
    CHECK_THROWS(GridDensity(0.0, 1.0, {1.0}));
    CHECK_THROWS(GridDensity(0.0, 1.0, {1.0, -0.5}));
}

TEST_CASE("interior zero detection") {
    CHECK(GridDensity(0.0, 1.0, {1.0, 0.0, 1.0}).has_interior_zero());
    CHECK_FALSE(GridDensity(0.0, 1.0, {0.0, 1.0, 0.0}).has_interior_zero());
    CHECK_FALSE(GridDensity(0.0, 1.0, {0.0, 0.0, 1.0, 2.0}).has_interior_zero());
}

TEST_CASE("model density closed forms") {
    SUBCASE("flat constant") {
        ModelDensity m(CurvatureParams(0.0, 2.0), 0.0, 1.0, 1.0, 0.0);
        auto g = m.sample(5);
        for (double v : g.values()) CHECK(v == doctest::Approx(1.0));
    }
    SUBCASE("cosine after recentering") {
        ModelDensity m(CurvatureParams(1.0, 2.0), -M_PI / 2.0, M_PI / 2.0, 0.0, 1.0);
        // u(t) = sin(t + pi/2) = cos(t)
        CHECK(m.eval(0.0) == doctest::Approx(1.0));
        CHECK(m.eval(1.0) == doctest::Approx(std::cos(1.0)).epsilon(1e-12));
        auto g = m.sample(3);
        CHECK(g.values()[0] == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(g.values()[1] == doctest::Approx(1.0));
        CHECK(g.values()[2] == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("affine root, quadratic density") {
        ModelDensity m(CurvatureParams(0.0, 3.0), 0.0, 1.0, 0.0, 1.0);
        auto g = m.sample(3);
        CHECK(g.values()[0] == doctest::Approx(0.0));
        CHECK(g.values()[1] == doctest::Approx(0.25));
        CHECK(g.values()[2] == doctest::Approx(1.0));
    }
    SUBCASE("diameter beyond the comparison span is rejected") {
        CHECK_THROWS_AS(ModelDensity(CurvatureParams(1.0, 2.0), 0.0, 4.0, 1.0, 0.0),
                        std::invalid_argument);
    }
    SUBCASE("interior zero crossing is rejected") {
        CHECK_THROWS_AS(ModelDensity(CurvatureParams(0.0, 2.0), 0.0, 1.0, 1.0, -2.0),
                        std::invalid_argument);
    }
}

TEST_CASE("constant density is flat curvature-dimension") {
    auto h = constant_density(1.0, 0.0, 1.0);
    for (double N : {2.0, 3.0, 7.5}) {
        auto rep = classify(h, ConditionSpec::cd(0.0, N));
        CHECK(rep.passed);
        CHECK(std::abs(rep.worst_violation) <= 1e-12);
    }
}

TEST_CASE("kink density fails CD but passes QCD(2)") {
    auto h = one_plus_abs();

    auto cd = classify(h, ConditionSpec::cd(0.0, 2.0));
    CHECK_FALSE(cd.passed);
    // hand value: chord from (-1,1) at t=1/2 gives 2 > h(0) = 1
    CHECK(cd.worst_violation == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(cd.witness.x0 == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(cd.witness.x1 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(cd.witness.t == doctest::Approx(0.5).epsilon(1e-9));

    auto qcd = classify(h, ConditionSpec::qcd(2.0, 0.0, 2.0));
    CHECK(qcd.passed);
}

TEST_CASE("model densities satisfy their own condition with near equality") {
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> Kd(-1.0, 1.5), Nd(2.0, 5.0), u0d(0.3, 2.0),
        sd(-0.5, 0.8);
    for (int trial = 0; trial < 8; ++trial) {
        const double K = Kd(rng), N = Nd(rng);
        CurvatureParams p(K, N);
        double b = std::min(1.5, 0.9 * coeff::max_diameter(p));
        double u0 = u0d(rng), s = sd(rng);
        ModelDensity m(p, 0.0, b, u0, std::abs(s) * u0); // upward slope keeps u > 0
        auto h = m.sample(129);
        auto rep = classify(h, ConditionSpec::cd(K, N));
        CHECK(rep.passed);
    }
}

TEST_CASE("CD implies MCP implies QCD on a fixed density") {
    ModelDensity m(CurvatureParams(1.0, 3.0), 0.0, 2.0, 1.0, 0.1);
    auto h = m.sample(129);
    auto cd = classify(h, ConditionSpec::cd(1.0, 3.0));
    auto mcp = classify(h, ConditionSpec::mcp(1.0, 3.0));
    CHECK(cd.passed);
    CHECK(mcp.passed);
    CHECK(mcp.worst_violation >= cd.worst_violation - 1e-12);
    for (double Q : {1.0, 1.5, 4.0}) {
        auto q = classify(h, ConditionSpec::qcd(Q, 1.0, 3.0));
        CHECK(q.passed);
        CHECK(q.worst_violation >= cd.worst_violation - 1e-12);
    }
}

TEST_CASE("monotonicity in the quasi-convexity order") {
    auto h = one_plus_abs(129);
    double prev = -kInf;
    for (double Q : {1.0, 1.3, 1.7, 2.0, 3.0, 8.0}) {
        auto rep = classify(h, ConditionSpec::qcd(Q, 0.0, 2.0));
        CHECK(rep.worst_violation >= prev - 1e-12);
        prev = rep.worst_violation;
    }
}

TEST_CASE("CGTD implies MCP and the quasi condition with order 2^(N-n)") {
    // Model densities of dimension N satisfy CGTD(K,N,n) for n <= N: the
    // equality case of the chord relation survives the Jensen transitions.
    std::mt19937_64 rng(31337);
    std::uniform_real_distribution<double> Nd(2.5, 5.0);
    for (int trial = 0; trial < 6; ++trial) {
        const double N = Nd(rng);
        std::uniform_real_distribution<double> nd(1.0, N);
        const double n = nd(rng);
        ModelDensity m(CurvatureParams(0.0, N), 0.0, 1.0, 1.0, 0.4);
        auto h = m.sample(65);
        auto cgtd = classify(h, ConditionSpec::cgtd(0.0, N, n));
        REQUIRE(cgtd.passed); // superadditivity of x^((N-1)/(n-1)) on the chord equality
        auto mcp = classify(h, ConditionSpec::mcp(0.0, N));
        auto qcd = classify(h, ConditionSpec::qcd(coeff::qcd_from_mcp(N, n), 0.0, N));
        CHECK(mcp.passed);
        CHECK(qcd.passed);
    }
}

TEST_CASE("positive curvature diameter gate") {
    auto h = constant_density(1.0, 0.0, 4.0);
    auto rep = classify(h, ConditionSpec::cd(1.0, 2.0)); // max diameter pi < 4
    CHECK_FALSE(rep.passed);
    CHECK(!rep.diagnostic.empty());
}

TEST_CASE("maximal-support cosine density classifies cleanly") {
    // diameter exactly at the comparison span: the extreme pairs evaluate
    // sigma = inf against vanishing endpoint values, which contribute zero
    ModelDensity m(CurvatureParams(1.0, 2.0), -M_PI / 2.0, M_PI / 2.0, 0.0, 1.0);
    auto h = m.sample(257);
    auto rep = classify(h, ConditionSpec::cd(1.0, 2.0));
    CHECK(rep.passed);
    CHECK(std::isfinite(rep.worst_violation));
}

TEST_CASE("interior zeros rejected for quasi conditions") {
    GridDensity h(0.0, 1.0, {1.0, 1.0, 0.0, 1.0, 1.0});
    CHECK_THROWS_AS(classify(h, ConditionSpec::qcd(2.0, 0.0, 2.0)), std::invalid_argument);
    CHECK_THROWS_AS(classify(h, ConditionSpec::cgtd(0.0, 3.0, 2.0)), std::invalid_argument);
    CHECK_NOTHROW(classify(h, ConditionSpec::cd(0.0, 2.0))); // plainly fails instead
}

TEST_CASE("spec validation") {
    CHECK_THROWS_AS(ConditionSpec::qcd(0.5, 0.0, 2.0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(ConditionSpec::cgtd(0.0, 2.0, 3.0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(ConditionSpec::cd(0.0, 1.0).validate(), std::invalid_argument);
}
