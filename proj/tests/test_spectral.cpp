#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "qcdlab/spectral.hpp"

using namespace qcdlab;

namespace {

GridDensity uniform01(std::size_t m = 257) {
    return GridDensity(0.0, 1.0, std::vector<double>(m, 1.0));
}

GridDensity cos_density(std::size_t m = 513) {
    ModelDensity model(CurvatureParams(1.0, 2.0), -M_PI / 2.0, M_PI / 2.0, 0.0, 1.0);
    return model.sample(m);
}

SpectralProblem make_problem(GridDensity h, double p, std::size_t grid = 2048) {
    SpectralProblem prob;
    prob.density = std::move(h);
    prob.p = p;
    prob.grid = grid;
    return prob;
}

} // namespace

TEST_CASE("closed-form flat constants") {
    CHECK(lambda_p_closed_form(2.0, 1.0) == doctest::Approx(M_PI * M_PI).epsilon(1e-12));
    CHECK(lambda_p_closed_form(2.0, 2.0) == doctest::Approx(M_PI * M_PI / 4.0).epsilon(1e-12));
    // homogeneity: value(p, cD) = value(p, D)/c^p
    for (double p : {1.5, 3.0}) {
        const double c = 1.7;
        CHECK(lambda_p_closed_form(p, c * 1.3) ==
              doctest::Approx(lambda_p_closed_form(p, 1.3) / std::pow(c, p)).epsilon(1e-12));
    }
}

TEST_CASE("positive-curvature constant") {
    CHECK(lichnerowicz(1.0, 2.0) == doctest::Approx(2.0));
    CHECK(lichnerowicz(4.0, 5.0) == doctest::Approx(5.0));
    CHECK(lichnerowicz(1.0, 1e9) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK_THROWS_AS(lichnerowicz(0.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(lichnerowicz(-1.0, 2.0), std::invalid_argument);
}

TEST_CASE("flat Neumann gap matches pi^2") {
    auto res = solve_lambda_p(make_problem(uniform01(), 2.0));
    CHECK(res.method == "fd-eig");
    CHECK(res.lambda == doctest::Approx(M_PI * M_PI).epsilon(1e-5));
    CHECK(std::abs(res.balance) <= 1e-6);
    CHECK(res.residual <= 1e-6);
}

TEST_CASE("cosine weight has gap 2") {
    auto res = solve_lambda_p(make_problem(cos_density(), 2.0));
    CHECK(res.lambda == doctest::Approx(2.0).epsilon(5e-3));
}

TEST_CASE("shooting matches closed form for several p") {
    for (double p : {1.5, 2.5, 3.0, 4.0}) {
        auto prob = make_problem(uniform01(), p);
        auto res = solve_lambda_p(prob);
        CHECK(res.method == "shooting");
        CHECK(res.lambda == doctest::Approx(lambda_p_closed_form(p, 1.0)).epsilon(5e-3));
        CHECK(std::abs(res.balance) <= 1e-6);
    }
}

TEST_CASE("refinement is second order") {
    auto coarse = solve_lambda_p(make_problem(uniform01(), 2.0, 256));
    auto medium = solve_lambda_p(make_problem(uniform01(), 2.0, 512));
    auto fine = solve_lambda_p(make_problem(uniform01(), 2.0, 1024));
    const double d1 = std::abs(medium.lambda - coarse.lambda);
    const double d2 = std::abs(fine.lambda - medium.lambda);
    CHECK(d2 <= 4.0 * d1);
}

TEST_CASE("restricted mass side vs restricted space") {
    // lambda with Omega equals lambda of the density restricted to the hull
    std::mt19937_64 rng(5150);
    std::uniform_real_distribution<double> knot(0.5, 2.0);
    for (int trial = 0; trial < 4; ++trial) {
        std::vector<double> v(129);
        for (auto& val : v) val = knot(rng);
        GridDensity h(0.0, 2.0, std::move(v));
        const double o0 = 0.3, o1 = 1.5;

        SpectralProblem with_omega = make_problem(h, 2.0, 1024);
        with_omega.omega.parts = {{o0, o1}};
        auto a = solve_lambda_p(with_omega);
        CHECK(a.method == "shooting");

        auto restricted = make_problem(h.restricted(o0, o1, 1025), 2.0, 1024);
        auto b = solve_lambda_p(restricted);
        CHECK(b.method == "fd-eig");

        CHECK(a.lambda == doctest::Approx(b.lambda).epsilon(0.01));
    }
}

TEST_CASE("shrinking Omega with fixed hull never decreases the constant") {
    auto h = uniform01(257);
    SpectralProblem base = make_problem(h, 2.0, 512);
    base.omega.parts = {{0.0, 0.45}, {0.55, 1.0}};
    auto wide = solve_lambda_p(base);

    SpectralProblem shrunk = base;
    shrunk.omega.parts = {{0.0, 0.30}, {0.70, 1.0}}; // same hull [0,1]
    auto narrow = solve_lambda_p(shrunk);
    CHECK(narrow.lambda >= wide.lambda * (1.0 - 1e-6));

    // and the full-Omega problem is the smallest of the three
    auto full = solve_lambda_p(make_problem(h, 2.0, 512));
    CHECK(wide.lambda >= full.lambda * (1.0 - 1e-3));
}

TEST_CASE("two-sided weight perturbation moves the constant by at most c^2") {
    std::mt19937_64 rng(664);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double c = 1.5;
    auto h = uniform01(257);
    auto base = solve_lambda_p(make_problem(h, 2.0, 512));
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> v(257);
        for (auto& val : v) val = 1.0 + (c - 1.0) * uni(rng);
        GridDensity hp(0.0, 1.0, std::move(v)); // h <= h' <= c h
        auto pert = solve_lambda_p(make_problem(hp, 2.0, 512));
        CHECK(pert.lambda >= base.lambda / (c * c) * (1.0 - 1e-6));
        CHECK(pert.lambda <= base.lambda * (c * c) * (1.0 + 1e-6));
    }
}

TEST_CASE("log-Sobolev estimate for the uniform interval") {
    auto h = GridDensity(-0.5, 0.5, std::vector<double>(257, 1.0));
    auto res = estimate_lambda_ls(make_problem(h, 2.0));
    CHECK(res.method == "ls-minimize");
    CHECK(res.lambda == doctest::Approx(M_PI * M_PI).epsilon(0.05));
}

TEST_CASE("log-Sobolev scaling under dilation") {
    LogSobolevOptions opts;
    opts.grid = 512;
    auto h1 = GridDensity(0.0, 1.0, std::vector<double>(129, 1.0));
    auto h2 = GridDensity(0.0, 2.0, std::vector<double>(129, 1.0));
    auto a = estimate_lambda_ls(make_problem(h1, 2.0), opts);
    auto b = estimate_lambda_ls(make_problem(h2, 2.0), opts);
    CHECK(a.lambda == doctest::Approx(4.0 * b.lambda).epsilon(0.05));
}

TEST_CASE("log-Sobolev of the cosine model stays above the curvature value") {
    auto res = estimate_lambda_ls(make_problem(cos_density(), 2.0));
    CHECK(res.lambda >= 2.0 - 0.05);
}

TEST_CASE("gap report for the flat extremal density") {
    auto rep = theorem_gap(uniform01(513), 1.0, 0.0, 2.0, 2.0);
    CHECK(rep.ratio == doctest::Approx(1.0).epsilon(0.01));
    CHECK(rep.lower_ok);
    CHECK(rep.upper_ok);
}

TEST_CASE("gap report for the kink density") {
    std::vector<double> v(513);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double x = -1.0 + 2.0 * double(i) / double(v.size() - 1);
        v[i] = 1.0 + std::abs(x);
    }
    GridDensity h(-1.0, 1.0, std::move(v));
    auto rep = theorem_gap(h, 2.0, 0.0, 2.0, 2.0);
    // bound pi^2/4 with D = 2; measured must stay above bound/2
    CHECK(rep.bound == doctest::Approx(M_PI * M_PI / 4.0).epsilon(1e-9));
    CHECK(rep.lower_ok);
    CHECK(rep.measured >= M_PI * M_PI / 8.0 * (1.0 - 0.02));
}

TEST_CASE("gap report rejects a density failing its classification") {
    std::vector<double> v(129);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double x = -1.0 + 2.0 * double(i) / double(v.size() - 1);
        v[i] = 1.0 + std::abs(x);
    }
    GridDensity h(-1.0, 1.0, std::move(v));
    CHECK_THROWS_AS(theorem_gap(h, 1.0, 0.0, 2.0, 2.0), std::invalid_argument);
}

TEST_CASE("argument validation") {
    CHECK_THROWS_AS(solve_lambda_p(make_problem(uniform01(), 0.9)), std::invalid_argument);
    SpectralProblem bad = make_problem(uniform01(), 2.0);
    bad.omega.parts = {{-1.0, 0.5}};
    CHECK_THROWS_AS(solve_lambda_p(bad), std::invalid_argument);
}
