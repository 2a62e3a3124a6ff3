#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "ellv/cavity.hpp"
#include "oracles.hpp"

using namespace ellv;

TEST_CASE("truncated moments match direct quadrature", "[cavity][oracle]") {
    for (double delta : {-6.0, -2.0, -0.5, 0.0, 0.3, 1.0, 2.5, 6.0}) {
        const auto tm = truncated_moments(delta);
        const auto ref = oracles::truncated_moments_quadrature(delta);
        CHECK(std::abs(tm.p - ref.p) <= 1e-8);
        CHECK(std::abs(tm.e1 - ref.e1) <= 1e-8);
        CHECK(std::abs(tm.e2 - ref.e2) <= 1e-8);
    }
}

TEST_CASE("truncated moments frozen values", "[cavity]") {
    const auto at_zero = truncated_moments(0.0);
    CHECK(at_zero.p == Catch::Approx(0.5).epsilon(1e-14));
    CHECK(at_zero.e1 == Catch::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-13));
    CHECK(at_zero.e2 == Catch::Approx(1.0).epsilon(1e-14));

    const auto at_one = truncated_moments(1.0);
    CHECK(at_one.p == Catch::Approx(0.8413447461).epsilon(1e-9));
    CHECK(at_one.e1 == Catch::Approx(0.2875999709).epsilon(1e-9));
    CHECK(at_one.e2 == Catch::Approx(0.7124000291).epsilon(1e-9));

    const auto far = truncated_moments(40.0);
    CHECK(far.p >= 1.0 - 1e-12);
    CHECK(std::abs(far.e1) <= 1e-10);
    CHECK(far.e2 == Catch::Approx(1.0).margin(1e-8));

    CHECK_THROWS_AS(truncated_moments(std::numeric_limits<double>::infinity()),
                    ParameterError);
}

TEST_CASE("e2 identity holds across the delta range", "[cavity]") {
    for (double delta = -7.0; delta <= 7.0; delta += 0.25) {
        const auto tm = truncated_moments(delta);
        CHECK(std::abs(tm.e2 - (1.0 - delta * tm.e1)) <= 1e-14);
        CHECK(tm.e2 >= tm.e1 * tm.e1 - 1e-12);  // conditional variance >= 0
    }
}

TEST_CASE("cavity_rhs limits and ordering", "[cavity]") {
    // effectively untruncated: Delta = 100
    CavityState s{1.0, 1.0, 1.0, 0.01};
    const auto big = cavity_rhs(s, 0.0, 100.0, 0.0);
    CHECK(big.phi >= 1.0 - 1e-12);

    // rho = 0 collapses the v update to phi'/alpha exactly
    CavityState t{0.8, 1.3, 2.0, 0.2};
    const auto r = cavity_rhs(t, 0.0, 3.0, 0.1);
    CHECK(r.v == r.phi / 3.0);

    CavityState bad{1.0, 1.0, -1.0, 0.0};
    CHECK_THROWS_AS(cavity_rhs(bad, 0.0, 2.0, 0.0), EvaluationError);
}

TEST_CASE("solve_cavity reaches the large-alpha limit", "[cavity]") {
    const auto result = solve_cavity(0.0, 100.0, 0.0);
    CHECK(result.state.phi == Catch::Approx(1.0).margin(1e-2));
    CHECK(result.state.m == Catch::Approx(1.0).margin(1e-2));
    CHECK(result.state.q == Catch::Approx(1.0).margin(1e-2));
    CHECK(result.state.v == Catch::Approx(0.01).margin(1e-2));
    CHECK(result.residual <= 1e-10);
}

TEST_CASE("fixed point is self-consistent", "[cavity]") {
    const double rho = 0.5, alpha = 4.0, mu = 0.2;
    const auto result = solve_cavity(rho, alpha, mu);
    const auto re = cavity_rhs(result.state, rho, alpha, mu);

    CHECK(std::abs(re.phi - result.state.phi) <= 2e-10);
    CHECK(std::abs(re.m - result.state.m) <= 2e-10);
    CHECK(std::abs(re.q - result.state.q) <= 2e-10);
    CHECK(std::abs(re.v - result.state.v) <= 2e-10);

    // Delta recomputed from (m, q) reproduces phi through the CDF
    const double delta = cavity_delta(result.state, alpha, mu);
    CHECK(std::abs(normal_cdf(delta) - result.state.phi) <= 1e-9);

    // quadratic residual of the v equation
    const auto& st = result.state;
    CHECK(std::abs(st.v * (alpha - rho * st.v) - st.phi) <= 1e-9);
}

TEST_CASE("rho = 0 reduction gives v = phi/alpha", "[cavity]") {
    const auto result = solve_cavity(0.0, 3.0, 0.1);
    CHECK(std::abs(result.state.v - result.state.phi / 3.0) <= 1e-10);
}

TEST_CASE("negative correlation preserves more species", "[cavity]") {
    const auto neg = solve_cavity(-0.9, 2.5, 0.0);
    const auto pos = solve_cavity(0.9, 2.5, 0.0);
    CHECK(neg.state.phi > pos.state.phi);
}

TEST_CASE("phi is non-increasing in rho at mu = 0", "[cavity]") {
    for (double alpha : {2.2, 3.0, 4.0}) {
        double prev = 2.0;
        for (double rho = -0.9; rho <= 0.9 + 1e-9; rho += 0.3) {
            if (!(alpha > std::sqrt(2.0 * (1.0 + rho)))) continue;
            const auto r = solve_cavity(rho, alpha, 0.0);
            CHECK(r.state.phi <= prev + 1e-3);
            prev = r.state.phi;
        }
    }
}

TEST_CASE("solve_cavity error paths", "[cavity]") {
    CavitySolveOptions opts;
    opts.max_iter = 3;
    opts.tol = 1e-16;
    try {
        solve_cavity(0.5, 2.5, 0.2, opts);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.residual >= 0.0);
    }
    CHECK_THROWS_AS(solve_cavity(0.5, -1.0, 0.0), ParameterError);
}

TEST_CASE("multistart solutions coincide", "[cavity]") {
    const auto ref = solve_cavity(0.5, 4.0, 0.2);
    CHECK(cavity_multistart_spread(0.5, 4.0, 0.2, ref) <= 1e-6);
}

TEST_CASE("continuation curve matches pointwise solves", "[cavity]") {
    const std::vector<double> alphas{6.0, 3.0, 2.4, 9.0};
    const auto curve = solve_cavity_curve(0.5, 0.2, alphas);
    for (std::size_t k = 0; k < alphas.size(); ++k) {
        const auto direct = solve_cavity(0.5, alphas[k], 0.2);
        CHECK(std::abs(curve[k].state.phi - direct.state.phi) <= 1e-8);
        CHECK(std::abs(curve[k].state.q - direct.state.q) <= 1e-7);
    }
}

TEST_CASE("cavity CSV layout", "[cavity]") {
    const auto r = solve_cavity(0.0, 5.0, 0.0);
    const std::string path = "test_cavity.csv";
    write_cavity_csv(path, {0.0}, {5.0}, {0.0}, {r}, "meta");
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "# meta");
    std::getline(in, line);
    CHECK(line == "rho,alpha,mu,phi,mean_x,mean_x2,v,residual,iterations");
    std::remove(path.c_str());
}
