#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "cbd/rational.hpp"
#include "cbd/simplex.hpp"

using namespace cbd;
using Catch::Matchers::WithinAbs;

namespace {

template <class T>
linear_program<T> single_equality() {
    // max x subject to x = 1/2, x >= 0
    linear_program<T> lp;
    lp.sense = lp_sense::maximize;
    lp.objective = {T(1)};
    lp.equalities = dense_matrix<T>(1, 1);
    lp.equalities(0, 0) = T(1);
    lp.rhs = {T(1) / T(2)};
    return lp;
}

}  // namespace

TEST_CASE("simplex solves a one-variable program") {
    const lp_solution<double> sol = solve(single_equality<double>());
    REQUIRE(sol.status == lp_status::optimal);
    REQUIRE_THAT(sol.objective, WithinAbs(0.5, 1e-12));
    REQUIRE_THAT(sol.x[0], WithinAbs(0.5, 1e-12));
}

TEST_CASE("simplex detects inconsistent equalities") {
    // x = 1 and x = 2 cannot both hold.
    linear_program<double> lp;
    lp.objective = {0.0};
    lp.equalities = dense_matrix<double>(2, 1);
    lp.equalities(0, 0) = 1.0;
    lp.equalities(1, 0) = 1.0;
    lp.rhs = {1.0, 2.0};
    REQUIRE(solve(lp).status == lp_status::infeasible);
}

TEST_CASE("simplex detects unbounded objectives") {
    // max x - y subject to x - y free in the positive direction: x - y = t.
    linear_program<double> lp;
    lp.sense = lp_sense::maximize;
    lp.objective = {1.0, 0.0};
    lp.equalities = dense_matrix<double>(1, 2);
    lp.equalities(0, 0) = 1.0;
    lp.equalities(0, 1) = -1.0;
    lp.rhs = {0.0};
    REQUIRE(solve(lp).status == lp_status::unbounded);
}

TEST_CASE("simplex handles negative right-hand sides") {
    // -x = -0.25 with minimize x.
    linear_program<double> lp;
    lp.objective = {1.0};
    lp.equalities = dense_matrix<double>(1, 1);
    lp.equalities(0, 0) = -1.0;
    lp.rhs = {-0.25};
    const lp_solution<double> sol = solve(lp);
    REQUIRE(sol.status == lp_status::optimal);
    REQUIRE_THAT(sol.x[0], WithinAbs(0.25, 1e-12));
}

TEST_CASE("simplex survives redundant rows") {
    // Same constraint twice plus a binding budget.
    linear_program<double> lp;
    lp.sense = lp_sense::maximize;
    lp.objective = {1.0, 2.0};
    lp.equalities = dense_matrix<double>(3, 2);
    lp.equalities(0, 0) = 1.0;
    lp.equalities(0, 1) = 1.0;
    lp.equalities(1, 0) = 1.0;
    lp.equalities(1, 1) = 1.0;
    lp.equalities(2, 0) = 2.0;
    lp.equalities(2, 1) = 2.0;
    lp.rhs = {1.0, 1.0, 2.0};
    const lp_solution<double> sol = solve(lp);
    REQUIRE(sol.status == lp_status::optimal);
    REQUIRE_THAT(sol.objective, WithinAbs(2.0, 1e-12));
}

TEST_CASE("simplex recovers random transportation optima") {
    // min sum c_ij x_ij with row/column sums fixed; compare against brute
    // force over the vertices of the 2x2 transportation polytope (a segment).
    std::mt19937_64 rng(97);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const double r0 = u(rng), r1 = u(rng), c0 = u(rng);
        const double total = r0 + r1;
        if (c0 >= total) continue;
        const double c1 = total - c0;
        double cost[4] = {u(rng), u(rng), u(rng), u(rng)};

        linear_program<double> lp;
        lp.objective = {cost[0], cost[1], cost[2], cost[3]};
        lp.equalities = dense_matrix<double>(4, 4);
        // x00 + x01 = r0; x10 + x11 = r1; x00 + x10 = c0; x01 + x11 = c1
        lp.equalities(0, 0) = lp.equalities(0, 1) = 1.0;
        lp.equalities(1, 2) = lp.equalities(1, 3) = 1.0;
        lp.equalities(2, 0) = lp.equalities(2, 2) = 1.0;
        lp.equalities(3, 1) = lp.equalities(3, 3) = 1.0;
        lp.rhs = {r0, r1, c0, c1};
        const lp_solution<double> sol = solve(lp);
        REQUIRE(sol.status == lp_status::optimal);

        // One free parameter t = x00 in [max(0, c0-r1), min(r0, c0)].
        const double lo = std::max(0.0, c0 - r1);
        const double hi = std::min(r0, c0);
        auto value = [&](double t) {
            return cost[0] * t + cost[1] * (r0 - t) + cost[2] * (c0 - t) +
                   cost[3] * (c1 - r0 + t);
        };
        const double expected = std::min(value(lo), value(hi));
        REQUIRE_THAT(sol.objective, WithinAbs(expected, 1e-9));
    }
}

TEST_CASE("simplex stays exact in rational mode") {
    const lp_solution<rational> sol = solve(single_equality<rational>());
    REQUIRE(sol.status == lp_status::optimal);
    REQUIRE(sol.objective == rational(1) / 2);

    // A system whose float inputs are exact binary rationals.
    linear_program<rational> lp;
    lp.sense = lp_sense::maximize;
    lp.objective = {rational(3), rational(5), rational(0), rational(0)};
    lp.equalities = dense_matrix<rational>(2, 4);
    lp.equalities(0, 0) = 1;
    lp.equalities(0, 2) = 1;  // x + s1 = 4
    lp.equalities(1, 1) = 1;
    lp.equalities(1, 3) = 1;  // y + s2 = 6
    lp.rhs = {rational(4), rational(6)};
    const lp_solution<rational> sol2 = solve(lp);
    REQUIRE(sol2.status == lp_status::optimal);
    REQUIRE(sol2.objective == rational(42));
    REQUIRE(sol2.x[0] == rational(4));
    REQUIRE(sol2.x[1] == rational(6));
}

TEST_CASE("doubles convert to rationals without loss") {
    REQUIRE(to_rational(0.5) == rational(1) / 2);
    REQUIRE(to_rational(0.375) == rational(3) / 8);
    REQUIRE(to_double(rational(3) / 8) == 0.375);
    // 0.1 is not 1/10 in binary; the conversion is exact for the double.
    REQUIRE(to_rational(0.1) != rational(1) / 10);
    REQUIRE(to_double(to_rational(0.1)) == 0.1);
}

TEST_CASE("simplex terminates on a classically degenerate program") {
    // Beale's cycling example (primal form); anti-cycling must finish it.
    // min -0.75 x1 + 150 x2 - 0.02 x3 + 6 x4
    // s.t. 0.25 x1 - 60 x2 - 0.04 x3 + 9 x4 + s1 = 0
    //      0.50 x1 - 90 x2 - 0.02 x3 + 3 x4 + s2 = 0
    //      x3 + s3 = 1
    linear_program<double> lp;
    lp.objective = {-0.75, 150.0, -0.02, 6.0, 0.0, 0.0, 0.0};
    lp.equalities = dense_matrix<double>(3, 7);
    const double a0[] = {0.25, -60.0, -0.04, 9.0, 1.0, 0.0, 0.0};
    const double a1[] = {0.50, -90.0, -0.02, 3.0, 0.0, 1.0, 0.0};
    const double a2[] = {0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0};
    for (int j = 0; j < 7; ++j) {
        lp.equalities(0, j) = a0[j];
        lp.equalities(1, j) = a1[j];
        lp.equalities(2, j) = a2[j];
    }
    lp.rhs = {0.0, 0.0, 1.0};
    const lp_solution<double> sol = solve(lp);
    REQUIRE(sol.status == lp_status::optimal);
    REQUIRE_THAT(sol.objective, WithinAbs(-0.05, 1e-9));

    // Same program with exact decimal coefficients under the pure
    // lowest-index rule.
    linear_program<rational> xlp;
    const rational q0[] = {rational(1) / 4,  -60, -rational(1) / 25, 9, 1, 0, 0};
    const rational q1[] = {rational(1) / 2,  -90, -rational(1) / 50, 3, 0, 1, 0};
    const rational q2[] = {0, 0, 1, 0, 0, 0, 1};
    xlp.objective = {-rational(3) / 4, 150, -rational(1) / 50, 6, 0, 0, 0};
    xlp.equalities = dense_matrix<rational>(3, 7);
    for (int j = 0; j < 7; ++j) {
        xlp.equalities(0, j) = q0[j];
        xlp.equalities(1, j) = q1[j];
        xlp.equalities(2, j) = q2[j];
    }
    xlp.rhs = {rational(0), rational(0), rational(1)};
    const lp_solution<rational> xsol = solve(xlp);
    REQUIRE(xsol.status == lp_status::optimal);
    REQUIRE(xsol.objective == -rational(1) / 20);
}
