#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "cbd/cyclic_system.hpp"
#include "cbd/measures.hpp"
#include "cbd/sampling.hpp"
#include "oracles.hpp"

using namespace cbd;
using Catch::Matchers::WithinAbs;

namespace {

expectation_vectors consistent_vectors(std::vector<double> bunch) {
    expectation_vectors e;
    e.marginals.assign(bunch.size(), marginal_pair{0.0, 0.0});
    e.bunch = std::move(bunch);
    return e;
}

expectation_vectors pr_box() {
    return with_maximal_couplings(consistent_vectors({1.0, 1.0, 1.0, -1.0}));
}

expectation_vectors tsirelson() {
    const double r = std::sqrt(0.5);
    return with_maximal_couplings(consistent_vectors({r, r, r, -r}));
}

}  // namespace

TEST_CASE("s1 on reference vectors") {
    REQUIRE(s1(std::vector<double>{0.0, 0.0, 0.0}) == 0.0);
    REQUIRE(s1(std::vector<double>{1.0, 1.0, 1.0, -1.0}) == 4.0);
    REQUIRE_THAT(s1(std::vector<double>{0.707, 0.707, 0.707, 0.707}),
                 WithinAbs(1.414, 1e-12));
    REQUIRE_THROWS_AS(s1(std::vector<double>{}), validation_error);
}

TEST_CASE("s1 equals brute-force enumeration over odd sign vectors") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::bernoulli_distribution sprinkle_zero(0.15);
    for (std::size_t n = 1; n <= 8; ++n) {
        for (int draw = 0; draw < 300; ++draw) {
            std::vector<double> e(n);
            for (double& x : e) x = sprinkle_zero(rng) ? 0.0 : u(rng);
            REQUIRE(s1(e) == oracle::s1_brute(e));
        }
    }
}

TEST_CASE("s1 maximizer is odd and attains the value") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int draw = 0; draw < 200; ++draw) {
        std::vector<double> e(5);
        for (double& x : e) x = u(rng);
        const signed_max sm = s1_with_signs(e);
        REQUIRE(sm.maximizer.odd());
        double sum = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i) sum += sm.maximizer.signs[i] * e[i];
        REQUIRE(sum == sm.value);
    }
}

TEST_CASE("delta on reference systems") {
    expectation_vectors e = consistent_vectors({0.0, 0.0, 0.0});
    REQUIRE(inconsistency_delta(e) == 0.0);

    expectation_vectors inc;
    inc.marginals.assign(4, marginal_pair{-0.2, 0.1});
    inc.bunch.assign(4, 0.0);
    REQUIRE_THAT(inconsistency_delta(inc), WithinAbs(1.2, 1e-12));

    expectation_vectors extreme;
    extreme.marginals = {marginal_pair{1.0, 0.3}, marginal_pair{0.3, -1.0}};
    extreme.bunch = {0.3, -0.3};
    REQUIRE_THAT(inconsistency_delta(extreme), WithinAbs(2.0, 1e-12));
}

TEST_CASE("criterion bound clamps into [n-2, n]") {
    REQUIRE(criterion_bound(0.0, 4) == 2.0);
    REQUIRE_THAT(criterion_bound(1.2, 4), WithinAbs(3.2, 1e-12));
    REQUIRE(criterion_bound(5.0, 4) == 4.0);
}

TEST_CASE("criterion on reference systems") {
    const criterion_result pr = bell_criterion(pr_box());
    REQUIRE(pr.contextual);
    REQUIRE_THAT(pr.margin, WithinAbs(2.0, 1e-12));

    const criterion_result zero = bell_criterion(consistent_vectors({0, 0, 0, 0}));
    REQUIRE_FALSE(zero.contextual);
    REQUIRE_THAT(zero.margin, WithinAbs(-2.0, 1e-12));

    const criterion_result half =
        bell_criterion(consistent_vectors({0.5, 0.5, 0.5, 0.5}));
    REQUIRE_FALSE(half.contextual);
    REQUIRE_THAT(half.margin, WithinAbs(-1.0, 1e-12));
}

TEST_CASE("margin zero sits on the noncontextual side") {
    // s1 = 1 = bound for a consistent rank-3 system.
    const expectation_vectors e = consistent_vectors({1.0, 0.0, 0.0});
    const criterion_result r = bell_criterion(e);
    REQUIRE(r.margin == 0.0);
    REQUIRE_FALSE(r.contextual);
    REQUIRE_THROWS_AS(cnt2(e), measure_error);
    REQUIRE(ncnt2(e) == 0.0);
}

TEST_CASE("cnt2 on reference systems") {
    REQUIRE_THAT(cnt2(pr_box()), WithinAbs(2.0, 1e-12));
    REQUIRE_THAT(cnt2(tsirelson()), WithinAbs(2.0 * std::sqrt(2.0) - 2.0, 1e-12));
}

TEST_CASE("box distance on reference systems") {
    REQUIRE_THAT(box_distance(consistent_vectors({0, 0, 0, 0})), WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(box_distance(consistent_vectors({0.5, 0.5, 0.5, 0.5})),
                 WithinAbs(0.5, 1e-12));
    REQUIRE(box_distance(consistent_vectors({1.0, 0.0, 0.0, 0.0})) == 0.0);

    expectation_vectors outside = consistent_vectors({1.5, 0.0, 0.0, 0.0});
    REQUIRE_THROWS_AS(box_distance(outside), measure_error);
}

TEST_CASE("ncnt2 picks the smaller of criterion gap and box gap") {
    REQUIRE_THAT(ncnt2(consistent_vectors({0.5, 0.5, 0.5, 0.5})), WithinAbs(0.5, 1e-12));

    // Inconsistent rank-2 system: delta = 1, bound = 1, s1 = 0.6, box gap 0.2.
    expectation_vectors e;
    e.marginals = {marginal_pair{0.5, 0.0}, marginal_pair{0.0, -0.5}};
    e.bunch = {0.3, -0.3};
    const criterion_result r = bell_criterion(e);
    REQUIRE_THAT(r.bound, WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(r.s1_bunch, WithinAbs(0.6, 1e-12));
    REQUIRE_THAT(box_distance(e), WithinAbs(0.2, 1e-12));
    REQUIRE_THAT(ncnt2(e), WithinAbs(0.2, 1e-12));

    REQUIRE_THROWS_AS(ncnt2(pr_box()), measure_error);
}

TEST_CASE("ncnt2 refuses degenerate boxes") {
    expectation_vectors e;
    e.marginals = {marginal_pair{1.0, 0.0}, marginal_pair{0.0, 1.0}};
    e.bunch = {0.0, 0.0};
    REQUIRE_THROWS_AS(ncnt2(e), measure_error);
}

TEST_CASE("Lp rescaling") {
    REQUIRE(lp_rescale_cnt(2.0, 1.0, 4) == 2.0);
    REQUIRE_THAT(lp_rescale_cnt(2.0, 2.0, 4), WithinAbs(1.0, 1e-12));
    const double inf = std::numeric_limits<double>::infinity();
    REQUIRE_THAT(lp_rescale_ncnt(1.0, 0.5, inf, 4), WithinAbs(0.25, 1e-12));
    REQUIRE(lp_rescale_ncnt(1.0, 0.5, 1.0, 4) == 0.5);
    REQUIRE_THROWS_AS(lp_rescale_cnt(1.0, 0.5, 4), measure_error);
}

TEST_CASE("cnt0 agrees with cnt2 on reference systems") {
    const expectation_vectors pr = pr_box();
    std::vector<double> concat = pr.bunch;
    concat.insert(concat.end(), pr.coupling.begin(), pr.coupling.end());
    REQUIRE(oracle::s1_brute(concat) == 8.0);
    REQUIRE_THAT(cnt0(pr), WithinAbs(2.0, 1e-12));
    REQUIRE_THAT(cnt0(tsirelson()), WithinAbs(cnt2(tsirelson()), 1e-12));
    REQUIRE_THROWS_AS(cnt0(with_maximal_couplings(consistent_vectors({0, 0, 0, 0}))),
                      measure_error);
}

TEST_CASE("contextual draws obey the concatenation identity and cnt0 = cnt2") {
    std::mt19937_64 rng(29);
    int contextual_seen = 0;
    for (std::size_t n = 2; n <= 6; ++n) {
        for (int draw = 0; draw < 60; ++draw) {
            const expectation_vectors e =
                with_maximal_couplings(to_expectations(validate(sample_cyclic(rng, n))));
            const criterion_result r = bell_criterion(e);
            if (!r.contextual) continue;
            ++contextual_seen;
            std::vector<double> concat = e.bunch;
            concat.insert(concat.end(), e.coupling.begin(), e.coupling.end());
            REQUIRE_THAT(s1(concat),
                         WithinAbs(r.s1_bunch + static_cast<double>(n) - r.delta, 1e-9));
            REQUIRE_THAT(cnt0(e), WithinAbs(cnt2(e), 1e-9));
        }
    }
    REQUIRE(contextual_seen > 50);
}

TEST_CASE("margins and bounds stay inside their ranges") {
    std::mt19937_64 rng(37);
    for (std::size_t n = 2; n <= 6; ++n) {
        for (int draw = 0; draw < 60; ++draw) {
            const expectation_vectors e =
                to_expectations(validate(sample_cyclic(rng, n)));
            const criterion_result r = bell_criterion(e);
            REQUIRE(r.bound >= static_cast<double>(n) - 2.0 - 1e-12);
            REQUIRE(r.bound <= static_cast<double>(n) + 1e-12);
            REQUIRE(r.margin >= -2.0 * static_cast<double>(n) - 1e-12);
            REQUIRE(r.margin <= 2.0 + 1e-12);
        }
    }
}

TEST_CASE("noncontextual draws: both ncnt2 branches are nonnegative") {
    std::mt19937_64 rng(41);
    int seen = 0;
    for (std::size_t n = 2; n <= 6; ++n) {
        for (int draw = 0; draw < 60; ++draw) {
            const expectation_vectors e =
                to_expectations(validate(sample_cyclic(rng, n)));
            const criterion_result r = bell_criterion(e);
            if (r.contextual || box_is_degenerate(e)) continue;
            ++seen;
            const double gap = box_distance(e);
            REQUIRE(gap >= 0.0);
            REQUIRE(-r.margin >= 0.0);
            const double v = ncnt2(e);
            REQUIRE(v >= 0.0);
            REQUIRE(v <= 1.0 + 1e-12);
        }
    }
    REQUIRE(seen > 50);
}

TEST_CASE("measures are invariant under variants") {
    std::mt19937_64 rng(47);
    std::bernoulli_distribution coin(0.5);
    for (std::size_t n = 2; n <= 5; ++n) {
        for (int draw = 0; draw < 40; ++draw) {
            const expectation_vectors e =
                with_maximal_couplings(to_expectations(validate(sample_cyclic(rng, n))));
            std::vector<bool> flips(n);
            for (std::size_t j = 0; j < n; ++j) flips[j] = coin(rng);
            const expectation_vectors v = variant(e, flips);
            const criterion_result re = bell_criterion(e);
            const criterion_result rv = bell_criterion(v);
            REQUIRE_THAT(rv.margin, WithinAbs(re.margin, 1e-12));
            if (re.contextual) {
                REQUIRE_THAT(cnt2(v), WithinAbs(cnt2(e), 1e-12));
                REQUIRE_THAT(cnt0(v), WithinAbs(cnt0(e), 1e-12));
            } else if (!box_is_degenerate(e)) {
                REQUIRE_THAT(ncnt2(v), WithinAbs(ncnt2(e), 1e-12));
            }
        }
    }
}

TEST_CASE("the signed measure is continuous across the criterion boundary") {
    // Rank-3 consistent family sliding from a contextual corner to the center.
    const std::vector<double> corner{0.9, 0.9, -0.9};
    auto signed_measure = [&](double t) {
        std::vector<double> b(3);
        for (std::size_t i = 0; i < 3; ++i) b[i] = (1.0 - t) * corner[i];
        const expectation_vectors e = consistent_vectors(b);
        const criterion_result r = bell_criterion(e);
        return r.contextual ? r.margin : -ncnt2(e);
    };
    const double h = 1e-3;
    double prev = signed_measure(0.0);
    bool crossed = false;
    for (double t = h; t <= 1.0 + 1e-12; t += h) {
        const double cur = signed_measure(t);
        REQUIRE(std::abs(cur - prev) <= 5.0 * h);
        if (prev > 0.0 && cur <= 0.0) crossed = true;
        prev = cur;
    }
    REQUIRE(crossed);
}

TEST_CASE("compute_report branches") {
    cyclic_system pr;
    pr.contexts.assign(4, context_stats{0.5, 0.5, 0.5});
    pr.contexts[3].p_both = 0.0;
    const measure_report rep = compute_report(validate(pr));
    REQUIRE(rep.contextual);
    REQUIRE(rep.cnt2_value.has_value());
    REQUIRE(rep.cnt0_value.has_value());
    REQUIRE_FALSE(rep.ncnt2_value.has_value());
    REQUIRE_THAT(*rep.cnt2_value, WithinAbs(2.0, 1e-12));
    REQUIRE_THAT(*rep.cnt0_value, WithinAbs(2.0, 1e-9));
    const measure_report prob = rep.in_probability_units();
    REQUIRE_THAT(*prob.cnt2_value, WithinAbs(0.5, 1e-12));
    REQUIRE(prob.units == units_note::probability_space);

    cyclic_system indep;
    indep.contexts.assign(5, context_stats{0.5, 0.5, 0.25});
    const measure_report rep2 = compute_report(validate(indep));
    REQUIRE_FALSE(rep2.contextual);
    REQUIRE(rep2.ncnt2_value.has_value());
    REQUIRE_THAT(*rep2.ncnt2_value, WithinAbs(1.0, 1e-12));

    cyclic_system det;
    det.contexts.assign(3, context_stats{0.5, 0.5, 0.25});
    det.contexts[0] = {1.0, 0.5, 0.5};
    const measure_report rep3 = compute_report(validate(det));
    REQUIRE(rep3.degenerate);
    REQUIRE_FALSE(rep3.contextual);
    REQUIRE_FALSE(rep3.cnt2_value.has_value());
    REQUIRE_FALSE(rep3.ncnt2_value.has_value());
}
