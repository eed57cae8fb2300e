#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "cbd/cyclic_system.hpp"
#include "cbd/errors.hpp"

namespace cbd {

/// A sign vector with entries ±1; odd means the product of entries is -1.
struct sign_vector {
    std::vector<int> signs;

    int parity() const {
        int p = 1;
        for (int s : signs) p *= s;
        return p;
    }
    bool odd() const { return parity() == -1; }
};

struct signed_max {
    double value = 0.0;
    sign_vector maximizer;
};

/// Maximum of sum(lambda_i * e_i) over sign vectors with product -1.
/// The maximizer follows the entry signs; if their product is even, the entry
/// of least magnitude is flipped (a zero entry absorbs the flip for free).
/// Returns the maximizing signs alongside the value; the value is evaluated
/// as the plain signed sum so it matches term-by-term enumeration.
inline signed_max s1_with_signs(std::span<const double> entries) {
    const std::size_t n = entries.size();
    if (n == 0) {
        throw validation_error(validation_error::kind::empty_vector,
                               "s1 of an empty vector");
    }
    std::vector<int> signs(n, 1);
    int parity = 1;
    std::size_t min_idx = 0;
    bool has_zero = false;
    std::size_t zero_idx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (entries[i] < 0.0) {
            signs[i] = -1;
            parity = -parity;
        }
        if (entries[i] == 0.0 && !has_zero) {
            has_zero = true;
            zero_idx = i;
        }
        if (std::abs(entries[i]) < std::abs(entries[min_idx])) min_idx = i;
    }
    if (parity != -1) {
        const std::size_t flip = has_zero ? zero_idx : min_idx;
        signs[flip] = -signs[flip];
    }
    double value = 0.0;
    for (std::size_t i = 0; i < n; ++i) value += signs[i] * entries[i];
    return signed_max{value, sign_vector{std::move(signs)}};
}

inline double s1(std::span<const double> entries) {
    return s1_with_signs(entries).value;
}

inline double s1(const std::vector<double>& entries) {
    return s1(std::span<const double>(entries));
}

/// Total inconsistency of the connections: sum over contents of
/// |e in own context - e in the other context|.  Zero iff the system is
/// consistently connected.
inline double inconsistency_delta(const expectation_vectors& e) {
    const std::size_t n = e.rank();
    double d = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        d += std::abs(e.first_expectation(c) - e.second_expectation(c));
    }
    return d;
}

/// The right-hand side of the criterion: min(n - 2 + delta, n).
inline double criterion_bound(double delta, std::size_t rank) {
    const double n = static_cast<double>(rank);
    return std::min(n - 2.0 + delta, n);
}

struct criterion_result {
    bool contextual = false;
    double margin = 0.0;  // s1(bunch) - bound; contextual iff strictly positive
    double s1_bunch = 0.0;
    double delta = 0.0;
    double bound = 0.0;
};

/// The criterion separating contextual from noncontextual cyclic systems:
/// contextual iff s1(bunch) exceeds min(n - 2 + delta, n).  Margin zero lies
/// on the noncontextual side.
inline criterion_result bell_criterion(const expectation_vectors& e) {
    criterion_result r;
    r.s1_bunch = s1(e.bunch);
    r.delta = inconsistency_delta(e);
    r.bound = criterion_bound(r.delta, e.rank());
    r.margin = r.s1_bunch - r.bound;
    r.contextual = r.margin > 0.0;
    return r;
}

/// Degree of contextuality in expectation-space units: the L1 distance from
/// the bunch vector to the noncontextuality polytope, which collapses to the
/// criterion margin.  Divide by 4 for probability-space units.
inline double cnt2(const expectation_vectors& e) {
    const criterion_result r = bell_criterion(e);
    if (!r.contextual) {
        throw measure_error(measure_error::kind::not_contextual,
                            "cnt2 requested for a noncontextual system");
    }
    return r.margin;
}

namespace detail {

inline constexpr double box_tol = 1e-9;

}  // namespace detail

/// L1 distance from the bunch vector to the surface of its circumscribing
/// box: the smallest one-coordinate move that reaches a box facet.
inline double box_distance(const expectation_vectors& e) {
    const std::size_t n = e.rank();
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double a = e.marginals[i].first;
        const double b = e.marginals[i].second;
        const double lo = std::abs(a + b) - 1.0;
        const double hi = 1.0 - std::abs(a - b);
        const double x = e.bunch[i];
        if (x < lo - detail::box_tol || x > hi + detail::box_tol) {
            throw measure_error(measure_error::kind::outside_box,
                                "bunch expectation " + std::to_string(x) +
                                    " outside [" + std::to_string(lo) + ", " +
                                    std::to_string(hi) + "]");
        }
        m = std::min(m, std::min(std::max(x - lo, 0.0), std::max(hi - x, 0.0)));
    }
    return m;
}

inline bool box_is_degenerate(const expectation_vectors& e) {
    for (std::size_t i = 0; i < e.rank(); ++i) {
        const double a = e.marginals[i].first;
        const double b = e.marginals[i].second;
        if (std::abs(a) == 1.0 || std::abs(b) == 1.0) return true;
    }
    return false;
}

/// Degree of noncontextuality in expectation-space units: the smaller of the
/// criterion compliance (bound - s1) and the box-surface distance.  Undefined
/// for systems with a deterministic variable (the box degenerates).
inline double ncnt2(const expectation_vectors& e) {
    const criterion_result r = bell_criterion(e);
    if (r.contextual) {
        throw measure_error(measure_error::kind::is_contextual,
                            "ncnt2 requested for a contextual system");
    }
    if (box_is_degenerate(e)) {
        throw measure_error(measure_error::kind::degenerate_box,
                            "ncnt2 undefined: a deterministic variable "
                            "degenerates the box");
    }
    return std::min(-r.margin, box_distance(e));
}

namespace detail {

inline double lp_scale(double p, std::size_t rank) {
    if (std::isinf(p)) return 1.0 / static_cast<double>(rank);
    return std::pow(static_cast<double>(rank), (1.0 - p) / p);
}

inline void check_exponent(double p) {
    if (!(p >= 1.0)) {
        throw measure_error(measure_error::kind::bad_exponent,
                            "Lp exponent must satisfy p >= 1");
    }
}

}  // namespace detail

/// Contextuality rescaled to an Lp distance: n^{(1-p)/p} times the L1 value.
inline double lp_rescale_cnt(double cnt_value, double p, std::size_t rank) {
    detail::check_exponent(p);
    return detail::lp_scale(p, rank) * cnt_value;
}

/// Noncontextuality under Lp: only the criterion branch rescales, the box
/// branch is already an Lp distance for every p.
inline double lp_rescale_ncnt(double compliance, double box_gap, double p,
                              std::size_t rank) {
    detail::check_exponent(p);
    return std::min(detail::lp_scale(p, rank) * compliance, box_gap);
}

/// Contextuality measured against the polytope of all couplings: s1 of the
/// concatenated (bunch, coupling) vector minus (2n - 2).  For cyclic systems
/// this coincides with cnt2; the concatenation obeys
/// s1(bunch, coupling) = s1(bunch) + n - delta on contextual systems.
inline double cnt0(const expectation_vectors& e) {
    if (!e.has_coupling()) {
        throw measure_error(measure_error::kind::missing_coupling,
                            "cnt0 needs the maximal coupling expectations");
    }
    const criterion_result r = bell_criterion(e);
    if (!r.contextual) {
        throw measure_error(measure_error::kind::not_contextual,
                            "cnt0 requested for a noncontextual system");
    }
    std::vector<double> concat;
    concat.reserve(2 * e.rank());
    concat.insert(concat.end(), e.bunch.begin(), e.bunch.end());
    concat.insert(concat.end(), e.coupling.begin(), e.coupling.end());
    return s1(concat) - (2.0 * static_cast<double>(e.rank()) - 2.0);
}

enum class units_note { expectation_space, probability_space };

/// Criterion verdict plus every closed-form quantity the verdict admits.
/// Exactly one of cnt2 / ncnt2 is set, unless a deterministic variable makes
/// the system degenerate, in which case neither is.
struct measure_report {
    bool contextual = false;
    bool degenerate = false;
    std::size_t rank = 0;
    double s1_bunch = 0.0;
    double delta = 0.0;
    double bound = 0.0;
    double margin = 0.0;
    double box_gap = 0.0;  // distance to the box surface (0 when degenerate)
    std::optional<double> cnt2_value;
    std::optional<double> ncnt2_value;
    std::optional<double> cnt0_value;
    units_note units = units_note::expectation_space;

    /// Same report with the measure values divided by 4.
    measure_report in_probability_units() const {
        measure_report out = *this;
        if (out.units == units_note::probability_space) return out;
        auto scale = [](std::optional<double>& v) {
            if (v) *v /= 4.0;
        };
        scale(out.cnt2_value);
        scale(out.ncnt2_value);
        scale(out.cnt0_value);
        out.units = units_note::probability_space;
        return out;
    }
};

/// Evaluates the full closed-form battery for a validated system.
inline measure_report compute_report(const validated_system& vs) {
    measure_report rep;
    rep.rank = vs.rank();
    rep.degenerate = vs.has_deterministic_variable;
    const expectation_vectors e = with_maximal_couplings(to_expectations(vs));
    const criterion_result r = bell_criterion(e);
    rep.s1_bunch = r.s1_bunch;
    rep.delta = r.delta;
    rep.bound = r.bound;
    rep.margin = r.margin;
    rep.contextual = r.contextual && !rep.degenerate;
    rep.box_gap = rep.degenerate ? 0.0 : box_distance(e);
    if (rep.degenerate) return rep;
    if (r.contextual) {
        rep.cnt2_value = r.margin;
        rep.cnt0_value = cnt0(e);
    } else {
        rep.ncnt2_value = std::min(-r.margin, rep.box_gap);
    }
    return rep;
}

}  // namespace cbd
