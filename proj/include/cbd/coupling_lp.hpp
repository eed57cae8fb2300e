#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "cbd/cyclic_system.hpp"
#include "cbd/errors.hpp"
#include "cbd/incidence.hpp"
#include "cbd/measures.hpp"
#include "cbd/polytope.hpp"
#include "cbd/rational.hpp"
#include "cbd/simplex.hpp"

namespace cbd {

enum class lp_mode { floating, exact };

struct oracle_options {
    lp_mode mode = lp_mode::floating;
    simplex_options simplex = {};
};

namespace detail {

inline linear_program<rational> to_exact(const linear_program<double>& lp) {
    linear_program<rational> out;
    out.sense = lp.sense;
    out.objective.reserve(lp.objective.size());
    for (double v : lp.objective) out.objective.push_back(to_rational(v));
    out.rhs.reserve(lp.rhs.size());
    for (double v : lp.rhs) out.rhs.push_back(to_rational(v));
    out.equalities = dense_matrix<rational>(lp.equalities.rows, lp.equalities.cols);
    for (std::size_t i = 0; i < lp.equalities.rows; ++i) {
        for (std::size_t j = 0; j < lp.equalities.cols; ++j) {
            out.equalities(i, j) = to_rational(lp.equalities(i, j));
        }
    }
    return out;
}

struct solved {
    lp_status status;
    double objective = 0.0;
    std::vector<double> x;
};

inline solved dispatch(const linear_program<double>& lp, const oracle_options& opt) {
    solved s;
    if (opt.mode == lp_mode::exact) {
        const lp_solution<rational> sol = solve(to_exact(lp), opt.simplex);
        s.status = sol.status;
        if (sol.status == lp_status::optimal) {
            s.objective = to_double(sol.objective);
            s.x.reserve(sol.x.size());
            for (const rational& r : sol.x) s.x.push_back(to_double(r));
        }
    } else {
        lp_solution<double> sol = solve(lp, opt.simplex);
        s.status = sol.status;
        if (sol.status == lp_status::optimal) {
            s.objective = sol.objective;
            s.x = std::move(sol.x);
        }
    }
    return s;
}

// Event columns that can carry mass when the connection products are pinned
// at their maximal values: whichever variable of a connection attains the
// min marginal cannot be 1 while its partner is 0 (that slice has exactly
// zero probability), so those events drop out of the program.
inline std::vector<std::uint32_t> maximal_coupling_support(
    const incidence_matrix& m, const validated_system& vs,
    const connection_couplings& cc) {
    const std::size_t n = vs.rank();
    std::vector<std::pair<std::uint32_t, std::uint32_t>> forbidden;  // (must-1, must-0)
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t prev = (c + n - 1) % n;
        const std::uint32_t own = 1u << coupling_variable(n, c, c);
        const std::uint32_t other = 1u << coupling_variable(n, prev, c);
        const double p_own = vs.system.contexts[c].p_first;
        const double p_other = vs.system.contexts[prev].p_second;
        if (p_own == cc.probabilities[c]) forbidden.emplace_back(own, other);
        if (p_other == cc.probabilities[c]) forbidden.emplace_back(other, own);
    }
    std::vector<std::uint32_t> cols;
    cols.reserve(m.cols());
    for (std::uint32_t ev = 0; ev < m.cols(); ++ev) {
        bool excluded = false;
        for (const auto& [one, zero] : forbidden) {
            if ((ev & one) && !(ev & zero)) {
                excluded = true;
                break;
            }
        }
        if (!excluded) cols.push_back(ev);
    }
    return cols;
}

// Rows selected from the incidence matrix, materialized as equalities over
// the given event columns, optionally followed by +/- slack pairs per tail
// row.
inline linear_program<double> coupling_program(const incidence_matrix& m,
                                               const std::vector<std::size_t>& rows,
                                               const std::vector<double>& rhs,
                                               std::size_t slack_pairs_from,
                                               const std::vector<std::uint32_t>& cols) {
    const std::size_t slack_rows = rows.size() - slack_pairs_from;
    linear_program<double> lp;
    lp.equalities = dense_matrix<double>(rows.size(), cols.size() + 2 * slack_rows);
    lp.rhs = rhs;
    lp.objective.assign(cols.size() + 2 * slack_rows, 0.0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::uint32_t mask = m.row_masks[rows[r]];
        for (std::size_t j = 0; j < cols.size(); ++j) {
            if ((cols[j] & mask) == mask) lp.equalities(r, j) = 1.0;
        }
        if (r >= slack_pairs_from) {
            const std::size_t k = r - slack_pairs_from;
            lp.equalities(r, cols.size() + 2 * k) = 1.0;       // u: shortfall
            lp.equalities(r, cols.size() + 2 * k + 1) = -1.0;  // v: excess
        }
    }
    return lp;
}

inline std::vector<std::uint32_t> all_event_columns(const incidence_matrix& m) {
    std::vector<std::uint32_t> cols(m.cols());
    for (std::uint32_t ev = 0; ev < m.cols(); ++ev) cols[ev] = ev;
    return cols;
}

}  // namespace detail

/// Feasibility form of the (non)contextuality definition: the system is
/// noncontextual iff some h >= 0 satisfies M h = p*, with the connection
/// block of p* at the maximal coupling values.
inline bool is_noncontextual_lp(const validated_system& vs,
                                const oracle_options& opt = {}) {
    const incidence_matrix m = build_incidence_cyclic(vs.rank());
    const connection_couplings cc = maximal_connection_couplings(vs);
    std::vector<std::size_t> rows(m.rows());
    for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
    linear_program<double> lp = detail::coupling_program(
        m, rows, coupling_targets(vs, cc), rows.size(),
        detail::maximal_coupling_support(m, vs, cc));
    lp.sense = lp_sense::minimize;  // pure feasibility, zero objective
    return detail::dispatch(lp, opt).status == lp_status::optimal;
}

/// The coupling distribution witnessing noncontextuality, if one exists.
inline std::optional<std::vector<double>> noncontextual_coupling(
    const validated_system& vs, const oracle_options& opt = {}) {
    const incidence_matrix m = build_incidence_cyclic(vs.rank());
    const connection_couplings cc = maximal_connection_couplings(vs);
    std::vector<std::size_t> rows(m.rows());
    for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
    const std::vector<std::uint32_t> cols = detail::maximal_coupling_support(m, vs, cc);
    linear_program<double> lp =
        detail::coupling_program(m, rows, coupling_targets(vs, cc), rows.size(), cols);
    detail::solved s = detail::dispatch(lp, opt);
    if (s.status != lp_status::optimal) return std::nullopt;
    std::vector<double> h(m.cols(), 0.0);
    for (std::size_t j = 0; j < cols.size(); ++j) h[cols[j]] = s.x[j];
    return h;
}

/// L1 distance (probability units) from the maximal connection products to
/// the feasibility polytope: sum of targets minus the largest achievable sum
/// of connection products under fixed marginals and bunch products.  Zero
/// for noncontextual systems.
inline double connection_distance_lp(const validated_system& vs,
                                     const oracle_options& opt = {}) {
    const std::size_t n = vs.rank();
    const incidence_matrix m = build_incidence_cyclic(n);
    const connection_couplings cc = maximal_connection_couplings(vs);
    const std::vector<double> full = coupling_targets(vs, cc);

    std::vector<std::size_t> rows;
    std::vector<double> rhs;
    for (std::size_t r = 0; r < 1 + 3 * n; ++r) {
        rows.push_back(r);
        rhs.push_back(full[r]);
    }
    linear_program<double> lp = detail::coupling_program(m, rows, rhs, rows.size(),
                                                         detail::all_event_columns(m));
    lp.sense = lp_sense::maximize;
    for (std::size_t c = 0; c < n; ++c) {
        const std::uint32_t mask = m.row_masks[m.connection_row(c)];
        for (std::uint32_t ev = 0; ev < m.cols(); ++ev) {
            if ((ev & mask) == mask) lp.objective[ev] += 1.0;
        }
    }
    const detail::solved s = detail::dispatch(lp, opt);
    if (s.status != lp_status::optimal) {
        throw solver_error(solver_error::kind::numerical_failure,
                           "connection-distance program did not solve");
    }
    double target_sum = 0.0;
    for (double t : cc.probabilities) target_sum += t;
    return std::max(0.0, target_sum - s.objective);
}

/// L1 distance (probability units) from the observed bunch products to the
/// noncontextuality polytope, via split slacks on the bunch rows.
inline double bunch_distance_lp(const validated_system& vs,
                                const oracle_options& opt = {}) {
    const std::size_t n = vs.rank();
    const incidence_matrix m = build_incidence_cyclic(n);
    const connection_couplings cc = maximal_connection_couplings(vs);
    const std::vector<double> full = coupling_targets(vs, cc);

    // Order: normalization + marginals + connections fixed, bunch rows last
    // with slack pairs.
    std::vector<std::size_t> rows;
    std::vector<double> rhs;
    for (std::size_t r = 0; r < 1 + 2 * n; ++r) {
        rows.push_back(r);
        rhs.push_back(full[r]);
    }
    for (std::size_t c = 0; c < n; ++c) {
        rows.push_back(m.connection_row(c));
        rhs.push_back(cc.probabilities[c]);
    }
    const std::size_t slack_from = rows.size();
    for (std::size_t i = 0; i < n; ++i) {
        rows.push_back(m.bunch_row(i));
        rhs.push_back(vs.system.contexts[i].p_both);
    }
    const std::vector<std::uint32_t> cols = detail::maximal_coupling_support(m, vs, cc);
    linear_program<double> lp = detail::coupling_program(m, rows, rhs, slack_from, cols);
    lp.sense = lp_sense::minimize;
    for (std::size_t k = 0; k < 2 * n; ++k) lp.objective[cols.size() + k] = 1.0;
    const detail::solved s = detail::dispatch(lp, opt);
    if (s.status != lp_status::optimal) {
        throw solver_error(solver_error::kind::numerical_failure,
                           "bunch-distance program did not solve");
    }
    return std::max(0.0, s.objective);
}

/// L1 distance (probability units) from the pair (bunch products, maximal
/// connection products) to the polytope of all couplings with the observed
/// marginals: both blocks carry slack pairs.
inline double coupling_distance_lp(const validated_system& vs,
                                   const oracle_options& opt = {}) {
    const std::size_t n = vs.rank();
    const incidence_matrix m = build_incidence_cyclic(n);
    const connection_couplings cc = maximal_connection_couplings(vs);
    const std::vector<double> full = coupling_targets(vs, cc);

    std::vector<std::size_t> rows;
    std::vector<double> rhs;
    for (std::size_t r = 0; r < 1 + 2 * n; ++r) {
        rows.push_back(r);
        rhs.push_back(full[r]);
    }
    const std::size_t slack_from = rows.size();
    for (std::size_t i = 0; i < n; ++i) {
        rows.push_back(m.bunch_row(i));
        rhs.push_back(vs.system.contexts[i].p_both);
    }
    for (std::size_t c = 0; c < n; ++c) {
        rows.push_back(m.connection_row(c));
        rhs.push_back(cc.probabilities[c]);
    }
    linear_program<double> lp = detail::coupling_program(m, rows, rhs, slack_from,
                                                         detail::all_event_columns(m));
    lp.sense = lp_sense::minimize;
    for (std::size_t k = 0; k < 4 * n; ++k) lp.objective[m.cols() + k] = 1.0;
    const detail::solved s = detail::dispatch(lp, opt);
    if (s.status != lp_status::optimal) {
        throw solver_error(solver_error::kind::numerical_failure,
                           "coupling-distance program did not solve");
    }
    return std::max(0.0, s.objective);
}

namespace detail {

inline double refuse_if_noncontextual(double distance, double tol) {
    if (distance <= tol) {
        throw measure_error(measure_error::kind::not_contextual,
                            "the system is noncontextual; use the "
                            "noncontextuality measure instead");
    }
    return distance;
}

}  // namespace detail

/// Contextuality via the feasibility polytope (probability units).
inline double cnt1_lp(const validated_system& vs, const oracle_options& opt = {}) {
    return detail::refuse_if_noncontextual(connection_distance_lp(vs, opt),
                                           opt.simplex.feasibility_tol);
}

/// Contextuality via the noncontextuality polytope (probability units).
inline double cnt2_lp(const validated_system& vs, const oracle_options& opt = {}) {
    return detail::refuse_if_noncontextual(bunch_distance_lp(vs, opt),
                                           opt.simplex.feasibility_tol);
}

/// Contextuality via the polytope of all couplings (probability units).
inline double cnt0_lp(const validated_system& vs, const oracle_options& opt = {}) {
    return detail::refuse_if_noncontextual(coupling_distance_lp(vs, opt),
                                           opt.simplex.feasibility_tol);
}

/// Noncontextuality via per-facet distance programs, in expectation units.
/// For every facet of the noncontextuality polytope, minimizes the L1
/// distance from the bunch vector to points of the polytope lying on that
/// facet's plane; returns the smallest value.
inline double ncnt2_lp(const validated_system& vs, const oracle_options& opt = {}) {
    const expectation_vectors e = with_maximal_couplings(to_expectations(vs));
    const criterion_result crit = bell_criterion(e);
    if (crit.contextual) {
        throw measure_error(measure_error::kind::is_contextual,
                            "ncnt2 requested for a contextual system");
    }
    if (box_is_degenerate(e)) {
        throw measure_error(measure_error::kind::degenerate_box,
                            "ncnt2 undefined: degenerate box");
    }
    const box b = bunch_box(e);
    const std::vector<halfspace> facets = polytope_facets(b, crit.bound);
    const std::size_t n = e.rank();
    const std::size_t facet_count = facets.size();

    // Shared structure: x = lo + y; coordinate-matching rows bind y to the
    // target through split slacks u, v; every facet inequality carries its
    // own slack; one extra row pins the chosen facet to equality.
    const std::size_t y0 = 0, u0 = n, v0 = 2 * n, s0 = 3 * n;
    const std::size_t num_cols = 3 * n + facet_count;
    const std::size_t num_rows = n + facet_count + 1;

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < facet_count; ++f) {
        linear_program<double> lp;
        lp.sense = lp_sense::minimize;
        lp.objective.assign(num_cols, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            lp.objective[u0 + i] = 1.0;
            lp.objective[v0 + i] = 1.0;
        }
        lp.equalities = dense_matrix<double>(num_rows, num_cols);
        lp.rhs.assign(num_rows, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            lp.equalities(i, y0 + i) = 1.0;
            lp.equalities(i, u0 + i) = 1.0;
            lp.equalities(i, v0 + i) = -1.0;
            lp.rhs[i] = e.bunch[i] - b.lo[i];
        }
        for (std::size_t g = 0; g < facet_count; ++g) {
            const std::size_t r = n + g;
            double shift = facets[g].bound;
            for (std::size_t i = 0; i < n; ++i) {
                lp.equalities(r, y0 + i) = facets[g].normal[i];
                shift -= facets[g].normal[i] * b.lo[i];
            }
            lp.equalities(r, s0 + g) = 1.0;
            lp.rhs[r] = shift;
        }
        {
            const std::size_t r = n + facet_count;
            double shift = facets[f].bound;
            for (std::size_t i = 0; i < n; ++i) {
                lp.equalities(r, y0 + i) = facets[f].normal[i];
                shift -= facets[f].normal[i] * b.lo[i];
            }
            lp.rhs[r] = shift;
        }
        const detail::solved s = detail::dispatch(lp, opt);
        if (s.status != lp_status::optimal) continue;  // facet plane misses the polytope
        best = std::min(best, std::max(0.0, s.objective));
    }
    if (!std::isfinite(best)) {
        throw solver_error(solver_error::kind::numerical_failure,
                           "no facet program was feasible");
    }
    return best;
}

}  // namespace cbd
