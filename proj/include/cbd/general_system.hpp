#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cbd/coupling_lp.hpp"
#include "cbd/cyclic_system.hpp"
#include "cbd/errors.hpp"
#include "cbd/simplex.hpp"

namespace cbd {

/// One context of a general system: the contents it measures (indices into
/// the system's content list, all distinct) and the full joint pmf over 0/1
/// assignments to them.  Assignment index: bit j holds the value of the j-th
/// listed content.
struct general_context {
    std::vector<std::size_t> contents;
    std::vector<double> pmf;

    std::size_t arity() const { return contents.size(); }
};

struct general_system {
    std::vector<std::string> content_names;
    std::vector<general_context> contexts;
};

struct validated_general {
    general_system system;
};

namespace detail {

inline constexpr double pmf_tol = 1e-9;

}  // namespace detail

inline validated_general validate_general(const general_system& sys) {
    if (sys.contexts.empty()) {
        throw validation_error(validation_error::kind::empty_context,
                               "general system has no contexts");
    }
    std::vector<bool> used(sys.content_names.size(), false);
    for (std::size_t c = 0; c < sys.contexts.size(); ++c) {
        const general_context& ctx = sys.contexts[c];
        if (ctx.contents.empty()) {
            throw validation_error(validation_error::kind::empty_context,
                                   "context " + std::to_string(c + 1) +
                                       " measures nothing",
                                   static_cast<int>(c));
        }
        std::vector<std::size_t> sorted = ctx.contents;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw validation_error(validation_error::kind::unknown_content,
                                   "context " + std::to_string(c + 1) +
                                       " repeats a content",
                                   static_cast<int>(c));
        }
        for (std::size_t q : ctx.contents) {
            if (q >= sys.content_names.size()) {
                throw validation_error(validation_error::kind::unknown_content,
                                       "context " + std::to_string(c + 1) +
                                           " references an unknown content",
                                       static_cast<int>(c));
            }
            used[q] = true;
        }
        if (ctx.pmf.size() != (std::size_t{1} << ctx.arity())) {
            throw validation_error(validation_error::kind::bad_pmf,
                                   "context " + std::to_string(c + 1) +
                                       " pmf has the wrong size",
                                   static_cast<int>(c));
        }
        double sum = 0.0;
        for (double p : ctx.pmf) {
            if (p < -detail::pmf_tol) {
                throw validation_error(validation_error::kind::bad_pmf,
                                       "context " + std::to_string(c + 1) +
                                           " pmf has a negative entry",
                                       static_cast<int>(c));
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > detail::pmf_tol) {
            throw validation_error(validation_error::kind::bad_pmf,
                                   "context " + std::to_string(c + 1) +
                                       " pmf sums to " + std::to_string(sum),
                                   static_cast<int>(c));
        }
    }
    for (std::size_t q = 0; q < used.size(); ++q) {
        if (!used[q]) {
            throw validation_error(validation_error::kind::unknown_content,
                                   "content " + sys.content_names[q] +
                                       " appears in no context");
        }
    }
    return validated_general{sys};
}

/// Pr[all contents in `positions` equal 1] under the context's pmf, where
/// positions index the context's own content list.
inline double subset_probability(const general_context& ctx,
                                 std::uint32_t position_mask) {
    double p = 0.0;
    for (std::uint32_t a = 0; a < ctx.pmf.size(); ++a) {
        if ((a & position_mask) == position_mask) p += ctx.pmf[a];
    }
    return p;
}

inline double marginal_probability(const general_context& ctx, std::size_t position) {
    return subset_probability(ctx, 1u << position);
}

/// Incidence structure of a general system's coupling: one 0/1 variable per
/// (context, content) pair, slots allocated context-major; event columns are
/// 0/1 assignments to all slots.
struct general_incidence {
    std::size_t variable_count = 0;
    std::vector<std::uint32_t> row_masks;
    std::vector<std::string> row_labels;
    std::vector<double> targets;
    std::vector<std::size_t> slot_base;       // first slot of each context
    std::size_t context_rows_begin = 1;       // subset rows, all contexts
    std::size_t context_rows_end = 1;
    std::size_t connection_rows_begin = 0;    // pairwise maximal-coupling rows
    std::size_t connection_rows_end = 0;

    std::size_t rows() const { return row_masks.size(); }
    std::size_t cols() const { return std::size_t{1} << variable_count; }

    std::size_t slot(std::size_t context, std::size_t position) const {
        return slot_base[context] + position;
    }
};

/// Rows: the all-ones normalization row; per context one product row per
/// nonempty subset of its slots (masks ascending; together these pin the full
/// bunch pmf); per content one row per pair of contexts measuring it, with
/// the pairwise maximal-coupling target min of the two marginals.
inline general_incidence build_incidence_general(const validated_general& vg) {
    const general_system& sys = vg.system;
    general_incidence g;
    g.slot_base.resize(sys.contexts.size());
    for (std::size_t c = 0; c < sys.contexts.size(); ++c) {
        g.slot_base[c] = g.variable_count;
        g.variable_count += sys.contexts[c].arity();
    }
    if (g.variable_count > 14) {
        throw solver_error(solver_error::kind::too_many_variables,
                           "general incidence limited to 14 coupling "
                           "variables, got " + std::to_string(g.variable_count));
    }

    g.row_masks.push_back(0);
    g.row_labels.push_back("1");
    g.targets.push_back(1.0);

    g.context_rows_begin = 1;
    for (std::size_t c = 0; c < sys.contexts.size(); ++c) {
        const general_context& ctx = sys.contexts[c];
        const std::uint32_t subsets = 1u << ctx.arity();
        for (std::uint32_t sub = 1; sub < subsets; ++sub) {
            g.row_masks.push_back(sub << g.slot_base[c]);
            g.row_labels.push_back("context(" + std::to_string(c + 1) +
                                   ")/subset(" + std::to_string(sub) + ")");
            g.targets.push_back(subset_probability(ctx, sub));
        }
    }
    g.context_rows_end = g.row_masks.size();

    g.connection_rows_begin = g.row_masks.size();
    for (std::size_t q = 0; q < sys.content_names.size(); ++q) {
        std::vector<std::pair<std::size_t, std::size_t>> holders;  // (context, position)
        for (std::size_t c = 0; c < sys.contexts.size(); ++c) {
            const auto& contents = sys.contexts[c].contents;
            for (std::size_t j = 0; j < contents.size(); ++j) {
                if (contents[j] == q) holders.emplace_back(c, j);
            }
        }
        for (std::size_t a = 0; a < holders.size(); ++a) {
            for (std::size_t b = a + 1; b < holders.size(); ++b) {
                const double pa =
                    marginal_probability(sys.contexts[holders[a].first], holders[a].second);
                const double pb =
                    marginal_probability(sys.contexts[holders[b].first], holders[b].second);
                g.row_masks.push_back(
                    (1u << g.slot(holders[a].first, holders[a].second)) |
                    (1u << g.slot(holders[b].first, holders[b].second)));
                g.row_labels.push_back(
                    sys.content_names[q] + ":c" + std::to_string(holders[a].first + 1) +
                    "~c" + std::to_string(holders[b].first + 1));
                g.targets.push_back(std::min(pa, pb));
            }
        }
    }
    g.connection_rows_end = g.row_masks.size();
    return g;
}

namespace detail {

// Events that can carry mass when every connection row is pinned at the
// pairwise maximal value: the variable attaining the min marginal of a pair
// cannot be 1 while its partner is 0.
inline std::vector<std::uint32_t> general_maximal_support(
    const validated_general& vg, const general_incidence& g) {
    const general_system& sys = vg.system;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> forbidden;  // (must-1, must-0)
    for (std::size_t q = 0; q < sys.content_names.size(); ++q) {
        std::vector<std::pair<std::size_t, std::size_t>> holders;
        for (std::size_t c = 0; c < sys.contexts.size(); ++c) {
            const auto& contents = sys.contexts[c].contents;
            for (std::size_t j = 0; j < contents.size(); ++j) {
                if (contents[j] == q) holders.emplace_back(c, j);
            }
        }
        for (std::size_t a = 0; a < holders.size(); ++a) {
            for (std::size_t b = a + 1; b < holders.size(); ++b) {
                const double pa =
                    marginal_probability(sys.contexts[holders[a].first], holders[a].second);
                const double pb =
                    marginal_probability(sys.contexts[holders[b].first], holders[b].second);
                const double t = std::min(pa, pb);
                const std::uint32_t bit_a =
                    1u << g.slot(holders[a].first, holders[a].second);
                const std::uint32_t bit_b =
                    1u << g.slot(holders[b].first, holders[b].second);
                if (pa == t) forbidden.emplace_back(bit_a, bit_b);
                if (pb == t) forbidden.emplace_back(bit_b, bit_a);
            }
        }
    }
    std::vector<std::uint32_t> cols;
    cols.reserve(g.cols());
    for (std::uint32_t ev = 0; ev < g.cols(); ++ev) {
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

inline std::vector<std::uint32_t> general_all_columns(const general_incidence& g) {
    std::vector<std::uint32_t> cols(g.cols());
    for (std::uint32_t ev = 0; ev < g.cols(); ++ev) cols[ev] = ev;
    return cols;
}

inline linear_program<double> general_program(const general_incidence& g,
                                              const std::vector<std::size_t>& rows,
                                              const std::vector<double>& rhs,
                                              const std::vector<std::uint32_t>& cols) {
    linear_program<double> lp;
    lp.equalities = dense_matrix<double>(rows.size(), cols.size());
    lp.rhs = rhs;
    lp.objective.assign(cols.size(), 0.0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::uint32_t mask = g.row_masks[rows[r]];
        for (std::size_t j = 0; j < cols.size(); ++j) {
            if ((cols[j] & mask) == mask) lp.equalities(r, j) = 1.0;
        }
    }
    return lp;
}

}  // namespace detail

/// A general system is contextual iff no coupling matches all bunch pmfs and
/// every pairwise maximal connection coupling simultaneously.
inline bool is_contextual_general(const validated_general& vg,
                                  const oracle_options& opt = {}) {
    const general_incidence g = build_incidence_general(vg);
    std::vector<std::size_t> rows(g.rows());
    for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
    linear_program<double> lp = detail::general_program(
        g, rows, g.targets, detail::general_maximal_support(vg, g));
    return detail::dispatch(lp, opt).status != lp_status::optimal;
}

/// L1 distance from the pairwise maximal connection products to the largest
/// simultaneously achievable values under fixed bunch pmfs (the general
/// analog of the feasibility-polytope measure).  Zero iff noncontextual.
inline double connection_distance_general(const validated_general& vg,
                                          const oracle_options& opt = {}) {
    const general_incidence g = build_incidence_general(vg);
    std::vector<std::size_t> rows;
    std::vector<double> rhs;
    for (std::size_t r = 0; r < g.connection_rows_begin; ++r) {
        rows.push_back(r);
        rhs.push_back(g.targets[r]);
    }
    linear_program<double> lp =
        detail::general_program(g, rows, rhs, detail::general_all_columns(g));
    lp.sense = lp_sense::maximize;
    double target_sum = 0.0;
    for (std::size_t r = g.connection_rows_begin; r < g.connection_rows_end; ++r) {
        target_sum += g.targets[r];
        const std::uint32_t mask = g.row_masks[r];
        for (std::uint32_t ev = 0; ev < g.cols(); ++ev) {
            if ((ev & mask) == mask) lp.objective[ev] += 1.0;
        }
    }
    const detail::solved s = detail::dispatch(lp, opt);
    if (s.status != lp_status::optimal) {
        throw solver_error(solver_error::kind::numerical_failure,
                           "general connection-distance program did not solve");
    }
    return std::max(0.0, target_sum - s.objective);
}

inline double cnt1_general(const validated_general& vg, const oracle_options& opt = {}) {
    return detail::refuse_if_noncontextual(connection_distance_general(vg, opt),
                                           opt.simplex.feasibility_tol);
}

/// L1 distance over the concatenated per-context pmf coordinates, minimized
/// subject to fixed single-variable marginals and fixed pairwise maximal
/// connection products.  Zero iff noncontextual.
inline double bunch_distance_general(const validated_general& vg,
                                     const oracle_options& opt = {}) {
    const general_system& sys = vg.system;
    const general_incidence g = build_incidence_general(vg);
    const std::vector<std::uint32_t> cols = detail::general_maximal_support(vg, g);

    std::size_t coord_count = 0;
    for (const general_context& ctx : sys.contexts) coord_count += ctx.pmf.size();

    // Fixed rows: normalization, every singleton subset, every connection.
    std::vector<std::uint32_t> fixed_masks{0};
    std::vector<double> fixed_rhs{1.0};
    for (std::size_t c = 0; c < sys.contexts.size(); ++c) {
        for (std::size_t j = 0; j < sys.contexts[c].arity(); ++j) {
            fixed_masks.push_back(1u << g.slot(c, j));
            fixed_rhs.push_back(marginal_probability(sys.contexts[c], j));
        }
    }
    for (std::size_t r = g.connection_rows_begin; r < g.connection_rows_end; ++r) {
        fixed_masks.push_back(g.row_masks[r]);
        fixed_rhs.push_back(g.targets[r]);
    }

    const std::size_t num_rows = fixed_masks.size() + coord_count;
    const std::size_t num_cols = cols.size() + 2 * coord_count;
    linear_program<double> lp;
    lp.sense = lp_sense::minimize;
    lp.equalities = dense_matrix<double>(num_rows, num_cols);
    lp.rhs.assign(num_rows, 0.0);
    lp.objective.assign(num_cols, 0.0);
    for (std::size_t r = 0; r < fixed_masks.size(); ++r) {
        const std::uint32_t mask = fixed_masks[r];
        for (std::size_t j = 0; j < cols.size(); ++j) {
            if ((cols[j] & mask) == mask) lp.equalities(r, j) = 1.0;
        }
        lp.rhs[r] = fixed_rhs[r];
    }
    // Per-context assignment rows with split slacks: the h-marginal of each
    // full assignment tracks the observed pmf coordinate.
    std::size_t coord = 0;
    for (std::size_t c = 0; c < sys.contexts.size(); ++c) {
        const general_context& ctx = sys.contexts[c];
        const std::uint32_t ctx_mask = ((1u << ctx.arity()) - 1u) << g.slot_base[c];
        for (std::uint32_t a = 0; a < ctx.pmf.size(); ++a) {
            const std::size_t r = fixed_masks.size() + coord;
            const std::uint32_t placed = a << g.slot_base[c];
            for (std::size_t j = 0; j < cols.size(); ++j) {
                if ((cols[j] & ctx_mask) == placed) lp.equalities(r, j) = 1.0;
            }
            lp.equalities(r, cols.size() + 2 * coord) = 1.0;
            lp.equalities(r, cols.size() + 2 * coord + 1) = -1.0;
            lp.objective[cols.size() + 2 * coord] = 1.0;
            lp.objective[cols.size() + 2 * coord + 1] = 1.0;
            lp.rhs[r] = ctx.pmf[a];
            ++coord;
        }
    }
    const detail::solved s = detail::dispatch(lp, opt);
    if (s.status != lp_status::optimal) {
        throw solver_error(solver_error::kind::numerical_failure,
                           "general bunch-distance program did not solve");
    }
    return std::max(0.0, s.objective);
}

inline double cnt2_general(const validated_general& vg, const oracle_options& opt = {}) {
    return detail::refuse_if_noncontextual(bunch_distance_general(vg, opt),
                                           opt.simplex.feasibility_tol);
}

/// A cyclic subsystem of a general system: a cycle of distinct contexts
/// linked by shared contents (one content per link, the two link contents of
/// each visited context distinct), with bunches obtained by marginalizing
/// each context's pmf to its two link contents.
struct cyclic_subsystem {
    std::vector<std::size_t> context_path;   // length k >= 2
    std::vector<std::size_t> link_contents;  // link t joins path[t] and path[(t+1)%k]
    cyclic_system system;
};

namespace detail {

inline std::vector<std::size_t> cycle_key(const std::vector<std::size_t>& ctxs,
                                          const std::vector<std::size_t>& links) {
    const std::size_t k = ctxs.size();
    std::vector<std::size_t> best;
    for (int dir = 0; dir < 2; ++dir) {
        for (std::size_t r = 0; r < k; ++r) {
            std::vector<std::size_t> cand;
            cand.reserve(2 * k);
            for (std::size_t t = 0; t < k; ++t) {
                if (dir == 0) {
                    cand.push_back(ctxs[(r + t) % k]);
                    cand.push_back(links[(r + t) % k]);
                } else {
                    cand.push_back(ctxs[(r + k - t) % k]);
                    cand.push_back(links[(r + k - 1 - t) % k]);
                }
            }
            if (best.empty() || cand < best) best = std::move(cand);
        }
    }
    return best;
}

}  // namespace detail

inline std::vector<cyclic_subsystem> cyclic_subsystems(const validated_general& vg) {
    const general_system& sys = vg.system;
    const std::size_t num_ctx = sys.contexts.size();

    auto position_of = [&](std::size_t c, std::size_t q) -> std::optional<std::size_t> {
        const auto& list = sys.contexts[c].contents;
        for (std::size_t j = 0; j < list.size(); ++j) {
            if (list[j] == q) return j;
        }
        return std::nullopt;
    };
    auto shared_contents = [&](std::size_t a, std::size_t b) {
        std::vector<std::size_t> out;
        for (std::size_t q : sys.contexts[a].contents) {
            if (position_of(b, q)) out.push_back(q);
        }
        return out;
    };

    std::vector<cyclic_subsystem> result;
    std::set<std::vector<std::size_t>> seen;

    std::vector<std::size_t> path, links;
    std::vector<bool> in_path(num_ctx, false);

    auto emit = [&](const std::vector<std::size_t>& ctxs,
                    const std::vector<std::size_t>& lnk) {
        std::vector<std::size_t> key = detail::cycle_key(ctxs, lnk);
        if (!seen.insert(std::move(key)).second) return;
        const std::size_t k = ctxs.size();
        cyclic_subsystem sub;
        sub.context_path = ctxs;
        sub.link_contents = lnk;
        sub.system.contexts.resize(k);
        for (std::size_t t = 0; t < k; ++t) {
            const general_context& ctx = sys.contexts[ctxs[t]];
            const std::size_t q_in = lnk[(t + k - 1) % k];
            const std::size_t q_out = lnk[t];
            const std::size_t pos_in = *position_of(ctxs[t], q_in);
            const std::size_t pos_out = *position_of(ctxs[t], q_out);
            sub.system.contexts[t].p_first = marginal_probability(ctx, pos_in);
            sub.system.contexts[t].p_second = marginal_probability(ctx, pos_out);
            sub.system.contexts[t].p_both =
                subset_probability(ctx, (1u << pos_in) | (1u << pos_out));
        }
        result.push_back(std::move(sub));
    };

    // Depth-first growth of context paths; a link's content must differ from
    // the previous link's content at the shared context.
    auto extend = [&](auto&& self, std::size_t start) -> void {
        const std::size_t last = path.back();
        for (std::size_t next = start; next < num_ctx; ++next) {
            // Close the cycle back to the start.
            if (next == path.front() && path.size() >= 2) {
                for (std::size_t q : shared_contents(last, path.front())) {
                    if (!links.empty() && q == links.back()) continue;
                    if (q == links.front()) continue;  // start context reuses it
                    links.push_back(q);
                    emit(path, links);
                    links.pop_back();
                }
            }
            if (in_path[next] || next == path.front()) continue;
            for (std::size_t q : shared_contents(last, next)) {
                if (!links.empty() && q == links.back()) continue;
                path.push_back(next);
                in_path[next] = true;
                links.push_back(q);
                self(self, 0);
                links.pop_back();
                in_path[next] = false;
                path.pop_back();
            }
        }
    };

    for (std::size_t s = 0; s < num_ctx; ++s) {
        path = {s};
        in_path.assign(num_ctx, false);
        in_path[s] = true;
        links.clear();
        extend(extend, 0);
    }
    return result;
}

/// The three-context, four-content system whose bunches are the two
/// even-product and one odd-product uniform-support distributions: every
/// variable and every pair is uniform, yet no overall coupling exists while
/// all cyclic subsystems are noncontextual.
inline general_system tripartite_counterexample() {
    general_system sys;
    sys.content_names = {"q1", "q2", "q3", "q4"};
    auto support_pmf = [](std::initializer_list<std::uint32_t> support) {
        std::vector<double> pmf(8, 0.0);
        for (std::uint32_t a : support) pmf[a] = 0.25;
        return pmf;
    };
    // Assignments listed with bit j = value of the j-th content below;
    // +1 maps to 1 and -1 to 0.
    sys.contexts.push_back(general_context{{0, 1, 2}, support_pmf({4, 2, 1, 7})});
    sys.contexts.push_back(general_context{{1, 2, 3}, support_pmf({4, 2, 1, 7})});
    sys.contexts.push_back(general_context{{0, 2, 3}, support_pmf({3, 5, 6, 0})});
    return sys;
}

inline std::vector<double> correlated_pair_pmf() { return {0.5, 0.0, 0.0, 0.5}; }

/// The five-context star: four rank-4-style contexts whose two variables are
/// always equal, plus one context measuring all four contents jointly with a
/// caller-supplied pmf constrained to uniform single-variable marginals.
inline general_system star_system(const std::vector<double>& joint_pmf) {
    if (joint_pmf.size() != 16) {
        throw validation_error(validation_error::kind::bad_pmf,
                               "star joint pmf needs 16 entries");
    }
    for (std::size_t j = 0; j < 4; ++j) {
        double p = 0.0;
        for (std::uint32_t a = 0; a < 16; ++a) {
            if ((a >> j) & 1u) p += joint_pmf[a];
        }
        if (std::abs(p - 0.5) > detail::pmf_tol) {
            throw validation_error(validation_error::kind::bad_pmf,
                                   "star joint pmf must have uniform "
                                   "single-variable marginals");
        }
    }
    general_system sys;
    sys.content_names = {"q1", "q2", "q3", "q4"};
    for (std::size_t i = 0; i < 4; ++i) {
        sys.contexts.push_back(general_context{{i, (i + 1) % 4}, correlated_pair_pmf()});
    }
    sys.contexts.push_back(general_context{{0, 1, 2, 3}, joint_pmf});
    return sys;
}

/// A cyclic system recast as a general system (for cross-checking the two
/// code paths).
inline general_system cyclic_as_general(const validated_system& vs) {
    const std::size_t n = vs.rank();
    general_system sys;
    for (std::size_t q = 0; q < n; ++q) {
        sys.content_names.push_back("q" + std::to_string(q + 1));
    }
    for (std::size_t i = 0; i < n; ++i) {
        const context_stats& st = vs.system.contexts[i];
        general_context ctx;
        ctx.contents = {i, (i + 1) % n};
        ctx.pmf = {1.0 - st.p_first - st.p_second + st.p_both,
                   st.p_first - st.p_both, st.p_second - st.p_both, st.p_both};
        sys.contexts.push_back(std::move(ctx));
    }
    return sys;
}

}  // namespace cbd
