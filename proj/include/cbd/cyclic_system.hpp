#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cbd/errors.hpp"

namespace cbd {

/// A cyclic system of rank n is described per context i (0-based here) by the
/// three numbers of its bunch: Pr[first = 1], Pr[second = 1], Pr[both = 1],
/// where "first" measures content i and "second" measures content i+1 (mod n).
/// Content j is therefore measured twice: in context j (as first) and in
/// context j-1 (as second).
struct context_stats {
    double p_first = 0.0;
    double p_second = 0.0;
    double p_both = 0.0;
};

struct cyclic_system {
    std::vector<context_stats> contexts;

    std::size_t rank() const { return contexts.size(); }
};

/// A system that passed validate(). Downstream operations require this.
struct validated_system {
    cyclic_system system;
    bool has_deterministic_variable = false;

    std::size_t rank() const { return system.rank(); }
};

/// Per-context pair of single-variable expectations in the ±1 labeling.
struct marginal_pair {
    double first = 0.0;   // content i measured in context i
    double second = 0.0;  // content i+1 measured in context i
};

/// The ±1-labeled representation of a cyclic system: marginal expectations,
/// bunch product expectations, and (optionally) connection coupling product
/// expectations indexed by content.
struct expectation_vectors {
    std::vector<marginal_pair> marginals;  // size n
    std::vector<double> bunch;             // size n
    std::vector<double> coupling;          // size n when set, else empty

    std::size_t rank() const { return bunch.size(); }
    bool has_coupling() const { return !coupling.empty(); }

    /// Expectation of content c in context c.
    double first_expectation(std::size_t c) const { return marginals[c].first; }

    /// Expectation of content c in context c-1 (the other context measuring it).
    double second_expectation(std::size_t c) const {
        const std::size_t n = rank();
        return marginals[(c + n - 1) % n].second;
    }
};

/// Connection couplings in both representations; probabilities are indexed by
/// content (content c couples its measurements in contexts c-1 and c).
struct connection_couplings {
    std::vector<double> probabilities;  // Pr[both coupled variables = 1]
    std::vector<double> expectations;   // product expectations of the coupling
};

namespace detail {

inline void check_probability(double p, const std::string& name, int context) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw validation_error(validation_error::kind::out_of_range,
                               name + " = " + std::to_string(p) + " outside [0,1]",
                               context);
    }
}

// Tolerance absorbing last-ulp effects when probabilities come from ratios of
// counts; anything beyond it is rejected, not repaired.
inline constexpr double frechet_tol = 1e-12;

}  // namespace detail

/// Checks ranges and the per-context Fréchet bounds
///   max(0, p + p' - 1) <= p_both <= min(p, p').
/// Flags systems containing a deterministic variable (marginal exactly 0 or 1).
inline validated_system validate(const cyclic_system& sys) {
    if (sys.rank() < 2) {
        throw validation_error(validation_error::kind::rank_too_small,
                               "cyclic system needs rank >= 2, got " +
                                   std::to_string(sys.rank()));
    }
    bool deterministic = false;
    for (std::size_t i = 0; i < sys.rank(); ++i) {
        const context_stats& c = sys.contexts[i];
        detail::check_probability(c.p_first, "p_first", static_cast<int>(i));
        detail::check_probability(c.p_second, "p_second", static_cast<int>(i));
        detail::check_probability(c.p_both, "p_both", static_cast<int>(i));
        const double lower = std::max(0.0, c.p_first + c.p_second - 1.0);
        const double upper = std::min(c.p_first, c.p_second);
        if (c.p_both < lower - detail::frechet_tol) {
            throw validation_error(
                validation_error::kind::frechet_violation,
                "context " + std::to_string(i + 1) + ": p_both = " +
                    std::to_string(c.p_both) + " below lower bound " +
                    std::to_string(lower),
                static_cast<int>(i));
        }
        if (c.p_both > upper + detail::frechet_tol) {
            throw validation_error(
                validation_error::kind::frechet_violation,
                "context " + std::to_string(i + 1) + ": p_both = " +
                    std::to_string(c.p_both) + " above upper bound " +
                    std::to_string(upper),
                static_cast<int>(i));
        }
        if (c.p_first == 0.0 || c.p_first == 1.0 || c.p_second == 0.0 ||
            c.p_second == 1.0) {
            deterministic = true;
        }
    }
    return validated_system{sys, deterministic};
}

/// Componentwise affine relabeling from 0/1 probabilities to ±1 expectations:
///   e = 2p - 1 for single variables,
///   e_prod = 4 p_both - 2p - 2p' + 1 for products.
inline expectation_vectors to_expectations(const validated_system& vs) {
    expectation_vectors e;
    const std::size_t n = vs.rank();
    e.marginals.resize(n);
    e.bunch.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const context_stats& c = vs.system.contexts[i];
        e.marginals[i].first = 2.0 * c.p_first - 1.0;
        e.marginals[i].second = 2.0 * c.p_second - 1.0;
        e.bunch[i] = 4.0 * c.p_both - 2.0 * c.p_first - 2.0 * c.p_second + 1.0;
    }
    return e;
}

/// Exact affine inverse of to_expectations (round-trips within 1e-12).
inline cyclic_system from_expectations(const expectation_vectors& e) {
    cyclic_system sys;
    const std::size_t n = e.rank();
    sys.contexts.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = (e.marginals[i].first + 1.0) / 2.0;
        const double q = (e.marginals[i].second + 1.0) / 2.0;
        sys.contexts[i].p_first = p;
        sys.contexts[i].p_second = q;
        sys.contexts[i].p_both = (e.bunch[i] - 1.0) / 4.0 + (p + q) / 2.0;
    }
    return sys;
}

/// Maximal couplings of the n connections: the coupling of content c's two
/// measurements with the largest possible Pr[both = 1], namely min of the two
/// marginals.  In expectation form this equals 1 - |e - e'|; both routes are
/// computed and must agree within 1e-12.
inline connection_couplings maximal_connection_couplings(const validated_system& vs) {
    const std::size_t n = vs.rank();
    connection_couplings cc;
    cc.probabilities.resize(n);
    cc.expectations.resize(n);
    for (std::size_t c = 0; c < n; ++c) {
        const double p_in_own = vs.system.contexts[c].p_first;
        const double p_in_prev = vs.system.contexts[(c + n - 1) % n].p_second;
        const double p_max = std::min(p_in_own, p_in_prev);
        cc.probabilities[c] = p_max;
        const double via_phi = 4.0 * p_max - 2.0 * p_in_own - 2.0 * p_in_prev + 1.0;
        const double via_gap = 1.0 - std::abs((2.0 * p_in_own - 1.0) - (2.0 * p_in_prev - 1.0));
        if (std::abs(via_phi - via_gap) > 1e-12) {
            throw error("maximal coupling expectation mismatch: " +
                        std::to_string(via_phi) + " vs " + std::to_string(via_gap));
        }
        cc.expectations[c] = via_phi;
    }
    return cc;
}

/// Returns a copy of e with the coupling block set to the maximal values.
inline expectation_vectors with_maximal_couplings(const expectation_vectors& e) {
    expectation_vectors out = e;
    const std::size_t n = e.rank();
    out.coupling.resize(n);
    for (std::size_t c = 0; c < n; ++c) {
        out.coupling[c] =
            1.0 - std::abs(e.first_expectation(c) - e.second_expectation(c));
    }
    return out;
}

/// Variant of a system: sign-flips applied per content.  Flipping content j
/// negates its two marginal expectations and the two bunch expectations it
/// enters; coupling expectations are invariant (both members flip together).
inline expectation_vectors variant(const expectation_vectors& e,
                                   const std::vector<bool>& content_flips) {
    const std::size_t n = e.rank();
    if (content_flips.size() != n) {
        throw validation_error(validation_error::kind::out_of_range,
                               "content_flips size must equal rank");
    }
    expectation_vectors out = e;
    for (std::size_t j = 0; j < n; ++j) {
        if (!content_flips[j]) continue;
        const std::size_t prev = (j + n - 1) % n;
        out.marginals[j].first = -out.marginals[j].first;
        out.marginals[prev].second = -out.marginals[prev].second;
        out.bunch[j] = -out.bunch[j];
        out.bunch[prev] = -out.bunch[prev];
    }
    return out;
}

/// Result of canonicalize(): the canonical variant together with the applied
/// content flips (indexed by content of the rotated system) and the circular
/// rotation (new context t corresponds to old context t + rotation mod n).
struct canonical_form {
    expectation_vectors vectors;
    std::vector<bool> flips;
    std::size_t rotation = 0;
};

namespace detail {

// Rotate the system labels: new index t = old index (t + r) mod n.
inline expectation_vectors rotate(const expectation_vectors& e, std::size_t r) {
    const std::size_t n = e.rank();
    expectation_vectors out;
    out.marginals.resize(n);
    out.bunch.resize(n);
    if (e.has_coupling()) out.coupling.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t s = (t + r) % n;
        out.marginals[t] = e.marginals[s];
        out.bunch[t] = e.bunch[s];
        if (e.has_coupling()) out.coupling[t] = e.coupling[s];
    }
    return out;
}

}  // namespace detail

/// Brings a system into the canonical variant: after a circular rotation the
/// bunch expectation of least magnitude sits in the last slot and all other
/// bunch expectations are nonnegative, so |e_last| <= e_i for i < n-1.  The
/// sign of the last entry is forced by the flip-invariant sign parity of the
/// bunch vector.  Ties (several least-magnitude entries) resolve to the
/// smallest index, and of the two flip solutions the one leaving content 0
/// unflipped is chosen.
inline canonical_form canonicalize(const expectation_vectors& e) {
    const std::size_t n = e.rank();
    canonical_form out;

    std::size_t min_idx = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (std::abs(e.bunch[i]) < std::abs(e.bunch[min_idx])) min_idx = i;
    }
    out.rotation = (min_idx + 1) % n;
    expectation_vectors rot = detail::rotate(e, out.rotation);

    // Desired per-bunch negations: entries 0..n-2 nonnegative, last entry
    // carrying the product of all signs (zeros leave the parity free).
    int parity = 1;
    bool has_zero = false;
    for (double b : rot.bunch) {
        if (b == 0.0) {
            has_zero = true;
        } else if (b < 0.0) {
            parity = -parity;
        }
    }
    std::vector<bool> negate(n, false);
    for (std::size_t i = 0; i + 1 < n; ++i) negate[i] = rot.bunch[i] < 0.0;
    const double last = rot.bunch[n - 1];
    if (last != 0.0) negate[n - 1] = (last < 0.0) != (parity < 0);

    bool xor_all = false;
    for (bool d : negate) xor_all ^= d;
    if (xor_all) {
        // Only reachable with zero entries present; spend the spare negation
        // on the first zero slot.
        if (!has_zero) {
            throw error("canonicalize: inconsistent sign parity");
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (rot.bunch[i] == 0.0) {
                negate[i] = !negate[i];
                break;
            }
        }
    }

    // Solve content flips c from the bunch negation pattern: bunch t is
    // negated iff exactly one of contents t, t+1 is flipped.
    out.flips.assign(n, false);
    for (std::size_t t = 0; t + 1 < n; ++t) {
        out.flips[t + 1] = out.flips[t] ^ negate[t];
    }
    out.vectors = variant(rot, out.flips);
    return out;
}

/// Raw per-context outcome counts for ingesting experimental data.
/// Order: (0,0), (0,1), (1,0), (1,1) for (first, second).
struct trial_counts {
    struct context_counts {
        std::uint64_t n00 = 0, n01 = 0, n10 = 0, n11 = 0;

        std::uint64_t total() const { return n00 + n01 + n10 + n11; }
    };

    std::vector<context_counts> contexts;
};

/// Relative-frequency point estimates, no smoothing.
inline cyclic_system ingest_trials(const trial_counts& counts) {
    cyclic_system sys;
    sys.contexts.resize(counts.contexts.size());
    for (std::size_t i = 0; i < counts.contexts.size(); ++i) {
        const auto& c = counts.contexts[i];
        const std::uint64_t total = c.total();
        if (total == 0) {
            throw validation_error(validation_error::kind::empty_context,
                                   "context " + std::to_string(i + 1) +
                                       " has no trials",
                                   static_cast<int>(i));
        }
        const double d = static_cast<double>(total);
        sys.contexts[i].p_first = static_cast<double>(c.n10 + c.n11) / d;
        sys.contexts[i].p_second = static_cast<double>(c.n01 + c.n11) / d;
        sys.contexts[i].p_both = static_cast<double>(c.n11) / d;
    }
    return sys;
}

}  // namespace cbd
