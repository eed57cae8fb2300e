#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "cbd/cyclic_system.hpp"
#include "cbd/polytope.hpp"

namespace cbd {

struct sample_options {
    double inconsistent_fraction = 0.5;  // otherwise consistently connected
    double vertex_bias = 0.5;            // fraction of draws pulled toward an odd box vertex
};

/// Seeded random valid cyclic system: marginals drawn per content (consistent
/// mode) or per variable (inconsistent mode), spread over wide, mid, and
/// near-uniform bands so the circumscribing box is sometimes large enough for
/// contextual draws at every rank; bunch expectations placed either uniformly
/// inside the box or pulled toward a random odd vertex.
inline cyclic_system sample_cyclic(std::mt19937_64& rng, std::size_t n,
                                   const sample_options& opt = {}) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double band = unit(rng);
    const double half_width = band < 0.4 ? 0.45 : (band < 0.7 ? 0.2 : 0.05);
    std::uniform_real_distribution<double> marg(0.5 - half_width, 0.5 + half_width);

    cyclic_system sys;
    sys.contexts.resize(n);
    const bool consistent = unit(rng) >= opt.inconsistent_fraction;
    std::vector<double> content_p(n);
    for (std::size_t q = 0; q < n; ++q) content_p[q] = marg(rng);
    for (std::size_t i = 0; i < n; ++i) {
        sys.contexts[i].p_first = consistent ? content_p[i] : marg(rng);
        sys.contexts[i].p_second = consistent ? content_p[(i + 1) % n] : marg(rng);
    }

    // Work in expectation space: the box image of the per-context bounds.
    expectation_vectors e;
    e.marginals.resize(n);
    e.bunch.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        e.marginals[i].first = 2.0 * sys.contexts[i].p_first - 1.0;
        e.marginals[i].second = 2.0 * sys.contexts[i].p_second - 1.0;
    }
    const box b = bunch_box(e);
    const double mode = unit(rng);
    if (mode < opt.vertex_bias) {
        std::uint32_t mask = 0;
        do {
            mask = static_cast<std::uint32_t>(rng() & ((1u << n) - 1u));
        } while (!vertex_is_odd(mask));
        if (mode < 0.6 * opt.vertex_bias) {
            // Approach the vertex with a shared depth: draws land on both
            // sides of the criterion plane at every rank.
            const double base = unit(rng) * 2.4 / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double w = b.hi[i] - b.lo[i];
                const double frac = std::min(base * (0.7 + 0.6 * unit(rng)), 0.95);
                e.bunch[i] = ((mask >> i) & 1u) ? b.lo[i] + frac * w
                                                : b.hi[i] - frac * w;
            }
        } else {
            // Aim just inside the criterion plane with room to every box
            // facet, so criterion-limited noncontextual draws show up too.
            double delta = 0.0, vertex_value = 0.0, min_w = 2.0;
            for (std::size_t q = 0; q < n; ++q) {
                delta += std::abs(e.marginals[q].first -
                                  e.marginals[(q + n - 1) % n].second);
            }
            for (std::size_t i = 0; i < n; ++i) {
                vertex_value += (mask >> i) & 1u ? -b.lo[i] : b.hi[i];
                min_w = std::min(min_w, b.hi[i] - b.lo[i]);
            }
            const double bound =
                std::min(static_cast<double>(n) - 2.0 + delta, static_cast<double>(n));
            const double excess = std::max(vertex_value - bound, 0.0);
            const double eps = unit(rng) * 0.4 * min_w;
            const double per_coord = (excess + eps) / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double w = b.hi[i] - b.lo[i];
                const double pull =
                    std::min(per_coord * (0.85 + 0.3 * unit(rng)), 0.95 * w);
                e.bunch[i] = ((mask >> i) & 1u) ? b.lo[i] + pull : b.hi[i] - pull;
            }
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            e.bunch[i] = b.lo[i] + (b.hi[i] - b.lo[i]) * unit(rng);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double p = sys.contexts[i].p_first;
        const double q = sys.contexts[i].p_second;
        sys.contexts[i].p_both = (e.bunch[i] - 1.0) / 4.0 + (p + q) / 2.0;
        // Clamp float spill against the exact bounds.
        const double lower = std::max(0.0, p + q - 1.0);
        const double upper = std::min(p, q);
        sys.contexts[i].p_both = std::min(std::max(sys.contexts[i].p_both, lower), upper);
    }
    return sys;
}

/// Flat Dirichlet draw over pmfs on {0,1}^4 symmetrized under global bit
/// complement, which pins every single-variable marginal at 1/2.
inline std::vector<double> sample_uniform_marginal_pmf(std::mt19937_64& rng) {
    std::exponential_distribution<double> exp1(1.0);
    std::vector<double> pmf(16);
    double sum = 0.0;
    for (double& p : pmf) {
        p = exp1(rng);
        sum += p;
    }
    for (double& p : pmf) p /= sum;
    std::vector<double> sym(16);
    for (std::uint32_t a = 0; a < 16; ++a) {
        sym[a] = 0.5 * (pmf[a] + pmf[~a & 15u]);
    }
    return sym;
}

/// Uniform mass on a random complement-closed support: s pairs {a, ~a} drawn
/// without replacement, s in {1, 2, 4}.  The discrete geometry makes repeated
/// measure values common across draws.
inline std::vector<double> sample_structured_pmf(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> size_pick(0, 2);
    const std::size_t pairs = std::size_t{1} << size_pick(rng);
    std::vector<std::uint32_t> reps{0, 1, 2, 3, 4, 5, 6, 7};
    for (std::size_t i = reps.size() - 1; i > 0; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i);
        std::swap(reps[i], reps[pick(rng)]);
    }
    std::vector<double> pmf(16, 0.0);
    const double mass = 0.5 / static_cast<double>(pairs);
    for (std::size_t k = 0; k < pairs; ++k) {
        pmf[reps[k]] += mass;
        pmf[~reps[k] & 15u] += mass;
    }
    return pmf;
}

}  // namespace cbd
