#pragma once

// Test-only oracles, kept independent of the library code paths they check.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "cbd/polytope.hpp"

namespace oracle {

/// s1 by exhaustive enumeration of all odd sign vectors, each candidate sum
/// accumulated in index order.
inline double s1_brute(std::span<const double> e) {
    const std::size_t n = e.size();
    double best = -std::numeric_limits<double>::infinity();
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        int parity = 1;
        for (std::size_t i = 0; i < n; ++i) {
            if ((mask >> i) & 1u) parity = -parity;
        }
        if (parity != -1) continue;
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum += ((mask >> i) & 1u ? -1.0 : 1.0) * e[i];
        }
        best = std::max(best, sum);
    }
    return best;
}

inline double s1_brute(const std::vector<double>& e) {
    return s1_brute(std::span<const double>(e));
}

/// Largest product expectation of any coupling of two Bernoulli marginals,
/// found by scanning Pr[both = 1] over a fine grid of admissible tables.
inline double max_coupling_expectation_brute(double p, double q) {
    const int steps = 2000000;
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 0; k <= steps; ++k) {
        const double p11 = static_cast<double>(k) / steps;
        const double p10 = p - p11;
        const double p01 = q - p11;
        const double p00 = 1.0 - p - q + p11;
        if (p10 < 0.0 || p01 < 0.0 || p00 < 0.0) continue;
        best = std::max(best, 4.0 * p11 - 2.0 * p - 2.0 * q + 1.0);
    }
    return best;
}

/// Lp distance from a point to the part of the noncontextuality polytope
/// lying on one facet plane, by nested grid refinement over the facet's
/// free coordinates (ranks <= 3, so facets are at most 2-dimensional).
/// Returns +inf when the plane misses the polytope.
inline double lp_facet_distance_grid(const std::vector<double>& target,
                                     const cbd::box& b, double bound,
                                     const cbd::halfspace& facet, double p) {
    const std::size_t n = b.dim();
    const std::vector<cbd::halfspace> all = cbd::polytope_facets(b, bound);

    // Pick the pivot coordinate with the largest |normal| entry; the facet
    // plane determines it from the others.
    std::size_t pivot = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(facet.normal[i]) > std::abs(facet.normal[pivot])) pivot = i;
    }

    std::vector<std::size_t> free_idx;
    for (std::size_t i = 0; i < n; ++i) {
        if (i != pivot) free_idx.push_back(i);
    }
    const std::size_t dim = free_idx.size();

    auto lp_norm = [&](const std::vector<double>& x) {
        if (std::isinf(p)) {
            double worst = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                worst = std::max(worst, std::abs(x[i] - target[i]));
            }
            return worst;
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += std::pow(std::abs(x[i] - target[i]), p);
        }
        return std::pow(acc, 1.0 / p);
    };

    std::vector<double> center(dim), radius(dim);
    for (std::size_t d = 0; d < dim; ++d) {
        const std::size_t i = free_idx[d];
        center[d] = 0.5 * (b.lo[i] + b.hi[i]);
        radius[d] = 0.5 * (b.hi[i] - b.lo[i]);
    }

    const int per_axis = 24;
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_free = center;
    std::vector<double> x(n);
    for (int round = 0; round < 14; ++round) {
        bool found = false;
        std::vector<int> idx(dim, 0);
        while (true) {
            for (std::size_t d = 0; d < dim; ++d) {
                const std::size_t i = free_idx[d];
                double v = dim ? center[d] +
                                     radius[d] * (2.0 * idx[d] / per_axis - 1.0)
                               : 0.0;
                v = std::min(std::max(v, b.lo[i]), b.hi[i]);
                x[i] = v;
            }
            double rest = facet.bound;
            for (std::size_t i = 0; i < n; ++i) {
                if (i != pivot) rest -= facet.normal[i] * x[i];
            }
            x[pivot] = rest / facet.normal[pivot];
            bool ok = x[pivot] >= b.lo[pivot] - 1e-12 && x[pivot] <= b.hi[pivot] + 1e-12;
            for (const cbd::halfspace& h : all) {
                if (!ok) break;
                ok = h.satisfied(x, 1e-12);
            }
            if (ok) {
                const double d = lp_norm(x);
                if (d < best) {
                    best = d;
                    for (std::size_t k = 0; k < dim; ++k) best_free[k] = x[free_idx[k]];
                    found = true;
                }
            }
            // advance the grid index
            std::size_t d = 0;
            for (; d < dim; ++d) {
                if (++idx[d] <= per_axis) break;
                idx[d] = 0;
            }
            if (d == dim) break;
            if (dim == 0) break;
        }
        if (dim == 0) break;
        if (found) center = best_free;
        for (std::size_t d = 0; d < dim; ++d) radius[d] *= 0.35;
    }
    return best;
}

/// Lp distance from a point to the surface of the noncontextuality polytope:
/// smallest grid-refined facet distance.
inline double lp_surface_distance_grid(const std::vector<double>& target,
                                       const cbd::box& b, double bound, double p) {
    double best = std::numeric_limits<double>::infinity();
    for (const cbd::halfspace& f : cbd::polytope_facets(b, bound)) {
        best = std::min(best, lp_facet_distance_grid(target, b, bound, f, p));
    }
    return best;
}

}  // namespace oracle
