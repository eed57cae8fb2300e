#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cbd/cyclic_system.hpp"
#include "cbd/errors.hpp"
#include "cbd/measures.hpp"

namespace cbd {

/// An axis-aligned box given by per-coordinate intervals.
struct box {
    std::vector<double> lo, hi;

    std::size_t dim() const { return lo.size(); }

    bool degenerate(double tol = 0.0) const {
        for (std::size_t i = 0; i < dim(); ++i) {
            if (hi[i] - lo[i] <= tol) return true;
        }
        return false;
    }

    bool contains(std::span<const double> x, double tol = 0.0) const {
        for (std::size_t i = 0; i < dim(); ++i) {
            if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
        }
        return true;
    }

    /// Vertex selected by a bitmask: bit i set picks lo in coordinate i.
    std::vector<double> vertex(std::uint32_t lo_mask) const {
        std::vector<double> v(dim());
        for (std::size_t i = 0; i < dim(); ++i) {
            v[i] = (lo_mask >> i) & 1u ? lo[i] : hi[i];
        }
        return v;
    }
};

/// A vertex is odd iff it uses an odd number of lo-coordinates.
inline bool vertex_is_odd(std::uint32_t lo_mask) {
    return (std::popcount(lo_mask) & 1) == 1;
}

/// The box circumscribing the noncontextuality polytope: coordinate i ranges
/// over [|e + e'| - 1, 1 - |e - e'|] with (e, e') the marginal expectations
/// of context i.
inline box bunch_box(const expectation_vectors& e) {
    box b;
    const std::size_t n = e.rank();
    b.lo.resize(n);
    b.hi.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = e.marginals[i].first;
        const double c = e.marginals[i].second;
        b.lo[i] = std::abs(a + c) - 1.0;
        b.hi[i] = 1.0 - std::abs(a - c);
    }
    return b;
}

inline box ambient_cube(std::size_t n) {
    box b;
    b.lo.assign(n, -1.0);
    b.hi.assign(n, 1.0);
    return b;
}

/// One half-space constraint normal . x <= bound.
struct halfspace {
    std::vector<double> normal;
    double bound = 0.0;

    bool satisfied(std::span<const double> x, double tol = 0.0) const {
        double dot = 0.0;
        for (std::size_t i = 0; i < normal.size(); ++i) dot += normal[i] * x[i];
        return dot <= bound + tol;
    }
};

/// The 2^{n-1} half-spaces sum(lambda_i x_i) <= bound over odd sign vectors;
/// their intersection with the ambient cube is the extended noncontextuality
/// polytope.
inline std::vector<halfspace> odd_halfspaces(std::size_t n, double bound) {
    std::vector<halfspace> hs;
    hs.reserve(std::size_t{1} << (n - 1));
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (!vertex_is_odd(mask)) continue;
        halfspace h;
        h.bound = bound;
        h.normal.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            h.normal[i] = (mask >> i) & 1u ? -1.0 : 1.0;
        }
        hs.push_back(std::move(h));
    }
    return hs;
}

struct membership_result {
    bool in_box = false;
    bool in_extended = false;  // all odd half-spaces at the criterion bound
    bool in_polytope = false;  // both
};

/// Membership of a bunch vector in the circumscribing box, the extended
/// polytope, and their intersection.  The extended test enumerates every odd
/// sign vector; by construction this is the definition of s1 <= bound.
inline membership_result membership(std::span<const double> bunch, const box& b,
                                    double bound, double tol = 0.0) {
    membership_result r;
    r.in_box = b.contains(bunch, tol);
    r.in_extended = true;
    const std::size_t n = b.dim();
    for (std::uint32_t mask = 0; mask < (1u << n) && r.in_extended; ++mask) {
        if (!vertex_is_odd(mask)) continue;
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            dot += ((mask >> i) & 1u ? -1.0 : 1.0) * bunch[i];
        }
        if (dot > bound + tol) r.in_extended = false;
    }
    r.in_polytope = r.in_box && r.in_extended;
    return r;
}

inline membership_result membership(const expectation_vectors& e,
                                    double tol = 0.0) {
    const criterion_result c = bell_criterion(e);
    return membership(e.bunch, bunch_box(e), c.bound, tol);
}

/// Cut points of a pocket at an odd vertex of the ambient cube: the plane
/// sum(lambda_i x_i) = bound meets the n cube edges leaving the vertex at the
/// points obtained by replacing one coordinate lambda_k with
/// lambda_k (1 - n + bound), each at distance n - bound from the vertex.
struct pocket_cuts {
    std::vector<std::vector<double>> points;
    double cut_distance = 0.0;
};

inline pocket_cuts pocket_cut_points(std::span<const int> vertex_signs,
                                     double bound) {
    const std::size_t n = vertex_signs.size();
    int parity = 1;
    for (int s : vertex_signs) {
        if (s != 1 && s != -1) {
            throw geometry_error(geometry_error::kind::even_vertex,
                                 "vertex signs must be +/-1");
        }
        parity *= s;
    }
    if (parity != -1) {
        throw geometry_error(geometry_error::kind::even_vertex,
                             "pocket cuts are defined at odd vertices only");
    }
    const double dn = static_cast<double>(n);
    if (bound < dn - 2.0 - 1e-12 || bound > dn + 1e-12) {
        throw geometry_error(geometry_error::kind::bad_delta,
                             "bound must lie in [n-2, n]");
    }
    pocket_cuts out;
    out.cut_distance = dn - bound;
    out.points.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = static_cast<double>(vertex_signs[i]);
        }
        x[k] = vertex_signs[k] * (1.0 - dn + bound);
        out.points[k] = std::move(x);
    }
    return out;
}

/// Empirical check that pockets at distinct odd vertices of the cube never
/// overlap, and that for bound > n-2 even the closed regions above the
/// cutting planes stay pairwise disjoint inside the cube.  At bound = n-2
/// the planes meet (they carry the demicube's ridges); there the check
/// verifies exactly that coinciding edge-cut points of different pockets are
/// even cube vertices.  Uses a full grid for n <= 3, random sampling above.
struct disjointness_report {
    std::size_t points_checked = 0;
    std::size_t overlap_violations = 0;  // point strictly inside two pockets
    std::size_t surface_contacts = 0;    // point in two closed regions
    bool edge_cuts_agree = true;         // cut-point coincidences are even vertices
    bool disjoint = false;
};

inline disjointness_report pocket_disjointness_check(double bound, std::size_t n,
                                                     std::uint64_t seed = 1,
                                                     std::size_t samples = 100000) {
    const std::vector<halfspace> planes = odd_halfspaces(n, bound);
    disjointness_report rep;
    const double eq_tol = 1e-9;

    auto inspect = [&](std::span<const double> x) {
        ++rep.points_checked;
        std::size_t strictly_above = 0;
        std::size_t closed_above = 0;
        for (const halfspace& h : planes) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += h.normal[i] * x[i];
            if (dot > bound + eq_tol) ++strictly_above;
            if (dot > bound - eq_tol) ++closed_above;
        }
        if (strictly_above >= 2) ++rep.overlap_violations;
        if (closed_above >= 2) ++rep.surface_contacts;
    };

    std::vector<double> x(n);
    if (n <= 3) {
        const double step = 0.05;
        const std::size_t per_axis = static_cast<std::size_t>(std::lround(2.0 / step)) + 1;
        std::size_t total = 1;
        for (std::size_t i = 0; i < n; ++i) total *= per_axis;
        for (std::size_t idx = 0; idx < total; ++idx) {
            std::size_t rem = idx;
            for (std::size_t i = 0; i < n; ++i) {
                x[i] = -1.0 + step * static_cast<double>(rem % per_axis);
                rem /= per_axis;
            }
            inspect(x);
        }
    } else {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (std::size_t s = 0; s < samples; ++s) {
            for (std::size_t i = 0; i < n; ++i) x[i] = u(rng);
            inspect(x);
        }
    }

    // Exact comparison of the edge-cut points of every pair of pockets.
    std::vector<std::vector<std::vector<double>>> cuts;
    std::vector<std::uint32_t> odd_masks;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (!vertex_is_odd(mask)) continue;
        std::vector<int> v(n, 1);
        for (std::size_t i = 0; i < n; ++i) {
            if ((mask >> i) & 1u) v[i] = -1;
        }
        cuts.push_back(pocket_cut_points(v, bound).points);
        odd_masks.push_back(mask);
    }
    for (std::size_t a = 0; a < cuts.size() && rep.edge_cuts_agree; ++a) {
        for (std::size_t b = a + 1; b < cuts.size() && rep.edge_cuts_agree; ++b) {
            for (const auto& xa : cuts[a]) {
                for (const auto& xb : cuts[b]) {
                    double gap = 0.0;
                    for (std::size_t i = 0; i < n; ++i) gap += std::abs(xa[i] - xb[i]);
                    if (gap > 1e-12) continue;
                    int lows = 0;
                    bool corner = true;
                    for (std::size_t i = 0; i < n; ++i) {
                        if (std::abs(std::abs(xa[i]) - 1.0) > 1e-12) corner = false;
                        if (xa[i] < 0.0) ++lows;
                    }
                    if (!corner || (lows & 1) == 1) rep.edge_cuts_agree = false;
                }
            }
        }
    }

    const bool at_demicube = bound <= static_cast<double>(n) - 2.0 + 1e-12;
    rep.disjoint = rep.overlap_violations == 0 && rep.edge_cuts_agree &&
                   (at_demicube || rep.surface_contacts == 0);
    return rep;
}

/// Number of pockets the criterion bound carves out of the circumscribing
/// box: odd vertices whose oriented sign vector (+1 on hi-coordinates) gives
/// a vertex value above the bound.
inline std::size_t pocket_count(const box& b, double bound) {
    if (b.degenerate()) {
        throw measure_error(measure_error::kind::degenerate_box,
                            "pocket count undefined for a degenerate box");
    }
    const std::size_t n = b.dim();
    std::size_t count = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (!vertex_is_odd(mask)) continue;
        double value = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            value += (mask >> i) & 1u ? -b.lo[i] : b.hi[i];
        }
        if (value > bound) ++count;
    }
    return count;
}

/// Explicit half-space list for the noncontextuality polytope: 2n box facets
/// plus the 2^{n-1} odd-signed planes.  Membership against this list agrees
/// with membership().
inline std::vector<halfspace> polytope_facets(const box& b, double bound) {
    if (b.degenerate()) {
        throw measure_error(measure_error::kind::degenerate_box,
                            "facet list undefined for a degenerate box");
    }
    const std::size_t n = b.dim();
    std::vector<halfspace> hs;
    hs.reserve(2 * n + (std::size_t{1} << (n - 1)));
    for (std::size_t i = 0; i < n; ++i) {
        halfspace up;
        up.normal.assign(n, 0.0);
        up.normal[i] = 1.0;
        up.bound = b.hi[i];
        hs.push_back(std::move(up));
        halfspace down;
        down.normal.assign(n, 0.0);
        down.normal[i] = -1.0;
        down.bound = -b.lo[i];
        hs.push_back(std::move(down));
    }
    for (halfspace& h : odd_halfspaces(n, bound)) hs.push_back(std::move(h));
    return hs;
}

}  // namespace cbd
