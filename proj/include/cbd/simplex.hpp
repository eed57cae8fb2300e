#pragma once

#include <cstddef>
#include <string>
#include <type_traits>
#include <vector>

#include "cbd/errors.hpp"

namespace cbd {

/// Minimal dense row-major matrix; all problems here have a handful of rows.
template <class T>
struct dense_matrix {
    std::size_t rows = 0, cols = 0;
    std::vector<T> data;

    dense_matrix() = default;
    dense_matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, T(0)) {}

    T& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

enum class lp_sense { minimize, maximize };
enum class lp_status { optimal, infeasible, unbounded };

/// Standard-form program: optimize objective . x subject to equalities
/// A x = rhs and x >= 0 componentwise.
template <class T>
struct linear_program {
    lp_sense sense = lp_sense::minimize;
    std::vector<T> objective;
    dense_matrix<T> equalities;
    std::vector<T> rhs;
};

template <class T>
struct lp_solution {
    lp_status status = lp_status::infeasible;
    std::vector<T> x;
    T objective = T(0);
};

struct simplex_options {
    double pivot_tol = 1e-10;
    double feasibility_tol = 1e-9;
    std::size_t max_iterations = 0;  // 0: scale with problem size
    // Degenerate pivots tolerated before switching to the lowest-index
    // anti-cycling rule.  Exact scalars use the lowest-index rule throughout.
    std::size_t stall_limit = 32;
};

namespace detail {

template <class T>
constexpr bool exact_scalar = !std::is_floating_point_v<T>;

template <class T>
T pivot_tolerance(const simplex_options& o) {
    if constexpr (exact_scalar<T>) {
        return T(0);
    } else {
        return T(o.pivot_tol);
    }
}

template <class T>
T feasibility_tolerance(const simplex_options& o) {
    if constexpr (exact_scalar<T>) {
        return T(0);
    } else {
        return T(o.feasibility_tol);
    }
}

/// Two-phase tableau simplex.  Phase 1 minimizes the sum of one artificial
/// variable per row; phase 2 minimizes the caller's objective.  Entering
/// column: most negative reduced cost, with the lowest-index rule as
/// anti-cycling fallback after a run of degenerate pivots.
template <class T>
class simplex_solver {
  public:
    simplex_solver(const linear_program<T>& lp, const simplex_options& opt)
        : opt_(opt),
          m_(lp.equalities.rows),
          n_(lp.equalities.cols),
          cols_(n_ + m_),
          tab_(m_, n_ + m_ + 1),
          cost_(n_ + m_, T(0)),
          art_cost_(n_ + m_, T(0)),
          basis_(m_),
          is_basic_(n_ + m_, false),
          frozen_(n_ + m_, false) {
        if (lp.objective.size() != n_ || lp.rhs.size() != m_) {
            throw solver_error(solver_error::kind::numerical_failure,
                               "inconsistent LP dimensions");
        }
        const T flip = lp.sense == lp_sense::maximize ? T(-1) : T(1);
        for (std::size_t j = 0; j < n_; ++j) cost_[j] = flip * lp.objective[j];
        for (std::size_t i = 0; i < m_; ++i) {
            const bool neg = lp.rhs[i] < T(0);
            for (std::size_t j = 0; j < n_; ++j) {
                const T& a = lp.equalities(i, j);
                tab_(i, j) = neg ? -a : a;
            }
            tab_(i, n_ + i) = T(1);
            tab_(i, cols_) = neg ? -lp.rhs[i] : lp.rhs[i];
            basis_[i] = n_ + i;
            is_basic_[n_ + i] = true;
            art_cost_[n_ + i] = T(1);
        }
        max_iter_ = opt.max_iterations
                        ? opt.max_iterations
                        : 1000 + 50 * (m_ + 2) * (m_ + 2);
    }

    lp_solution<T> run(lp_sense original_sense) {
        lp_solution<T> sol;

        iterate(art_cost_, /*phase1=*/true);
        if (phase_objective(art_cost_) > feasibility_tolerance<T>(opt_)) {
            sol.status = lp_status::infeasible;
            return sol;
        }
        drive_out_artificials();
        for (std::size_t j = n_; j < cols_; ++j) frozen_[j] = true;

        if (!iterate(cost_, /*phase1=*/false)) {
            sol.status = lp_status::unbounded;
            return sol;
        }

        sol.status = lp_status::optimal;
        sol.x.assign(n_, T(0));
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < n_) sol.x[basis_[i]] = tab_(i, cols_);
        }
        T obj = T(0);
        for (std::size_t j = 0; j < n_; ++j) obj += cost_[j] * sol.x[j];
        sol.objective = original_sense == lp_sense::maximize ? -obj : obj;
        return sol;
    }

  private:
    T phase_objective(const std::vector<T>& c) const {
        T v = T(0);
        for (std::size_t i = 0; i < m_; ++i) v += c[basis_[i]] * tab_(i, cols_);
        return v;
    }

    T reduced_cost(const std::vector<T>& c, std::size_t j) const {
        T r = c[j];
        for (std::size_t i = 0; i < m_; ++i) {
            const T& a = tab_(i, j);
            if (a != T(0)) r -= c[basis_[i]] * a;
        }
        return r;
    }

    // Returns false iff the phase detected an unbounded ray (phase 1 cannot).
    bool iterate(const std::vector<T>& c, bool phase1) {
        const T pivot_tol = pivot_tolerance<T>(opt_);
        std::size_t stall = 0;
        for (std::size_t iter = 0;; ++iter) {
            if (iter >= max_iter_) {
                throw solver_error(solver_error::kind::numerical_failure,
                                   "simplex exceeded the iteration limit");
            }
            const bool lowest_index = exact_scalar<T> || stall > opt_.stall_limit;
            std::size_t enter = cols_;
            T best = -pivot_tol;
            for (std::size_t j = 0; j < cols_; ++j) {
                if (is_basic_[j] || frozen_[j]) continue;
                const T r = reduced_cost(c, j);
                if (r < best) {
                    best = r;
                    enter = j;
                    if (lowest_index) break;
                }
            }
            if (enter == cols_) return true;  // optimal for this phase

            std::size_t leave = m_;
            T best_ratio = T(0);
            for (std::size_t i = 0; i < m_; ++i) {
                const T& a = tab_(i, enter);
                if (a <= pivot_tol) continue;
                const T ratio = tab_(i, cols_) / a;
                if (leave == m_ || ratio < best_ratio ||
                    (ratio == best_ratio && basis_[i] < basis_[leave])) {
                    leave = i;
                    best_ratio = ratio;
                }
            }
            if (leave == m_) {
                if (phase1) {
                    throw solver_error(solver_error::kind::numerical_failure,
                                       "phase 1 produced an unbounded ray");
                }
                return false;
            }
            stall = best_ratio <= pivot_tol ? stall + 1 : 0;
            pivot(leave, enter);
        }
    }

    void pivot(std::size_t row, std::size_t col) {
        const T p = tab_(row, col);
        for (std::size_t j = 0; j <= cols_; ++j) tab_(row, j) /= p;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == row) continue;
            const T f = tab_(i, col);
            if (f == T(0)) continue;
            for (std::size_t j = 0; j <= cols_; ++j) {
                tab_(i, j) -= f * tab_(row, j);
            }
            tab_(i, col) = T(0);
        }
        const std::size_t old = basis_[row];
        is_basic_[old] = false;
        if (old >= n_) frozen_[old] = true;  // artificials never re-enter
        basis_[row] = col;
        is_basic_[col] = true;
    }

    // After phase 1, pivot any artificial still basic (necessarily at zero
    // level) onto an original column; a row with no eligible column is
    // redundant and stays pinned by its zero-level artificial.
    void drive_out_artificials() {
        const T pivot_tol = pivot_tolerance<T>(opt_);
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < n_) continue;
            for (std::size_t j = 0; j < n_; ++j) {
                if (is_basic_[j]) continue;
                T a = tab_(i, j);
                if (a < T(0)) a = -a;
                if (a > pivot_tol) {
                    pivot(i, j);
                    break;
                }
            }
        }
    }

    simplex_options opt_;
    std::size_t m_, n_, cols_;
    dense_matrix<T> tab_;  // m x (n + m + 1); last column holds the rhs
    std::vector<T> cost_, art_cost_;
    std::vector<std::size_t> basis_;
    std::vector<bool> is_basic_, frozen_;
    std::size_t max_iter_ = 0;
};

}  // namespace detail

/// Solves a standard-form LP with the two-phase simplex.  Infeasibility and
/// unboundedness come back through the status field; iteration-limit and
/// conditioning problems raise solver_error.
template <class T>
lp_solution<T> solve(const linear_program<T>& lp, simplex_options opt = {}) {
    detail::simplex_solver<T> solver(lp, opt);
    return solver.run(lp.sense);
}

}  // namespace cbd
