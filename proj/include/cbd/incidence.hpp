#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cbd/cyclic_system.hpp"
#include "cbd/errors.hpp"

namespace cbd {

/// Boolean incidence matrix of the coupling variables of a cyclic system.
///
/// Columns are indexed by events: bit k of the column index holds the 0/1
/// value of coupling variable k, where context i (0-based) contributes
/// variables 2i (its first member, content i) and 2i+1 (its second member,
/// content i+1 mod n), contexts in ascending order.
///
/// Rows are product indicators stored as variable bitmasks: entry (l, m) is 1
/// iff every variable in row l's mask has value 1 in event m.  Row order:
/// the all-ones normalization row, the 2n single-variable rows (context
/// ascending, first then second), the n bunch product rows, and the n
/// connection product rows (content ascending, content c pairing its
/// variables in contexts c and c-1).
struct incidence_matrix {
    std::size_t rank = 0;
    std::size_t variable_count = 0;
    std::vector<std::uint32_t> row_masks;
    std::vector<std::string> row_labels;

    std::size_t rows() const { return row_masks.size(); }
    std::size_t cols() const { return std::size_t{1} << variable_count; }

    int entry(std::size_t row, std::uint32_t event) const {
        const std::uint32_t m = row_masks[row];
        return (event & m) == m ? 1 : 0;
    }

    // Block layout.
    std::size_t normalization_row() const { return 0; }
    std::size_t marginal_row(std::size_t context, bool second) const {
        return 1 + 2 * context + (second ? 1 : 0);
    }
    std::size_t bunch_row(std::size_t context) const { return 1 + 2 * rank + context; }
    std::size_t connection_row(std::size_t content) const {
        return 1 + 3 * rank + content;
    }
};

/// Index of the coupling variable measuring `content` within `context`.
inline std::size_t coupling_variable(std::size_t n, std::size_t context,
                                     std::size_t content) {
    if (content == context) return 2 * context;
    if (content == (context + 1) % n) return 2 * context + 1;
    throw error("content " + std::to_string(content + 1) +
                " is not measured in context " + std::to_string(context + 1));
}

inline incidence_matrix build_incidence_cyclic(std::size_t n) {
    if (n < 2) {
        throw validation_error(validation_error::kind::rank_too_small,
                               "incidence matrix needs rank >= 2");
    }
    if (n > 8) {
        throw solver_error(solver_error::kind::rank_too_large,
                           "incidence matrix limited to rank <= 8 "
                           "(2^(2n) event columns)");
    }
    incidence_matrix m;
    m.rank = n;
    m.variable_count = 2 * n;

    m.row_masks.push_back(0);
    m.row_labels.push_back("1");
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t first = 1u << coupling_variable(n, i, i);
        const std::uint32_t second = 1u << coupling_variable(n, i, (i + 1) % n);
        m.row_masks.push_back(first);
        m.row_labels.push_back("p(" + std::to_string(i + 1) + ";" +
                               std::to_string(i + 1) + ")");
        m.row_masks.push_back(second);
        m.row_labels.push_back("p(" + std::to_string((i + 1) % n + 1) + ";" +
                               std::to_string(i + 1) + ")");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t first = 1u << coupling_variable(n, i, i);
        const std::uint32_t second = 1u << coupling_variable(n, i, (i + 1) % n);
        m.row_masks.push_back(first | second);
        m.row_labels.push_back("bunch(" + std::to_string(i + 1) + ")");
    }
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t prev = (c + n - 1) % n;
        const std::uint32_t own = 1u << coupling_variable(n, c, c);
        const std::uint32_t other = 1u << coupling_variable(n, prev, c);
        m.row_masks.push_back(own | other);
        m.row_labels.push_back("connection(" + std::to_string(c + 1) + ")");
    }
    return m;
}

/// The target vector matching the row order of build_incidence_cyclic:
/// (1, marginals, bunch products, maximal connection products).
inline std::vector<double> coupling_targets(const validated_system& vs,
                                            const connection_couplings& cc) {
    const std::size_t n = vs.rank();
    std::vector<double> p;
    p.reserve(1 + 4 * n);
    p.push_back(1.0);
    for (std::size_t i = 0; i < n; ++i) {
        p.push_back(vs.system.contexts[i].p_first);
        p.push_back(vs.system.contexts[i].p_second);
    }
    for (std::size_t i = 0; i < n; ++i) p.push_back(vs.system.contexts[i].p_both);
    for (std::size_t c = 0; c < n; ++c) p.push_back(cc.probabilities[c]);
    return p;
}

}  // namespace cbd
