#pragma once

#include <stdexcept>
#include <string>

namespace cbd {

/// Base class for all library errors.
struct error : std::runtime_error {
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when an input system fails structural or probabilistic validation.
struct validation_error : error {
    enum class kind {
        rank_too_small,
        out_of_range,
        frechet_violation,
        empty_context,
        empty_vector,
        bad_pmf,
        unknown_content,
        samples_too_few,
    };

    validation_error(kind k, const std::string& what, int context = -1)
        : error(what), which(k), context_index(context) {}

    kind which;
    int context_index;  // 0-based context involved, or -1
};

/// Raised when a measure is requested on the wrong side of the criterion,
/// or on a degenerate system.
struct measure_error : error {
    enum class kind {
        not_contextual,
        is_contextual,
        degenerate_box,
        outside_box,
        bad_exponent,
        missing_coupling,
    };

    measure_error(kind k, const std::string& what) : error(what), which(k) {}

    kind which;
};

/// Raised by the polytope routines on malformed geometric queries.
struct geometry_error : error {
    enum class kind { even_vertex, bad_delta };

    geometry_error(kind k, const std::string& what) : error(what), which(k) {}

    kind which;
};

/// Raised by the LP layer.
struct solver_error : error {
    enum class kind {
        unbounded,
        numerical_failure,
        rank_too_large,
        too_many_variables,
    };

    solver_error(kind k, const std::string& what) : error(what), which(k) {}

    kind which;
};

}  // namespace cbd
