#pragma once

#include <stdexcept>

namespace recigraph {

// Shape or dimension violation; messages name the offending shapes.
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (files, configs, unknown ids).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A numeric invariant broke at runtime (non-finite value, bound violation).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace recigraph
