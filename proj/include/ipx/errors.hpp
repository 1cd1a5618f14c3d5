#pragma once

#include <stdexcept>
#include <string>

namespace ipx {

// Exit-code classes used by the CLI: input = 1, numeric = 2, model = 3.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Query point outside the effective domain of a function or hull.
struct DomainError : NumericError {
    using NumericError::NumericError;
};

// The model admits arbitrage or produces an empty value-function domain.
struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace ipx
