#pragma once

#include <stdexcept>
#include <string>

namespace rclab {

// Error categories map to CLI exit codes: config=2, input=3, invariant=4.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvariantError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace rclab
