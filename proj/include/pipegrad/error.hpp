#pragma once

#include <stdexcept>
#include <string>

namespace pipegrad {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed configuration, missing files, bad schema. The CLI maps this to exit code 2.
struct ConfigError : Error {
    using Error::Error;
};

// Non-finite training loss. The CLI maps this to exit code 3.
struct DivergenceError : Error {
    using Error::Error;
};

}  // namespace pipegrad
