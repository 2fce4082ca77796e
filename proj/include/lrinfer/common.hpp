#pragma once

#include <stdexcept>
#include <string>

namespace lrinfer {

// Exit codes used by the CLI. Library code throws the matching exception;
// main() translates.
enum ExitCode : int {
    EXIT_OK = 0,
    EXIT_CONFIG_ERROR = 2,   // bad config / malformed input file
    EXIT_DATA_ERROR = 3,     // semantically invalid data (e.g. reward mismatch)
    EXIT_NUMERIC_ERROR = 4,  // non-finite loss or diverged optimisation
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace lrinfer
